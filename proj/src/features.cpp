#include "ier/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "ier/error.hpp"

namespace ier {

namespace {

constexpr std::string_view kEdgePunct = ".,!?;:\"'()";

bool is_edge_punct(char c) { return kEdgePunct.find(c) != std::string_view::npos; }

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Byte offsets of the first k code points (or the whole string).
std::size_t utf8_prefix_bytes(std::string_view s, std::size_t k) {
  std::size_t i = 0;
  for (std::size_t n = 0; n < k && i < s.size(); ++n) {
    ++i;
    while (i < s.size() && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) ++i;
  }
  return i;
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::string_view shape_of(std::string_view w) {
  bool alpha = true, num = true, punct = true;
  for (char ch : w) {
    const auto c = static_cast<unsigned char>(ch);
    const bool is_alpha = std::isalpha(c) || c >= 0x80;
    const bool is_digit = std::isdigit(c);
    const bool is_punct = std::ispunct(c);
    alpha = alpha && is_alpha;
    num = num && is_digit;
    punct = punct && is_punct;
  }
  if (alpha) return "alpha";
  if (num) return "num";
  if (punct) return "punct";
  return "mixed";
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  auto emit = [&](std::string_view piece) {
    std::string s(piece);
    for (auto& ch : s)
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    out.push_back({std::move(s), out.size()});
  };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::string_view chunk = text.substr(i, j - i);
    i = j;
    if (chunk.empty()) continue;

    std::size_t lead = 0;
    while (lead < chunk.size() && is_edge_punct(chunk[lead])) ++lead;
    std::size_t trail = chunk.size();
    while (trail > lead && is_edge_punct(chunk[trail - 1])) --trail;
    for (std::size_t k = 0; k < lead; ++k) emit(chunk.substr(k, 1));
    if (trail > lead) emit(chunk.substr(lead, trail - lead));
    for (std::size_t k = trail; k < chunk.size(); ++k) emit(chunk.substr(k, 1));
  }
  return out;
}

bool EmbeddingTable::contains(std::string_view word) const {
  return index_.find(std::string(word)) != index_.end();
}

bool EmbeddingTable::insert(std::string word, std::vector<double> vec) {
  if (vec.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "vector for '" + word + "' has " + std::to_string(vec.size()) +
                    " values, expected " + std::to_string(dim_));
  const std::size_t row = index_.size();
  if (!index_.emplace(std::move(word), row).second) return false;
  data_.insert(data_.end(), vec.begin(), vec.end());
  return true;
}

std::span<const double> EmbeddingTable::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return zeros_;
  return {data_.data() + it->second * dim_, dim_};
}

EmbeddingTable load_word_vectors(std::istream& in) {
  EmbeddingTable table;
  bool have_dim = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    std::size_t p = 0;
    while (p < rest.size()) {
      while (p < rest.size() && is_space(rest[p])) ++p;
      std::size_t q = p;
      while (q < rest.size() && !is_space(rest[q])) ++q;
      if (q > p) fields.push_back(rest.substr(p, q - p));
      p = q;
    }
    if (fields.empty()) continue;
    const std::size_t arity = fields.size() - 1;
    if (!have_dim) {
      if (arity == 0)
        throw Error(ErrorCode::DimensionMismatch,
                    "line " + std::to_string(line_no) + ": word without a vector");
      table = EmbeddingTable(arity);
      have_dim = true;
    } else if (arity != table.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.dim()) + " values, found " + std::to_string(arity));
    }
    std::vector<double> vec(arity);
    for (std::size_t k = 0; k < arity; ++k) {
      const auto f = fields[k + 1];
      const char* first = f.data();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), vec[k]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(vec[k]))
        throw Error(ErrorCode::Malformed, "line " + std::to_string(line_no) +
                                              ": not a real number: '" + std::string(f) + "'");
    }
    table.insert(std::string(fields[0]), std::move(vec));
  }
  return table;
}

EmbeddingTable load_word_vectors_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return load_word_vectors(in);
}

std::vector<double> embed_mean(std::span<const Token> tokens, const EmbeddingTable& table) {
  std::vector<double> out(table.dim(), 0.0);
  if (tokens.empty()) return out;
  for (const auto& t : tokens) {
    const auto v = table.lookup(t.text);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : out) x *= inv;
  return out;
}

std::vector<std::string> crf_token_features(std::span<const Token> tokens, std::size_t i,
                                            std::optional<ActionType> action) {
  const std::string& w = tokens[i].text;
  std::vector<std::string> f;
  f.reserve(16);
  f.emplace_back("bias");
  f.push_back("w=" + w);
  f.push_back("w-1=" + (i > 0 ? tokens[i - 1].text : std::string("BOS")));
  f.push_back("w+1=" + (i + 1 < tokens.size() ? tokens[i + 1].text : std::string("EOS")));
  const std::size_t len = utf8_length(w);
  for (std::size_t k = 1; k <= 3 && k <= len; ++k)
    f.push_back("pre" + std::to_string(k) + "=" + w.substr(0, utf8_prefix_bytes(w, k)));
  for (std::size_t k = 1; k <= 3 && k <= len; ++k)
    f.push_back("suf" + std::to_string(k) + "=" + w.substr(utf8_prefix_bytes(w, len - k)));
  f.push_back("shape=" + std::string(shape_of(w)));
  if (i == 0)
    f.emplace_back("pos=first");
  else if (i + 1 == tokens.size())
    f.emplace_back("pos=last");
  else
    f.emplace_back("pos=mid");
  if (action) {
    const std::string name(action_name(*action));
    f.push_back("act=" + name);
    f.push_back("act|w=" + name + "|" + w);
  }
  return f;
}

std::uint32_t FeatureDictionary::intern(const std::string& name) {
  auto [it, inserted] = ids_.emplace(name, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

std::optional<std::uint32_t> FeatureDictionary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

FeatureDictionary FeatureDictionary::from_names(std::vector<std::string> names) {
  FeatureDictionary d;
  for (auto& n : names) d.intern(n);
  return d;
}

UtteranceFeaturizer UtteranceFeaturizer::fit(
    const std::vector<std::vector<Token>>& utterances, std::size_t embedding_dim) {
  FeatureDictionary vocab;
  for (const auto& toks : utterances)
    for (const auto& t : toks) vocab.intern(t.text);
  return UtteranceFeaturizer(embedding_dim, std::move(vocab));
}

FeatureVector UtteranceFeaturizer::transform(std::span<const Token> tokens,
                                             const EmbeddingTable* table) const {
  FeatureVector out;
  if (embedding_dim_ > 0) {
    if (!table || table->dim() != embedding_dim_)
      throw Error(ErrorCode::IncompatibleModel,
                  "model expects word vectors of dimension " + std::to_string(embedding_dim_));
    const auto mean = embed_mean(tokens, *table);
    for (std::size_t k = 0; k < mean.size(); ++k)
      out.emplace_back(static_cast<std::uint32_t>(k), mean[k]);
  }
  std::vector<std::uint32_t> bow;
  for (const auto& t : tokens)
    if (auto id = vocabulary_.find(t.text))
      bow.push_back(static_cast<std::uint32_t>(embedding_dim_) + *id);
  std::sort(bow.begin(), bow.end());
  bow.erase(std::unique(bow.begin(), bow.end()), bow.end());
  for (auto id : bow) out.emplace_back(id, 1.0);
  return out;
}

}  // namespace ier
