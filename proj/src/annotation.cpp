#include "ier/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ier/features.hpp"

namespace ier {

namespace {

constexpr std::size_t kMaxDepth = 256;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::toupper(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  return true;
}

bool is_reserved(std::string_view t) { return t == "[" || t == "]" || t == ":"; }

struct OpenNode {
  AnnNode node;
  std::size_t open_at;
};

void serialize_node(const AnnNode& node, const std::vector<Token>& tokens,
                    std::string& out) {
  if (node.kind == NodeKind::Word) {
    out += tokens.at(node.token).text;
    return;
  }
  out += '[';
  switch (node.kind) {
    case NodeKind::Ier: out += "IER"; break;
    case NodeKind::Action:
      out += "ACTION-";
      out += action_name(node.action);
      break;
    case NodeKind::Entity: out += entity_name(node.entity); break;
    case NodeKind::Word: break;
  }
  out += " :";
  for (const auto& c : node.children) {
    out += ' ';
    serialize_node(c, tokens, out);
  }
  out += " ]";
}

std::string join_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

}  // namespace

const char* parse_category_name(ParseCategory c) {
  switch (c) {
    case ParseCategory::UnbalancedBracket: return "UnbalancedBracket";
    case ParseCategory::UnknownLabel: return "UnknownLabel";
    case ParseCategory::MultipleActions: return "MultipleActions";
    case ParseCategory::EmptyNode: return "EmptyNode";
    case ParseCategory::MultipleRoots: return "MultipleRoots";
    case ParseCategory::Malformed: return "Malformed";
  }
  return "Malformed";
}

ParseError::ParseError(ParseCategory category, std::size_t line,
                       std::size_t token_offset, const std::string& message)
    : Error(ErrorCode::Parse, "line " + std::to_string(line) + ", token " +
                                  std::to_string(token_offset) + ": " +
                                  parse_category_name(category) + ": " + message),
      category_(category),
      line_(line),
      token_offset_(token_offset),
      message_(message) {}

AnnotatedUtterance parse_line(std::string_view text, std::size_t line_number) {
  const auto toks = split_ws(text);
  auto fail = [&](ParseCategory c, std::size_t at, const std::string& msg) {
    return ParseError(c, line_number, at, msg);
  };

  AnnotatedUtterance utt;
  std::vector<OpenNode> stack;
  bool action_seen = false;

  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string_view t = toks[i];
    // "[LABEL :" (glued) and "[ LABEL :" both open a node. A glued "[word"
    // not followed by ':' is an ordinary word.
    const bool glued = t.size() > 1 && t.front() == '[' && i + 1 < toks.size() && toks[i + 1] == ":";
    if (t == "[" || glued) {
      std::string_view label;
      std::size_t label_at, colon_at;
      if (glued) {
        label = t.substr(1);
        label_at = i;
        colon_at = i + 1;
      } else {
        if (i + 1 >= toks.size())
          throw fail(ParseCategory::UnbalancedBracket, i, "'[' at end of line");
        label = toks[i + 1];
        label_at = i + 1;
        colon_at = i + 2;
        if (is_reserved(label))
          throw fail(ParseCategory::Malformed, label_at, "expected a label after '['");
        if (colon_at >= toks.size() || toks[colon_at] != ":")
          throw fail(ParseCategory::Malformed, colon_at, "expected ':' after label");
      }

      AnnNode node;
      if (istarts_with(label, "IER") && label.size() == 3) {
        if (!stack.empty())
          throw fail(ParseCategory::MultipleRoots, i, "IER nested inside another node");
        if (utt.root)
          throw fail(ParseCategory::MultipleRoots, i, "more than one IER on a line");
        node.kind = NodeKind::Ier;
      } else if (istarts_with(label, "ACTION-")) {
        auto action = try_parse_action(label.substr(7));
        if (!action)
          throw fail(ParseCategory::UnknownLabel, label_at,
                     "unknown action '" + std::string(label) + "'");
        if (stack.empty())
          throw fail(ParseCategory::Malformed, i, "ACTION outside of an IER");
        if (action_seen)
          throw fail(ParseCategory::MultipleActions, i, "second ACTION inside one IER");
        if (stack.back().node.kind != NodeKind::Ier)
          throw fail(ParseCategory::Malformed, i, "ACTION must be a direct child of IER");
        action_seen = true;
        node.kind = NodeKind::Action;
        node.action = *action;
      } else {
        auto entity = try_canonicalize_label(label);
        if (!entity)
          throw fail(ParseCategory::UnknownLabel, label_at,
                     "unknown label '" + std::string(label) + "'");
        if (stack.empty())
          throw fail(ParseCategory::Malformed, i, "entity outside of an IER");
        node.kind = NodeKind::Entity;
        node.entity = *entity;
      }
      if (stack.size() >= kMaxDepth)
        throw fail(ParseCategory::Malformed, i, "nesting too deep");
      stack.push_back({std::move(node), i});
      i = colon_at;
    } else if (t == "]") {
      if (stack.empty()) throw fail(ParseCategory::UnbalancedBracket, i, "unmatched ']'");
      OpenNode done = std::move(stack.back());
      stack.pop_back();
      if (done.node.children.empty())
        throw fail(ParseCategory::EmptyNode, done.open_at, "node covers no words");
      if (stack.empty())
        utt.root = std::move(done.node);
      else
        stack.back().node.children.push_back(std::move(done.node));
    } else if (t == ":") {
      throw fail(ParseCategory::Malformed, i, "unexpected ':'");
    } else {
      const std::size_t index = utt.tokens.size();
      utt.tokens.push_back({std::string(t), index});
      if (!stack.empty()) stack.back().node.children.push_back(AnnNode::word(index));
    }
  }
  if (!stack.empty())
    throw fail(ParseCategory::UnbalancedBracket, stack.back().open_at, "unclosed '['");
  return utt;
}

std::string serialize(const AnnotatedUtterance& utt) {
  if (!utt.root) return join_tokens(utt.tokens);
  const std::size_t first = utt.root->first_token();
  const std::size_t end = utt.root->last_token_end();
  std::string out;
  for (std::size_t i = 0; i < first; ++i) {
    out += utt.tokens[i].text;
    out += ' ';
  }
  serialize_node(*utt.root, utt.tokens, out);
  for (std::size_t i = end; i < utt.tokens.size(); ++i) {
    out += ' ';
    out += utt.tokens[i].text;
  }
  return out;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "bracket" || name == "bracket-lines") return CorpusFormat::BracketLines;
  if (name == "jsonl") return CorpusFormat::Jsonl;
  throw Error(ErrorCode::InvalidArgument, "unknown corpus format '" + std::string(name) + "'");
}

std::string_view corpus_format_name(CorpusFormat f) {
  return f == CorpusFormat::Jsonl ? "jsonl" : "bracket-lines";
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  while (i < s.size()) {
    const unsigned char c = p[i];
    std::size_t extra;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((p[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (p[i + k] & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
        (extra == 3 && (cp < 0x10000 || cp > 0x10FFFF)) ||
        (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += extra + 1;
  }
  return true;
}

LoadResult load_corpus(std::istream& in, CorpusFormat format, std::string source) {
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (!is_valid_utf8(data))
    throw Error(ErrorCode::Decode, source + ": input is not valid UTF-8");

  LoadResult result;
  auto& corpus = result.corpus;
  corpus.provenance.source = std::move(source);
  corpus.provenance.format = format;
  std::unordered_set<std::string> ids;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos) nl = data.size();
    std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t\v\f") == std::string_view::npos) continue;
    if (format == CorpusFormat::BracketLines && line.front() == '#') continue;

    try {
      AnnotatedUtterance utt;
      if (format == CorpusFormat::BracketLines) {
        utt = parse_line(line, line_no);
        utt.id = std::to_string(line_no);
      } else {
        nlohmann::json obj;
        try {
          obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          throw ParseError(ParseCategory::Malformed, line_no, 0,
                           std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object())
          throw ParseError(ParseCategory::Malformed, line_no, 0, "record is not a JSON object");
        auto text_field = [&](const char* key) -> std::optional<std::string> {
          auto it = obj.find(key);
          if (it == obj.end() || it->is_null()) return std::nullopt;
          if (!it->is_string())
            throw ParseError(ParseCategory::Malformed, line_no, 0,
                             std::string("field '") + key + "' must be a string");
          return it->get<std::string>();
        };
        const auto id = text_field("id");
        const auto text = text_field("text");
        const auto ann = text_field("ann");
        if (ann) {
          utt = parse_line(*ann, line_no);
        } else {
          for (auto& w : tokenize(text.value_or("")))
            utt.tokens.push_back(std::move(w));
        }
        utt.id = id.value_or(std::to_string(line_no));
      }
      if (!ids.insert(utt.id).second)
        throw ParseError(ParseCategory::Malformed, line_no, 0, "duplicate id '" + utt.id + "'");
      corpus.utterances.push_back(std::move(utt));
    } catch (const ParseError& e) {
      result.errors.push_back(e);
    }
  }
  corpus.provenance.lines_read = line_no;
  corpus.provenance.utterances = corpus.utterances.size();
  corpus.provenance.errors = result.errors.size();
  return result;
}

LoadResult load_corpus_file(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return load_corpus(in, format, path);
}

void write_corpus(std::ostream& out, const Corpus& corpus, CorpusFormat format) {
  for (const auto& utt : corpus.utterances) {
    if (format == CorpusFormat::BracketLines) {
      out << serialize(utt) << '\n';
    } else {
      nlohmann::ordered_json obj;
      obj["id"] = utt.id;
      obj["text"] = join_tokens(utt.tokens);
      if (utt.root) obj["ann"] = serialize(utt);
      out << obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
  }
}

Corpus filter_executable(const Corpus& corpus, FilterReport* report) {
  FilterReport counts;
  Corpus out;
  out.provenance = corpus.provenance;
  for (const auto& utt : corpus.utterances) {
    if (!utt.root) {
      ++counts.no_ier;
      continue;
    }
    const auto action = utt.action();
    if (!action) {
      ++counts.no_action;
      continue;
    }
    if (*action == ActionType::Other) {
      ++counts.other_action;
      continue;
    }
    out.utterances.push_back(utt);
  }
  out.provenance.utterances = out.utterances.size();
  if (report) *report = counts;
  return out;
}

}  // namespace ier
