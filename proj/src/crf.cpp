#include "ier/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "ier/error.hpp"
#include "model_json.hpp"

namespace ier {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// alpha[t][y]: log-sum of scores of prefixes ending in y at t (including emission).
std::vector<double> forward(const Potentials& p) {
  const std::size_t L = p.length, T = p.num_tags;
  std::vector<double> alpha(L * T);
  std::vector<double> buf(T);
  for (std::size_t y = 0; y < T; ++y) alpha[y] = p.start[y] + p.emit(0, y);
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t y = 0; y < T; ++y) {
      for (std::size_t q = 0; q < T; ++q) buf[q] = alpha[(t - 1) * T + q] + p.trans(q, y);
      alpha[t * T + y] = log_sum_exp(buf) + p.emit(t, y);
    }
  }
  return alpha;
}

// beta[t][y]: log-sum of scores of suffixes after t given y at t (including stop).
std::vector<double> backward(const Potentials& p) {
  const std::size_t L = p.length, T = p.num_tags;
  std::vector<double> beta(L * T);
  std::vector<double> buf(T);
  for (std::size_t y = 0; y < T; ++y) beta[(L - 1) * T + y] = p.stop[y];
  for (std::size_t t = L - 1; t-- > 0;) {
    for (std::size_t y = 0; y < T; ++y) {
      for (std::size_t c = 0; c < T; ++c)
        buf[c] = p.trans(y, c) + p.emit(t + 1, c) + beta[(t + 1) * T + c];
      beta[t * T + y] = log_sum_exp(buf);
    }
  }
  return beta;
}

double final_log_z(const Potentials& p, const std::vector<double>& alpha) {
  const std::size_t T = p.num_tags;
  std::vector<double> buf(T);
  for (std::size_t y = 0; y < T; ++y) buf[y] = alpha[(p.length - 1) * T + y] + p.stop[y];
  return log_sum_exp(buf);
}

void check_potentials(const Potentials& p) {
  if (p.length == 0 || p.num_tags == 0)
    throw Error(ErrorCode::InvalidArgument, "potentials need length >= 1 and at least one tag");
  if (p.emission.size() != p.length * p.num_tags ||
      p.transition.size() != p.num_tags * p.num_tags || p.start.size() != p.num_tags ||
      p.stop.size() != p.num_tags)
    throw Error(ErrorCode::InvalidArgument, "potential dimensions are inconsistent");
}

}  // namespace

TagSet::TagSet() { add("O"); }

TagSet::TagSet(const std::vector<std::string>& tags) {
  add("O");
  for (const auto& t : tags) add(t);
}

std::size_t TagSet::add(const std::string& tag) {
  auto [it, inserted] = index_.emplace(tag, tags_.size());
  if (inserted) tags_.push_back(tag);
  return it->second;
}

std::optional<std::size_t> TagSet::find(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Potentials::Potentials(std::size_t len, std::size_t tags)
    : length(len),
      num_tags(tags),
      emission(len * tags, 0.0),
      transition(tags * tags, 0.0),
      start(tags, 0.0),
      stop(tags, 0.0) {}

double path_score(const Potentials& p, std::span<const std::size_t> path) {
  double s = p.start[path[0]] + p.emit(0, path[0]);
  for (std::size_t t = 1; t < path.size(); ++t)
    s = s + p.trans(path[t - 1], path[t]) + p.emit(t, path[t]);
  return s + p.stop[path.back()];
}

double log_partition(const Potentials& p) {
  check_potentials(p);
  return final_log_z(p, forward(p));
}

Marginals forward_backward(const Potentials& p) {
  check_potentials(p);
  const std::size_t L = p.length, T = p.num_tags;
  const auto alpha = forward(p);
  const auto beta = backward(p);
  Marginals m;
  m.log_z = final_log_z(p, alpha);
  m.node.resize(L * T);
  for (std::size_t i = 0; i < L * T; ++i) m.node[i] = std::exp(alpha[i] + beta[i] - m.log_z);
  m.edge.assign(T * T, 0.0);
  for (std::size_t t = 1; t < L; ++t)
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        m.edge[a * T + b] += std::exp(alpha[(t - 1) * T + a] + p.trans(a, b) + p.emit(t, b) +
                                      beta[t * T + b] - m.log_z);
  return m;
}

ViterbiResult viterbi(const Potentials& p) {
  check_potentials(p);
  const std::size_t L = p.length, T = p.num_tags;
  std::vector<double> delta(L * T);
  std::vector<std::size_t> back(L * T, 0);
  for (std::size_t y = 0; y < T; ++y) delta[y] = p.start[y] + p.emit(0, y);
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t y = 0; y < T; ++y) {
      std::size_t best = 0;
      double best_score = delta[(t - 1) * T] + p.trans(0, y);
      for (std::size_t q = 1; q < T; ++q) {
        const double s = delta[(t - 1) * T + q] + p.trans(q, y);
        if (s > best_score) {
          best_score = s;
          best = q;
        }
      }
      delta[t * T + y] = best_score + p.emit(t, y);
      back[t * T + y] = best;
    }
  }
  std::size_t last = 0;
  double last_score = delta[(L - 1) * T] + p.stop[0];
  for (std::size_t y = 1; y < T; ++y) {
    const double s = delta[(L - 1) * T + y] + p.stop[y];
    if (s > last_score) {
      last_score = s;
      last = y;
    }
  }
  ViterbiResult r;
  r.path.resize(L);
  r.path[L - 1] = last;
  for (std::size_t t = L - 1; t > 0; --t) r.path[t - 1] = back[t * T + r.path[t]];
  r.score = path_score(p, r.path);
  return r;
}

CrfModel::CrfModel(TagSet tags, FeatureDictionary attributes, std::vector<double> weights,
                   double l2, bool action_features)
    : tags_(std::move(tags)),
      attributes_(std::move(attributes)),
      weights_(std::move(weights)),
      l2_(l2),
      action_features_(action_features) {
  if (weights_.size() != parameter_count(attributes_.size(), tags_.size()))
    throw Error(ErrorCode::IncompatibleModel, "CRF weight vector has the wrong length");
}

std::size_t CrfModel::parameter_count(std::size_t num_attributes, std::size_t num_tags) {
  return num_attributes * num_tags + num_tags * num_tags + 2 * num_tags;
}

std::vector<std::vector<std::uint32_t>> CrfModel::featurize(
    std::span<const Token> tokens, std::optional<ActionType> action) const {
  const auto act = action_features_ ? action : std::nullopt;
  std::vector<std::vector<std::uint32_t>> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (const auto& f : crf_token_features(tokens, i, act))
      if (auto id = attributes_.find(f)) out[i].push_back(*id);
  return out;
}

CrfSequence CrfModel::encode(std::span<const Token> tokens, const BioSequence& gold,
                             std::optional<ActionType> action) const {
  if (gold.size() != tokens.size())
    throw Error(ErrorCode::LengthMismatch, "tag sequence length differs from token count");
  CrfSequence seq;
  seq.features = featurize(tokens, action);
  for (const auto& tag : gold) {
    const auto name = tag.str();
    auto id = tags_.find(name);
    if (!id) throw Error(ErrorCode::UnknownTag, "tag '" + name + "' is not in the tag set");
    seq.tags.push_back(*id);
  }
  return seq;
}

Potentials CrfModel::potentials(const std::vector<std::vector<std::uint32_t>>& features) const {
  const std::size_t T = tags_.size();
  const std::size_t F = attributes_.size();
  Potentials p(features.size(), T);
  for (std::size_t t = 0; t < features.size(); ++t)
    for (auto a : features[t])
      for (std::size_t y = 0; y < T; ++y) p.emit(t, y) += weights_[a * T + y];
  const double* trans = weights_.data() + F * T;
  std::copy(trans, trans + T * T, p.transition.begin());
  std::copy(trans + T * T, trans + T * T + T, p.start.begin());
  std::copy(trans + T * T + T, trans + T * T + 2 * T, p.stop.begin());
  return p;
}

std::string CrfModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "IER-CRF";
  j["version"] = 1;
  j["tags"] = tags_.names();
  j["action_features"] = action_features_;
  j["features"] = attributes_.names();
  j["l2"] = detail::format_real(l2_);
  j["weights"] = detail::format_reals(weights_);
  return detail::dump(j);
}

CrfModel CrfModel::from_json(std::string_view text) {
  const auto j = detail::parse_model_json(text, "IER-CRF");
  try {
    auto tag_names = j.at("tags").get<std::vector<std::string>>();
    if (tag_names.empty() || tag_names.front() != "O")
      throw Error(ErrorCode::Malformed, "CRF tag list must start with O");
    TagSet tags(tag_names);
    if (tags.size() != tag_names.size())
      throw Error(ErrorCode::Malformed, "CRF tag list has duplicates");
    auto names = j.at("features").get<std::vector<std::string>>();
    return CrfModel(std::move(tags), FeatureDictionary::from_names(std::move(names)),
                    detail::parse_reals(j.at("weights")), detail::parse_real(j.at("l2")),
                    j.at("action_features").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("CRF model: ") + e.what());
  }
}

CrfObjective::CrfObjective(std::span<const CrfSequence> data, std::size_t num_attributes,
                           std::size_t num_tags, double l2)
    : data_(data), num_attributes_(num_attributes), num_tags_(num_tags), l2_(l2) {}

std::size_t CrfObjective::dimension() const {
  return CrfModel::parameter_count(num_attributes_, num_tags_);
}

double CrfObjective::operator()(std::span<const double> w, std::span<double> grad) const {
  const std::size_t T = num_tags_;
  const std::size_t trans_off = num_attributes_ * T;
  const std::size_t start_off = trans_off + T * T;
  const std::size_t stop_off = start_off + T;
  std::fill(grad.begin(), grad.end(), 0.0);
  double value = 0.0;

  for (const auto& seq : data_) {
    const std::size_t L = seq.tags.size();
    if (L == 0) continue;
    Potentials p(L, T);
    for (std::size_t t = 0; t < L; ++t)
      for (auto a : seq.features[t])
        for (std::size_t y = 0; y < T; ++y) p.emit(t, y) += w[a * T + y];
    std::copy(w.begin() + trans_off, w.begin() + start_off, p.transition.begin());
    std::copy(w.begin() + start_off, w.begin() + stop_off, p.start.begin());
    std::copy(w.begin() + stop_off, w.begin() + stop_off + T, p.stop.begin());

    const Marginals m = forward_backward(p);
    value += m.log_z - path_score(p, seq.tags);

    for (std::size_t t = 0; t < L; ++t) {
      for (auto a : seq.features[t]) {
        double* g = grad.data() + a * T;
        for (std::size_t y = 0; y < T; ++y) g[y] += m.node[t * T + y];
        g[seq.tags[t]] -= 1.0;
      }
    }
    for (std::size_t i = 0; i < T * T; ++i) grad[trans_off + i] += m.edge[i];
    for (std::size_t t = 1; t < L; ++t) grad[trans_off + seq.tags[t - 1] * T + seq.tags[t]] -= 1.0;
    for (std::size_t y = 0; y < T; ++y) {
      grad[start_off + y] += m.node[y];
      grad[stop_off + y] += m.node[(L - 1) * T + y];
    }
    grad[start_off + seq.tags.front()] -= 1.0;
    grad[stop_off + seq.tags.back()] -= 1.0;
  }

  if (l2_ != 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      value += 0.5 * l2_ * w[i] * w[i];
      grad[i] += l2_ * w[i];
    }
  }
  return value;
}

std::pair<double, std::vector<double>> nll_and_grad(const CrfModel& model,
                                                    std::span<const CrfSequence> batch) {
  for (const auto& seq : batch) {
    for (auto y : seq.tags)
      if (y >= model.tags().size())
        throw Error(ErrorCode::UnknownTag, "gold tag index outside the tag set");
    for (const auto& f : seq.features)
      for (auto a : f)
        if (a >= model.attributes().size())
          throw Error(ErrorCode::InvalidArgument, "attribute id outside the dictionary");
  }
  CrfObjective objective(batch, model.attributes().size(), model.tags().size(), model.l2());
  std::vector<double> grad(objective.dimension(), 0.0);
  const double v = objective(model.weights(), grad);
  return {v, std::move(grad)};
}

CrfModel train_crf(std::span<const TaggedSequence> data, const CrfTrainConfig& cfg,
                   OptTrace* trace) {
  if (data.empty()) throw Error(ErrorCode::EmptyCorpus, "no training sequences");
  TagSet tags;
  FeatureDictionary attributes;
  for (const auto& s : data) {
    if (s.tokens.empty()) throw Error(ErrorCode::EmptyInput, "empty training sequence");
    if (s.tags.size() != s.tokens.size())
      throw Error(ErrorCode::LengthMismatch, "tag sequence length differs from token count");
    for (const auto& tag : s.tags) tags.add(tag.str());
    const auto act = cfg.action_features ? s.action : std::nullopt;
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      for (const auto& f : crf_token_features(s.tokens, i, act)) attributes.intern(f);
  }

  const std::size_t n_params = CrfModel::parameter_count(attributes.size(), tags.size());
  CrfModel shell(tags, attributes, std::vector<double>(n_params, 0.0), cfg.l2,
                 cfg.action_features);
  std::vector<CrfSequence> encoded;
  encoded.reserve(data.size());
  for (const auto& s : data) encoded.push_back(shell.encode(s.tokens, s.tags, s.action));

  CrfObjective objective(encoded, attributes.size(), tags.size(), cfg.l2);
  auto result = lbfgs_minimize(
      [&](std::span<const double> w, std::span<double> g) { return objective(w, g); },
      std::vector<double>(n_params, 0.0), cfg.optimizer);
  if (trace) *trace = std::move(result.trace);
  return CrfModel(std::move(tags), std::move(attributes), std::move(result.x), cfg.l2,
                  cfg.action_features);
}

BioSequence predict_tags(const CrfModel& model, std::span<const Token> tokens,
                         std::optional<ActionType> action) {
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "cannot tag an empty token list");
  const auto path = viterbi(model.potentials(model.featurize(tokens, action))).path;
  BioSequence out;
  out.reserve(path.size());
  for (auto y : path) out.push_back(BioTag::parse(model.tags().name(y)));
  return out;
}

}  // namespace ier
