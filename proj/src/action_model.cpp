#include "ier/action_model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ier/error.hpp"
#include "model_json.hpp"

namespace ier {

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.begin(), scores.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

ActionModel::ActionModel(std::vector<ActionType> labels, UtteranceFeaturizer featurizer,
                         std::vector<double> weights, double l2)
    : labels_(std::move(labels)),
      featurizer_(std::move(featurizer)),
      weights_(std::move(weights)),
      l2_(l2) {
  if (weights_.size() != labels_.size() * (featurizer_.num_features() + 1))
    throw Error(ErrorCode::IncompatibleModel, "weight matrix does not match label/feature count");
}

std::vector<double> ActionModel::scores(const FeatureVector& x) const {
  const std::size_t cols = num_features() + 1;
  std::vector<double> s(labels_.size());
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    const double* row = weights_.data() + k * cols;
    double acc = row[cols - 1];
    for (const auto& [id, v] : x)
      if (id < cols - 1) acc += row[id] * v;
    s[k] = acc;
  }
  return s;
}

std::string ActionModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "IER-ACTION";
  j["version"] = 1;
  auto& labels = j["labels"] = nlohmann::ordered_json::array();
  for (auto a : labels_) labels.push_back(std::string(action_name(a)));
  j["embedding_dim"] = featurizer_.embedding_dim();
  j["features"] = featurizer_.vocabulary().names();
  j["l2"] = detail::format_real(l2_);
  j["weights"] = detail::format_reals(weights_);
  return detail::dump(j);
}

ActionModel ActionModel::from_json(std::string_view text) {
  const auto j = detail::parse_model_json(text, "IER-ACTION");
  try {
    std::vector<ActionType> labels;
    for (const auto& l : j.at("labels")) labels.push_back(parse_action(l.get<std::string>()));
    const auto dim = j.at("embedding_dim").get<std::size_t>();
    auto names = j.at("features").get<std::vector<std::string>>();
    UtteranceFeaturizer featurizer(dim, FeatureDictionary::from_names(std::move(names)));
    return ActionModel(std::move(labels), std::move(featurizer),
                       detail::parse_reals(j.at("weights")),
                       detail::parse_real(j.at("l2")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("action model: ") + e.what());
  }
}

SoftmaxObjective::SoftmaxObjective(std::span<const ActionExample> data,
                                   std::vector<ActionType> labels, std::size_t num_features,
                                   double l2, std::vector<double> class_weights)
    : data_(data),
      labels_(std::move(labels)),
      num_features_(num_features),
      l2_(l2),
      class_weights_(std::move(class_weights)) {
  if (class_weights_.empty()) class_weights_.assign(labels_.size(), 1.0);
  targets_.reserve(data_.size());
  for (const auto& ex : data_) {
    auto it = std::find(labels_.begin(), labels_.end(), ex.label);
    if (it == labels_.end())
      throw Error(ErrorCode::InvalidArgument,
                  "training label " + std::string(action_name(ex.label)) + " not in label list");
    targets_.push_back(static_cast<std::size_t>(it - labels_.begin()));
  }
}

double SoftmaxObjective::operator()(std::span<const double> w, std::span<double> grad) const {
  const std::size_t K = labels_.size();
  const std::size_t cols = num_features_ + 1;
  std::fill(grad.begin(), grad.end(), 0.0);
  double value = 0.0;
  std::vector<double> s(K);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const auto& x = data_[i].features;
    for (std::size_t k = 0; k < K; ++k) {
      const double* row = w.data() + k * cols;
      double acc = row[num_features_];
      for (const auto& [id, v] : x) acc += row[id] * v;
      s[k] = acc;
    }
    const double mx = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    const std::size_t y = targets_[i];
    const double cw = class_weights_[y];
    value += cw * (log_z - s[y]);
    for (std::size_t k = 0; k < K; ++k) {
      const double coef = cw * (std::exp(s[k] - log_z) - (k == y ? 1.0 : 0.0));
      double* g = grad.data() + k * cols;
      for (const auto& [id, v] : x) g[id] += coef * v;
      g[num_features_] += coef;
    }
  }
  if (l2_ != 0.0) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t f = 0; f < num_features_; ++f) {
        const double wk = w[k * cols + f];
        value += 0.5 * l2_ * wk * wk;
        grad[k * cols + f] += l2_ * wk;
      }
    }
  }
  return value;
}

ActionModel train_action(std::span<const ActionExample> data, UtteranceFeaturizer featurizer,
                         const ActionTrainConfig& cfg, OptTrace* trace) {
  std::vector<std::size_t> counts(kNumActions, 0);
  for (const auto& ex : data) ++counts[static_cast<std::size_t>(ex.label)];
  std::vector<ActionType> labels;
  for (auto a : all_actions())
    if (counts[static_cast<std::size_t>(a)] > 0) labels.push_back(a);
  if (labels.size() < 2)
    throw Error(ErrorCode::DegenerateData, "action training data needs at least two labels");

  const std::size_t F = featurizer.num_features();
  for (const auto& ex : data)
    for (const auto& [id, v] : ex.features) {
      if (id >= F) throw Error(ErrorCode::InvalidArgument, "feature id out of range");
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite feature value");
    }

  std::vector<double> class_weights;
  if (cfg.inverse_frequency_weights) {
    for (auto a : labels)
      class_weights.push_back(static_cast<double>(data.size()) /
                              (static_cast<double>(labels.size()) *
                               static_cast<double>(counts[static_cast<std::size_t>(a)])));
  }
  SoftmaxObjective objective(data, labels, F, cfg.l2, std::move(class_weights));
  auto result = lbfgs_minimize(
      [&](std::span<const double> w, std::span<double> g) { return objective(w, g); },
      std::vector<double>(objective.dimension(), 0.0), cfg.optimizer);
  if (trace) *trace = std::move(result.trace);
  return ActionModel(std::move(labels), std::move(featurizer), std::move(result.x), cfg.l2);
}

ActionPrediction predict_action(const ActionModel& model, const FeatureVector& x) {
  const auto s = model.scores(x);
  ActionPrediction out;
  out.probabilities = softmax(s);
  std::size_t best = 0;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] > s[best]) best = k;
  out.action = model.labels()[best];
  out.confidence = out.probabilities[best];
  return out;
}

}  // namespace ier
