#pragma once

// Level 1: multinomial logistic regression over utterance features.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ier/features.hpp"
#include "ier/lbfgs.hpp"
#include "ier/vocab.hpp"

namespace ier {

struct ActionExample {
  FeatureVector features;
  ActionType label;
};

struct ActionTrainConfig {
  double l2 = 1.0;
  LbfgsConfig optimizer;
  bool inverse_frequency_weights = false;
};

struct ActionPrediction {
  ActionType action;
  double confidence = 0.0;
  std::vector<double> probabilities;  // aligned with ActionModel::labels()
};

class ActionModel {
 public:
  ActionModel() = default;
  /// `weights` is row-major K x (F + 1); the last column is the bias.
  ActionModel(std::vector<ActionType> labels, UtteranceFeaturizer featurizer,
              std::vector<double> weights, double l2);

  const std::vector<ActionType>& labels() const { return labels_; }
  const UtteranceFeaturizer& featurizer() const { return featurizer_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t num_classes() const { return labels_.size(); }
  std::size_t num_features() const { return featurizer_.num_features(); }
  double l2() const { return l2_; }

  std::vector<double> scores(const FeatureVector& x) const;

  /// Format "IER-ACTION" version 1; weights as %.17g decimal strings.
  std::string to_json() const;
  /// Throws Error(Malformed) or Error(IncompatibleModel).
  static ActionModel from_json(std::string_view text);

 private:
  std::vector<ActionType> labels_;
  UtteranceFeaturizer featurizer_;
  std::vector<double> weights_;
  double l2_ = 0.0;
};

/// Regularized softmax negative log-likelihood,
///   sum_i w_{y_i} * (logsumexp(W x_i) - (W x_i)_{y_i}) + (l2 / 2) * ||W without bias||^2,
/// over a parameter vector laid out like ActionModel::weights().
class SoftmaxObjective {
 public:
  SoftmaxObjective(std::span<const ActionExample> data, std::vector<ActionType> labels,
                   std::size_t num_features, double l2,
                   std::vector<double> class_weights = {});

  double operator()(std::span<const double> w, std::span<double> grad) const;

  std::size_t dimension() const { return labels_.size() * (num_features_ + 1); }

 private:
  std::span<const ActionExample> data_;
  std::vector<ActionType> labels_;
  std::vector<std::size_t> targets_;
  std::size_t num_features_;
  double l2_;
  std::vector<double> class_weights_;
};

/// Zero-initialized, deterministic. Labels are the distinct training labels in
/// ActionType order. Throws Error(DegenerateData) with fewer than two labels.
ActionModel train_action(std::span<const ActionExample> data, UtteranceFeaturizer featurizer,
                         const ActionTrainConfig& cfg = {}, OptTrace* trace = nullptr);

/// Softmax over class scores; ties resolve to the earliest label.
ActionPrediction predict_action(const ActionModel& model, const FeatureVector& x);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

}  // namespace ier
