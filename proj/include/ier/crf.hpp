#pragma once

// Level 2: linear-chain CRF over BIO tags.
//
// A path y_0..y_{L-1} scores
//   start[y_0] + sum_t emission(t, y_t) + sum_{t>0} transition(y_{t-1}, y_t) + stop[y_{L-1}]
// and all inference runs in log space.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ier/features.hpp"
#include "ier/lbfgs.hpp"
#include "ier/vocab.hpp"

namespace ier {

/// Ordered tag alphabet; "O" is always index 0.
class TagSet {
 public:
  TagSet();
  explicit TagSet(const std::vector<std::string>& tags);

  std::size_t add(const std::string& tag);
  std::optional<std::size_t> find(std::string_view tag) const;
  const std::string& name(std::size_t i) const { return tags_[i]; }
  const std::vector<std::string>& names() const { return tags_; }
  std::size_t size() const { return tags_.size(); }

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Potentials {
  std::size_t length = 0;
  std::size_t num_tags = 0;
  std::vector<double> emission;    // length x num_tags
  std::vector<double> transition;  // num_tags x num_tags, [prev][cur]
  std::vector<double> start;       // num_tags
  std::vector<double> stop;        // num_tags

  Potentials() = default;
  Potentials(std::size_t length, std::size_t num_tags);

  double& emit(std::size_t t, std::size_t y) { return emission[t * num_tags + y]; }
  double emit(std::size_t t, std::size_t y) const { return emission[t * num_tags + y]; }
  double& trans(std::size_t prev, std::size_t cur) { return transition[prev * num_tags + cur]; }
  double trans(std::size_t prev, std::size_t cur) const {
    return transition[prev * num_tags + cur];
  }
};

/// Score of one path, accumulated in the same order as the Viterbi recursion.
double path_score(const Potentials& p, std::span<const std::size_t> path);

double log_partition(const Potentials& p);

struct Marginals {
  double log_z = 0.0;
  std::vector<double> node;  // length x num_tags, P(y_t = y)
  std::vector<double> edge;  // num_tags x num_tags, sum_t P(y_{t-1} = a, y_t = b)
};

Marginals forward_backward(const Potentials& p);

struct ViterbiResult {
  std::vector<std::size_t> path;
  double score = 0.0;
};

/// Among equally scored paths, the one with the lowest final tag, then the
/// lowest predecessor at each backtracking step.
ViterbiResult viterbi(const Potentials& p);

/// A training sequence after feature interning: attribute ids per position and
/// gold tag indices.
struct CrfSequence {
  std::vector<std::vector<std::uint32_t>> features;
  std::vector<std::size_t> tags;
};

class CrfModel {
 public:
  CrfModel() = default;
  CrfModel(TagSet tags, FeatureDictionary attributes, std::vector<double> weights, double l2,
           bool action_features);

  const TagSet& tags() const { return tags_; }
  const FeatureDictionary& attributes() const { return attributes_; }
  const std::vector<double>& weights() const { return weights_; }
  double l2() const { return l2_; }
  bool action_features() const { return action_features_; }

  static std::size_t parameter_count(std::size_t num_attributes, std::size_t num_tags);

  /// Attribute ids known to the model; unseen feature strings are dropped.
  std::vector<std::vector<std::uint32_t>> featurize(std::span<const Token> tokens,
                                                    std::optional<ActionType> action) const;

  /// Throws Error(UnknownTag) when a gold tag is not in the tag set.
  CrfSequence encode(std::span<const Token> tokens, const BioSequence& gold,
                     std::optional<ActionType> action) const;

  Potentials potentials(const std::vector<std::vector<std::uint32_t>>& features) const;

  /// Format "IER-CRF" version 1.
  std::string to_json() const;
  static CrfModel from_json(std::string_view text);

 private:
  TagSet tags_;
  FeatureDictionary attributes_;
  std::vector<double> weights_;
  double l2_ = 0.0;
  bool action_features_ = true;
};

/// sum_seq (log Z - gold score) + (l2 / 2) ||w||^2 and its gradient
/// (expected minus observed feature counts, plus l2 * w).
class CrfObjective {
 public:
  CrfObjective(std::span<const CrfSequence> data, std::size_t num_attributes,
               std::size_t num_tags, double l2);

  double operator()(std::span<const double> w, std::span<double> grad) const;
  std::size_t dimension() const;

 private:
  std::span<const CrfSequence> data_;
  std::size_t num_attributes_;
  std::size_t num_tags_;
  double l2_;
};

std::pair<double, std::vector<double>> nll_and_grad(const CrfModel& model,
                                                    std::span<const CrfSequence> batch);

struct TaggedSequence {
  std::vector<Token> tokens;
  BioSequence tags;
  std::optional<ActionType> action;
};

struct CrfTrainConfig {
  double l2 = 1.0;
  LbfgsConfig optimizer;
  bool action_features = true;
};

/// Builds the tag set and attribute dictionary from the data, then minimizes
/// the objective from zero. Throws Error(EmptyCorpus).
CrfModel train_crf(std::span<const TaggedSequence> data, const CrfTrainConfig& cfg = {},
                   OptTrace* trace = nullptr);

/// Viterbi decoding. The action is used only when the model was trained with
/// action features. Throws Error(EmptyInput) for an empty token list.
BioSequence predict_tags(const CrfModel& model, std::span<const Token> tokens,
                         std::optional<ActionType> action);

}  // namespace ier
