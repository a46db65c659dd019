#pragma once

// Preprocessing, two-level training and evaluation, and raw-text prediction
// of executable edit commands.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ier/action_model.hpp"
#include "ier/annotation.hpp"
#include "ier/crf.hpp"
#include "ier/features.hpp"
#include "ier/metrics.hpp"

namespace ier {

enum class SplitMode { Action, Entity };

struct SplitSpec {
  SplitMode mode = SplitMode::Action;
  std::uint64_t seed = 13;
  double train = 0.75;
  double dev = 0.0;
  double test = 0.25;

  static SplitSpec action(std::uint64_t seed) { return {SplitMode::Action, seed, 0.75, 0.0, 0.25}; }
  static SplitSpec entity(std::uint64_t seed) { return {SplitMode::Entity, seed, 0.80, 0.10, 0.10}; }

  void validate() const;
};

struct Splits {
  std::vector<AnnotatedUtterance> train;
  std::vector<AnnotatedUtterance> dev;
  std::vector<AnnotatedUtterance> test;
  FilterReport filtered;
};

/// filter_executable, then a seeded shuffle, then contiguous slices. Dev and
/// test sizes are floor(fraction * N); the remainder goes to train.
/// Throws Error(EmptyAfterFilter).
Splits preprocess(const Corpus& corpus, const SplitSpec& spec);

enum class EncodingMode { Innermost, Nested };

EncodingMode parse_encoding_mode(std::string_view name);

BioSequence encode(const AnnotatedUtterance& utt, EncodingMode mode, std::size_t max_depth = 2);

struct ActionData {
  UtteranceFeaturizer featurizer;
  std::vector<ActionExample> train;
  std::vector<ActionExample> test;
};

/// Fits the bag-of-words vocabulary on the train split and featurizes both
/// splits. `embeddings` may be null.
ActionData action_examples(const Splits& splits, const EmbeddingTable* embeddings);

/// (tokens, tags, gold action) per utterance.
std::vector<TaggedSequence> entity_examples(const std::vector<AnnotatedUtterance>& utts,
                                            EncodingMode mode, std::size_t max_depth = 2);

ActionModel fit_action_model(const std::vector<AnnotatedUtterance>& train,
                             const EmbeddingTable* embeddings, const ActionTrainConfig& cfg = {},
                             OptTrace* trace = nullptr);

/// Labels: the model's labels plus any gold label it never saw, in ActionType order.
Metrics evaluate_action_model(const ActionModel& model,
                              const std::vector<AnnotatedUtterance>& test,
                              const EmbeddingTable* embeddings);

struct EntityTrainConfig {
  CrfTrainConfig crf;
  EncodingMode mode = EncodingMode::Innermost;
  std::size_t max_depth = 2;
  /// Select l2 from {0.1, 1, 10} by dev span F1 (first best wins).
  bool tune = false;
};

struct EntityFit {
  CrfModel model;
  double l2 = 0.0;
  std::vector<std::pair<double, double>> tuning;  // (l2, dev span F1)
};

EntityFit fit_entity_model(const std::vector<AnnotatedUtterance>& train,
                           const std::vector<AnnotatedUtterance>& dev,
                           const EntityTrainConfig& cfg = {});

struct EntityEvaluation {
  Metrics spans;   // exact-match span scores
  Metrics tokens;  // per-tag token classification
};

/// Level-2 scores against the flattened gold annotation. With `action_model`
/// the CRF receives predicted actions, otherwise gold actions.
EntityEvaluation evaluate_entity_model(const CrfModel& model,
                                       const std::vector<AnnotatedUtterance>& test,
                                       EncodingMode mode, std::size_t max_depth,
                                       const ActionModel* action_model = nullptr,
                                       const EmbeddingTable* embeddings = nullptr);

struct CommandEntity {
  EntityLabel label;
  std::size_t start;
  std::size_t end;
  std::string text;
};

struct EditCommand {
  std::string id;
  ActionType action;
  double confidence = 0.0;
  std::vector<CommandEntity> entities;
};

/// Level 1 was not confident enough; level 2 did not run.
struct AmbiguousRequest {
  std::string id;
  ActionType best_action;
  double confidence = 0.0;
};

using ParseOutcome = std::variant<EditCommand, AmbiguousRequest>;

std::string to_json(const ParseOutcome& outcome);

/// The two-level parser. Counts level-2 invocations so callers can verify
/// that gated requests never reach the tagger.
class EditParser {
 public:
  EditParser(std::shared_ptr<const ActionModel> actions, std::shared_ptr<const CrfModel> entities,
             std::shared_ptr<const EmbeddingTable> embeddings = nullptr);

  /// tokenize -> classify action -> gate on `tau` -> tag entities -> decode.
  /// Throws Error(EmptyInput) when the text has no tokens.
  ParseOutcome parse(std::string_view text, double tau = 0.0, std::string id = {}) const;

  std::size_t level2_calls() const { return level2_calls_.load(); }

 private:
  std::shared_ptr<const ActionModel> actions_;
  std::shared_ptr<const CrfModel> entities_;
  std::shared_ptr<const EmbeddingTable> embeddings_;
  mutable std::atomic<std::size_t> level2_calls_{0};
};

/// Free-function form of EditParser::parse. `level2_calls`, when given, is
/// incremented each time the tagger runs.
ParseOutcome predict_ier(const ActionModel& actions, const CrfModel& entities,
                         std::string_view text, double tau = 0.0,
                         const EmbeddingTable* embeddings = nullptr, std::string id = {},
                         std::atomic<std::size_t>* level2_calls = nullptr);

}  // namespace ier
