#include "ier/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ier/bio.hpp"
#include "ier/error.hpp"
#include "random.hpp"

namespace ier {

namespace {

std::size_t floor_share(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

FeatureVector utterance_features(const UtteranceFeaturizer& f, const std::vector<Token>& tokens,
                                 const EmbeddingTable* embeddings) {
  return f.transform(tokens, f.embedding_dim() > 0 ? embeddings : nullptr);
}

std::string span_text(const std::vector<Token>& tokens, std::size_t start, std::size_t end) {
  std::string out;
  for (std::size_t i = start; i < end; ++i) {
    if (i > start) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

}  // namespace

void SplitSpec::validate() const {
  if (train < 0 || dev < 0 || test < 0 || std::abs(train + dev + test - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "split fractions must be non-negative and sum to 1");
}

Splits preprocess(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  Splits out;
  Corpus kept = filter_executable(corpus, &out.filtered);
  if (kept.empty())
    throw Error(ErrorCode::EmptyAfterFilter, "no executable utterances left after filtering");
  auto& utts = kept.utterances;
  detail::Rng rng(detail::splitmix64(spec.seed));
  rng.shuffle(utts);

  const std::size_t n = utts.size();
  const std::size_t n_dev = floor_share(spec.dev, n);
  const std::size_t n_test = floor_share(spec.test, n);
  const std::size_t n_train = n - n_dev - n_test;
  auto it = std::make_move_iterator(utts.begin());
  out.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  out.dev.assign(it + static_cast<std::ptrdiff_t>(n_train),
                 it + static_cast<std::ptrdiff_t>(n_train + n_dev));
  out.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_dev),
                  std::make_move_iterator(utts.end()));
  return out;
}

EncodingMode parse_encoding_mode(std::string_view name) {
  if (name == "innermost") return EncodingMode::Innermost;
  if (name == "nested") return EncodingMode::Nested;
  throw Error(ErrorCode::InvalidArgument, "unknown encoding mode '" + std::string(name) + "'");
}

BioSequence encode(const AnnotatedUtterance& utt, EncodingMode mode, std::size_t max_depth) {
  return mode == EncodingMode::Innermost ? encode_innermost(utt) : encode_nested(utt, max_depth);
}

ActionData action_examples(const Splits& splits, const EmbeddingTable* embeddings) {
  std::vector<std::vector<Token>> train_tokens;
  train_tokens.reserve(splits.train.size());
  for (const auto& u : splits.train) train_tokens.push_back(u.tokens);
  ActionData data;
  data.featurizer =
      UtteranceFeaturizer::fit(train_tokens, embeddings ? embeddings->dim() : std::size_t{0});
  auto convert = [&](const std::vector<AnnotatedUtterance>& utts, std::vector<ActionExample>& dst) {
    for (const auto& u : utts)
      dst.push_back({utterance_features(data.featurizer, u.tokens, embeddings), *u.action()});
  };
  convert(splits.train, data.train);
  convert(splits.test, data.test);
  return data;
}

std::vector<TaggedSequence> entity_examples(const std::vector<AnnotatedUtterance>& utts,
                                            EncodingMode mode, std::size_t max_depth) {
  std::vector<TaggedSequence> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back({u.tokens, encode(u, mode, max_depth), u.action()});
  return out;
}

ActionModel fit_action_model(const std::vector<AnnotatedUtterance>& train,
                             const EmbeddingTable* embeddings, const ActionTrainConfig& cfg,
                             OptTrace* trace) {
  Splits only_train;
  only_train.train = train;
  for (const auto& u : train)
    if (!u.action())
      throw Error(ErrorCode::InvalidArgument, "training utterance '" + u.id + "' has no action");
  auto data = action_examples(only_train, embeddings);
  return train_action(data.train, std::move(data.featurizer), cfg, trace);
}

Metrics evaluate_action_model(const ActionModel& model,
                              const std::vector<AnnotatedUtterance>& test,
                              const EmbeddingTable* embeddings) {
  std::vector<bool> present(kNumActions, false);
  for (auto a : model.labels()) present[static_cast<std::size_t>(a)] = true;
  std::vector<std::string> gold, pred;
  for (const auto& u : test) {
    const auto g = u.action();
    if (!g) throw Error(ErrorCode::InvalidArgument, "test utterance '" + u.id + "' has no action");
    present[static_cast<std::size_t>(*g)] = true;
    const auto p = predict_action(model, utterance_features(model.featurizer(), u.tokens, embeddings));
    gold.emplace_back(action_name(*g));
    pred.emplace_back(action_name(p.action));
  }
  std::vector<std::string> labels;
  for (auto a : all_actions())
    if (present[static_cast<std::size_t>(a)]) labels.emplace_back(action_name(a));
  return classification_report(gold, pred, labels);
}

EntityFit fit_entity_model(const std::vector<AnnotatedUtterance>& train,
                           const std::vector<AnnotatedUtterance>& dev,
                           const EntityTrainConfig& cfg) {
  const auto data = entity_examples(train, cfg.mode, cfg.max_depth);
  if (!cfg.tune || dev.empty()) {
    return {train_crf(data, cfg.crf), cfg.crf.l2, {}};
  }
  EntityFit best{CrfModel{}, 0.0, {}};
  double best_f1 = -1.0;
  for (double l2 : {0.1, 1.0, 10.0}) {
    CrfTrainConfig c = cfg.crf;
    c.l2 = l2;
    CrfModel m = train_crf(data, c);
    const double f1 = evaluate_entity_model(m, dev, cfg.mode, cfg.max_depth).spans.micro.f1;
    best.tuning.emplace_back(l2, f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      best.model = std::move(m);
      best.l2 = l2;
    }
  }
  return best;
}

EntityEvaluation evaluate_entity_model(const CrfModel& model,
                                       const std::vector<AnnotatedUtterance>& test,
                                       EncodingMode mode, std::size_t max_depth,
                                       const ActionModel* action_model,
                                       const EmbeddingTable* embeddings) {
  std::vector<std::vector<Span>> gold_spans, pred_spans;
  std::vector<std::string> gold_tags, pred_tags;
  std::vector<std::string> labels = model.tags().names();
  auto note_label = [&](const std::string& t) {
    if (std::find(labels.begin(), labels.end(), t) == labels.end()) labels.push_back(t);
  };
  for (const auto& u : test) {
    if (u.tokens.empty()) continue;
    const auto gold = encode(u, mode, max_depth);
    std::optional<ActionType> action = u.action();
    if (action_model)
      action = predict_action(*action_model,
                              utterance_features(action_model->featurizer(), u.tokens, embeddings))
                   .action;
    const auto pred = predict_tags(model, u.tokens, action);
    gold_spans.push_back(decode(gold));
    pred_spans.push_back(decode(pred));
    for (std::size_t i = 0; i < gold.size(); ++i) {
      gold_tags.push_back(gold[i].str());
      pred_tags.push_back(pred[i].str());
      note_label(gold_tags.back());
    }
  }
  return {span_f1(gold_spans, pred_spans), classification_report(gold_tags, pred_tags, labels)};
}

std::string to_json(const ParseOutcome& outcome) {
  nlohmann::ordered_json j;
  if (const auto* cmd = std::get_if<EditCommand>(&outcome)) {
    j["id"] = cmd->id;
    j["action"] = std::string(action_name(cmd->action));
    j["confidence"] = cmd->confidence;
    auto& ents = j["entities"] = nlohmann::ordered_json::array();
    for (const auto& e : cmd->entities) {
      nlohmann::ordered_json o;
      o["label"] = std::string(entity_name(e.label));
      o["start"] = e.start;
      o["end"] = e.end;
      o["text"] = e.text;
      ents.push_back(std::move(o));
    }
  } else {
    const auto& amb = std::get<AmbiguousRequest>(outcome);
    j["id"] = amb.id;
    j["ambiguous"] = true;
    j["best_action"] = std::string(action_name(amb.best_action));
    j["confidence"] = amb.confidence;
  }
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

ParseOutcome predict_ier(const ActionModel& actions, const CrfModel& entities,
                         std::string_view text, double tau, const EmbeddingTable* embeddings,
                         std::string id, std::atomic<std::size_t>* level2_calls) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "request text is empty");
  const auto level1 =
      predict_action(actions, utterance_features(actions.featurizer(), tokens, embeddings));
  if (level1.confidence < tau) return AmbiguousRequest{std::move(id), level1.action, level1.confidence};

  if (level2_calls) ++*level2_calls;
  const auto tags = predict_tags(entities, tokens, level1.action);
  EditCommand cmd{std::move(id), level1.action, level1.confidence, {}};
  for (const auto& s : decode(tags))
    cmd.entities.push_back({s.label, s.start, s.end, span_text(tokens, s.start, s.end)});
  return cmd;
}

EditParser::EditParser(std::shared_ptr<const ActionModel> actions,
                       std::shared_ptr<const CrfModel> entities,
                       std::shared_ptr<const EmbeddingTable> embeddings)
    : actions_(std::move(actions)),
      entities_(std::move(entities)),
      embeddings_(std::move(embeddings)) {
  if (!actions_ || !entities_)
    throw Error(ErrorCode::InvalidArgument, "both level-1 and level-2 models are required");
  const std::size_t dim = actions_->featurizer().embedding_dim();
  if (dim > 0 && (!embeddings_ || embeddings_->dim() != dim))
    throw Error(ErrorCode::IncompatibleModel,
                "action model expects word vectors of dimension " + std::to_string(dim));
}

ParseOutcome EditParser::parse(std::string_view text, double tau, std::string id) const {
  return predict_ier(*actions_, *entities_, text, tau, embeddings_.get(), std::move(id),
                     &level2_calls_);
}

}  // namespace ier
