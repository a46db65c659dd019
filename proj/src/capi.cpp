#include "ier/ier.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ier/action_model.hpp"
#include "ier/annotation.hpp"
#include "ier/bio.hpp"
#include "ier/crf.hpp"
#include "ier/error.hpp"
#include "ier/features.hpp"
#include "ier/metrics.hpp"
#include "ier/pipeline.hpp"
#include "ier/synth.hpp"

struct ier_corpus {
  ier::Corpus corpus;
  std::vector<ier::ParseError> errors;
};
struct ier_embeddings {
  std::shared_ptr<const ier::EmbeddingTable> table;
};
struct ier_action_model {
  std::shared_ptr<const ier::ActionModel> model;
};
struct ier_crf_model {
  std::shared_ptr<const ier::CrfModel> model;
};
struct ier_report {
  ier::Metrics metrics;
};
struct ier_parser {
  ier::EditParser parser;
};

namespace {

thread_local std::string g_last_error;

ier_status to_status(ier::ErrorCode code) {
  return static_cast<ier_status>(static_cast<int>(code) + 1);
}

ier_status fail(ier_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
ier_status guard(F&& f) noexcept {
  try {
    g_last_error.clear();
    f();
    return IER_OK;
  } catch (const ier::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(IER_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(IER_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(IER_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw ier::Error(ier::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

ier::CorpusFormat to_format(ier_format f) {
  switch (f) {
    case IER_FORMAT_BRACKET: return ier::CorpusFormat::BracketLines;
    case IER_FORMAT_JSONL: return ier::CorpusFormat::Jsonl;
  }
  throw ier::Error(ier::ErrorCode::InvalidArgument, "unknown corpus format");
}

ier::EncodingMode to_mode(ier_encoding e) {
  switch (e) {
    case IER_ENCODING_INNERMOST: return ier::EncodingMode::Innermost;
    case IER_ENCODING_NESTED: return ier::EncodingMode::Nested;
  }
  throw ier::Error(ier::ErrorCode::InvalidArgument, "unknown encoding");
}

ier_train_options defaults() {
  ier_train_options o;
  ier_train_options_init(&o);
  return o;
}

ier::LbfgsConfig optimizer(const ier_train_options& o) {
  ier::LbfgsConfig c;
  c.max_iterations = o.max_iterations;
  return c;
}

const ier::EmbeddingTable* table_of(const ier_embeddings* e) { return e ? e->table.get() : nullptr; }

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ier::Error(ier::ErrorCode::Io, std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const char* path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ier::Error(ier::ErrorCode::Io, std::string("cannot write '") + path + "'");
  out << text;
  if (!out) throw ier::Error(ier::ErrorCode::Io, std::string("write failed for '") + path + "'");
}

nlohmann::ordered_json split_json(const ier::Splits& s) {
  nlohmann::ordered_json j;
  j["train"] = s.train.size();
  j["dev"] = s.dev.size();
  j["test"] = s.test.size();
  j["filtered"] = {{"no_ier", s.filtered.no_ier},
                   {"no_action", s.filtered.no_action},
                   {"other_action", s.filtered.other_action}};
  return j;
}

ier_corpus* wrap(ier::LoadResult&& r) {
  return new ier_corpus{std::move(r.corpus), std::move(r.errors)};
}

}  // namespace

extern "C" {

const char* ier_last_error(void) { return g_last_error.c_str(); }

const char* ier_status_name(ier_status status) {
  if (status == IER_OK) return "Ok";
  if (status == IER_ERR_INTERNAL) return "Internal";
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(ier::ErrorCode::IncompatibleModel)) return "Unknown";
  return ier::error_code_name(static_cast<ier::ErrorCode>(code));
}

void ier_string_free(char* s) { std::free(s); }

const char* ier_version(void) { return "1.0.0"; }

ier_status ier_corpus_load(const char* path, ier_format format, ier_corpus** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(ier::load_corpus_file(path, to_format(format)));
  });
}

ier_status ier_corpus_from_text(const char* data, size_t size, ier_format format,
                                const char* source, ier_corpus** out) {
  return guard([&] {
    require(out, "out");
    if (size > 0) require(data, "data");
    std::istringstream in(std::string(data ? data : "", size));
    *out = wrap(ier::load_corpus(in, to_format(format), source ? source : "<memory>"));
  });
}

void ier_corpus_free(ier_corpus* corpus) { delete corpus; }

size_t ier_corpus_size(const ier_corpus* corpus) { return corpus ? corpus->corpus.size() : 0; }

size_t ier_corpus_error_count(const ier_corpus* corpus) {
  return corpus ? corpus->errors.size() : 0;
}

ier_status ier_corpus_error(const ier_corpus* corpus, size_t index, ier_parse_error_info* out) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    if (index >= corpus->errors.size())
      throw ier::Error(ier::ErrorCode::InvalidArgument, "error index out of range");
    const auto& e = corpus->errors[index];
    out->line = e.line();
    out->token = e.token_offset();
    out->category = static_cast<ier_parse_category>(e.category());
    out->category_name = ier::parse_category_name(e.category());
    out->message = e.what();
  });
}

ier_status ier_corpus_filter(const ier_corpus* corpus, ier_corpus** out,
                             ier_filter_counts* counts) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    ier::FilterReport report;
    auto kept = ier::filter_executable(corpus->corpus, &report);
    *out = new ier_corpus{std::move(kept), {}};
    if (counts) *counts = {report.no_ier, report.other_action, report.no_action};
  });
}

ier_status ier_corpus_write(const ier_corpus* corpus, ier_format format, char** out) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    std::ostringstream ss;
    ier::write_corpus(ss, corpus->corpus, to_format(format));
    *out = dup_string(ss.str());
  });
}

ier_status ier_corpus_encode(const ier_corpus* corpus, ier_encoding encoding, size_t max_depth,
                             char** out) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    const auto mode = to_mode(encoding);
    std::string text;
    for (const auto& u : corpus->corpus.utterances) {
      const auto tags = ier::encode(u, mode, max_depth);
      for (std::size_t i = 0; i < tags.size(); ++i) {
        if (i) text += ' ';
        text += u.tokens[i].text;
        text += '\t';
        text += tags[i].str();
      }
      text += '\n';
    }
    *out = dup_string(text);
  });
}

ier_status ier_parse_line(const char* line, char** canonical) {
  return guard([&] {
    require(line, "line");
    require(canonical, "canonical");
    *canonical = dup_string(ier::serialize(ier::parse_line(line)));
  });
}

void ier_synth_options_init(ier_synth_options* opts) {
  if (!opts) return;
  opts->count = 1000;
  opts->seed = 1;
  opts->hard = 0;
  opts->comment_rate = 0.0;
}

ier_status ier_synth_generate(const ier_synth_options* opts, ier_corpus** out) {
  return guard([&] {
    require(opts, "opts");
    require(out, "out");
    ier::SynthConfig cfg;
    cfg.hard = opts->hard != 0;
    cfg.comment_rate = opts->comment_rate;
    *out = new ier_corpus{ier::generate(cfg, opts->count, opts->seed), {}};
  });
}

ier_status ier_embeddings_load(const char* path, ier_embeddings** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto table = std::make_shared<const ier::EmbeddingTable>(ier::load_word_vectors_file(path));
    *out = new ier_embeddings{std::move(table)};
  });
}

void ier_embeddings_free(ier_embeddings* table) { delete table; }

size_t ier_embeddings_dim(const ier_embeddings* table) {
  return table && table->table ? table->table->dim() : 0;
}

void ier_train_options_init(ier_train_options* opts) {
  if (!opts) return;
  opts->seed = 13;
  opts->l2 = 1.0;
  opts->max_iterations = ier::LbfgsConfig{}.max_iterations;
  opts->class_weights = 0;
  opts->encoding = IER_ENCODING_INNERMOST;
  opts->max_depth = 2;
  opts->action_features = 1;
  opts->tune = 0;
}

ier_status ier_action_train(const ier_corpus* corpus, const ier_embeddings* embeddings,
                            const ier_train_options* opts, ier_action_model** out,
                            char** summary_json) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    const auto o = opts ? *opts : defaults();
    const auto splits = ier::preprocess(corpus->corpus, ier::SplitSpec::action(o.seed));
    ier::ActionTrainConfig cfg;
    cfg.l2 = o.l2;
    cfg.optimizer = optimizer(o);
    cfg.inverse_frequency_weights = o.class_weights != 0;
    ier::OptTrace trace;
    auto model = std::make_shared<const ier::ActionModel>(
        ier::fit_action_model(splits.train, table_of(embeddings), cfg, &trace));
    if (summary_json) {
      nlohmann::ordered_json j;
      j["splits"] = split_json(splits);
      j["classes"] = model->num_classes();
      j["features"] = model->num_features();
      j["l2"] = cfg.l2;
      j["iterations"] = trace.size();
      j["objective"] = trace.empty() ? 0.0 : trace.back().value;
      *summary_json = dup_string(j.dump());
    }
    *out = new ier_action_model{std::move(model)};
  });
}

ier_status ier_action_evaluate(const ier_action_model* model, const ier_corpus* corpus,
                               const ier_embeddings* embeddings, const ier_train_options* opts,
                               ier_report** out) {
  return guard([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(out, "out");
    const auto o = opts ? *opts : defaults();
    const auto splits = ier::preprocess(corpus->corpus, ier::SplitSpec::action(o.seed));
    *out = new ier_report{
        ier::evaluate_action_model(*model->model, splits.test, table_of(embeddings))};
  });
}

ier_status ier_action_model_to_json(const ier_action_model* model, char** out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    *out = dup_string(model->model->to_json());
  });
}

ier_status ier_action_model_from_json(const char* json, ier_action_model** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    *out = new ier_action_model{
        std::make_shared<const ier::ActionModel>(ier::ActionModel::from_json(json))};
  });
}

ier_status ier_action_model_save(const ier_action_model* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    write_file(path, model->model->to_json());
  });
}

ier_status ier_action_model_load(const char* path, ier_action_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ier_action_model{
        std::make_shared<const ier::ActionModel>(ier::ActionModel::from_json(read_file(path)))};
  });
}

void ier_action_model_free(ier_action_model* model) { delete model; }

ier_status ier_crf_train(const ier_corpus* corpus, const ier_train_options* opts,
                         ier_crf_model** out, char** summary_json) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    const auto o = opts ? *opts : defaults();
    const auto splits = ier::preprocess(corpus->corpus, ier::SplitSpec::entity(o.seed));
    ier::EntityTrainConfig cfg;
    cfg.crf.l2 = o.l2;
    cfg.crf.optimizer = optimizer(o);
    cfg.crf.action_features = o.action_features != 0;
    cfg.mode = to_mode(o.encoding);
    cfg.max_depth = o.max_depth;
    cfg.tune = o.tune != 0;
    auto fit = ier::fit_entity_model(splits.train, splits.dev, cfg);
    if (summary_json) {
      nlohmann::ordered_json j;
      j["splits"] = split_json(splits);
      j["tags"] = fit.model.tags().names();
      j["attributes"] = fit.model.attributes().size();
      j["l2"] = fit.l2;
      auto& tuning = j["tuning"] = nlohmann::ordered_json::array();
      for (const auto& [l2, f1] : fit.tuning) tuning.push_back({{"l2", l2}, {"dev_f1", f1}});
      *summary_json = dup_string(j.dump());
    }
    *out = new ier_crf_model{std::make_shared<const ier::CrfModel>(std::move(fit.model))};
  });
}

ier_status ier_crf_evaluate(const ier_crf_model* model, const ier_corpus* corpus,
                            const ier_train_options* opts, const ier_action_model* action_model,
                            const ier_embeddings* embeddings, ier_report** span_report,
                            ier_report** token_report) {
  return guard([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(span_report, "span_report");
    const auto o = opts ? *opts : defaults();
    const auto splits = ier::preprocess(corpus->corpus, ier::SplitSpec::entity(o.seed));
    auto ev = ier::evaluate_entity_model(*model->model, splits.test, to_mode(o.encoding),
                                         o.max_depth,
                                         action_model ? action_model->model.get() : nullptr,
                                         table_of(embeddings));
    auto spans = std::make_unique<ier_report>(ier_report{std::move(ev.spans)});
    if (token_report) *token_report = new ier_report{std::move(ev.tokens)};
    *span_report = spans.release();
  });
}

ier_status ier_crf_model_to_json(const ier_crf_model* model, char** out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    *out = dup_string(model->model->to_json());
  });
}

ier_status ier_crf_model_from_json(const char* json, ier_crf_model** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    *out = new ier_crf_model{std::make_shared<const ier::CrfModel>(ier::CrfModel::from_json(json))};
  });
}

ier_status ier_crf_model_save(const ier_crf_model* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    write_file(path, model->model->to_json());
  });
}

ier_status ier_crf_model_load(const char* path, ier_crf_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ier_crf_model{
        std::make_shared<const ier::CrfModel>(ier::CrfModel::from_json(read_file(path)))};
  });
}

void ier_crf_model_free(ier_crf_model* model) { delete model; }

ier_status ier_report_table(const ier_report* report, char** out) {
  return guard([&] {
    require(report, "report");
    require(out, "out");
    *out = dup_string(report->metrics.table());
  });
}

ier_status ier_report_json(const ier_report* report, char** out) {
  return guard([&] {
    require(report, "report");
    require(out, "out");
    *out = dup_string(report->metrics.to_json());
  });
}

ier_status ier_report_confusion_csv(const ier_report* report, char** out) {
  return guard([&] {
    require(report, "report");
    require(out, "out");
    *out = dup_string(report->metrics.confusion_csv());
  });
}

ier_status ier_report_f1(const ier_report* report, ier_average average, double* f1) {
  return guard([&] {
    require(report, "report");
    require(f1, "f1");
    switch (average) {
      case IER_MICRO: *f1 = report->metrics.micro.f1; return;
      case IER_MACRO: *f1 = report->metrics.macro.f1; return;
      case IER_WEIGHTED: *f1 = report->metrics.weighted.f1; return;
    }
    throw ier::Error(ier::ErrorCode::InvalidArgument, "unknown average");
  });
}

void ier_report_free(ier_report* report) { delete report; }

ier_status ier_parser_create(const ier_action_model* actions, const ier_crf_model* entities,
                             const ier_embeddings* embeddings, ier_parser** out) {
  return guard([&] {
    require(actions, "actions");
    require(entities, "entities");
    require(out, "out");
    *out = new ier_parser{ier::EditParser(actions->model, entities->model,
                                          embeddings ? embeddings->table : nullptr)};
  });
}

ier_status ier_parser_parse(ier_parser* parser, const char* text, double tau, const char* id,
                            char** json, int* ambiguous) {
  return guard([&] {
    require(parser, "parser");
    require(text, "text");
    require(json, "json");
    const auto outcome = parser->parser.parse(text, tau, id ? id : "");
    *json = dup_string(ier::to_json(outcome));
    if (ambiguous) *ambiguous = std::holds_alternative<ier::AmbiguousRequest>(outcome) ? 1 : 0;
  });
}

size_t ier_parser_level2_calls(const ier_parser* parser) {
  return parser ? parser->parser.level2_calls() : 0;
}

void ier_parser_free(ier_parser* parser) { delete parser; }

ier_status ier_agreement_from_csv(const char* csv, double* alpha, size_t* items) {
  return guard([&] {
    require(csv, "csv");
    require(alpha, "alpha");
    const auto ratings = ier::parse_ratings_csv(csv);
    *alpha = ier::krippendorff_alpha(ratings);
    if (items) *items = ratings.size();
  });
}

}  // extern "C"
