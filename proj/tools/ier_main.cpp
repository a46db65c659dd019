// Command-line front end. Talks to the library only through ier.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ier/ier.h"

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;

struct Failure {
  int code;
};

[[noreturn]] void die(ier_status s) {
  std::cerr << "ier: " << ier_status_name(s) << ": " << ier_last_error() << '\n';
  throw Failure{s == IER_ERR_INVALID_ARGUMENT ? kUsage : kData};
}

void check(ier_status s) {
  if (s != IER_OK) die(s);
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Corpus = std::unique_ptr<ier_corpus, Deleter<ier_corpus, ier_corpus_free>>;
using Embeddings = std::unique_ptr<ier_embeddings, Deleter<ier_embeddings, ier_embeddings_free>>;
using ActionModel =
    std::unique_ptr<ier_action_model, Deleter<ier_action_model, ier_action_model_free>>;
using CrfModel = std::unique_ptr<ier_crf_model, Deleter<ier_crf_model, ier_crf_model_free>>;
using Report = std::unique_ptr<ier_report, Deleter<ier_report, ier_report_free>>;
using Parser = std::unique_ptr<ier_parser, Deleter<ier_parser, ier_parser_free>>;

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  ier_string_free(s);
  return out;
}

std::string read_all(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "ier: cannot open '" << path << "'\n";
    throw Failure{kData};
  }
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    std::cerr << "ier: cannot write '" << path << "'\n";
    throw Failure{kData};
  }
}

struct Common {
  std::string input = "-";
  std::string format = "bracket";
  std::string output;
  std::uint64_t seed = 13;
  std::string embeddings;
  double l2 = 1.0;
  std::string mode = "innermost";
  std::size_t max_depth = 2;
  std::size_t max_errors = 0;
  std::size_t max_iter = 200;
  std::string json_path;
};

ier_format format_of(const Common& c) {
  return c.format == "jsonl" ? IER_FORMAT_JSONL : IER_FORMAT_BRACKET;
}

ier_encoding encoding_of(const Common& c) {
  return c.mode == "nested" ? IER_ENCODING_NESTED : IER_ENCODING_INNERMOST;
}

ier_train_options options_of(const Common& c) {
  ier_train_options o;
  ier_train_options_init(&o);
  o.seed = c.seed;
  o.l2 = c.l2;
  o.max_iterations = c.max_iter;
  o.encoding = encoding_of(c);
  o.max_depth = c.max_depth;
  return o;
}

// Loads a corpus, reports malformed lines on stderr and enforces --max-errors.
Corpus load(const Common& c) {
  const std::string text = read_all(c.input);
  ier_corpus* raw = nullptr;
  check(ier_corpus_from_text(text.data(), text.size(), format_of(c),
                             c.input == "-" ? "<stdin>" : c.input.c_str(), &raw));
  Corpus corpus(raw);
  const std::size_t n = ier_corpus_error_count(raw);
  for (std::size_t i = 0; i < n; ++i) {
    ier_parse_error_info info;
    check(ier_corpus_error(raw, i, &info));
    std::cerr << c.input << ": " << info.message << '\n';
  }
  if (c.max_errors > 0 && n > c.max_errors) {
    std::cerr << "ier: " << n << " malformed lines exceed --max-errors " << c.max_errors << '\n';
    throw Failure{kData};
  }
  return corpus;
}

Embeddings load_embeddings(const std::string& path) {
  if (path.empty()) return nullptr;
  ier_embeddings* raw = nullptr;
  check(ier_embeddings_load(path.c_str(), &raw));
  return Embeddings(raw);
}

void emit_report(const ier_report* report, const std::string& json_path) {
  char* s = nullptr;
  check(ier_report_table(report, &s));
  std::cout << take(s);
  if (!json_path.empty()) {
    check(ier_report_json(report, &s));
    write_out(json_path, take(s) + "\n");
  }
}

void add_input(CLI::App* app, Common& c) {
  app->add_option("input", c.input, "Corpus file ('-' for stdin)");
  app->add_option("--format", c.format, "Corpus format")
      ->check(CLI::IsMember({"bracket", "bracket-lines", "jsonl"}));
  app->add_option("--max-errors", c.max_errors,
                  "Fail when more lines than this are malformed (0: report and continue)");
}

void add_seed(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Split seed");
}

void add_mode(CLI::App* app, Common& c) {
  app->add_option("--mode", c.mode, "BIO encoding")->check(CLI::IsMember({"innermost", "nested"}));
  app->add_option("--max-depth", c.max_depth, "Label depth kept by the nested encoding")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parse natural-language image edit requests into edit commands"};
  app.require_subcommand(1);
  Common c;

  // parse
  auto* parse = app.add_subcommand("parse", "Validate a corpus and report malformed lines");
  add_input(parse, c);
  parse->add_option("-o", c.output, "Write the canonical corpus here");
  parse->callback([&] {
    auto corpus = load(c);
    std::cout << ier_corpus_size(corpus.get()) << " utterances, "
              << ier_corpus_error_count(corpus.get()) << " errors\n";
    if (!c.output.empty()) {
      char* s = nullptr;
      check(ier_corpus_write(corpus.get(), format_of(c), &s));
      write_out(c.output, take(s));
    }
  });

  // encode
  auto* encode = app.add_subcommand("encode", "Print token<TAB>BIO-tag sequences");
  add_input(encode, c);
  add_mode(encode, c);
  encode->add_option("-o", c.output, "Output path");
  encode->callback([&] {
    auto corpus = load(c);
    char* s = nullptr;
    check(ier_corpus_encode(corpus.get(), encoding_of(c), c.max_depth, &s));
    write_out(c.output, take(s));
  });

  // train-action
  bool class_weights = false;
  auto* train_action = app.add_subcommand("train-action", "Train the action classifier");
  add_input(train_action, c);
  add_seed(train_action, c);
  train_action->add_option("--embeddings", c.embeddings, "Word-vector file");
  train_action->add_option("--l2", c.l2, "L2 strength")->check(CLI::NonNegativeNumber);
  train_action->add_option("--max-iter", c.max_iter, "L-BFGS iteration cap");
  train_action->add_flag("--class-weights", class_weights, "Inverse-frequency class weights");
  train_action->add_option("-o", c.output, "Model output path")->required();
  train_action->callback([&] {
    auto corpus = load(c);
    auto emb = load_embeddings(c.embeddings);
    auto o = options_of(c);
    o.class_weights = class_weights ? 1 : 0;
    ier_action_model* raw = nullptr;
    char* summary = nullptr;
    check(ier_action_train(corpus.get(), emb.get(), &o, &raw, &summary));
    ActionModel model(raw);
    check(ier_action_model_save(raw, c.output.c_str()));
    std::cout << take(summary) << '\n';
  });

  // eval-action
  std::string action_model_path;
  std::string confusion_path;
  auto* eval_action = app.add_subcommand("eval-action", "Score the action classifier on the test split");
  add_input(eval_action, c);
  add_seed(eval_action, c);
  eval_action->add_option("--model,--action-model", action_model_path, "Action model")->required();
  eval_action->add_option("--embeddings", c.embeddings, "Word-vector file");
  eval_action->add_option("--json", c.json_path, "Write the report as JSON");
  eval_action->add_option("--confusion", confusion_path, "Write the confusion matrix as CSV");
  eval_action->callback([&] {
    auto corpus = load(c);
    auto emb = load_embeddings(c.embeddings);
    ier_action_model* raw = nullptr;
    check(ier_action_model_load(action_model_path.c_str(), &raw));
    ActionModel model(raw);
    const auto o = options_of(c);
    ier_report* rep = nullptr;
    check(ier_action_evaluate(raw, corpus.get(), emb.get(), &o, &rep));
    Report report(rep);
    emit_report(rep, c.json_path);
    if (!confusion_path.empty()) {
      char* s = nullptr;
      check(ier_report_confusion_csv(rep, &s));
      write_out(confusion_path, take(s));
    }
  });

  // train-entities
  bool tune = false;
  bool no_action_features = false;
  auto* train_entities = app.add_subcommand("train-entities", "Train the CRF entity tagger");
  add_input(train_entities, c);
  add_seed(train_entities, c);
  add_mode(train_entities, c);
  train_entities->add_option("--l2", c.l2, "L2 strength")->check(CLI::NonNegativeNumber);
  train_entities->add_option("--max-iter", c.max_iter, "L-BFGS iteration cap");
  train_entities->add_flag("--tune", tune, "Pick L2 from {0.1, 1, 10} on the dev split");
  train_entities->add_flag("--no-action-features", no_action_features,
                           "Do not condition the tagger on the action");
  train_entities->add_option("-o", c.output, "Model output path")->required();
  train_entities->callback([&] {
    auto corpus = load(c);
    auto o = options_of(c);
    o.tune = tune ? 1 : 0;
    o.action_features = no_action_features ? 0 : 1;
    ier_crf_model* raw = nullptr;
    char* summary = nullptr;
    check(ier_crf_train(corpus.get(), &o, &raw, &summary));
    CrfModel model(raw);
    check(ier_crf_model_save(raw, c.output.c_str()));
    std::cout << take(summary) << '\n';
  });

  // eval-entities
  std::string entity_model_path;
  bool gold_actions = false;
  bool pred_actions = false;
  std::string token_json_path;
  auto* eval_entities = app.add_subcommand("eval-entities", "Score the entity tagger on the test split");
  add_input(eval_entities, c);
  add_seed(eval_entities, c);
  add_mode(eval_entities, c);
  eval_entities->add_option("--model,--entity-model", entity_model_path, "CRF model")->required();
  eval_entities->add_option("--action-model", action_model_path,
                            "Action model (required with --pred-actions)");
  eval_entities->add_option("--embeddings", c.embeddings, "Word-vector file for the action model");
  auto* gold_flag = eval_entities->add_flag("--gold-actions", gold_actions, "Feed gold actions (default)");
  eval_entities->add_flag("--pred-actions", pred_actions, "Feed predicted actions")->excludes(gold_flag);
  eval_entities->add_option("--json", c.json_path, "Write the span report as JSON");
  eval_entities->add_option("--token-json", token_json_path, "Write the token report as JSON");
  eval_entities->callback([&] {
    if (pred_actions && action_model_path.empty()) {
      std::cerr << "ier: --pred-actions needs --action-model\n";
      throw Failure{kUsage};
    }
    auto corpus = load(c);
    ier_crf_model* raw = nullptr;
    check(ier_crf_model_load(entity_model_path.c_str(), &raw));
    CrfModel model(raw);
    ActionModel actions;
    Embeddings emb;
    if (pred_actions) {
      ier_action_model* a = nullptr;
      check(ier_action_model_load(action_model_path.c_str(), &a));
      actions.reset(a);
      emb = load_embeddings(c.embeddings);
    }
    const auto o = options_of(c);
    ier_report* spans = nullptr;
    ier_report* tokens = nullptr;
    check(ier_crf_evaluate(raw, corpus.get(), &o, actions.get(), emb.get(), &spans, &tokens));
    Report span_report(spans), token_report(tokens);
    std::cout << "spans (" << (pred_actions ? "predicted" : "gold") << " actions)\n";
    emit_report(spans, c.json_path);
    std::cout << "\ntokens\n";
    emit_report(tokens, token_json_path);
  });

  // predict
  std::string entity_path;
  double tau = 0.0;
  auto* predict = app.add_subcommand("predict", "Turn raw request lines into edit-command JSONL");
  predict->add_option("input", c.input, "One request per line ('-' for stdin)");
  predict->add_option("--action-model", action_model_path, "Action model")->required();
  predict->add_option("--entity-model", entity_path, "CRF model")->required();
  predict->add_option("--embeddings", c.embeddings, "Word-vector file");
  predict->add_option("--tau", tau, "Minimum action confidence")->check(CLI::Range(0.0, 1.0));
  predict->add_option("-o", c.output, "Output path");
  predict->callback([&] {
    ier_action_model* a = nullptr;
    check(ier_action_model_load(action_model_path.c_str(), &a));
    ActionModel actions(a);
    ier_crf_model* e = nullptr;
    check(ier_crf_model_load(entity_path.c_str(), &e));
    CrfModel entities(e);
    auto emb = load_embeddings(c.embeddings);
    ier_parser* p = nullptr;
    check(ier_parser_create(a, e, emb.get(), &p));
    Parser parser(p);

    std::istringstream lines(read_all(c.input));
    std::string line, out;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      char* json = nullptr;
      check(ier_parser_parse(p, line.c_str(), tau, std::to_string(line_no).c_str(), &json, nullptr));
      out += take(json);
      out += '\n';
    }
    write_out(c.output, out);
  });

  // synth
  ier_synth_options synth_opts;
  ier_synth_options_init(&synth_opts);
  bool hard = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated corpus");
  synth->add_option("--n", synth_opts.count, "Number of utterances");
  synth->add_option("--seed", synth_opts.seed, "Generator seed");
  synth->add_flag("--hard", hard, "Share verbs between confusable actions");
  synth->add_option("--comment-rate", synth_opts.comment_rate, "Fraction of lines without an IER")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"bracket", "bracket-lines", "jsonl"}));
  synth->add_option("-o", c.output, "Output path");
  synth->callback([&] {
    synth_opts.hard = hard ? 1 : 0;
    ier_corpus* raw = nullptr;
    check(ier_synth_generate(&synth_opts, &raw));
    Corpus corpus(raw);
    char* s = nullptr;
    check(ier_corpus_write(raw, format_of(c), &s));
    write_out(c.output, take(s));
  });

  // agreement
  auto* agreement = app.add_subcommand("agreement", "Krippendorff's alpha from a ratings CSV");
  agreement->add_option("input", c.input, "Ratings CSV ('-' for stdin)");
  agreement->add_option("--json", c.json_path, "Write the result as JSON");
  agreement->callback([&] {
    const std::string csv = read_all(c.input);
    double alpha = 0.0;
    std::size_t items = 0;
    check(ier_agreement_from_csv(csv.c_str(), &alpha, &items));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", alpha);
    std::cout << "items " << items << "\nalpha " << buf << '\n';
    if (!c.json_path.empty())
      write_out(c.json_path,
                std::string("{\"items\":") + std::to_string(items) + ",\"alpha\":" + buf + "}\n");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (e.get_exit_code() == 0) return 0;
    std::cerr << app.help();
    return kUsage;
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
