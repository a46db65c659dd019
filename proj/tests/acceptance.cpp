// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ier/action_model.hpp"
#include "ier/annotation.hpp"
#include "ier/bio.hpp"
#include "ier/crf.hpp"
#include "ier/error.hpp"
#include "ier/lbfgs.hpp"
#include "ier/metrics.hpp"
#include "ier/pipeline.hpp"
#include "ier/synth.hpp"
#include "oracles.hpp"

using namespace ier;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

Verdict pass(std::string d) { return {Outcome::Pass, std::move(d)}; }
Verdict fail(std::string d) { return {Outcome::Fail, std::move(d)}; }
Verdict verdict(bool ok, std::string d) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(d)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string text_of(const AnnotatedUtterance& u) {
  std::string s;
  for (const auto& t : u.tokens) {
    if (!s.empty()) s += ' ';
    s += t.text;
  }
  return s;
}

// 1. Parser round trip and fuzzing.
Verdict round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = generate(SynthConfig{}, 1000, 1);
  std::size_t same = 0;
  for (const auto& u : corpus.utterances) {
    const auto back = parse_line(serialize(u));
    if (back.tokens == u.tokens && back.root == u.root) ++same;
  }
  std::mt19937_64 rng(99);
  const char* pieces[] = {"[", "]", ":", "[IER", "[ACTION-CROP", "[LOCATION", "IER", "word", " ",
                          "\t", "[ACTION-ZOOM", "[VALUE", "[[", "]]", "\xff", "\xc3\xa9"};
  std::size_t crashes = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const std::size_t len = rng() % 64;
    for (std::size_t k = 0; k < len; ++k) {
      if (i % 2) s += static_cast<char>(rng() % 256);
      else s += pieces[rng() % std::size(pieces)], s += ' ';
    }
    try {
      parse_line(s);
    } catch (const Error&) {
    } catch (...) {
      ++crashes;
    }
  }
  const double secs = seconds_since(t0);
  return verdict(same == 1000 && crashes == 0 && secs < 10.0,
                 std::to_string(same) + "/1000 round trips, " + std::to_string(crashes) +
                     " unexpected exceptions in 10000 fuzz inputs, " + fmt("%.2f s", secs));
}

// 2. BIO anchors.
Verdict bio_anchor() {
  const auto crop = encode_innermost(parse_line("[IER : [ACTION-CROP : crop ] [LOCATION : the image ] ]"));
  const auto warm =
      encode_innermost(parse_line("[IER : [ACTION-ADD : add ] a [ATTRIBUTE : [VALUE : warmer ] hue ] ]"));
  const bool ok = to_string(crop) == "O B-LOCATION I-LOCATION" &&
                  to_string(warm) == "O O B-VALUE B-ATTRIBUTE";
  return verdict(ok, "crop: " + to_string(crop) + "; warmer hue: " + to_string(warm));
}

// 3. CRF inference against enumeration.
Verdict crf_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3);
  double worst_z = 0.0, worst_sum = 0.0;
  std::size_t path_mismatch = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t L = 1 + rng() % 6, T = 1 + rng() % 4;
    const auto p = oracle::random_potentials(rng, L, T, i % 2 == 1);
    worst_z = std::max(worst_z, std::abs(log_partition(p) - oracle::brute_log_z(p)));
    if (viterbi(p).path != oracle::brute_argmax(p)) ++path_mismatch;
    const auto m = forward_backward(p);
    for (std::size_t t = 0; t < L; ++t) {
      double s = 0.0;
      for (std::size_t y = 0; y < T; ++y) s += m.node[t * T + y];
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
  }
  const double secs = seconds_since(t0);
  return verdict(worst_z <= 1e-8 && path_mismatch == 0 && worst_sum <= 1e-9 && secs < 30.0,
                 "max |logZ - brute| " + fmt("%.2e", worst_z) + ", Viterbi mismatches " +
                     std::to_string(path_mismatch) + ", max |sum marginals - 1| " +
                     fmt("%.2e", worst_sum) + ", " + fmt("%.2f s", secs));
}

// 4. Analytic gradients against central differences.
Verdict gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 0.7);
  double worst_crf = 0.0, worst_softmax = 0.0;
  for (int n = 0; n < 20; ++n) {
    const std::size_t T = 2 + rng() % 3, F = 3 + rng() % 4;
    std::vector<CrfSequence> batch(1 + rng() % 3);
    for (auto& seq : batch) {
      const std::size_t L = 1 + rng() % 5;
      for (std::size_t t = 0; t < L; ++t) {
        std::vector<std::uint32_t> feats;
        for (std::uint32_t f = 0; f < F; ++f)
          if (rng() % 2) feats.push_back(f);
        seq.features.push_back(feats);
        seq.tags.push_back(rng() % T);
      }
    }
    const auto obj = std::make_shared<CrfObjective>(batch, F, T, n % 2 ? 0.5 : 0.0);
    std::vector<double> w(obj->dimension());
    for (auto& v : w) v = normal(rng);
    worst_crf = std::max(
        worst_crf, grad_check([obj](auto x, auto g) { return (*obj)(x, g); }, w, 1e-5));
  }
  const std::vector<ActionType> labels{ActionType::Adjust, ActionType::Crop, ActionType::Delete,
                                       ActionType::Zoom};
  for (int n = 0; n < 20; ++n) {
    const std::size_t F = 2 + rng() % 6;
    std::vector<ActionExample> data;
    for (std::size_t i = 0; i < 4 + rng() % 8; ++i) {
      ActionExample ex;
      for (std::uint32_t f = 0; f < F; ++f)
        if (rng() % 2) ex.features.push_back({f, normal(rng)});
      ex.label = labels[i % labels.size()];
      data.push_back(ex);
    }
    const auto obj = std::make_shared<SoftmaxObjective>(data, labels, F, n % 2 ? 0.7 : 0.0);
    std::vector<double> w(obj->dimension());
    for (auto& v : w) v = normal(rng);
    worst_softmax = std::max(
        worst_softmax, grad_check([obj](auto x, auto g) { return (*obj)(x, g); }, w, 1e-5));
  }
  const double secs = seconds_since(t0);
  return verdict(worst_crf <= 1e-4 && worst_softmax <= 1e-4 && secs < 30.0,
                 "max relative error CRF " + fmt("%.2e", worst_crf) + ", softmax " +
                     fmt("%.2e", worst_softmax) + ", " + fmt("%.2f s", secs));
}

bool monotone(const OptTrace& trace) {
  for (const auto& r : trace)
    if (r.value > r.previous_value) return false;
  return true;
}

// 5. L-BFGS on a quadratic and on Rosenbrock.
Verdict optimizer() {
  const std::size_t n = 10;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> M(n * n), A(n * n, 0.0), b(n);
  for (auto& v : M) v = normal(rng);
  for (auto& v : b) v = normal(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) A[i * n + j] += M[k * n + i] * M[k * n + j];
      if (i == j) A[i * n + j] += 1.0;
    }
  Objective quad = [&](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double ax = 0.0;
      for (std::size_t j = 0; j < n; ++j) ax += A[i * n + j] * x[j];
      g[i] = ax - b[i];
      v += 0.5 * x[i] * ax - b[i] * x[i];
    }
    return v;
  };
  const auto q = lbfgs_minimize(quad, std::vector<double>(n, 0.0));

  Objective rosen = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], c = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * c;
    g[1] = 200.0 * c;
    return a * a + 100.0 * c * c;
  };
  LbfgsConfig cfg;
  cfg.gradient_tolerance = 1e-10;
  cfg.max_iterations = 1000;
  const auto r = lbfgs_minimize(rosen, {-1.2, 1.0}, cfg);
  const double err = std::max(std::abs(r.x[0] - 1.0), std::abs(r.x[1] - 1.0));
  const bool ok = q.gradient_norm <= 1e-5 && q.trace.size() <= 15 && err <= 1e-6 &&
                  monotone(q.trace) && monotone(r.trace);
  return verdict(ok, "quadratic: " + std::to_string(q.trace.size()) + " iterations, |g|inf " +
                         fmt("%.2e", q.gradient_norm) + "; Rosenbrock: max |x - 1| " +
                         fmt("%.2e", err) + " after " + std::to_string(r.trace.size()) +
                         " iterations; traces monotone " +
                         (monotone(q.trace) && monotone(r.trace) ? "yes" : "no"));
}

constexpr std::uint64_t kBenchmarkSeed = 2718;
constexpr std::uint64_t kSplitSeed = 13;
constexpr double kConcentrationThreshold = 0.75;

struct Benchmark {
  std::shared_ptr<const ActionModel> easy_actions;
  std::shared_ptr<const CrfModel> easy_entities;
  std::vector<AnnotatedUtterance> easy_action_test;
  Metrics easy_action_metrics;
  Metrics easy_span_metrics;
  Metrics hard_action_metrics;
  std::string hard_action_json;
  double seconds = 0.0;

  // Everything criterion 9 compares byte for byte.
  std::string fingerprint() const {
    return easy_actions->to_json() + easy_entities->to_json() + hard_action_json +
           easy_action_metrics.to_json() + easy_span_metrics.to_json() +
           hard_action_metrics.to_json();
  }
};

Benchmark run_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  Benchmark b;
  SynthConfig easy;
  const auto corpus = generate(easy, 2000, kBenchmarkSeed);
  const auto action_splits = preprocess(corpus, SplitSpec::action(kSplitSeed));
  const auto actions = std::make_shared<ActionModel>(fit_action_model(action_splits.train, nullptr));
  b.easy_action_metrics = evaluate_action_model(*actions, action_splits.test, nullptr);
  const auto entity_splits = preprocess(corpus, SplitSpec::entity(kSplitSeed));
  const auto crf = std::make_shared<CrfModel>(fit_entity_model(entity_splits.train, entity_splits.dev).model);
  b.easy_span_metrics =
      evaluate_entity_model(*crf, entity_splits.test, EncodingMode::Innermost, 2).spans;
  b.easy_actions = actions;
  b.easy_entities = crf;
  b.easy_action_test = action_splits.test;

  SynthConfig hard;
  hard.hard = true;
  const auto hard_corpus = generate(hard, 2000, kBenchmarkSeed);
  const auto hard_splits = preprocess(hard_corpus, SplitSpec::action(kSplitSeed));
  const auto hard_model = fit_action_model(hard_splits.train, nullptr);
  b.hard_action_metrics = evaluate_action_model(hard_model, hard_splits.test, nullptr);
  b.hard_action_json = hard_model.to_json();
  b.seconds = seconds_since(t0);
  return b;
}

// Share of off-diagonal confusion mass inside the verb-sharing action pairs.
double pair_concentration(const Metrics& m) {
  auto index = [&](ActionType a) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < m.classes.size(); ++i)
      if (m.classes[i].label == action_name(a)) return i;
    return std::nullopt;
  };
  double off = 0.0, paired = 0.0;
  for (std::size_t g = 0; g < m.confusion.size(); ++g)
    for (std::size_t p = 0; p < m.confusion[g].size(); ++p)
      if (g != p) off += double(m.confusion[g][p]);
  for (const auto& [a, c] : shared_verb_pairs()) {
    const auto ia = index(a), ic = index(c);
    if (!ia || !ic) continue;
    paired += double(m.confusion[*ia][*ic] + m.confusion[*ic][*ia]);
  }
  return off > 0.0 ? paired / off : 0.0;
}

// 6. Synthetic end-to-end benchmark.
Verdict benchmark(const Benchmark& b) {
  const double action_f1 = b.easy_action_metrics.weighted.f1;
  const double span_f1 = b.easy_span_metrics.micro.f1;
  const double hard_f1 = b.hard_action_metrics.weighted.f1;
  const double conc = pair_concentration(b.hard_action_metrics);
  const bool ok = action_f1 >= 0.95 && span_f1 >= 0.90 && hard_f1 < 1.0 &&
                  conc >= kConcentrationThreshold && b.seconds < 120.0;
  return verdict(ok, "easy action weighted F1 " + fmt("%.4f", action_f1) + ", easy span F1 " +
                         fmt("%.4f", span_f1) + ", hard action weighted F1 " +
                         fmt("%.4f", hard_f1) + ", hard off-diagonal share in shared-verb pairs " +
                         fmt("%.3f", conc) + " (threshold " +
                         fmt("%.2f", kConcentrationThreshold) + "), " + fmt("%.1f s", b.seconds));
}

// 7. Confidence gate.
Verdict gate(const Benchmark& b) {
  EditParser open(b.easy_actions, b.easy_entities);
  EditParser closed(b.easy_actions, b.easy_entities);
  std::size_t ambiguous_open = 0, ambiguous_closed = 0;
  for (const auto& u : b.easy_action_test) {
    const auto text = text_of(u);
    ambiguous_open += std::holds_alternative<AmbiguousRequest>(open.parse(text, 0.0));
    ambiguous_closed += std::holds_alternative<AmbiguousRequest>(closed.parse(text, 1.0));
  }
  const std::size_t n = b.easy_action_test.size();
  const bool ok = ambiguous_open == 0 && ambiguous_closed == n && closed.level2_calls() == 0 &&
                  open.level2_calls() == n;
  return verdict(ok, "tau 0: " + std::to_string(ambiguous_open) + "/" + std::to_string(n) +
                         " ambiguous; tau 1: " + std::to_string(ambiguous_closed) + "/" +
                         std::to_string(n) + " ambiguous, level-2 calls " +
                         std::to_string(closed.level2_calls()));
}

// 8. Metrics.
Verdict metrics() {
  std::vector<std::string> notes;
  bool ok = true;
  const auto m = classification_report({"a", "a", "b"}, {"a", "b", "b"}, {"a", "b"});
  const auto* a = m.find("a");
  const auto* b = m.find("b");
  const bool report_ok = a && b && a->precision == 1.0 && a->recall == 0.5 &&
                         std::abs(a->f1 - 2.0 / 3.0) <= 1e-15 && b->precision == 0.5 &&
                         b->recall == 1.0 && std::abs(b->f1 - 2.0 / 3.0) <= 1e-15 &&
                         std::abs(m.macro.f1 - 2.0 / 3.0) <= 1e-15;
  ok &= report_ok;
  notes.push_back(std::string("report ") + (report_ok ? "exact" : "wrong"));

  RatingsMatrix unanimous;
  for (const char* c : {"a", "b", "c"}) unanimous.push_back({std::string(c), std::string(c), std::string(c)});
  const double one = krippendorff_alpha(unanimous);
  ok &= one == 1.0;
  notes.push_back("unanimous alpha " + fmt("%.17g", one));

  RatingsMatrix single(3, std::vector<std::optional<std::string>>(3, std::string("a")));
  bool undefined = false;
  try {
    krippendorff_alpha(single);
  } catch (const Error& e) {
    undefined = e.code() == ErrorCode::Undefined;
  }
  ok &= undefined;
  notes.push_back(std::string("single category ") + (undefined ? "Undefined" : "not rejected"));

  // Hand calculation: coincidences o_aa = o_bb = o_ab = o_ba = 2, n = 8,
  // D_o = 1/2, D_e = 4/7, alpha = 1/8.
  RatingsMatrix pairs;
  for (auto [x, y] : {std::pair{"a", "a"}, {"b", "b"}, {"a", "b"}, {"b", "a"}})
    pairs.push_back({std::string(x), std::string(y)});
  const double alpha = krippendorff_alpha(pairs);
  ok &= std::abs(alpha - 0.125) <= 1e-12;
  notes.push_back("2x4 alpha " + fmt("%.17g", alpha) + " vs 0.125");

  std::string d;
  for (const auto& s : notes) d += (d.empty() ? "" : ", ") + s;
  return verdict(ok, d);
}

// 9. Determinism of the benchmark.
Verdict determinism(const Benchmark& first) {
  const auto second = run_benchmark();
  const bool same = first.fingerprint() == second.fingerprint();
  return verdict(same, same ? "models and metric JSON byte-identical across two runs"
                            : "outputs differ between runs");
}

// 10. Optional real corpus.
Verdict real_corpus() {
  const char* path = std::getenv("IER_EDITME_CORPUS");
  if (!path || !*path) return {Outcome::Skip, "IER_EDITME_CORPUS not set"};
  const char* fmt_env = std::getenv("IER_EDITME_FORMAT");
  const auto format = parse_corpus_format(fmt_env && *fmt_env ? fmt_env : "bracket");
  const auto loaded = load_corpus_file(path, format);
  std::unique_ptr<EmbeddingTable> embeddings;
  if (const char* e = std::getenv("IER_EDITME_EMBEDDINGS"); e && *e)
    embeddings = std::make_unique<EmbeddingTable>(load_word_vectors_file(e));
  const auto action_splits = preprocess(loaded.corpus, SplitSpec::action(kSplitSeed));
  const auto actions = fit_action_model(action_splits.train, embeddings.get());
  const double action_f1 =
      evaluate_action_model(actions, action_splits.test, embeddings.get()).weighted.f1;
  const auto entity_splits = preprocess(loaded.corpus, SplitSpec::entity(kSplitSeed));
  const auto crf = fit_entity_model(entity_splits.train, entity_splits.dev).model;
  const double span_f1 =
      evaluate_entity_model(crf, entity_splits.test, EncodingMode::Innermost, 2).spans.micro.f1;
  const bool ok = std::abs(action_f1 - 0.87) <= 0.05 && std::abs(span_f1 - 0.66) <= 0.05;
  return verdict(ok, "action weighted F1 " + fmt("%.4f", action_f1) + " (target 0.87 +/- 0.05), " +
                         "innermost span F1 " + fmt("%.4f", span_f1) +
                         " (target 0.66 +/- 0.05), " + std::to_string(loaded.errors.size()) +
                         " malformed lines skipped");
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Verdict()>& run) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
    if (v.outcome == Outcome::Fail) ++failures;
    std::printf("criterion %d: %s - %s\n", id, tag, v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, round_trip);
  report(2, bio_anchor);
  report(3, crf_oracle);
  report(4, gradients);
  report(5, optimizer);
  std::unique_ptr<Benchmark> bench;
  try {
    bench = std::make_unique<Benchmark>(run_benchmark());
  } catch (const std::exception& e) {
    for (int id : {6, 7, 9}) report(id, [&] { return fail(std::string("benchmark: ") + e.what()); });
  }
  if (bench) {
    report(6, [&] { return benchmark(*bench); });
    report(7, [&] { return gate(*bench); });
  }
  report(8, metrics);
  if (bench) report(9, [&] { return determinism(*bench); });
  report(10, real_corpus);
  return failures == 0 ? 0 : 1;
}
