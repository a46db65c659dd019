#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "ier/annotation.hpp"
#include "ier/bio.hpp"
#include "ier/crf.hpp"
#include "oracles.hpp"

using namespace ier;

namespace {

BioSequence tags_of(std::initializer_list<const char*> tags) {
  BioSequence s;
  for (auto t : tags) s.push_back(BioTag::parse(t));
  return s;
}

// Small random model and batch with every tag reachable.
struct Instance {
  CrfModel model;
  std::vector<CrfSequence> batch;
};

Instance random_instance(std::mt19937_64& rng, double l2) {
  const std::size_t T = 2 + rng() % 3;
  const std::size_t F = 3 + rng() % 4;
  std::vector<std::string> tags;
  for (std::size_t k = 1; k < T; ++k) tags.push_back("B-T" + std::to_string(k));
  std::vector<std::string> names;
  for (std::size_t f = 0; f < F; ++f) names.push_back("f" + std::to_string(f));
  std::normal_distribution<double> normal(0.0, 0.7);
  std::vector<double> w(CrfModel::parameter_count(F, T));
  for (auto& v : w) v = normal(rng);
  Instance inst{CrfModel(TagSet(tags), FeatureDictionary::from_names(names), w, l2, false), {}};
  const std::size_t n = 1 + rng() % 3;
  for (std::size_t s = 0; s < n; ++s) {
    CrfSequence seq;
    const std::size_t L = 1 + rng() % 5;
    for (std::size_t t = 0; t < L; ++t) {
      std::vector<std::uint32_t> feats;
      for (std::uint32_t f = 0; f < F; ++f)
        if (rng() % 2) feats.push_back(f);
      seq.features.push_back(feats);
      seq.tags.push_back(rng() % T);
    }
    inst.batch.push_back(seq);
  }
  return inst;
}

Objective objective_of(const Instance& inst) {
  auto obj = std::make_shared<CrfObjective>(inst.batch, inst.model.attributes().size(),
                                            inst.model.tags().size(), inst.model.l2());
  return [obj](std::span<const double> w, std::span<double> g) { return (*obj)(w, g); };
}

}  // namespace

TEST_CASE("log_partition small cases") {
  Potentials p(1, 2);
  CHECK(log_partition(p) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  std::mt19937_64 rng(1);
  Potentials q(4, 3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (auto& v : q.emission) v = u(rng);
  double expected = 0.0;
  for (std::size_t t = 0; t < 4; ++t) {
    double s = 0.0;
    for (std::size_t y = 0; y < 3; ++y) s += std::exp(q.emit(t, y));
    expected += std::log(s);
  }
  CHECK(std::abs(log_partition(q) - expected) <= 1e-12);
}

TEST_CASE("log_partition and Viterbi agree with enumeration") {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 300; ++n) {
    const std::size_t L = 1 + rng() % 6, T = 1 + rng() % 4;
    const bool ties = n % 2 == 1;
    const auto p = oracle::random_potentials(rng, L, T, ties);
    CHECK(std::abs(log_partition(p) - oracle::brute_log_z(p)) <= 1e-8);
    const auto v = viterbi(p);
    CHECK(v.path == oracle::brute_argmax(p));
    CHECK(v.score == path_score(p, v.path));
    CHECK(std::abs(v.score - oracle::score(p, v.path)) <= 1e-12);
  }
}

TEST_CASE("L=5 T=4 enumeration over 1024 paths") {
  std::mt19937_64 rng(5);
  const auto p = oracle::random_potentials(rng, 5, 4, false);
  CHECK(std::abs(log_partition(p) - oracle::brute_log_z(p)) <= 1e-8);
}

TEST_CASE("Viterbi tie-break on flat potentials") {
  Potentials p(3, 2);
  CHECK(viterbi(p).path == std::vector<std::size_t>{0, 0, 0});
  Potentials e(3, 3);
  e.emit(0, 2) = 1;
  e.emit(1, 1) = 1;
  e.emit(2, 0) = 1;
  CHECK(viterbi(e).path == std::vector<std::size_t>{2, 1, 0});
}

TEST_CASE("forward-backward marginals") {
  std::mt19937_64 rng(23);
  for (int n = 0; n < 150; ++n) {
    const std::size_t L = 1 + rng() % 6, T = 1 + rng() % 4;
    const auto p = oracle::random_potentials(rng, L, T, false);
    const auto m = forward_backward(p);
    CHECK(std::abs(m.log_z - log_partition(p)) <= 1e-10);
    const auto node = oracle::brute_node_marginals(p);
    const auto edge = oracle::brute_edge_marginals(p);
    for (std::size_t t = 0; t < L; ++t) {
      double sum = 0.0;
      for (std::size_t y = 0; y < T; ++y) {
        const double v = m.node[t * T + y];
        CHECK(v >= -1e-12);
        CHECK(v <= 1 + 1e-12);
        CHECK(std::abs(v - node[t * T + y]) <= 1e-9);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    for (std::size_t k = 0; k < T * T; ++k) CHECK(std::abs(m.edge[k] - edge[k]) <= 1e-9);
    // Path probabilities sum to one.
    double total = 0.0;
    oracle::for_each_path(L, T, [&](const auto& y) { total += std::exp(path_score(p, y) - m.log_z); });
    CHECK(std::abs(total - 1.0) <= 1e-8);
  }
}

TEST_CASE("long sequences stay finite") {
  std::mt19937_64 rng(8);
  Potentials p(2000, 5);
  std::uniform_real_distribution<double> u(50, 60);
  for (auto& v : p.emission) v = u(rng);
  const double z = log_partition(p);
  CHECK(std::isfinite(z));
  CHECK(viterbi(p).score <= z);
}

TEST_CASE("NLL at zero weights is L log T") {
  CrfModel model(TagSet({"B-A", "I-A"}), FeatureDictionary::from_names({"x", "y"}),
                 std::vector<double>(CrfModel::parameter_count(2, 3), 0.0), 1.0, false);
  CrfSequence seq{{{0}, {1}, {0, 1}, {}}, {0, 1, 2, 0}};
  const auto [value, grad] = nll_and_grad(model, std::span(&seq, 1));
  CHECK(value == doctest::Approx(4 * std::log(3.0)).epsilon(1e-14));
  CHECK(grad.size() == model.weights().size());
}

TEST_CASE("NLL rejects unknown gold tags") {
  CrfModel model(TagSet({"B-A"}), FeatureDictionary::from_names({"x"}),
                 std::vector<double>(CrfModel::parameter_count(1, 2), 0.0), 0.0, false);
  CrfSequence seq{{{0}}, {5}};
  try {
    nll_and_grad(model, std::span(&seq, 1));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownTag);
  }
  try {
    model.encode(make_tokens({"a"}), tags_of({"B-ZZZ"}), std::nullopt);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownTag);
  }
}

TEST_CASE("CRF gradient matches finite differences") {
  std::mt19937_64 rng(31);
  for (int n = 0; n < 20; ++n) {
    const auto inst = random_instance(rng, n % 2 ? 0.5 : 0.0);
    const auto obj = objective_of(inst);
    CHECK(grad_check(obj, inst.model.weights(), 1e-5) <= 1e-4);
  }
}

TEST_CASE("L2 term is exactly additive") {
  std::mt19937_64 rng(37);
  const auto inst = random_instance(rng, 0.0);
  const double l2 = 2.5;
  CrfObjective plain(inst.batch, inst.model.attributes().size(), inst.model.tags().size(), 0.0);
  CrfObjective reg(inst.batch, inst.model.attributes().size(), inst.model.tags().size(), l2);
  const auto& w = inst.model.weights();
  std::vector<double> g0(w.size()), g1(w.size());
  const double v0 = plain(w, g0), v1 = reg(w, g1);
  double sq = 0.0;
  for (double x : w) sq += x * x;
  CHECK(std::abs((v1 - v0) - 0.5 * l2 * sq) <= 1e-9);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs((g1[i] - g0[i]) - l2 * w[i]) <= 1e-12);
}

TEST_CASE("nll_and_grad matches the objective") {
  std::mt19937_64 rng(41);
  const auto inst = random_instance(rng, 0.3);
  CrfObjective obj(inst.batch, inst.model.attributes().size(), inst.model.tags().size(), 0.3);
  std::vector<double> g(inst.model.weights().size());
  const double v = obj(inst.model.weights(), g);
  const auto [v2, g2] = nll_and_grad(inst.model, inst.batch);
  CHECK(v == v2);
  CHECK(g == g2);
}

namespace {

std::vector<TaggedSequence> toy_grammar() {
  // Every word carries exactly one tag; words are distinct across tags.
  const char* lines[] = {
      "[IER : [ACTION-CROP : crop ] [LOCATION : the image ] ]",
      "[IER : [ACTION-CROP : trim ] [LOCATION : the photo ] ]",
      "[IER : [ACTION-DELETE : remove ] [OBJECT : a dog ] ]",
      "[IER : [ACTION-DELETE : erase ] [OBJECT : a cat ] [LOCATION : the picture ] ]",
      "[IER : [ACTION-ADJUST : boost ] [ATTRIBUTE : contrast ] [VALUE : slightly ] ]",
      "[IER : [ACTION-ADJUST : tweak ] [ATTRIBUTE : brightness ] [VALUE : lots ] ]",
  };
  std::vector<TaggedSequence> out;
  for (auto l : lines) {
    const auto u = parse_line(l);
    out.push_back({u.tokens, encode_innermost(u), u.action()});
  }
  return out;
}

}  // namespace

TEST_CASE("train_crf fits a deterministic toy grammar") {
  const auto data = toy_grammar();
  CrfTrainConfig cfg;
  cfg.l2 = 0.1;
  OptTrace trace;
  const auto model = train_crf(data, cfg, &trace);
  for (const auto& s : data) CHECK(predict_tags(model, s.tokens, s.action) == s.tags);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].value <= trace[i - 1].value);
  CHECK(model.tags().name(0) == "O");

  const auto analog = make_tokens({"crop", "the", "photo"});
  CHECK(to_string(predict_tags(model, analog, ActionType::Crop)) == "O B-LOCATION I-LOCATION");

  const auto again = train_crf(data, cfg);
  CHECK(again.weights() == model.weights());
  CHECK(predict_tags(model, analog, ActionType::Crop) == predict_tags(model, analog, ActionType::Crop));
}

TEST_CASE("CRF errors") {
  std::vector<TaggedSequence> none;
  try {
    train_crf(none);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCorpus);
  }
  const auto model = train_crf(toy_grammar());
  try {
    predict_tags(model, {}, std::nullopt);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("CRF predictions use only the training tag set") {
  const auto model = train_crf(toy_grammar());
  const auto tags = predict_tags(model, make_tokens({"zoom", "into", "the", "brightness", "cat"}),
                                 ActionType::Zoom);
  for (const auto& t : tags) CHECK(model.tags().find(t.str()).has_value());
}

TEST_CASE("CRF JSON round trip is exact") {
  const auto model = train_crf(toy_grammar());
  const auto text = model.to_json();
  const auto back = CrfModel::from_json(text);
  CHECK(back.weights() == model.weights());
  CHECK(back.tags().names() == model.tags().names());
  CHECK(back.attributes().names() == model.attributes().names());
  CHECK(back.to_json() == text);
  CHECK_THROWS_AS(CrfModel::from_json("{\"format\":\"IER-ACTION\",\"version\":1}"), Error);
  CHECK_THROWS_AS(CrfModel::from_json("not json"), Error);
}
