#include "doctest.h"

#include <algorithm>
#include <set>

#include "ier/annotation.hpp"
#include "ier/error.hpp"
#include "ier/pipeline.hpp"
#include "ier/synth.hpp"

using namespace ier;

namespace {

std::vector<AnnotatedUtterance> toy_corpus() {
  const char* lines[] = {
      "[IER : [ACTION-CROP : crop ] [LOCATION : the image ] ]",
      "[IER : [ACTION-CROP : trim ] [LOCATION : the photo ] ]",
      "[IER : [ACTION-CROP : crop ] [LOCATION : the picture ] ]",
      "[IER : [ACTION-DELETE : remove ] [OBJECT : a dog ] ]",
      "[IER : [ACTION-DELETE : erase ] [OBJECT : a cat ] ]",
      "[IER : [ACTION-DELETE : remove ] [OBJECT : a bird ] ]",
      "[IER : [ACTION-ADJUST : boost ] [ATTRIBUTE : contrast ] [VALUE : slightly ] ]",
      "[IER : [ACTION-ADJUST : tweak ] [ATTRIBUTE : brightness ] [VALUE : lots ] ]",
  };
  std::vector<AnnotatedUtterance> out;
  std::size_t i = 0;
  for (auto l : lines) out.push_back(parse_line(l, ++i));
  return out;
}

struct ToyModels {
  std::shared_ptr<const ActionModel> actions;
  std::shared_ptr<const CrfModel> entities;
};

const ToyModels& toy_models() {
  static const ToyModels m = [] {
    const auto data = toy_corpus();
    ActionTrainConfig acfg;
    acfg.l2 = 0.1;
    EntityTrainConfig ecfg;
    ecfg.crf.l2 = 0.1;
    return ToyModels{std::make_shared<ActionModel>(fit_action_model(data, nullptr, acfg)),
                     std::make_shared<CrfModel>(fit_entity_model(data, {}, ecfg).model)};
  }();
  return m;
}

// Exactly n utterances that survive the executable filter.
Corpus corpus_of(std::size_t n, std::uint64_t seed) {
  auto c = filter_executable(generate(SynthConfig{}, n + n / 10 + 10, seed));
  REQUIRE(c.size() >= n);
  c.utterances.resize(n);
  return c;
}

std::vector<std::string> ids(const std::vector<AnnotatedUtterance>& v) {
  std::vector<std::string> out;
  for (const auto& u : v) out.push_back(u.id);
  return out;
}

}  // namespace

TEST_CASE("action split of 100 utterances is 75/25") {
  const auto s = preprocess(corpus_of(100, 3), SplitSpec::action(13));
  CHECK(s.train.size() == 75);
  CHECK(s.test.size() == 25);
  CHECK(s.dev.empty());
}

TEST_CASE("entity split uses floor sizes with remainder to train") {
  const auto s = preprocess(corpus_of(105, 3), SplitSpec::entity(13));
  CHECK(s.dev.size() == 10);
  CHECK(s.test.size() == 10);
  CHECK(s.train.size() == 85);
}

TEST_CASE("splits are deterministic, disjoint and seed-dependent") {
  const auto c = corpus_of(200, 4);
  const auto a = preprocess(c, SplitSpec::entity(13));
  const auto b = preprocess(c, SplitSpec::entity(13));
  CHECK(ids(a.train) == ids(b.train));
  CHECK(ids(a.dev) == ids(b.dev));
  CHECK(ids(a.test) == ids(b.test));
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.dev, &a.test})
    for (const auto& u : *part) CHECK(all.insert(u.id).second);
  CHECK(all.size() == 200);
  CHECK(ids(preprocess(c, SplitSpec::entity(14)).train) != ids(a.train));
}

TEST_CASE("filtering happens before splitting") {
  auto c = corpus_of(96, 8);
  c.utterances.push_back(parse_line("[IER : [ACTION-OTHER : clean up ] [OBJECT : the mess ] ]", 97));
  c.utterances.back().id = "other-1";
  c.utterances.push_back(parse_line("nice photo", 98));
  c.utterances.back().id = "comment-1";
  std::size_t before_other = 0;
  for (const auto& u : c.utterances) before_other += u.action() == ActionType::Other;
  const auto s = preprocess(c, SplitSpec::action(13));
  const std::size_t kept = c.size() - before_other - 1;
  CHECK(s.train.size() + s.test.size() == kept);
  CHECK(s.test.size() == kept / 4);
  for (const auto* part : {&s.train, &s.test})
    for (const auto& u : *part) {
      CHECK(u.action() != ActionType::Other);
      CHECK(u.root.has_value());
    }
  CHECK(s.filtered.other_action == before_other);
  CHECK(s.filtered.no_ier == 1);
}

TEST_CASE("an all-filtered corpus is rejected") {
  Corpus c;
  c.utterances.push_back(parse_line("just a comment"));
  try {
    preprocess(c, SplitSpec::action(1));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyAfterFilter);
  }
}

TEST_CASE("predict_ier on toy models: Crop the image") {
  const auto& m = toy_models();
  const auto out = predict_ier(*m.actions, *m.entities, "Crop the image", 0.0, nullptr, "u1");
  REQUIRE(std::holds_alternative<EditCommand>(out));
  const auto& cmd = std::get<EditCommand>(out);
  CHECK(cmd.action == ActionType::Crop);
  CHECK(cmd.id == "u1");
  REQUIRE(cmd.entities.size() == 1);
  CHECK(cmd.entities[0].label == EntityLabel::Location);
  CHECK(cmd.entities[0].text == "the image");
  CHECK(cmd.entities[0].start == 1);
  CHECK(cmd.entities[0].end == 3);
  CHECK(cmd.confidence > 0.0);
  CHECK(cmd.confidence <= 1.0);
  CHECK(to_json(out) == to_json(predict_ier(*m.actions, *m.entities, "Crop the image", 0.0,
                                            nullptr, "u1")));
}

TEST_CASE("the confidence gate") {
  const auto& m = toy_models();
  EditParser parser(m.actions, m.entities);
  const char* inputs[] = {"crop the photo", "remove a cat", "boost contrast slightly", "zzz"};
  for (auto text : inputs) CHECK(std::holds_alternative<EditCommand>(parser.parse(text, 0.0)));
  CHECK(parser.level2_calls() == 4);

  EditParser gated(m.actions, m.entities);
  for (auto text : inputs) {
    const auto out = gated.parse(text, 1.0, "g");
    REQUIRE(std::holds_alternative<AmbiguousRequest>(out));
    CHECK(std::get<AmbiguousRequest>(out).confidence < 1.0);
    CHECK(to_json(out).find("\"entities\"") == std::string::npos);
  }
  CHECK(gated.level2_calls() == 0);
}

TEST_CASE("empty text is rejected") {
  const auto& m = toy_models();
  EditParser parser(m.actions, m.entities);
  for (const char* text : {"", "   \t "}) {
    try {
      parser.parse(text);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyInput);
    }
  }
  CHECK(parser.level2_calls() == 0);
}

TEST_CASE("EditCommand JSON shape") {
  EditCommand c{"7", ActionType::Crop, 0.5, {{EntityLabel::Location, 1, 3, "the image"}}};
  const auto j = to_json(c);
  CHECK(j.find("\"id\":\"7\"") != std::string::npos);
  CHECK(j.find("\"action\":\"CROP\"") != std::string::npos);
  CHECK(j.find("\"label\":\"LOCATION\"") != std::string::npos);
  CHECK(j.find("\"text\":\"the image\"") != std::string::npos);
  const auto a = to_json(AmbiguousRequest{"8", ActionType::Zoom, 0.3});
  CHECK(a.find("\"ambiguous\":true") != std::string::npos);
}

TEST_CASE("predicted entities are non-overlapping and in bounds") {
  const auto c = corpus_of(400, 21);
  const auto s = preprocess(c, SplitSpec::entity(13));
  const auto actions = std::make_shared<ActionModel>(fit_action_model(s.train, nullptr));
  const auto crf = std::make_shared<CrfModel>(fit_entity_model(s.train, s.dev).model);
  EditParser parser(actions, crf);
  for (const auto& u : s.test) {
    std::string text;
    for (const auto& t : u.tokens) text += t.text + " ";
    const auto out = parser.parse(text);
    REQUIRE(std::holds_alternative<EditCommand>(out));
    const auto& cmd = std::get<EditCommand>(out);
    std::size_t last_end = 0;
    for (const auto& e : cmd.entities) {
      CHECK(e.start < e.end);
      CHECK(e.end <= u.tokens.size());
      CHECK(e.start >= last_end);
      last_end = e.end;
    }
  }
}
