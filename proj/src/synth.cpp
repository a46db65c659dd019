#include "ier/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "ier/error.hpp"
#include "random.hpp"

namespace ier {

namespace {

using detail::Rng;
using detail::splitmix64;

using Words = std::vector<std::string_view>;

const std::vector<Words>& easy_verbs() {
  static const std::vector<Words> verbs = [] {
    std::vector<Words> v(kNumActions);
    auto set = [&](ActionType a, Words w) { v[static_cast<std::size_t>(a)] = std::move(w); };
    set(ActionType::Adjust, {"adjust", "tweak", "enhance", "boost", "fix", "improve", "modify"});
    set(ActionType::Delete, {"delete", "remove", "erase", "get rid of", "take out", "eliminate"});
    set(ActionType::Crop, {"crop", "trim", "crop out", "crop down"});
    set(ActionType::Add, {"add", "insert", "include", "draw in"});
    set(ActionType::Replace, {"replace", "substitute", "exchange"});
    set(ActionType::Apply, {"apply", "use"});
    set(ActionType::Zoom, {"zoom in", "zoom out", "magnify"});
    set(ActionType::Rotate, {"rotate", "turn", "tilt"});
    set(ActionType::Transform, {"transform", "flip", "resize"});
    set(ActionType::Move, {"move", "shift", "drag"});
    set(ActionType::Clone, {"clone", "duplicate"});
    set(ActionType::Select, {"select", "highlight", "outline"});
    set(ActionType::Swap, {"swap", "switch", "trade"});
    set(ActionType::Undo, {"undo", "revert"});
    set(ActionType::Merge, {"merge", "combine", "blend"});
    set(ActionType::Redo, {"redo", "repeat"});
    set(ActionType::Other, {"clean up", "spruce up", "tidy up"});
    set(ActionType::Scroll, {"scroll", "pan"});
    return v;
  }();
  return verbs;
}

struct SharedVerb {
  ActionType a;
  ActionType b;
  std::string_view verb;
};

const std::vector<SharedVerb>& shared_verbs() {
  static const std::vector<SharedVerb> v{
      {ActionType::Zoom, ActionType::Crop, "zoom in on"},
      {ActionType::Delete, ActionType::Crop, "cut out"},
      {ActionType::Adjust, ActionType::Replace, "change"},
      {ActionType::Add, ActionType::Move, "put"},
  };
  return v;
}

// Verbs that double as a VALUE entity inside an ADJUST action node.
const Words kValueVerbs{"increase", "decrease", "raise", "lower", "brighten", "darken"};

const Words kAttributes{"brightness", "contrast",  "saturation", "exposure",  "color",
                        "hue",        "sharpness", "tint",       "lighting",  "shadows",
                        "highlights", "temperature", "clarity",  "vibrance",  "tone",
                        "glare",      "size",      "color balance", "white balance"};
const Words kNestedValues{"warmer", "cooler", "deeper", "richer", "softer", "stronger"};
const Words kValues{"a lot",       "slightly",    "a little",    "more",     "less",
                    "by 20 percent", "significantly", "way more", "a bit",   "much higher",
                    "a touch",     "by half",     "twice as much", "90 degrees", "way down"};
const Words kObjects{"the dog",      "the cat",    "the car",    "the tree",   "the woman",
                     "the man",      "the boat",   "the building", "the bird", "the flowers",
                     "the sign",     "the bench",  "the zebra",  "the horse",  "the lamp post",
                     "the red shirt", "the kids",  "the fence",  "the mountain", "the bicycle"};
const Words kLocationPreps{"in", "on", "at", "near", "around", "across"};
const Words kLocations{"the image",       "the picture",   "the photo",     "the background",
                       "the foreground",  "the left side", "the right side", "the top",
                       "the bottom",      "the corner",    "the sky",       "the edges",
                       "the center",      "the whole image", "the upper left", "the horizon"};
const Words kIntents{"to make it pop",       "so it looks natural",   "to look more professional",
                     "for a vintage feel",   "so the colors stand out", "to make it look dramatic",
                     "so it feels warmer",   "to draw attention",     "for my portfolio",
                     "so it looks cleaner",  "to hide the mess",      "so it matches the others"};
const Words kPrefixes{"please", "can you", "could you", "i want you to", "i would like you to",
                      "you should", "it would look better if you"};
const Words kPronouns{"it", "this", "that", "this one"};
const Words kClosers{"please", "thanks", "."};
const Words kComments{"this image should have been taken with a nikon",
                      "what a lovely photo", "i love the mood here", "nice shot",
                      "the dog looks happy", "this was taken last summer"};

void split_words(std::string_view phrase, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < phrase.size()) {
    std::size_t j = phrase.find(' ', i);
    if (j == std::string_view::npos) j = phrase.size();
    if (j > i) out.emplace_back(phrase.substr(i, j - i));
    i = j + 1;
  }
}

class Builder {
 public:
  std::vector<AnnNode> words(std::string_view phrase) {
    std::vector<std::string> w;
    split_words(phrase, w);
    std::vector<AnnNode> nodes;
    for (auto& s : w) {
      nodes.push_back(AnnNode::word(tokens_.size()));
      tokens_.push_back({std::move(s), tokens_.size()});
    }
    return nodes;
  }

  std::vector<Token> take_tokens() { return std::move(tokens_); }

 private:
  std::vector<Token> tokens_;
};

void append(std::vector<AnnNode>& dst, std::vector<AnnNode> src) {
  for (auto& n : src) dst.push_back(std::move(n));
}

struct Derived {
  std::array<double, kNumEntityLabels> draw_rates{};  // per-entity Bernoulli rates
  double nest_given_both = 0.0;
};

// Rates q such that drawing independent Bernoulli(q) and rejecting empty draws,
// mixed with the no-entity share, reproduces the configured marginal rates.
Derived derive(const SynthConfig& cfg) {
  Derived d;
  const double nonempty = 1.0 - cfg.no_entity_rate;
  auto& q = d.draw_rates;
  for (std::size_t e = 0; e < kNumEntityLabels; ++e)
    q[e] = nonempty > 0 ? std::min(1.0, cfg.entity_rates[e] / nonempty) : 0.0;
  for (int it = 0; it < 500 && nonempty > 0; ++it) {
    double none = 1.0;
    for (double v : q) none *= 1.0 - v;
    for (std::size_t e = 0; e < kNumEntityLabels; ++e)
      q[e] = std::min(1.0, cfg.entity_rates[e] / nonempty * (1.0 - none));
  }
  double none = 1.0;
  for (double v : q) none *= 1.0 - v;
  const auto A = static_cast<std::size_t>(EntityLabel::Attribute);
  const auto V = static_cast<std::size_t>(EntityLabel::Value);
  const double both = none < 1.0 ? nonempty * q[A] * q[V] / (1.0 - none) : 0.0;
  const double entities_per_utt =
      std::accumulate(cfg.entity_rates.begin(), cfg.entity_rates.end(), 0.0);
  d.nest_given_both = both > 0 ? std::min(1.0, cfg.nesting_rate * entities_per_utt / both) : 0.0;
  return d;
}

ActionType draw_action(const SynthConfig& cfg, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    acc += cfg.action_distribution[i];
    if (u < acc) return all_actions()[i];
  }
  // Rounding slack lands on the last action with positive mass.
  for (std::size_t i = kNumActions; i-- > 0;)
    if (cfg.action_distribution[i] > 0) return all_actions()[i];
  return ActionType::Adjust;
}

std::string_view draw_verb(const SynthConfig& cfg, ActionType action, Rng& rng) {
  if (cfg.hard) {
    Words shared;
    for (const auto& s : shared_verbs())
      if (s.a == action || s.b == action) shared.push_back(s.verb);
    if (!shared.empty() && rng.chance(0.5)) return rng.pick(shared);
  }
  return rng.pick(easy_verbs()[static_cast<std::size_t>(action)]);
}

AnnNode entity(EntityLabel label, std::vector<AnnNode> children) {
  return AnnNode::entity_node(label, std::move(children));
}

}  // namespace

SynthConfig::SynthConfig() {
  action_distribution.fill(0.0);
  auto set = [&](ActionType a, double p) { action_distribution[static_cast<std::size_t>(a)] = p; };
  set(ActionType::Adjust, 0.44);
  set(ActionType::Crop, 0.12);
  set(ActionType::Add, 0.11);
  set(ActionType::Delete, 0.11);
  set(ActionType::Replace, 0.025);
  set(ActionType::Apply, 0.02);
  set(ActionType::Zoom, 0.02);
  set(ActionType::Rotate, 0.015);
  set(ActionType::Transform, 0.015);
  set(ActionType::Move, 0.015);
  set(ActionType::Clone, 0.015);
  set(ActionType::Select, 0.015);
  set(ActionType::Swap, 0.015);
  set(ActionType::Undo, 0.015);
  set(ActionType::Merge, 0.015);
  set(ActionType::Redo, 0.015);
  set(ActionType::Other, 0.005);
  set(ActionType::Scroll, 0.015);

  entity_rates[static_cast<std::size_t>(EntityLabel::Attribute)] = 0.56;
  entity_rates[static_cast<std::size_t>(EntityLabel::Value)] = 0.32;
  entity_rates[static_cast<std::size_t>(EntityLabel::Object)] = 0.30;
  entity_rates[static_cast<std::size_t>(EntityLabel::Location)] = 0.60;
  entity_rates[static_cast<std::size_t>(EntityLabel::Intent)] = 0.29;
}

void SynthConfig::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  double sum = 0.0;
  for (double p : action_distribution) {
    if (!in_unit(p)) throw Error(ErrorCode::InvalidArgument, "action probability outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "action distribution must sum to 1");
  for (double p : entity_rates)
    if (!in_unit(p)) throw Error(ErrorCode::InvalidArgument, "entity rate outside [0,1]");
  if (!in_unit(nesting_rate) || !in_unit(no_entity_rate) || !in_unit(comment_rate))
    throw Error(ErrorCode::InvalidArgument, "rate outside [0,1]");
  double none = 1.0;
  for (double p : entity_rates) none *= 1.0 - p;
  if (no_entity_rate < 1.0 && none == 1.0)
    throw Error(ErrorCode::InvalidArgument, "entity rates are all zero but entities are required");
}

const std::vector<std::pair<ActionType, ActionType>>& shared_verb_pairs() {
  static const auto pairs = [] {
    std::vector<std::pair<ActionType, ActionType>> out;
    for (const auto& s : shared_verbs()) out.emplace_back(s.a, s.b);
    return out;
  }();
  return pairs;
}

AnnotatedUtterance generate_one(const SynthConfig& cfg, std::uint64_t seed, std::size_t index) {
  Rng rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index))));
  const Derived derived = derive(cfg);
  AnnotatedUtterance utt;
  utt.id = "synth-" + std::to_string(index);
  Builder b;

  if (rng.chance(cfg.comment_rate)) {
    b.words(rng.pick(kComments));
    utt.tokens = b.take_tokens();
    return utt;
  }

  const ActionType action = draw_action(cfg, rng);

  std::array<bool, kNumEntityLabels> has{};
  if (!rng.chance(cfg.no_entity_rate)) {
    do {
      for (std::size_t e = 0; e < kNumEntityLabels; ++e) has[e] = rng.chance(derived.draw_rates[e]);
    } while (std::none_of(has.begin(), has.end(), [](bool v) { return v; }));
  }
  auto want = [&](EntityLabel e) { return has[static_cast<std::size_t>(e)]; };

  const bool nested = want(EntityLabel::Attribute) && want(EntityLabel::Value) &&
                      rng.chance(derived.nest_given_both);
  const bool value_in_verb = !nested && action == ActionType::Adjust &&
                             want(EntityLabel::Value) && rng.chance(0.25);
  const bool value_early = rng.chance(0.5);

  std::vector<AnnNode> children;
  if (rng.chance(0.35)) append(children, b.words(rng.pick(kPrefixes)));

  if (value_in_verb) {
    std::vector<AnnNode> v = b.words(rng.pick(kValueVerbs));
    std::vector<AnnNode> inner;
    inner.push_back(entity(EntityLabel::Value, std::move(v)));
    children.push_back(AnnNode::action_node(action, std::move(inner)));
  } else {
    children.push_back(AnnNode::action_node(action, b.words(draw_verb(cfg, action, rng))));
  }

  const bool standalone_value = want(EntityLabel::Value) && !nested && !value_in_verb;
  if (standalone_value && value_early)
    children.push_back(entity(EntityLabel::Value, b.words(rng.pick(kValues))));

  bool any_target = false;
  if (want(EntityLabel::Attribute)) {
    append(children, b.words("the"));
    if (nested) {
      std::vector<AnnNode> attr;
      attr.push_back(entity(EntityLabel::Value, b.words(rng.pick(kNestedValues))));
      append(attr, b.words(rng.pick(kAttributes)));
      children.push_back(entity(EntityLabel::Attribute, std::move(attr)));
    } else {
      children.push_back(entity(EntityLabel::Attribute, b.words(rng.pick(kAttributes))));
    }
    any_target = true;
  }
  if (want(EntityLabel::Object)) {
    if (any_target) append(children, b.words("of"));
    children.push_back(entity(EntityLabel::Object, b.words(rng.pick(kObjects))));
    any_target = true;
  }
  if (!any_target && rng.chance(0.5)) append(children, b.words(rng.pick(kPronouns)));
  if (want(EntityLabel::Location)) {
    append(children, b.words(rng.pick(kLocationPreps)));
    children.push_back(entity(EntityLabel::Location, b.words(rng.pick(kLocations))));
  }
  if (standalone_value && !value_early)
    children.push_back(entity(EntityLabel::Value, b.words(rng.pick(kValues))));
  if (want(EntityLabel::Intent))
    children.push_back(entity(EntityLabel::Intent, b.words(rng.pick(kIntents))));
  if (rng.chance(0.2)) append(children, b.words(rng.pick(kClosers)));

  utt.root = AnnNode::ier(std::move(children));
  utt.tokens = b.take_tokens();
  return utt;
}

Corpus generate(const SynthConfig& cfg, std::size_t n, std::uint64_t seed) {
  cfg.validate();
  Corpus corpus;
  corpus.utterances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) corpus.utterances.push_back(generate_one(cfg, seed, i));
  corpus.provenance.source = "synth";
  corpus.provenance.generator = "mt19937_64+splitmix64";
  corpus.provenance.seed = seed;
  corpus.provenance.utterances = n;
  return corpus;
}

}  // namespace ier
