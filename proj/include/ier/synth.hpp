#pragma once

// Seeded template generator of annotated edit requests. The default profile
// sets the ADJUST share, entity inclusion rates, nesting rate and entity-less
// rate to fixed targets. Minor action frequencies are constructed.

#include <array>
#include <cstdint>

#include "ier/annotation.hpp"
#include "ier/vocab.hpp"

namespace ier {

struct SynthConfig {
  /// Indexed by ActionType; must sum to 1.
  std::array<double, kNumActions> action_distribution;
  /// Fraction of IERs containing each entity type, indexed by EntityLabel.
  std::array<double, kNumEntityLabels> entity_rates;
  /// Target fraction of entity nodes nested inside another entity.
  double nesting_rate = 0.04;
  /// Fraction of IERs with no entities at all.
  double no_entity_rate = 0.03;
  /// Fraction of utterances emitted as plain comments without an IER.
  double comment_rate = 0.0;
  /// Share verbs between confusable action pairs (ZOOM/CROP, DELETE/CROP,
  /// ADJUST/REPLACE, ADD/MOVE).
  bool hard = false;

  SynthConfig();

  /// Throws Error(InvalidArgument).
  void validate() const;
};

/// Action pairs that share verbs in hard mode.
const std::vector<std::pair<ActionType, ActionType>>& shared_verb_pairs();

/// Deterministic for fixed (cfg, n, seed). Utterance i draws from its own
/// generator seeded from (seed, i), so any index range can be produced
/// independently.
Corpus generate(const SynthConfig& cfg, std::size_t n, std::uint64_t seed);

AnnotatedUtterance generate_one(const SynthConfig& cfg, std::uint64_t seed, std::size_t index);

}  // namespace ier
