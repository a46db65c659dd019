#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ier/vocab.hpp"

namespace ier {

struct ClassScores {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
  std::size_t predicted = 0;
  std::size_t true_positives = 0;
};

struct Aggregate {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  std::vector<ClassScores> classes;
  Aggregate micro;
  Aggregate macro;
  Aggregate weighted;
  double accuracy = 0.0;  // classification reports only
  std::size_t total = 0;  // evaluated instances (or gold spans for span scoring)
  /// Gold rows x predicted columns, in `classes` order. Empty for span scoring.
  std::vector<std::vector<std::size_t>> confusion;

  const ClassScores* find(const std::string& label) const;

  /// Human-readable table.
  std::string table() const;
  std::string to_json() const;
  std::string confusion_csv() const;
};

/// F1 = 2PR / (P + R), 0 when P + R = 0.
double f1_score(double precision, double recall);

/// Per-class and aggregate scores for single-label classification.
/// Classes absent from both gold and pred score 0 and count toward the macro
/// mean unless `macro_skip_empty` is set. Throws Error(LengthMismatch), and
/// Error(InvalidArgument) when a value is not listed in `labels`.
Metrics classification_report(const std::vector<std::string>& gold,
                              const std::vector<std::string>& pred,
                              const std::vector<std::string>& labels,
                              bool macro_skip_empty = false);

/// Exact-match span scoring (label, start and end must all agree), micro over
/// all spans and per entity label.
Metrics span_f1(const std::vector<std::vector<Span>>& gold,
                const std::vector<std::vector<Span>>& pred);

/// Items x raters grid of nominal labels; nullopt marks a missing rating.
using RatingsMatrix = std::vector<std::vector<std::optional<std::string>>>;

/// Krippendorff's alpha for nominal data via the coincidence matrix. Items with
/// fewer than two ratings are ignored. Throws Error(Undefined) when expected
/// disagreement is zero or fewer than two pairable values exist.
double krippendorff_alpha(const RatingsMatrix& ratings);

/// Header row names the raters; each further row is one item; empty cell =
/// missing. Throws Error(Malformed).
RatingsMatrix parse_ratings_csv(const std::string& text);

}  // namespace ier
