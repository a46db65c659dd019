#pragma once

// Limited-memory BFGS with a strong-Wolfe line search, plus a central
// difference gradient checker. Both learners minimize through this.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ier {

/// Writes the gradient into `grad` (same size as x) and returns the value.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsConfig {
  std::size_t history = 10;
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-5;  // infinity norm
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search = 30;  // objective evaluations per line search

  /// Throws Error(InvalidArgument) unless 0 < c1 < c2 < 1 and history >= 1.
  void validate() const;
};

/// One accepted iteration. `slope0` and `slope` are the directional
/// derivatives along the search direction at step 0 and at the accepted step,
/// so callers can check the strong Wolfe conditions after the fact.
struct IterationRecord {
  double value = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
  double previous_value = 0.0;
  double slope0 = 0.0;
  double slope = 0.0;
};

using OptTrace = std::vector<IterationRecord>;

enum class StopReason { Converged, MaxIterations, LineSearchFailed };

const char* stop_reason_name(StopReason r);

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  OptTrace trace;
  StopReason reason = StopReason::MaxIterations;
};

/// Throws Error(NonFiniteObjective) if the objective is not finite at x0.
/// Trial points with non-finite values are treated as overshoots.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsConfig& cfg = {});

/// Max over coordinates of |g - g_fd| / max(1, |g|, |g_fd|) with central
/// differences of width 2h.
double grad_check(const Objective& objective, std::span<const double> x, double h = 1e-5);

}  // namespace ier
