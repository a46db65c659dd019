#include "ier/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "ier/error.hpp"

namespace ier {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct Point {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> grad;
  bool finite = true;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), safeguarded to
// the inner 80% of the interval; bisection when the cubic is degenerate.
double interpolate(const Point& lo, const Point& hi) {
  const double a = lo.step, b = hi.step;
  const double lo_edge = std::min(a, b) + 0.1 * std::abs(b - a);
  const double hi_edge = std::max(a, b) - 0.1 * std::abs(b - a);
  double t = 0.5 * (a + b);
  if (lo.finite && hi.finite) {
    const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    const double disc = d1 * d1 - lo.slope * hi.slope;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b - a);
      const double denom = hi.slope - lo.slope + 2.0 * d2;
      if (denom != 0.0) {
        const double c = b - (b - a) * (hi.slope + d2 - d1) / denom;
        if (std::isfinite(c)) t = c;
      }
    }
  }
  return std::clamp(t, lo_edge, hi_edge);
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const LbfgsConfig& cfg, std::span<const double> x,
             std::span<const double> dir, double value0, double slope0)
      : f_(f), cfg_(cfg), x_(x), dir_(dir), value0_(value0), slope0_(slope0) {}

  // Returns true with `out` set to a point satisfying the strong Wolfe
  // conditions, false when the evaluation budget runs out.
  bool run(double initial_step, Point& out) {
    Point prev;
    prev.step = 0.0;
    prev.value = value0_;
    prev.slope = slope0_;
    double step = initial_step;
    for (std::size_t i = 0; evals_ < cfg_.max_line_search; ++i) {
      Point cur = eval(step);
      if (!cur.finite || cur.value > value0_ + cfg_.c1 * step * slope0_ ||
          (i > 0 && cur.value >= prev.value))
        return zoom(prev, cur, out);
      if (std::abs(cur.slope) <= -cfg_.c2 * slope0_) {
        out = refine(std::move(cur));
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      step *= 2.0;
    }
    return false;
  }

 private:
  Point eval(double step) {
    ++evals_;
    Point p;
    p.step = step;
    p.x.resize(x_.size());
    p.grad.assign(x_.size(), 0.0);
    for (std::size_t i = 0; i < x_.size(); ++i) p.x[i] = x_[i] + step * dir_[i];
    p.value = f_(p.x, p.grad);
    p.finite = std::isfinite(p.value) && all_finite(p.grad);
    p.slope = p.finite ? dot(p.grad, dir_) : std::numeric_limits<double>::quiet_NaN();
    if (!p.finite) p.value = std::numeric_limits<double>::infinity();
    return p;
  }

  bool acceptable(const Point& p) const {
    return p.finite && p.value <= value0_ + cfg_.c1 * p.step * slope0_ &&
           std::abs(p.slope) <= -cfg_.c2 * slope0_;
  }

  // One secant step toward the 1-D stationary point when an acceptable point
  // still has a large slope. Exact on quadratics. Kept only if it is itself
  // acceptable and no worse.
  Point refine(Point p) {
    if (std::abs(p.slope) <= kRefineRatio * -slope0_ || evals_ >= cfg_.max_line_search ||
        !(p.slope > slope0_))
      return p;
    const double step = p.step * slope0_ / (slope0_ - p.slope);
    if (!(std::isfinite(step) && step > 0.0) || step == p.step) return p;
    Point q = eval(step);
    return acceptable(q) && q.value <= p.value ? q : p;
  }

  static constexpr double kRefineRatio = 0.1;

  bool zoom(Point lo, Point hi, Point& out) {
    while (evals_ < cfg_.max_line_search) {
      const double step = interpolate(lo, hi);
      if (!(std::abs(hi.step - lo.step) > 0.0) || step == lo.step) return false;
      Point cur = eval(step);
      if (!cur.finite || cur.value > value0_ + cfg_.c1 * step * slope0_ ||
          cur.value >= lo.value) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -cfg_.c2 * slope0_) {
        out = refine(std::move(cur));
        return true;
      }
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = std::move(lo);
      lo = std::move(cur);
    }
    return false;
  }

  const Objective& f_;
  const LbfgsConfig& cfg_;
  std::span<const double> x_;
  std::span<const double> dir_;
  double value0_;
  double slope0_;
  std::size_t evals_ = 0;
};

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

}  // namespace

void LbfgsConfig::validate() const {
  if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0))
    throw Error(ErrorCode::InvalidArgument, "Wolfe constants must satisfy 0 < c1 < c2 < 1");
  if (history < 1) throw Error(ErrorCode::InvalidArgument, "L-BFGS history must be >= 1");
  if (max_line_search < 1)
    throw Error(ErrorCode::InvalidArgument, "line search needs at least one evaluation");
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::LineSearchFailed: return "line-search-failed";
  }
  return "unknown";
}

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsConfig& cfg) {
  cfg.validate();
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> grad(n, 0.0);
  res.value = objective(res.x, grad);
  if (!std::isfinite(res.value) || !all_finite(grad))
    throw Error(ErrorCode::NonFiniteObjective, "objective is not finite at the starting point");
  res.gradient_norm = norm_inf(grad);

  std::deque<CurvaturePair> memory;
  std::vector<double> dir(n), alpha(cfg.history);

  for (std::size_t iter = 0;; ++iter) {
    if (res.gradient_norm <= cfg.gradient_tolerance) {
      res.reason = StopReason::Converged;
      return res;
    }
    if (iter >= cfg.max_iterations) {
      res.reason = StopReason::MaxIterations;
      return res;
    }

    // Two-loop recursion: dir = -H grad.
    for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& p = memory[k];
      alpha[k] = p.rho * dot(p.s, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * p.y[i];
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& d : dir) d *= gamma;
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& p = memory[k];
      const double beta = p.rho * dot(p.y, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha[k] - beta) * p.s[i];
    }

    double slope0 = dot(grad, dir);
    if (!(slope0 < 0.0)) {
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope0 = dot(grad, dir);
    }
    const double initial_step = memory.empty() ? std::min(1.0, 1.0 / norm2(grad)) : 1.0;

    Point next;
    LineSearch search(objective, cfg, res.x, dir, res.value, slope0);
    if (!search.run(initial_step, next)) {
      res.reason = StopReason::LineSearchFailed;
      return res;
    }

    CurvaturePair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = next.x[i] - res.x[i];
      pair.y[i] = next.grad[i] - grad[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-10 * norm2(pair.s) * norm2(pair.y)) {
      pair.rho = 1.0 / sy;
      if (memory.size() == cfg.history) memory.pop_front();
      memory.push_back(std::move(pair));
    }

    IterationRecord rec;
    rec.previous_value = res.value;
    rec.slope0 = slope0;
    rec.slope = next.slope;
    rec.step = next.step;
    rec.value = next.value;
    rec.gradient_norm = norm_inf(next.grad);
    res.trace.push_back(rec);

    res.x = std::move(next.x);
    grad = std::move(next.grad);
    res.value = next.value;
    res.gradient_norm = rec.gradient_norm;
  }
}

double grad_check(const Objective& objective, std::span<const double> x, double h) {
  const std::size_t n = x.size();
  std::vector<double> analytic(n, 0.0), scratch(n, 0.0);
  objective(x, analytic);
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probe[i] = x[i] + h;
    const double up = objective(probe, scratch);
    probe[i] = x[i] - h;
    const double down = objective(probe, scratch);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace ier
