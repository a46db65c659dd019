#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ier/crf.hpp"

namespace oracle {

inline ier::Potentials random_potentials(std::mt19937_64& rng, std::size_t L, std::size_t T,
                                         bool small_integers) {
  ier::Potentials p(L, T);
  std::uniform_real_distribution<double> real(-2.0, 2.0);
  std::uniform_int_distribution<int> small(-1, 1);
  auto draw = [&] { return small_integers ? double(small(rng)) : real(rng); };
  for (auto& v : p.emission) v = draw();
  for (auto& v : p.transition) v = draw();
  for (auto& v : p.start) v = draw();
  for (auto& v : p.stop) v = draw();
  return p;
}

// Score written directly from the definition, left to right.
inline double score(const ier::Potentials& p, const std::vector<std::size_t>& y) {
  double s = p.start[y.front()] + p.stop[y.back()];
  for (std::size_t t = 0; t < y.size(); ++t) s += p.emission[t * p.num_tags + y[t]];
  for (std::size_t t = 1; t < y.size(); ++t) s += p.transition[y[t - 1] * p.num_tags + y[t]];
  return s;
}

// Calls f(path) for all T^L paths in lexicographic order.
template <class F>
void for_each_path(std::size_t L, std::size_t T, F&& f) {
  std::vector<std::size_t> y(L, 0);
  for (;;) {
    f(y);
    std::size_t t = L;
    while (t > 0) {
      --t;
      if (++y[t] < T) break;
      y[t] = 0;
      if (t == 0) return;
    }
    if (L == 0) return;
  }
}

inline double brute_log_z(const ier::Potentials& p) {
  std::vector<double> scores;
  for_each_path(p.length, p.num_tags, [&](const auto& y) { scores.push_back(score(p, y)); });
  const double mx = *std::max_element(scores.begin(), scores.end());
  double s = 0.0;
  for (double v : scores) s += std::exp(v - mx);
  return mx + std::log(s);
}

// Best path; among exact ties, the smallest path compared from the last
// position backwards.
inline std::vector<std::size_t> brute_argmax(const ier::Potentials& p) {
  std::vector<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  auto reverse_less = [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
  };
  for_each_path(p.length, p.num_tags, [&](const auto& y) {
    const double s = score(p, y);
    if (s > best_score || (s == best_score && reverse_less(y, best))) {
      best_score = s;
      best = y;
    }
  });
  return best;
}

// Node marginals P(y_t = k), L x T, by enumeration.
inline std::vector<double> brute_node_marginals(const ier::Potentials& p) {
  const double log_z = brute_log_z(p);
  std::vector<double> m(p.length * p.num_tags, 0.0);
  for_each_path(p.length, p.num_tags, [&](const auto& y) {
    const double pr = std::exp(score(p, y) - log_z);
    for (std::size_t t = 0; t < y.size(); ++t) m[t * p.num_tags + y[t]] += pr;
  });
  return m;
}

// Edge marginals summed over positions, T x T.
inline std::vector<double> brute_edge_marginals(const ier::Potentials& p) {
  const double log_z = brute_log_z(p);
  std::vector<double> m(p.num_tags * p.num_tags, 0.0);
  for_each_path(p.length, p.num_tags, [&](const auto& y) {
    const double pr = std::exp(score(p, y) - log_z);
    for (std::size_t t = 1; t < y.size(); ++t) m[y[t - 1] * p.num_tags + y[t]] += pr;
  });
  return m;
}

}  // namespace oracle
