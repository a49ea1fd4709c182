#pragma once

// Reference solver for argmin_{p in simplex} D_F(p, w). It works in the
// primal: sweep over every pair of coordinates, moving mass between the two
// until their KKT multipliers c_i ln(p_i / w_i) agree, until all of them
// agree. It never forms lambda, so it checks multiscale_project independently.
// Test-harness use only; it is slow by construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "msmw/core.hpp"

namespace msmw {

class OracleNonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Moves mass s between coordinates a and b until c_a ln(p_a / w_a) = c_b ln(p_b / w_b) = m.
/// Solves for the common multiplier m so both shares keep full relative precision;
/// returns (ln p_a, ln p_b).
inline std::pair<long double, long double> equalize_pair(long double log_s, long double ca, long double cb,
                                                          long double log_wa, long double log_wb) {
  auto excess = [&](long double m) {
    const long double x = log_wa + m / ca;
    const long double y = log_wb + m / cb;
    const long double hi = std::max(x, y);
    return hi + std::log1p(std::exp(std::min(x, y) - hi)) - log_s;
  };
  long double lo = -1.0L;
  long double hi = 1.0L;
  while (excess(lo) > 0.0L) lo *= 2.0L;
  while (excess(hi) < 0.0L) hi *= 2.0L;
  long double m = 0.5L * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const long double f = excess(m);
    if (f == 0.0L) break;
    (f > 0.0L ? hi : lo) = m;
    const long double pa = std::exp(log_wa + m / ca);
    const long double pb = std::exp(log_wb + m / cb);
    long double next = m - f * (pa + pb) / (pa / ca + pb / cb);
    if (!(next > lo && next < hi)) next = 0.5L * (lo + hi);
    if (next == m) break;
    m = next;
  }
  return {log_wa + m / ca, log_wb + m / cb};
}

}  // namespace detail

inline SimplexPoint bregman_project_oracle(const WeightVector& w, const ActionSpace& space,
                                           std::size_t max_steps = 200000) {
  detail::require_same_size(w.size(), space.size(), "weights vs action space");
  const std::size_t k = w.size();
  std::vector<long double> logw(k);
  std::vector<long double> c(k);
  long double m = -INFINITY;
  for (std::size_t i = 0; i < k; ++i) {
    logw[i] = w.logs()[i];
    c[i] = space.range(i);
    m = std::max(m, logw[i]);
  }
  // Start from the plain normalization w / sum(w), held as logs.
  std::vector<long double> lp(k);
  long double z = 0.0L;
  for (std::size_t i = 0; i < k; ++i) z += std::exp(logw[i] - m);
  for (std::size_t i = 0; i < k; ++i) lp[i] = logw[i] - m - std::log(z);
  if (k == 1) return SimplexPoint({1.0});

  std::size_t steps = 0;
  while (steps < max_steps) {
    long double hi = -INFINITY;
    long double lo = INFINITY;
    long double scale = 1.0L;
    for (std::size_t i = 0; i < k; ++i) {
      const long double mult = c[i] * (lp[i] - logw[i]);
      scale = std::max(scale, std::abs(mult));
      hi = std::max(hi, mult);
      lo = std::min(lo, mult);
    }
    if (hi - lo <= 1e-15L * scale) {
      long double top = -INFINITY;
      for (auto v : lp) top = std::max(top, v);
      long double total = 0.0L;
      for (auto v : lp) total += std::exp(v - top);
      std::vector<double> out(k);
      for (std::size_t i = 0; i < k; ++i) out[i] = static_cast<double>(std::exp(lp[i] - top) / total);
      return SimplexPoint(std::move(out));
    }
    // One sweep over every pair; a tiny coordinate only copies its partner's
    // multiplier, so sweeping keeps the heavy coordinates moving as well.
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b, ++steps) {
        const long double big = std::max(lp[a], lp[b]);
        const long double log_s = big + std::log1p(std::exp(std::min(lp[a], lp[b]) - big));
        std::tie(lp[a], lp[b]) = detail::equalize_pair(log_s, c[a], c[b], logw[a], logw[b]);
      }
    }
  }
  throw OracleNonConvergence("Bregman projection oracle exceeded its step budget");
}

}  // namespace msmw
