#pragma once

// Numeric core shared by every learner: action spaces with per-arm ranges,
// simplex points, log-domain weight vectors, the weighted negative entropy
// F(x) = sum_i c_i x_i ln x_i with its Bregman divergence, and the smooth
// multi-scale projection p_i = w_i * exp(-lambda / c_i).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msmw {

inline constexpr double kDefaultTolerance = 1e-12;
inline constexpr double kSimplexTolerance = 1e-12;
/// ln(1e-300); zero probabilities are floored here before taking logs.
inline constexpr double kLogFloor = -690.7755278982137;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A reward outside the declared range of an arm.
class RangeViolation : public std::out_of_range {
 public:
  RangeViolation(std::size_t arm, double reward, double lower, double upper)
      : std::out_of_range("reward " + std::to_string(reward) + " for arm " + std::to_string(arm) +
                          " outside [" + std::to_string(lower) + ", " + std::to_string(upper) + "]"),
        arm_(arm),
        reward_(reward),
        lower_(lower),
        upper_(upper) {}

  std::size_t arm() const noexcept { return arm_; }
  double reward() const noexcept { return reward_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  std::size_t arm_;
  double reward_;
  double lower_;
  double upper_;
};

inline double safe_log(double x) {
  return x > 0.0 ? std::max(std::log(x), kLogFloor) : kLogFloor;
}

/// log(sum_i exp(v_i)), stable for any finite input.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Arm set with per-arm reward ranges c_i > 0 and an optional prior pi.
class ActionSpace {
 public:
  explicit ActionSpace(std::vector<double> ranges, std::optional<std::vector<double>> prior = std::nullopt)
      : ranges_(std::move(ranges)), prior_(std::move(prior)) {
    if (ranges_.empty()) throw InvalidArgument("action space needs at least one arm");
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
      if (!(ranges_[i] > 0.0) || !std::isfinite(ranges_[i]))
        throw InvalidArgument("range c_" + std::to_string(i) + " must be positive and finite");
    }
    if (prior_) {
      if (prior_->size() != ranges_.size()) throw InvalidArgument("prior length does not match arm count");
      double total = 0.0;
      for (double v : *prior_) {
        if (!(v >= 0.0)) throw InvalidArgument("prior entries must be non-negative");
        total += v;
      }
      if (std::abs(total - 1.0) > kSimplexTolerance) throw InvalidArgument("prior must sum to 1");
    }
  }

  static ActionSpace with_uniform_prior(std::vector<double> ranges) {
    const std::size_t k = ranges.size();
    return ActionSpace(std::move(ranges), std::vector<double>(k, k ? 1.0 / static_cast<double>(k) : 0.0));
  }

  std::size_t size() const noexcept { return ranges_.size(); }
  std::span<const double> ranges() const noexcept { return ranges_; }
  double range(std::size_t i) const { return ranges_.at(i); }
  bool has_prior() const noexcept { return prior_.has_value(); }

  std::span<const double> prior() const {
    if (!prior_) throw InvalidArgument("action space has no prior");
    return *prior_;
  }

  /// The declared prior, or the uniform distribution when none was given.
  std::vector<double> prior_or_uniform() const {
    if (prior_) return *prior_;
    return std::vector<double>(size(), 1.0 / static_cast<double>(size()));
  }

  double c_min() const { return *std::min_element(ranges_.begin(), ranges_.end()); }
  double c_max() const { return *std::max_element(ranges_.begin(), ranges_.end()); }

  /// Arm with the smallest range; lowest index on ties.
  std::size_t argmin_range() const {
    return static_cast<std::size_t>(std::min_element(ranges_.begin(), ranges_.end()) - ranges_.begin());
  }

 private:
  std::vector<double> ranges_;
  std::optional<std::vector<double>> prior_;
};

/// A probability vector.
class SimplexPoint {
 public:
  SimplexPoint() = default;

  explicit SimplexPoint(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidArgument("simplex point must be non-empty");
    double total = 0.0;
    for (double v : probs_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("probabilities must be finite and non-negative");
      total += v;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance)
      throw InvalidArgument("probabilities sum to " + std::to_string(total) + ", not 1");
  }

  /// Normalizes strictly positive log-weights into a simplex point.
  static SimplexPoint from_log_weights(std::span<const double> logw) {
    const double z = log_sum_exp(logw);
    std::vector<double> p(logw.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logw[i] - z);
    return SimplexPoint(std::move(p));
  }

  static SimplexPoint uniform(std::size_t k) {
    return SimplexPoint(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& vector() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Strictly positive weights stored as ln w_i.
class WeightVector {
 public:
  WeightVector() = default;

  explicit WeightVector(std::vector<double> logw) : logw_(std::move(logw)) {
    for (double v : logw_) {
      if (!std::isfinite(v)) throw InvalidArgument("log-weights must be finite");
    }
  }

  static WeightVector from_weights(std::span<const double> w) {
    std::vector<double> logw(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] > 0.0) || !std::isfinite(w[i])) throw InvalidArgument("weights must be positive and finite");
      logw[i] = std::log(w[i]);
    }
    return WeightVector(std::move(logw));
  }

  static WeightVector from_point(const SimplexPoint& p) {
    std::vector<double> logw(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) logw[i] = safe_log(p[i]);
    return WeightVector(std::move(logw));
  }

  std::size_t size() const noexcept { return logw_.size(); }
  std::span<const double> logs() const noexcept { return logw_; }
  double weight(std::size_t i) const { return std::exp(logw_.at(i)); }

 private:
  std::vector<double> logw_;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InvalidArgument(std::string("dimension mismatch: ") + what);
}

}  // namespace detail

/// F(x) = sum_i c_i x_i ln x_i, with 0 ln 0 = 0.
inline double weighted_neg_entropy(const SimplexPoint& x, const ActionSpace& space) {
  detail::require_same_size(x.size(), space.size(), "point vs action space");
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) f += space.range(i) * x[i] * std::log(x[i]);
  }
  return f;
}

/// D_F(x, y) = sum_i c_i (x_i ln(x_i / y_i) - x_i + y_i) for y given in log form.
inline double bregman_divergence(const SimplexPoint& x, const WeightVector& y, const ActionSpace& space) {
  detail::require_same_size(x.size(), space.size(), "point vs action space");
  detail::require_same_size(y.size(), space.size(), "weights vs action space");
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double yi = std::exp(y.logs()[i]);
    const double xlog = x[i] > 0.0 ? x[i] * (std::log(x[i]) - y.logs()[i]) : 0.0;
    d += space.range(i) * (xlog - x[i] + yi);
  }
  return d;
}

inline double bregman_divergence(const SimplexPoint& x, const SimplexPoint& y, const ActionSpace& space) {
  detail::require_same_size(y.size(), space.size(), "point vs action space");
  std::vector<double> logy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw InvalidArgument("Bregman divergence needs strictly positive y");
    logy[i] = std::log(y[i]);
  }
  return bregman_divergence(x, WeightVector(std::move(logy)), space);
}

struct RootSolve {
  double lambda = 0.0;
  /// |sum_i w_i exp(-lambda / c_i) - 1| before renormalization.
  double residual = 0.0;
  int evaluations = 0;
};

namespace detail {

/// phi(lambda) = ln sum_i exp(logw_i - lambda / c_i), and phi'(lambda).
inline double shifted_lse(std::span<const double> logw, std::span<const double> ranges, double lambda,
                          double& slope) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logw.size(); ++i) m = std::max(m, logw[i] - lambda / ranges[i]);
  double s = 0.0;
  double ds = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double e = std::exp(logw[i] - lambda / ranges[i] - m);
    s += e;
    ds += e / ranges[i];
  }
  slope = -ds / s;
  return m + std::log(s);
}

/// Bracket by doubling outward from zero, then bisect.
inline RootSolve bisect_root(std::span<const double> logw, std::span<const double> ranges, double tol) {
  RootSolve out;
  double slope = 0.0;
  auto phi = [&](double l) {
    ++out.evaluations;
    return shifted_lse(logw, ranges, l, slope);
  };
  double lo = 0.0;
  double hi = 0.0;
  const double f0 = phi(0.0);
  if (f0 > 0.0) {
    hi = 1.0;
    while (phi(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw std::runtime_error("projection bracket overflow");
    }
  } else {
    lo = -1.0;
    while (phi(lo) < 0.0) {
      hi = lo;
      lo *= 2.0;
      if (!std::isfinite(lo)) throw std::runtime_error("projection bracket overflow");
    }
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 2000; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = phi(mid);
    if (std::abs(std::expm1(f)) <= tol || mid == lo || mid == hi) break;
    (f > 0.0 ? lo : hi) = mid;
  }
  out.lambda = mid;
  out.residual = std::abs(std::expm1(phi(mid)));
  return out;
}

/// Root of the strictly decreasing, convex phi. Newton from zero converges
/// monotonically after at most one overshoot; sign information is kept as a
/// bracket and any step leaving it falls back to bisection.
inline RootSolve solve_lambda(std::span<const double> logw, std::span<const double> ranges, double tol) {
  RootSolve out;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double lambda = 0.0;
  double slope = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double f = shifted_lse(logw, ranges, lambda, slope);
    ++out.evaluations;
    if (!std::isfinite(f) || !std::isfinite(slope) || slope >= 0.0) break;
    const double residual = std::abs(std::expm1(f));
    if (residual <= tol) {
      out.lambda = lambda;
      out.residual = residual;
      return out;
    }
    (f > 0.0 ? lo : hi) = lambda;
    double next = lambda - f / slope;
    if (!(next > lo && next < hi)) {
      if (std::isfinite(lo) && std::isfinite(hi)) {
        next = 0.5 * (lo + hi);
      } else {
        break;
      }
    }
    if (next == lambda) {
      out.lambda = lambda;
      out.residual = residual;
      return out;
    }
    lambda = next;
  }
  RootSolve slow = bisect_root(logw, ranges, tol);
  slow.evaluations += out.evaluations;
  return slow;
}

/// Replaces logw by the log-probabilities of its multi-scale projection and
/// returns the root information. The result sums to one to machine precision.
inline RootSolve project_log_weights_in_place(std::span<double> logw, std::span<const double> ranges, double tol) {
  const RootSolve root = solve_lambda(logw, ranges, tol);
  for (std::size_t i = 0; i < logw.size(); ++i) logw[i] -= root.lambda / ranges[i];
  const double z = log_sum_exp(logw);
  for (double& v : logw) v -= z;
  return root;
}

}  // namespace detail

struct ProjectionResult {
  SimplexPoint point;
  double lambda = 0.0;
  double residual = 0.0;
  std::vector<double> log_probs;
};

/// Bregman projection of w onto the simplex under the weighted negative entropy.
inline ProjectionResult multiscale_project(const WeightVector& w, const ActionSpace& space,
                                           double tol = kDefaultTolerance) {
  if (!(tol > 0.0)) throw InvalidArgument("projection tolerance must be positive");
  detail::require_same_size(w.size(), space.size(), "weights vs action space");
  ProjectionResult out;
  out.log_probs.assign(w.logs().begin(), w.logs().end());
  const RootSolve root = detail::project_log_weights_in_place(out.log_probs, space.ranges(), tol);
  out.lambda = root.lambda;
  out.residual = root.residual;
  std::vector<double> p(out.log_probs.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(out.log_probs[i]);
  out.point = SimplexPoint(std::move(p));
  return out;
}

/// Index drawn from probs by inverse CDF at u in [0, 1).
inline std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace msmw
