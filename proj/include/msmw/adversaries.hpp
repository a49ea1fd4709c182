#pragma once

// Reward and value sources: i.i.d. environments, value traces for the
// pricing problems, and the two symmetric-range lower-bound adversaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "msmw/core.hpp"
#include "msmw/rng.hpp"

namespace msmw {

// ---------------------------------------------------------------------------
// Lower-bound adversaries

/// Two arms with ranges (1, h). Arm 1 always pays 0; arm 2 pays +h until the
/// learner's arm-2 probability exceeds 2^t / sqrt(h) in some round t, and -h
/// from that round on.
class AdaptiveExpertLB {
 public:
  explicit AdaptiveExpertLB(double h) : h_(h) {
    if (!(h >= 16.0)) throw InvalidArgument("expert lower bound needs h >= 16");
    horizon_ = static_cast<std::size_t>(std::floor(0.5 * std::log2(h))) - 1;
  }

  double h() const noexcept { return h_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::vector<double> ranges() const { return {1.0, h_}; }

  /// q_t threshold for 1-based round t.
  double threshold(std::size_t t) const { return std::ldexp(1.0, static_cast<int>(t)) / std::sqrt(h_); }

  std::vector<double> step(double prob_arm2, std::size_t t) {
    if (!(prob_arm2 >= 0.0 && prob_arm2 <= 1.0)) throw InvalidArgument("arm-2 probability must lie in [0, 1]");
    if (t < 1 || t > horizon_) throw InvalidArgument("round outside the lower-bound horizon");
    if (!trigger_round_ && prob_arm2 > threshold(t)) trigger_round_ = t;
    return {0.0, trigger_round_ ? -h_ : h_};
  }

  bool triggered() const noexcept { return trigger_round_ != 0; }
  std::size_t trigger_round() const noexcept { return trigger_round_; }

  double regret1_threshold() const { return 0.5 * static_cast<double>(horizon_) + std::sqrt(h_); }
  double regret2_threshold() const {
    return 0.5 * static_cast<double>(horizon_) * h_ + h_ * std::log2(h_) / 5.0;
  }

 private:
  double h_;
  std::size_t horizon_ = 0;
  std::size_t trigger_round_ = 0;
};

inline double bernoulli_kl(double a, double b) {
  auto term = [](double x, double y) { return x > 0.0 ? x * std::log(x / y) : 0.0; };
  return term(a, b) + term(1.0 - a, 1.0 - b);
}

/// Per-round KL between the two instances' observations for the played arm
/// (0-based): zero for arm 0, Bernoulli KL(1/2 - 2 eps || 1/2 + 2 eps) for arm 1.
inline double kl_per_round(double eps, std::size_t arm = 1) {
  if (!(eps >= 0.0 && eps < 0.1)) throw InvalidArgument("eps must lie in [0, 0.1)");
  if (arm == 0) return 0.0;
  const double kl = bernoulli_kl(0.5 - 2.0 * eps, 0.5 + 2.0 * eps);
  if (kl > 64.0 * eps * eps) throw std::logic_error("per-round KL exceeds 64 eps^2");
  return kl;
}

/// Arm 1 pays 0; arm 2 pays +h with probability 1/2 - 2 eps (instance 1) or
/// 1/2 + 2 eps (instance 2), and -h otherwise.
class StochasticBanditLB {
 public:
  StochasticBanditLB(double h, std::size_t horizon, int instance) : h_(h), horizon_(horizon), instance_(instance) {
    if (!(h > 1.0)) throw InvalidArgument("bandit lower bound needs h > 1");
    if (horizon == 0) throw InvalidArgument("horizon must be positive");
    if (instance != 1 && instance != 2) throw InvalidArgument("instance id must be 1 or 2");
    eps_ = std::sqrt(h / (256.0 * static_cast<double>(horizon)));
    if (!(eps_ < 0.1)) throw InvalidArgument("eps = sqrt(h / (256 T)) must be below 0.1");
  }

  /// Horizon T = h / (256 eps^2).
  static StochasticBanditLB from_eps(double h, double eps, int instance) {
    return StochasticBanditLB(h, static_cast<std::size_t>(std::llround(h / (256.0 * eps * eps))), instance);
  }

  double h() const noexcept { return h_; }
  double eps() const noexcept { return eps_; }
  std::size_t horizon() const noexcept { return horizon_; }
  int instance() const noexcept { return instance_; }
  std::vector<double> ranges() const { return {1.0, h_}; }

  double arm2_up_probability() const { return instance_ == 1 ? 0.5 - 2.0 * eps_ : 0.5 + 2.0 * eps_; }
  double arm2_mean() const { return (instance_ == 1 ? -4.0 : 4.0) * eps_ * h_; }

  std::vector<double> sample(std::size_t t, const CounterRng& rng) const {
    return {0.0, rng.uniform(t) < arm2_up_probability() ? h_ : -h_};
  }

  double regret1_threshold() const { return eps_ * static_cast<double>(horizon_) + h_ / (256.0 * eps_); }
  double regret2_threshold() const {
    return eps_ * static_cast<double>(horizon_) * h_ + h_ * h_ / (256.0 * eps_);
  }

 private:
  double h_;
  std::size_t horizon_;
  int instance_;
  double eps_ = 0.0;
};

// ---------------------------------------------------------------------------
// i.i.d. reward vectors

enum class RewardShape {
  /// c_i with probability m_i, else 0
  Bernoulli,
  /// c_i * U(0, 1) with probability m_i, else 0
  Uniform,
  /// +c_i with probability (1 + m_i) / 2, else -c_i; m_i in [-1, 1]
  SignedBernoulli,
};

inline RewardShape parse_reward_shape(const std::string& s) {
  if (s == "bernoulli") return RewardShape::Bernoulli;
  if (s == "uniform") return RewardShape::Uniform;
  if (s == "signed_bernoulli") return RewardShape::SignedBernoulli;
  throw InvalidArgument("unknown reward shape '" + s + "'");
}

/// Independent rewards across arms and rounds.
class IIDRewards {
 public:
  IIDRewards(std::vector<double> ranges, std::vector<double> means, std::uint64_t seed,
             RewardShape shape = RewardShape::Bernoulli)
      : ranges_(std::move(ranges)), means_(std::move(means)), shape_(shape), rng_(seed, Stream::Environment) {
    detail::require_same_size(ranges_.size(), means_.size(), "ranges vs means");
    const double lower = shape_ == RewardShape::SignedBernoulli ? -1.0 : 0.0;
    for (double m : means_)
      if (!(m >= lower && m <= 1.0))
        throw InvalidArgument(shape_ == RewardShape::SignedBernoulli ? "signed means must lie in [-1, 1]"
                                                                    : "Bernoulli means must lie in [0, 1]");
  }

  std::vector<double> rewards(std::size_t t) const {
    std::vector<double> g(ranges_.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double u = rng_.uniform(t, 2 * i);
      switch (shape_) {
        case RewardShape::Bernoulli:
          g[i] = u < means_[i] ? ranges_[i] : 0.0;
          break;
        case RewardShape::Uniform:
          g[i] = u < means_[i] ? ranges_[i] * rng_.uniform(t, 2 * i + 1) : 0.0;
          break;
        case RewardShape::SignedBernoulli:
          g[i] = u < 0.5 * (1.0 + means_[i]) ? ranges_[i] : -ranges_[i];
          break;
      }
    }
    return g;
  }

  double expected(std::size_t arm) const {
    const double c = ranges_.at(arm);
    const double m = means_.at(arm);
    return shape_ == RewardShape::Uniform ? 0.5 * c * m : c * m;
  }

  std::size_t best_arm() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < means_.size(); ++i)
      if (expected(i) > expected(best)) best = i;
    return best;
  }

  const std::vector<double>& ranges() const noexcept { return ranges_; }
  const std::vector<double>& means() const noexcept { return means_; }
  RewardShape shape() const noexcept { return shape_; }

 private:
  std::vector<double> ranges_;
  std::vector<double> means_;
  RewardShape shape_;
  CounterRng rng_;
};

// ---------------------------------------------------------------------------
// Value traces

/// Rounds of buyer values; one value per buyer per round, stored row-major.
class ValueTrace {
 public:
  ValueTrace() = default;
  ValueTrace(std::size_t buyers, std::vector<double> values) : buyers_(buyers), values_(std::move(values)) {
    if (buyers_ == 0) throw InvalidArgument("trace needs at least one buyer");
    if (values_.size() % buyers_ != 0) throw InvalidArgument("trace length is not a multiple of the buyer count");
    for (double v : values_)
      if (!(v >= 1.0) || !std::isfinite(v)) throw InvalidArgument("trace values must be finite and >= 1");
  }

  static ValueTrace single(std::vector<double> values) { return ValueTrace(1, std::move(values)); }

  std::size_t buyers() const noexcept { return buyers_; }
  std::size_t rounds() const noexcept { return values_.size() / buyers_; }
  bool empty() const noexcept { return values_.empty(); }
  double value(std::size_t t, std::size_t buyer = 0) const { return values_.at(t * buyers_ + buyer); }
  std::span<const double> profile(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * buyers_, buyers_);
  }
  double round_max(std::size_t t) const {
    const auto p = profile(t);
    return *std::max_element(p.begin(), p.end());
  }
  double max_value() const { return values_.empty() ? 1.0 : *std::max_element(values_.begin(), values_.end()); }
  const std::vector<double>& values() const noexcept { return values_; }

  void require_at_most(double h) const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i] > h)
        throw InvalidArgument("trace value " + std::to_string(values_[i]) + " in round " +
                              std::to_string(i / buyers_) + " exceeds h = " + std::to_string(h));
  }

  /// One round per line, buyers comma-separated, 17 significant digits.
  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file " + path);
    char buf[64];
    for (std::size_t t = 0; t < rounds(); ++t) {
      for (std::size_t j = 0; j < buyers_; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", value(t, j));
        out << (j ? "," : "") << buf;
      }
      out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing trace file " + path);
  }

  static ValueTrace read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trace file " + path);
    std::vector<double> values;
    std::size_t buyers = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t count = 0;
      while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          throw InvalidArgument("trace line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
        }
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos)
          throw InvalidArgument("trace line " + std::to_string(lineno) + ": trailing characters in '" + cell + "'");
        values.push_back(v);
        ++count;
      }
      if (buyers == 0) buyers = count;
      if (count != buyers) throw InvalidArgument("trace line " + std::to_string(lineno) + ": inconsistent buyer count");
    }
    return ValueTrace(buyers == 0 ? 1 : buyers, std::move(values));
  }

 private:
  std::size_t buyers_ = 1;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Value distributions and pricing environments

enum class ValueKind { Point, Uniform, Discrete, EqualRevenue, Zoom };

inline ValueKind parse_value_kind(const std::string& s) {
  if (s == "point") return ValueKind::Point;
  if (s == "uniform") return ValueKind::Uniform;
  if (s == "discrete") return ValueKind::Discrete;
  if (s == "equal_revenue") return ValueKind::EqualRevenue;
  if (s == "zoom") return ValueKind::Zoom;
  throw InvalidArgument("unknown value distribution '" + s + "'");
}

/// A distribution over [1, h]. For Discrete, `atoms` and `weights` are used;
/// EqualRevenue fills them from the geometric grid (1 + eps)^j <= h; Zoom puts
/// mass 1 - 1/h on `base` and 1/h on h.
struct ValueDistribution {
  ValueKind kind = ValueKind::Point;
  double h = 1.0;
  double point = 1.0;
  double lo = 1.0;
  double hi = 1.0;
  double base = 2.0;
  double grid_eps = 1.0;
  std::vector<double> atoms;
  std::vector<double> weights;

  static ValueDistribution point_mass(double v) {
    ValueDistribution d;
    d.kind = ValueKind::Point;
    d.point = v;
    d.h = v;
    d.validate();
    return d;
  }

  static ValueDistribution uniform(double lo, double hi) {
    ValueDistribution d;
    d.kind = ValueKind::Uniform;
    d.lo = lo;
    d.hi = hi;
    d.h = hi;
    d.validate();
    return d;
  }

  static ValueDistribution discrete(std::vector<double> atoms, std::vector<double> weights) {
    ValueDistribution d;
    d.kind = ValueKind::Discrete;
    d.atoms = std::move(atoms);
    d.weights = std::move(weights);
    d.h = d.atoms.empty() ? 1.0 : *std::max_element(d.atoms.begin(), d.atoms.end());
    d.validate();
    return d;
  }

  /// P(v >= p_j) = 1 / p_j on the grid, so every grid price earns 1 in expectation.
  static ValueDistribution equal_revenue(double eps, double h) {
    ValueDistribution d;
    d.kind = ValueKind::EqualRevenue;
    d.grid_eps = eps;
    d.h = h;
    for (int j = 0; std::pow(1.0 + eps, j) <= h * (1.0 + 1e-12); ++j) d.atoms.push_back(std::pow(1.0 + eps, j));
    for (std::size_t j = 0; j < d.atoms.size(); ++j) {
      const double next = j + 1 < d.atoms.size() ? 1.0 / d.atoms[j + 1] : 0.0;
      d.weights.push_back(1.0 / d.atoms[j] - next);
    }
    d.validate();
    return d;
  }

  static ValueDistribution zoom(double base, double h) {
    ValueDistribution d;
    d.kind = ValueKind::Zoom;
    d.base = base;
    d.h = h;
    d.validate();
    return d;
  }

  void validate() const {
    switch (kind) {
      case ValueKind::Point:
        if (!(point >= 1.0)) throw InvalidArgument("point value must be >= 1");
        break;
      case ValueKind::Uniform:
        if (!(lo >= 1.0 && hi >= lo)) throw InvalidArgument("uniform values need 1 <= lo <= hi");
        break;
      case ValueKind::Discrete:
      case ValueKind::EqualRevenue: {
        if (atoms.empty() || atoms.size() != weights.size())
          throw InvalidArgument("discrete values need matching non-empty atoms and weights");
        double total = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
          if (!(atoms[i] >= 1.0)) throw InvalidArgument("discrete atoms must be >= 1");
          if (!(weights[i] >= 0.0)) throw InvalidArgument("discrete weights must be non-negative");
          total += weights[i];
        }
        if (!(std::abs(total - 1.0) <= 1e-9)) throw InvalidArgument("discrete weights must sum to 1");
        break;
      }
      case ValueKind::Zoom:
        if (!(base >= 1.0 && h > base)) throw InvalidArgument("zoom values need 1 <= base < h");
        break;
    }
  }

  double sample(double u) const {
    switch (kind) {
      case ValueKind::Point:
        return point;
      case ValueKind::Uniform:
        return lo + (hi - lo) * u;
      case ValueKind::Discrete:
      case ValueKind::EqualRevenue:
        return atoms[sample_index(weights, u)];
      case ValueKind::Zoom:
        return u < 1.0 / h ? h : base;
    }
    return point;
  }

  /// Probability that a value is at least p.
  double sale_probability(double p) const {
    switch (kind) {
      case ValueKind::Point:
        return point >= p ? 1.0 : 0.0;
      case ValueKind::Uniform:
        if (p <= lo) return 1.0;
        if (p > hi) return 0.0;
        return hi > lo ? (hi - p) / (hi - lo) : 1.0;
      case ValueKind::Discrete:
      case ValueKind::EqualRevenue: {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
          if (atoms[i] >= p) s += weights[i];
        return s;
      }
      case ValueKind::Zoom:
        return p <= base ? 1.0 : (p <= h ? 1.0 / h : 0.0);
    }
    return 0.0;
  }
};

/// T rounds of i.i.d. values, `buyers` independent draws per round.
inline ValueTrace make_pricing_environment(const ValueDistribution& dist, std::size_t rounds, std::uint64_t seed,
                                           std::size_t buyers = 1) {
  dist.validate();
  const CounterRng rng(seed, Stream::Trace);
  std::vector<double> values(rounds * buyers);
  for (std::size_t t = 0; t < rounds; ++t)
    for (std::size_t j = 0; j < buyers; ++j) values[t * buyers + j] = dist.sample(rng.uniform(t, j));
  return ValueTrace(buyers, std::move(values));
}

}  // namespace msmw
