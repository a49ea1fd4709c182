#pragma once

// Full-information multi-scale multiplicative weights (MSMW).
//
// Each round the learner samples i_t ~ p^t, observes the whole reward vector,
// forms w_i = p_i * exp(eta * g_i / c_i) and projects back onto the simplex
// with multiscale_project. State is kept as log-probabilities so that long
// horizons neither overflow nor underflow.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "msmw/core.hpp"
#include "msmw/rng.hpp"

namespace msmw {

enum class RangeMode { NonNegative, Symmetric };

inline const char* to_string(RangeMode m) { return m == RangeMode::NonNegative ? "non-negative" : "symmetric"; }

inline void check_reward(std::size_t arm, double g, double c, RangeMode mode) {
  const double lower = mode == RangeMode::NonNegative ? 0.0 : -c;
  if (!(g >= lower && g <= c)) throw RangeViolation(arm, g, lower, c);
}

/// Cumulative gains of every arm and of the algorithm.
struct RegretLedger {
  std::vector<double> per_arm_gain;
  std::vector<double> abs_gain;
  double alg_gain_expected = 0.0;
  double alg_gain_realized = 0.0;
  double alg_abs_gain_expected = 0.0;
  /// sum_t sum_i p_i g_i^2 / c_i
  double local_norm = 0.0;
  std::size_t rounds = 0;

  RegretLedger() = default;
  explicit RegretLedger(std::size_t k) : per_arm_gain(k, 0.0), abs_gain(k, 0.0) {}

  void record(std::span<const double> probs, std::span<const double> rewards, std::size_t chosen,
              std::span<const double> ranges) {
    double expected = 0.0;
    double expected_abs = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      per_arm_gain[i] += rewards[i];
      abs_gain[i] += std::abs(rewards[i]);
      expected += probs[i] * rewards[i];
      expected_abs += probs[i] * std::abs(rewards[i]);
      norm += probs[i] * rewards[i] * rewards[i] / ranges[i];
    }
    alg_gain_expected += expected;
    alg_abs_gain_expected += expected_abs;
    alg_gain_realized += rewards[chosen];
    local_norm += norm;
    ++rounds;
  }

  double regret(std::size_t arm) const { return per_arm_gain.at(arm) - alg_gain_expected; }
  double realized_regret(std::size_t arm) const { return per_arm_gain.at(arm) - alg_gain_realized; }

  std::size_t best_arm() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < per_arm_gain.size(); ++i)
      if (per_arm_gain[i] > per_arm_gain[best]) best = i;
    return best;
  }
};

/// One side-by-side inequality lhs <= rhs, kept numerically for diagnosis.
struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;

  bool holds() const { return lhs <= rhs; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << name << ": " << lhs << (holds() ? " <= " : " > ") << rhs;
    return os.str();
  }
};

/// Starting distribution for MSMW.
///   NonNegative: mu = (1 - eta) 1_{i_min} + eta pi
///   Symmetric:   mu_j = pi_j c_min / c_j off i_min, remaining mass on i_min
inline std::vector<double> initial_distribution(const ActionSpace& space, double eta, RangeMode mode) {
  const auto pi = space.prior();
  const std::size_t imin = space.argmin_range();
  std::vector<double> mu(space.size(), 0.0);
  if (mode == RangeMode::NonNegative) {
    for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = eta * pi[j];
    mu[imin] += 1.0 - eta;
  } else {
    const double cmin = space.c_min();
    double rest = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (j == imin) continue;
      mu[j] = pi[j] * cmin / space.range(j);
      rest += mu[j];
    }
    mu[imin] = 1.0 - rest;
  }
  return mu;
}

class MsmwLearner {
 public:
  MsmwLearner(ActionSpace space, double eta, RangeMode mode, std::uint64_t seed, double tol = kDefaultTolerance)
      : space_(std::move(space)), eta_(eta), mode_(mode), seed_(seed), tol_(tol), rng_(seed, Stream::ArmSampling) {
    validate();
    if (!space_.has_prior()) throw InvalidArgument("MSMW needs a prior over arms");
    reset(initial_distribution(space_, eta_, mode_));
  }

  /// Starts from an explicit distribution instead of the mode's default.
  MsmwLearner(ActionSpace space, double eta, RangeMode mode, std::vector<double> initial, std::uint64_t seed,
              double tol = kDefaultTolerance)
      : space_(std::move(space)), eta_(eta), mode_(mode), seed_(seed), tol_(tol), rng_(seed, Stream::ArmSampling) {
    validate();
    detail::require_same_size(initial.size(), space_.size(), "initial distribution vs action space");
    for (double v : initial)
      if (!(v > 0.0)) throw InvalidArgument("initial distribution must be strictly positive");
    reset(std::move(initial));
  }

  /// eta = eps / 3 for non-negative rewards, eta = eps for symmetric ones.
  static MsmwLearner for_epsilon(ActionSpace space, double eps, RangeMode mode, std::uint64_t seed) {
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("epsilon must lie in (0, 1]");
    const double eta = mode == RangeMode::NonNegative ? eps / 3.0 : eps;
    return MsmwLearner(std::move(space), eta, mode, seed);
  }

  /// Samples the arm for the current round without changing state.
  std::size_t choose() const { return sample_index(probs_, rng_.uniform(ledger_.rounds)); }

  /// Applies the full reward vector of the current round.
  void observe(std::span<const double> rewards, std::size_t chosen) {
    detail::require_same_size(rewards.size(), space_.size(), "rewards vs action space");
    for (std::size_t i = 0; i < rewards.size(); ++i) check_reward(i, rewards[i], space_.range(i), mode_);
    ledger_.record(probs_, rewards, chosen, space_.ranges());
    for (std::size_t i = 0; i < logp_.size(); ++i) logp_[i] += eta_ * rewards[i] / space_.range(i);
    last_lambda_ = detail::project_log_weights_in_place(logp_, space_.ranges(), tol_).lambda;
    refresh();
  }

  std::size_t step(std::span<const double> rewards) {
    const std::size_t arm = choose();
    observe(rewards, arm);
    return arm;
  }

  const ActionSpace& space() const noexcept { return space_; }
  double eta() const noexcept { return eta_; }
  RangeMode mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double last_lambda() const noexcept { return last_lambda_; }
  std::size_t round() const noexcept { return ledger_.rounds; }
  std::span<const double> probabilities() const noexcept { return probs_; }
  std::span<const double> log_probabilities() const noexcept { return logp_; }
  SimplexPoint point() const { return SimplexPoint(probs_); }
  const std::vector<double>& initial() const noexcept { return initial_; }
  const RegretLedger& ledger() const noexcept { return ledger_; }

 private:
  void validate() const {
    if (!(eta_ > 0.0 && eta_ <= 1.0)) throw InvalidArgument("learning rate must lie in (0, 1]");
    if (!(tol_ > 0.0)) throw InvalidArgument("projection tolerance must be positive");
  }

  void reset(std::vector<double> initial) {
    initial_ = std::move(initial);
    logp_.resize(initial_.size());
    for (std::size_t i = 0; i < initial_.size(); ++i) logp_[i] = safe_log(initial_[i]);
    ledger_ = RegretLedger(initial_.size());
    refresh();
  }

  void refresh() {
    probs_.resize(logp_.size());
    for (std::size_t i = 0; i < logp_.size(); ++i) probs_[i] = std::exp(logp_[i]);
  }

  ActionSpace space_;
  double eta_;
  RangeMode mode_;
  std::uint64_t seed_;
  double tol_;
  CounterRng rng_;
  std::vector<double> initial_;
  std::vector<double> logp_;
  std::vector<double> probs_;
  RegretLedger ledger_;
  double last_lambda_ = 0.0;
};

/// Closed-form bound for non-negative rewards:
///   (2 eta / (1 - eta)) G_alg + (1 / eta) (c_i ln(1 / (eta pi_i)) + c_i)
inline double nonnegative_regret_bound(double eta, double range, double prior, double alg_gain) {
  return 2.0 * eta / (1.0 - eta) * alg_gain + (range * std::log(1.0 / (eta * prior)) + range) / eta;
}

/// The bound above evaluated on a learner's ledger for one arm.
inline double msmw_regret_bound(const MsmwLearner& learner, std::size_t arm) {
  if (learner.mode() != RangeMode::NonNegative)
    throw InvalidArgument("the non-negative regret bound needs a non-negative-mode learner");
  if (learner.eta() >= 1.0) throw InvalidArgument("the non-negative regret bound needs eta < 1");
  return nonnegative_regret_bound(learner.eta(), learner.space().range(arm), learner.space().prior()[arm],
                                  learner.ledger().alg_gain_expected);
}

/// Symmetric-range bound with the recommended initial distribution:
///   eta * sum_t p^t.|g^t| + (1 / eta) c_i ln(c_i / (pi_i c_min)) + (2 / eta) c_i
inline double symmetric_regret_bound(const MsmwLearner& learner, std::size_t arm) {
  if (learner.mode() != RangeMode::Symmetric)
    throw InvalidArgument("the symmetric regret bound needs a symmetric-mode learner");
  const double eta = learner.eta();
  const double c = learner.space().range(arm);
  const double pi = learner.space().prior()[arm];
  return eta * learner.ledger().alg_abs_gain_expected + c * std::log(c / (pi * learner.space().c_min())) / eta +
         2.0 * c / eta;
}

/// sum_i q_i G_i - G_alg <= eta * local_norm + (1 / eta) D_F(q, mu)
inline InequalityCheck ledger_inequality(const RegretLedger& ledger, std::span<const double> ranges,
                                         std::span<const double> initial, double eta, std::span<const double> q) {
  double lhs = -ledger.alg_gain_expected;
  double divergence = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    lhs += q[i] * ledger.per_arm_gain[i];
    const double qlog = q[i] > 0.0 ? q[i] * std::log(q[i] / initial[i]) : 0.0;
    divergence += ranges[i] * (qlog - q[i] + initial[i]);
  }
  return {"ledger inequality", lhs, eta * ledger.local_norm + divergence / eta};
}

inline InequalityCheck ledger_inequality(const MsmwLearner& learner, std::size_t arm) {
  std::vector<double> q(learner.space().size(), 0.0);
  q.at(arm) = 1.0;
  auto check = ledger_inequality(learner.ledger(), learner.space().ranges(), learner.initial(), learner.eta(), q);
  check.name += " (arm " + std::to_string(arm) + ")";
  return check;
}

/// eps = sqrt(ln(k T) / T), clamped to 1.
inline double epsilon_for_horizon(std::size_t k, std::size_t horizon) {
  const double t = static_cast<double>(horizon);
  return std::min(1.0, std::sqrt(std::log(static_cast<double>(k) * t) / t));
}

}  // namespace msmw
