#pragma once

// Bandit-MSMW: MSMW run on importance-weighted reward estimates, played
// through a uniform exploration mix p~ = (1 - gamma) p + gamma / k.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msmw/core.hpp"
#include "msmw/experts.hpp"
#include "msmw/rng.hpp"

namespace msmw {

enum class BanditTarget { BestArm, AllArms, Symmetric };

struct BanditParams {
  double gamma = 0.0;
  double eta = 0.0;
};

/// (gamma, eta) per target:
///   BestArm   gamma = eps,                eta = gamma / k
///   AllArms   gamma = eps,                eta = gamma^2 / k
///   Symmetric gamma = eps c_min / c_max,  eta = gamma / k
inline BanditParams bandit_params_for(double eps, BanditTarget target, const ActionSpace& space) {
  if (!(eps > 0.0 && eps <= 0.5)) throw InvalidArgument("epsilon must lie in (0, 1/2]");
  const double k = static_cast<double>(space.size());
  switch (target) {
    case BanditTarget::BestArm:
      return {eps, eps / k};
    case BanditTarget::AllArms:
      return {eps, eps * eps / k};
    case BanditTarget::Symmetric: {
      const double gamma = eps * space.c_min() / space.c_max();
      return {gamma, gamma / k};
    }
  }
  return {};
}

inline std::vector<double> mix_with_uniform(std::span<const double> p, double gamma) {
  const double floor = gamma / static_cast<double>(p.size());
  std::vector<double> mixed(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mixed[i] = (1.0 - gamma) * p[i] + floor;
  return mixed;
}

/// g~_i = g / p~_i on the observed arm, zero elsewhere.
inline std::vector<double> importance_weighted_estimate(std::span<const double> mixed, std::size_t arm,
                                                        double reward) {
  std::vector<double> est(mixed.size(), 0.0);
  est.at(arm) = reward / mixed[arm];
  return est;
}

class BanditLearner {
 public:
  struct Choice {
    std::size_t arm = 0;
    SimplexPoint mixed;
  };

  BanditLearner(ActionSpace space, double gamma, double eta, RangeMode mode, std::uint64_t seed,
                double tol = kDefaultTolerance)
      : BanditLearner(space, gamma, eta, mode, default_initial(space, gamma), seed, tol) {}

  /// Starts the inner MSMW distribution at an explicit point.
  BanditLearner(ActionSpace space, double gamma, double eta, RangeMode mode, std::vector<double> initial,
                std::uint64_t seed, double tol = kDefaultTolerance)
      : space_(std::move(space)),
        gamma_(gamma),
        eta_(eta),
        mode_(mode),
        seed_(seed),
        tol_(tol),
        rng_(seed, Stream::ArmSampling),
        initial_(std::move(initial)),
        inner_(space_.size()) {
    validate();
    detail::require_same_size(initial_.size(), space_.size(), "initial distribution vs action space");
    logp_.resize(initial_.size());
    for (std::size_t i = 0; i < initial_.size(); ++i) {
      if (!(initial_[i] > 0.0)) throw InvalidArgument("initial distribution must be strictly positive");
      logp_[i] = std::log(initial_[i]);
    }
    refresh();
  }

  static BanditLearner for_epsilon(ActionSpace space, double eps, BanditTarget target, std::uint64_t seed) {
    const BanditParams params = bandit_params_for(eps, target, space);
    const RangeMode mode = target == BanditTarget::Symmetric ? RangeMode::Symmetric : RangeMode::NonNegative;
    return BanditLearner(std::move(space), params.gamma, params.eta, mode, seed);
  }

  /// p^1 = (1 - gamma) 1_{i_min} + gamma / k
  static std::vector<double> default_initial(const ActionSpace& space, double gamma) {
    std::vector<double> p(space.size(), gamma / static_cast<double>(space.size()));
    p[space.argmin_range()] += 1.0 - gamma;
    return p;
  }

  Choice choose() const {
    return {sample_index(mixed_, rng_.uniform(round_)), SimplexPoint(mixed_)};
  }

  std::size_t choose_arm() const { return sample_index(mixed_, rng_.uniform(round_)); }

  void update(std::size_t arm, double reward) {
    if (arm >= space_.size()) throw InvalidArgument("arm index " + std::to_string(arm) + " out of range");
    check_reward(arm, reward, space_.range(arm), mode_);
    const std::vector<double> est = importance_weighted_estimate(mixed_, arm, reward);
    inner_.record(probs_, est, arm, space_.ranges());
    logp_[arm] += eta_ * est[arm] / space_.range(arm);
    last_lambda_ = detail::project_log_weights_in_place(logp_, space_.ranges(), tol_).lambda;
    ++round_;
    refresh();
  }

  const ActionSpace& space() const noexcept { return space_; }
  double gamma() const noexcept { return gamma_; }
  double eta() const noexcept { return eta_; }
  RangeMode mode() const noexcept { return mode_; }
  std::size_t round() const noexcept { return round_; }
  double last_lambda() const noexcept { return last_lambda_; }
  std::span<const double> probabilities() const noexcept { return probs_; }
  std::span<const double> mixed_probabilities() const noexcept { return mixed_; }
  const std::vector<double>& initial() const noexcept { return initial_; }
  /// Ledger of the inner MSMW on estimated rewards.
  const RegretLedger& estimate_ledger() const noexcept { return inner_; }

 private:
  void validate() const {
    const double k = static_cast<double>(space_.size());
    double gamma_cap = 0.5;
    if (mode_ == RangeMode::Symmetric) gamma_cap = std::min(0.5, space_.c_min() / space_.c_max());
    if (!(gamma_ > 0.0)) throw InvalidArgument("exploration gamma must be positive");
    if (gamma_ > gamma_cap * (1.0 + 1e-12)) {
      throw InvalidArgument(mode_ == RangeMode::Symmetric ? "gamma must satisfy gamma <= min(1/2, c_min/c_max)"
                                                          : "gamma must satisfy gamma <= 1/2");
    }
    if (!(eta_ > 0.0)) throw InvalidArgument("learning rate eta must be positive");
    if (eta_ > gamma_ / k * (1.0 + 1e-12)) throw InvalidArgument("learning rate must satisfy eta <= gamma / k");
    if (!(tol_ > 0.0)) throw InvalidArgument("projection tolerance must be positive");
  }

  void refresh() {
    probs_.resize(logp_.size());
    for (std::size_t i = 0; i < logp_.size(); ++i) probs_[i] = std::exp(logp_[i]);
    mixed_ = mix_with_uniform(probs_, gamma_);
  }

  ActionSpace space_;
  double gamma_;
  double eta_;
  RangeMode mode_;
  std::uint64_t seed_;
  double tol_;
  CounterRng rng_;
  std::vector<double> initial_;
  std::vector<double> logp_;
  std::vector<double> probs_;
  std::vector<double> mixed_;
  RegretLedger inner_;
  std::size_t round_ = 0;
  double last_lambda_ = 0.0;
};

/// Calibrated best-arm check: eps G_i + C (k / eps) ln(k / eps) c_i.
inline double bandit_best_arm_bound(double eps, std::size_t k, double arm_gain, double range, double constant = 10.0) {
  const double ratio = static_cast<double>(k) / eps;
  return eps * arm_gain + constant * ratio * std::log(ratio) * range;
}

}  // namespace msmw
