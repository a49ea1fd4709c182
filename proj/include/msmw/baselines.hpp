#pragma once

// Single-scale reference learners. Rewards are divided by c_max so both run
// as the textbook [0, 1] (or [-1, 1]) algorithms.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msmw/bandits.hpp"
#include "msmw/core.hpp"
#include "msmw/experts.hpp"
#include "msmw/rng.hpp"

namespace msmw {

/// eta = sqrt(ln k / T), the usual tuned rate for rewards in [0, 1].
inline double hedge_textbook_eta(std::size_t k, std::size_t horizon) {
  if (k < 2 || horizon == 0) return 1.0;
  return std::min(1.0, std::sqrt(std::log(static_cast<double>(k)) / static_cast<double>(horizon)));
}

namespace detail {

inline void normalize_logs(std::vector<double>& logp, std::vector<double>& probs) {
  const double z = log_sum_exp(logp);
  probs.resize(logp.size());
  for (std::size_t i = 0; i < logp.size(); ++i) {
    logp[i] -= z;
    probs[i] = std::exp(logp[i]);
  }
}

}  // namespace detail

class Hedge {
 public:
  Hedge(ActionSpace space, double eta, std::uint64_t seed, RangeMode mode = RangeMode::NonNegative)
      : space_(std::move(space)), eta_(eta), mode_(mode), seed_(seed), rng_(seed, Stream::ArmSampling) {
    if (!(eta_ > 0.0)) throw InvalidArgument("learning rate must be positive");
    logp_.assign(space_.size(), -std::log(static_cast<double>(space_.size())));
    detail::normalize_logs(logp_, probs_);
    ledger_ = RegretLedger(space_.size());
  }

  std::size_t choose() const { return sample_index(probs_, rng_.uniform(ledger_.rounds)); }

  void observe(std::span<const double> rewards, std::size_t chosen) {
    detail::require_same_size(rewards.size(), space_.size(), "rewards vs action space");
    const double cmax = space_.c_max();
    for (std::size_t i = 0; i < rewards.size(); ++i) check_reward(i, rewards[i], cmax, mode_);
    ledger_.record(probs_, rewards, chosen, space_.ranges());
    for (std::size_t i = 0; i < logp_.size(); ++i) logp_[i] += eta_ * rewards[i] / cmax;
    detail::normalize_logs(logp_, probs_);
  }

  std::size_t step(std::span<const double> rewards) {
    const std::size_t arm = choose();
    observe(rewards, arm);
    return arm;
  }

  const ActionSpace& space() const noexcept { return space_; }
  double eta() const noexcept { return eta_; }
  RangeMode mode() const noexcept { return mode_; }
  std::size_t round() const noexcept { return ledger_.rounds; }
  std::span<const double> probabilities() const noexcept { return probs_; }
  const RegretLedger& ledger() const noexcept { return ledger_; }

 private:
  ActionSpace space_;
  double eta_;
  RangeMode mode_;
  std::uint64_t seed_;
  CounterRng rng_;
  std::vector<double> logp_;
  std::vector<double> probs_;
  RegretLedger ledger_;
};

class Exp3 {
 public:
  Exp3(ActionSpace space, double gamma, double eta, std::uint64_t seed, RangeMode mode = RangeMode::NonNegative)
      : space_(std::move(space)), gamma_(gamma), eta_(eta), mode_(mode), seed_(seed),
        rng_(seed, Stream::ArmSampling) {
    if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw InvalidArgument("exploration gamma must lie in (0, 1]");
    if (!(eta_ > 0.0)) throw InvalidArgument("learning rate must be positive");
    logp_.assign(space_.size(), -std::log(static_cast<double>(space_.size())));
    refresh();
  }

  /// gamma = min(1, sqrt(k ln k / ((e - 1) T))), eta = gamma / k.
  static Exp3 tuned(ActionSpace space, std::size_t horizon, std::uint64_t seed,
                    RangeMode mode = RangeMode::NonNegative) {
    const double k = static_cast<double>(space.size());
    const double gamma =
        std::min(1.0, std::sqrt(k * std::log(std::max(k, 2.0)) / ((std::exp(1.0) - 1.0) * static_cast<double>(horizon))));
    return Exp3(std::move(space), gamma, gamma / k, seed, mode);
  }

  std::size_t choose_arm() const { return sample_index(mixed_, rng_.uniform(round_)); }

  void update(std::size_t arm, double reward) {
    if (arm >= space_.size()) throw InvalidArgument("arm index " + std::to_string(arm) + " out of range");
    check_reward(arm, reward, space_.c_max(), mode_);
    logp_[arm] += eta_ * (reward / space_.c_max()) / mixed_[arm];
    ++round_;
    refresh();
  }

  const ActionSpace& space() const noexcept { return space_; }
  double gamma() const noexcept { return gamma_; }
  double eta() const noexcept { return eta_; }
  RangeMode mode() const noexcept { return mode_; }
  std::size_t round() const noexcept { return round_; }
  std::span<const double> probabilities() const noexcept { return probs_; }
  std::span<const double> mixed_probabilities() const noexcept { return mixed_; }

 private:
  void refresh() {
    detail::normalize_logs(logp_, probs_);
    mixed_ = mix_with_uniform(probs_, gamma_);
  }

  ActionSpace space_;
  double gamma_;
  double eta_;
  RangeMode mode_;
  std::uint64_t seed_;
  CounterRng rng_;
  std::vector<double> logp_;
  std::vector<double> probs_;
  std::vector<double> mixed_;
  std::size_t round_ = 0;
};

}  // namespace msmw
