#pragma once

// Pricing and auction problems reduced to multi-scale learning, and the
// offline benchmarks they are measured against.

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msmw/adversaries.hpp"
#include "msmw/bandits.hpp"
#include "msmw/core.hpp"
#include "msmw/experts.hpp"
#include "msmw/rng.hpp"

namespace msmw {

/// Called once per round with the distribution that was played, the round's
/// full reward vector and the ledger after recording the round.
using RoundObserver = std::function<void(std::size_t round, std::span<const double> played,
                                         std::span<const double> rewards, const RegretLedger&)>;

inline double price_reward(double price, double value) { return value >= price ? price : 0.0; }

// ---------------------------------------------------------------------------
// Price grid

class PriceGrid {
 public:
  /// Prices (1 + eps)^j for 0 <= j <= floor(log_{1+eps} h).
  PriceGrid(double eps, double h) : eps_(eps), h_(h) {
    validate_eps(eps);
    if (!(h >= 1.0) || !std::isfinite(h)) throw InvalidArgument("h must be finite and >= 1");
    for (std::size_t j = 0; price_at(eps, j) <= h * (1.0 + 1e-12); ++j) prices_.push_back(price_at(eps, j));
  }

  static double price_at(double eps, std::size_t j) { return std::pow(1.0 + eps, static_cast<double>(j)); }

  /// Largest j with (1 + eps)^j <= v, for v >= 1.
  static std::size_t floor_index(double eps, double v) {
    if (!(v >= 1.0)) throw InvalidArgument("value must be >= 1");
    auto j = static_cast<std::size_t>(std::max(0.0, std::floor(std::log(v) / std::log1p(eps))));
    while (price_at(eps, j + 1) <= v) ++j;
    while (j > 0 && price_at(eps, j) > v) --j;
    return j;
  }

  double eps() const noexcept { return eps_; }
  double h() const noexcept { return h_; }
  std::size_t size() const noexcept { return prices_.size(); }
  double price(std::size_t j) const { return prices_.at(j); }
  const std::vector<double>& prices() const noexcept { return prices_; }

  /// Grid index of the largest price <= v, clamped to the top of the grid.
  std::size_t index_floor(double v) const { return std::min(floor_index(eps_, v), prices_.size() - 1); }

  ActionSpace action_space() const { return ActionSpace::with_uniform_prior(prices_); }

  std::vector<double> rewards(double value) const {
    std::vector<double> g(prices_.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = price_reward(prices_[j], value);
    return g;
  }

  static void validate_eps(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("price discretization eps must lie in (0, 1]");
  }

 private:
  double eps_;
  double h_;
  std::vector<double> prices_;
};

// ---------------------------------------------------------------------------
// Single buyer, h known

struct SingleBuyerRun {
  PriceGrid grid;
  RegretLedger ledger;
};

/// Full-information MSMW over the grid with uniform prior. eta defaults to eps / 3.
inline SingleBuyerRun run_single_buyer_auction(const ValueTrace& trace, double eps, double h, std::uint64_t seed,
                                               std::optional<double> eta = std::nullopt,
                                               const RoundObserver& observer = {}) {
  if (trace.buyers() != 1) throw InvalidArgument("single-buyer auction needs a one-buyer trace");
  trace.require_at_most(h);
  PriceGrid grid(eps, h);
  MsmwLearner learner(grid.action_space(), eta.value_or(eps / 3.0), RangeMode::NonNegative, seed);
  for (std::size_t t = 0; t < trace.rounds(); ++t) {
    const std::vector<double> played(learner.probabilities().begin(), learner.probabilities().end());
    const std::vector<double> g = grid.rewards(trace.value(t));
    learner.step(g);
    if (observer) observer(t, played, g, learner.ledger());
  }
  return {std::move(grid), learner.ledger()};
}

// ---------------------------------------------------------------------------
// Single buyer, h unknown

/// Prior over the countable grid: pi_j = eps (eps + 2) (1 + eps)^(-2 (j + 1)).
inline double countable_prior(double eps, std::size_t j) {
  return eps * (eps + 2.0) * std::pow(1.0 + eps, -2.0 * static_cast<double>(j + 1));
}

/// sum_{j >= first} pi_j = (1 + eps)^(-2 first).
inline double countable_prior_tail(double eps, std::size_t first) {
  return std::pow(1.0 + eps, -2.0 * static_cast<double>(first));
}

/// MSMW over the countable grid (1 + eps)^j, j >= 0, with initial distribution
/// (1 - eta) 1_{price 1} + eta pi, simulated lazily. A price that has never
/// sold carries weight eta pi_j exp(offset - Lambda / p_j), where Lambda is the
/// sum of past projection shifts and offset the sum of renormalizations, so
/// only a finite band is stored; the rest is one analytic tail term. Prices
/// are played from the relevant set (prices at most the highest value seen
/// before the round) with the band's weights renormalized.
class UnknownHLearner {
 public:
  UnknownHLearner(double eps, double eta, std::uint64_t seed, double tail_tol = 1e-10,
                  double tol = kDefaultTolerance)
      : eps_(eps), eta_(eta), tail_tol_(tail_tol), tol_(tol), rng_(seed, Stream::ArmSampling) {
    PriceGrid::validate_eps(eps);
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("learning rate must lie in (0, 1]");
    if (!(tail_tol > 0.0)) throw InvalidArgument("tail tolerance must be positive");
    std::size_t band = 1;
    while (eta_ * countable_prior_tail(eps_, band) > tail_tol_) ++band;
    extend_band(band);
  }

  double eps() const noexcept { return eps_; }
  double eta() const noexcept { return eta_; }
  std::size_t round() const noexcept { return round_; }
  double highest_seen() const noexcept { return highest_; }
  double cumulative_lambda() const noexcept { return cum_lambda_; }
  double price(std::size_t j) const { return PriceGrid::price_at(eps_, j); }

  /// Size of the relevant set: prices <= the highest value seen so far.
  std::size_t relevant_count() const { return PriceGrid::floor_index(eps_, highest_) + 1; }
  std::size_t band_size() const noexcept { return logp_.size(); }

  /// Countable-algorithm probabilities of the stored band.
  std::vector<double> band_probabilities() const {
    std::vector<double> p(logp_.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::exp(logp_[j]);
    return p;
  }

  /// Analytic tail term standing in for every price beyond the band.
  double tail_weight() const { return std::exp(log_tail_weight()); }

  /// Band probabilities plus tail term; equals 1 to the projection tolerance.
  double total_mass() const {
    double s = tail_weight();
    for (double lp : logp_) s += std::exp(lp);
    return s;
  }

  /// Prior mass of the band plus the analytic prior tail.
  double prior_mass_accounted() const {
    double s = countable_prior_tail(eps_, logp_.size());
    for (std::size_t j = 0; j < logp_.size(); ++j) s += countable_prior(eps_, j);
    return s;
  }

  /// Play distribution over the relevant prices.
  std::vector<double> play_distribution() const {
    const std::size_t m = relevant_count();
    std::vector<double> q(logp_.begin(), logp_.begin() + static_cast<std::ptrdiff_t>(m));
    const double z = log_sum_exp(q);
    for (auto& v : q) v = std::exp(v - z);
    return q;
  }

  std::size_t choose() const { return sample_index(play_distribution(), rng_.uniform(round_)); }

  /// Full-information update with the round's value.
  void observe(double value) {
    if (!(value >= 1.0) || !std::isfinite(value)) throw InvalidArgument("values must be finite and >= 1");
    const std::size_t top = PriceGrid::floor_index(eps_, value);
    if (top + 1 > logp_.size()) {
      std::size_t band = top + 1;
      while (eta_ * countable_prior_tail(eps_, band) > tail_tol_) ++band;
      extend_band(band);
    }
    // Prices at or below the value sell: eta * g_p / p = eta.
    for (std::size_t j = 0; j <= top; ++j) logp_[j] += eta_;

    scratch_logw_.assign(logp_.begin(), logp_.end());
    scratch_logw_.push_back(log_tail_weight());
    scratch_ranges_.resize(scratch_logw_.size());
    for (std::size_t j = 0; j < logp_.size(); ++j) scratch_ranges_[j] = price(j);
    scratch_ranges_.back() = price(logp_.size());
    const double tail_before = scratch_logw_.back();
    const RootSolve root = detail::project_log_weights_in_place(scratch_logw_, scratch_ranges_, tol_);
    std::copy(scratch_logw_.begin(), scratch_logw_.end() - 1, logp_.begin());
    cum_lambda_ += root.lambda;
    offset_ += scratch_logw_.back() - (tail_before - root.lambda / scratch_ranges_.back());
    last_lambda_ = root.lambda;
    highest_ = std::max(highest_, value);
    ++round_;
  }

 private:
  double log_tail_weight() const {
    const std::size_t first = logp_.size();
    return std::log(eta_ * countable_prior_tail(eps_, first)) + offset_ - cum_lambda_ / price(first);
  }

  void extend_band(std::size_t band) {
    for (std::size_t j = logp_.size(); j < band; ++j) {
      double mu = eta_ * countable_prior(eps_, j);
      if (j == 0) mu += 1.0 - eta_;
      logp_.push_back(std::log(mu) + offset_ - cum_lambda_ / price(j));
    }
  }

  double eps_;
  double eta_;
  double tail_tol_;
  double tol_;
  CounterRng rng_;
  std::vector<double> logp_;
  double cum_lambda_ = 0.0;
  double offset_ = 0.0;
  double last_lambda_ = 0.0;
  double highest_ = 1.0;
  std::size_t round_ = 0;
  std::vector<double> scratch_logw_;
  std::vector<double> scratch_ranges_;
};

struct UnknownHRun {
  /// Grid up to the trace maximum, used only for accounting.
  PriceGrid grid;
  RegretLedger ledger;
  double max_tail_weight = 0.0;
  double max_mass_error = 0.0;
};

inline UnknownHRun run_single_buyer_unknown_h(const ValueTrace& trace, double eps, std::uint64_t seed,
                                              std::optional<double> eta = std::nullopt,
                                              const RoundObserver& observer = {}) {
  if (trace.buyers() != 1) throw InvalidArgument("single-buyer auction needs a one-buyer trace");
  UnknownHLearner learner(eps, eta.value_or(eps / 3.0), seed);
  UnknownHRun run{PriceGrid(eps, trace.max_value()), RegretLedger(0)};
  run.ledger = RegretLedger(run.grid.size());
  std::vector<double> played(run.grid.size());
  for (std::size_t t = 0; t < trace.rounds(); ++t) {
    const std::vector<double> q = learner.play_distribution();
    std::fill(played.begin(), played.end(), 0.0);
    std::copy(q.begin(), q.end(), played.begin());
    const std::size_t arm = learner.choose();
    const double v = trace.value(t);
    const std::vector<double> g = run.grid.rewards(v);
    run.ledger.record(played, g, arm, run.grid.prices());
    learner.observe(v);
    run.max_tail_weight = std::max(run.max_tail_weight, learner.tail_weight());
    run.max_mass_error = std::max(run.max_mass_error, std::abs(learner.prior_mass_accounted() - 1.0));
    if (observer) observer(t, played, g, run.ledger);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Posted pricing (bandit feedback)

class RepeatedQuery : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Reveals only whether the current buyer accepts one posted price per round.
class SaleOracle {
 public:
  explicit SaleOracle(const ValueTrace& trace) : trace_(&trace) {}

  bool query(double price) {
    if (asked_) throw RepeatedQuery("sale oracle queried twice in round " + std::to_string(round_));
    asked_ = true;
    ++queries_;
    return trace_->value(round_) >= price;
  }

  void next_round() {
    ++round_;
    asked_ = false;
  }

  std::size_t round() const noexcept { return round_; }
  std::size_t queries() const noexcept { return queries_; }

 private:
  const ValueTrace* trace_;
  std::size_t round_ = 0;
  std::size_t queries_ = 0;
  bool asked_ = false;
};

struct PostedPricingRun {
  PriceGrid grid;
  RegretLedger ledger;
  std::size_t queries = 0;
  /// min over rounds and prices of p~_j * k / gamma; at least 1 by construction.
  double min_floor_ratio = INFINITY;
};

inline PostedPricingRun run_posted_pricing(const ValueTrace& trace, double eps, double h, BanditTarget target,
                                           std::uint64_t seed, const RoundObserver& observer = {}) {
  if (trace.buyers() != 1) throw InvalidArgument("posted pricing needs a one-buyer trace");
  if (target == BanditTarget::Symmetric) throw InvalidArgument("posted pricing uses the best-arm or all-arms target");
  trace.require_at_most(h);
  PostedPricingRun run{PriceGrid(eps, h), RegretLedger(0)};
  run.ledger = RegretLedger(run.grid.size());
  BanditLearner learner = BanditLearner::for_epsilon(run.grid.action_space(), eps, target, seed);
  const double floor = learner.gamma() / static_cast<double>(run.grid.size());
  SaleOracle oracle(trace);
  for (std::size_t t = 0; t < trace.rounds(); ++t) {
    const auto mixed = learner.mixed_probabilities();
    const std::vector<double> played(mixed.begin(), mixed.end());
    for (double p : played) run.min_floor_ratio = std::min(run.min_floor_ratio, p / floor);
    const std::size_t arm = learner.choose_arm();
    const double price = run.grid.price(arm);
    const double reward = oracle.query(price) ? price : 0.0;
    learner.update(arm, reward);
    oracle.next_round();
    const std::vector<double> g = run.grid.rewards(trace.value(t));
    run.ledger.record(played, g, arm, run.grid.prices());
    if (observer) observer(t, played, g, run.ledger);
  }
  run.queries = oracle.queries();
  return run;
}

// ---------------------------------------------------------------------------
// Myerson-type mechanisms on discretized values

struct AuctionOutcome {
  std::optional<std::size_t> winner;
  double payment = 0.0;
};

/// Each (bidder, level) slot has an integer virtual rank, or kReject for a
/// negative virtual value. Ranks are non-decreasing along each bidder's
/// levels. The highest non-rejected rank wins, ties going to the lowest
/// bidder index; the winner pays the smallest level at which they would
/// still win.
class MyersonMechanism {
 public:
  static constexpr int kReject = INT_MIN;

  MyersonMechanism(std::vector<double> levels, std::size_t bidders, std::vector<int> ranks)
      : levels_(std::move(levels)), bidders_(bidders), ranks_(std::move(ranks)) {
    if (bidders_ == 0) throw InvalidArgument("mechanism needs at least one bidder");
    if (levels_.empty()) throw InvalidArgument("mechanism needs at least one value level");
    for (std::size_t j = 1; j < levels_.size(); ++j)
      if (!(levels_[j] > levels_[j - 1])) throw InvalidArgument("value levels must be strictly increasing");
    if (ranks_.size() != bidders_ * levels_.size()) throw InvalidArgument("rank table has the wrong size");
    for (std::size_t b = 0; b < bidders_; ++b)
      for (std::size_t j = 1; j < levels_.size(); ++j)
        if (rank(b, j) < rank(b, j - 1))
          throw InvalidArgument("virtual ranks of bidder " + std::to_string(b) + " decrease at level " +
                                std::to_string(j));
  }

  /// Second price with an anonymous reserve at level index `reserve`.
  static MyersonMechanism anonymous_reserve(std::vector<double> levels, std::size_t bidders, std::size_t reserve) {
    std::vector<int> ranks(bidders * levels.size());
    for (std::size_t b = 0; b < bidders; ++b)
      for (std::size_t j = 0; j < levels.size(); ++j)
        ranks[b * levels.size() + j] = j >= reserve ? static_cast<int>(j) : kReject;
    return MyersonMechanism(std::move(levels), bidders, std::move(ranks));
  }

  std::size_t bidders() const noexcept { return bidders_; }
  const std::vector<double>& levels() const noexcept { return levels_; }
  int rank(std::size_t bidder, std::size_t level) const { return ranks_[bidder * levels_.size() + level]; }
  const std::vector<int>& ranks() const noexcept { return ranks_; }

  /// Largest level <= v; values above the top level map to the top.
  std::size_t level_index(double v) const {
    if (!(v >= levels_.front())) throw InvalidArgument("value below the lowest level");
    const auto it = std::upper_bound(levels_.begin(), levels_.end(), v);
    return static_cast<std::size_t>(it - levels_.begin()) - 1;
  }

  struct LevelOutcome {
    std::optional<std::size_t> winner;
    std::size_t payment_level = 0;
  };

  LevelOutcome execute_levels(std::span<const std::size_t> lv) const {
    std::optional<std::size_t> best;
    int best_rank = kReject;
    for (std::size_t b = 0; b < bidders_; ++b) {
      const int r = rank(b, lv[b]);
      if (r == kReject) continue;
      if (!best || r > best_rank) best = b, best_rank = r;
    }
    if (!best) return {};
    const std::size_t w = *best;
    for (std::size_t j = 0; j <= lv[w]; ++j) {
      const int r = rank(w, j);
      if (r == kReject) continue;
      bool wins = true;
      for (std::size_t b = 0; b < bidders_ && wins; ++b) {
        if (b == w) continue;
        const int other = rank(b, lv[b]);
        if (other == kReject) continue;
        wins = b < w ? r > other : r >= other;
      }
      if (wins) return {w, j};
    }
    return {w, lv[w]};
  }

  AuctionOutcome execute(std::span<const double> values) const {
    detail::require_same_size(values.size(), bidders_, "values vs bidders");
    std::vector<std::size_t> lv(bidders_);
    for (std::size_t b = 0; b < bidders_; ++b) lv[b] = level_index(values[b]);
    const LevelOutcome o = execute_levels(lv);
    if (!o.winner) return {};
    return {o.winner, levels_[o.payment_level]};
  }

  /// Number of level profiles, levels^bidders.
  std::size_t profile_count() const {
    std::size_t n = 1;
    for (std::size_t b = 0; b < bidders_; ++b) n *= levels_.size();
    return n;
  }

  /// Level profile number `index`, bidder 0 varying fastest.
  std::vector<std::size_t> profile(std::size_t index) const {
    std::vector<std::size_t> lv(bidders_);
    for (std::size_t b = 0; b < bidders_; ++b) {
      lv[b] = index % levels_.size();
      index /= levels_.size();
    }
    return lv;
  }

  std::size_t profile_index(std::span<const std::size_t> lv) const {
    std::size_t index = 0;
    for (std::size_t b = bidders_; b-- > 0;) index = index * levels_.size() + lv[b];
    return index;
  }

  /// Payment on every level profile (0 when unsold).
  std::vector<double> payment_table() const {
    std::vector<double> table(profile_count());
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto o = execute_levels(profile(i));
      table[i] = o.winner ? levels_[o.payment_level] : 0.0;
    }
    return table;
  }

  /// Winner and payment level on every profile; equal keys mean equal behavior.
  std::vector<int> behavior_key() const {
    std::vector<int> key;
    key.reserve(2 * profile_count());
    for (std::size_t i = 0; i < profile_count(); ++i) {
      const auto o = execute_levels(profile(i));
      key.push_back(o.winner ? static_cast<int>(*o.winner) : -1);
      key.push_back(o.winner ? static_cast<int>(o.payment_level) : -1);
    }
    return key;
  }

  /// Largest payment over the profile grid.
  double max_payment() const {
    const auto table = payment_table();
    return *std::max_element(table.begin(), table.end());
  }

 private:
  std::vector<double> levels_;
  std::size_t bidders_;
  std::vector<int> ranks_;
};

inline constexpr std::size_t kMyersonSlotCap = 8;

/// Every behaviorally distinct mechanism over `levels` for n bidders: all
/// interleavings of the bidders' monotone level chains, each with every cut
/// below which slots are rejected, deduplicated by behavior on the profile
/// grid. Order is deterministic (first occurrence).
inline std::vector<MyersonMechanism> enumerate_myerson(std::size_t n, const std::vector<double>& levels) {
  if (n == 0 || levels.empty()) throw InvalidArgument("enumeration needs bidders and levels");
  const std::size_t slots = n * levels.size();
  if (slots > kMyersonSlotCap)
    throw InvalidArgument("n * levels = " + std::to_string(slots) + " exceeds the enumeration cap of " +
                          std::to_string(kMyersonSlotCap));
  std::vector<std::size_t> owner(slots);
  for (std::size_t s = 0; s < slots; ++s) owner[s] = s / levels.size();
  std::map<std::vector<int>, std::size_t> seen;
  std::vector<MyersonMechanism> out;
  do {
    std::vector<int> base(slots);
    std::vector<std::size_t> next_level(n, 0);
    for (std::size_t pos = 0; pos < slots; ++pos) {
      const std::size_t b = owner[pos];
      base[b * levels.size() + next_level[b]++] = static_cast<int>(pos);
    }
    for (std::size_t cut = 0; cut <= slots; ++cut) {
      std::vector<int> ranks = base;
      for (auto& r : ranks)
        if (r < static_cast<int>(cut)) r = MyersonMechanism::kReject;
      MyersonMechanism m(levels, n, std::move(ranks));
      auto key = m.behavior_key();
      if (seen.emplace(std::move(key), out.size()).second) out.push_back(std::move(m));
    }
  } while (std::next_permutation(owner.begin(), owner.end()));
  return out;
}

inline std::vector<MyersonMechanism> enumerate_myerson(std::size_t n, std::size_t levels_count) {
  std::vector<double> levels(levels_count);
  for (std::size_t j = 0; j < levels_count; ++j) levels[j] = std::ldexp(1.0, static_cast<int>(j));
  return enumerate_myerson(n, levels);
}

struct MultiBuyerRun {
  /// The learner's arms, ordered by (range, behavior); never-selling mechanisms are excluded.
  std::vector<MyersonMechanism> mechanisms;
  std::vector<double> ranges;
  RegretLedger ledger;
};

/// Mechanisms with positive range sorted by (max payment, behavior key).
inline std::vector<MyersonMechanism> learnable_mechanisms(std::size_t n, const std::vector<double>& levels) {
  std::vector<MyersonMechanism> all = enumerate_myerson(n, levels);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double c = all[i].max_payment();
    if (c > 0.0) order.emplace_back(c, i);
  }
  std::vector<std::vector<int>> keys(all.size());
  for (auto& [c, i] : order) keys[i] = all[i].behavior_key();
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return keys[a.second] < keys[b.second];
  });
  std::vector<MyersonMechanism> out;
  out.reserve(order.size());
  for (auto& [c, i] : order) out.push_back(all[i]);
  return out;
}

inline MultiBuyerRun run_multi_buyer_auction(const ValueTrace& trace, double eps, double h, std::uint64_t seed,
                                             std::optional<double> eta = std::nullopt,
                                             const RoundObserver& observer = {}) {
  trace.require_at_most(h);
  const PriceGrid grid(eps, h);
  MultiBuyerRun run;
  run.mechanisms = learnable_mechanisms(trace.buyers(), grid.prices());
  if (run.mechanisms.empty()) throw InvalidArgument("no mechanism ever sells");
  std::vector<std::vector<double>> tables;
  for (const auto& m : run.mechanisms) {
    tables.push_back(m.payment_table());
    run.ranges.push_back(*std::max_element(tables.back().begin(), tables.back().end()));
  }
  MsmwLearner learner(ActionSpace::with_uniform_prior(run.ranges), eta.value_or(eps / 3.0), RangeMode::NonNegative,
                      seed);
  const MyersonMechanism& shape = run.mechanisms.front();
  std::vector<std::size_t> lv(trace.buyers());
  std::vector<double> g(run.mechanisms.size());
  for (std::size_t t = 0; t < trace.rounds(); ++t) {
    for (std::size_t b = 0; b < lv.size(); ++b) lv[b] = shape.level_index(trace.value(t, b));
    const std::size_t pi = shape.profile_index(lv);
    for (std::size_t m = 0; m < g.size(); ++m) g[m] = tables[m][pi];
    const std::vector<double> played(learner.probabilities().begin(), learner.probabilities().end());
    learner.step(g);
    if (observer) observer(t, played, g, learner.ledger());
  }
  run.ledger = learner.ledger();
  return run;
}

// ---------------------------------------------------------------------------
// Offline benchmarks

/// Sales needed to qualify under market share delta: ceil(delta T).
inline std::size_t required_sales(double delta, std::size_t rounds) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in [0, 1]");
  return static_cast<std::size_t>(std::ceil(delta * static_cast<double>(rounds) - 1e-9));
}

struct GmaxResult {
  double value = 0.0;
  double price = 1.0;
};

/// Best fixed grid price in hindsight; ties go to the lower price.
inline GmaxResult benchmark_gmax(const ValueTrace& trace, const PriceGrid& grid) {
  GmaxResult best;
  if (trace.empty()) return best;
  for (double p : grid.prices()) {
    double total = 0.0;
    for (std::size_t t = 0; t < trace.rounds(); ++t) total += price_reward(p, trace.value(t));
    if (total > best.value) best = {total, p};
  }
  if (best.value == 0.0) best.price = grid.price(0);
  return best;
}

struct GmaxDeltaResult {
  double value = 0.0;
  double price = 1.0;
  bool qualified = false;
};

/// Best grid price among those selling in at least ceil(delta T) rounds;
/// `qualified` is false (value 0) when none does.
inline GmaxDeltaResult benchmark_gmax_delta(const ValueTrace& trace, const PriceGrid& grid, double delta) {
  const std::size_t need = required_sales(delta, trace.rounds());
  GmaxDeltaResult best;
  for (double p : grid.prices()) {
    double total = 0.0;
    std::size_t sales = 0;
    for (std::size_t t = 0; t < trace.rounds(); ++t) {
      if (trace.value(t) >= p) {
        total += p;
        ++sales;
      }
    }
    if (sales < need) continue;
    if (!best.qualified || total > best.value) best = {total, p, true};
  }
  return best;
}

/// Largest V such that at least max(1, ceil(delta T)) rounds have maximum value >= V.
inline double v_bar(const ValueTrace& trace, double delta) {
  if (trace.empty()) return 1.0;
  std::vector<double> maxima(trace.rounds());
  for (std::size_t t = 0; t < maxima.size(); ++t) maxima[t] = trace.round_max(t);
  const std::size_t need = std::max<std::size_t>(1, required_sales(delta, trace.rounds()));
  std::nth_element(maxima.begin(), maxima.begin() + static_cast<std::ptrdiff_t>(need - 1), maxima.end(),
                   std::greater<>());
  return maxima[need - 1];
}

struct OptDeltaResult {
  double value = 0.0;
  double v_bar = 1.0;
  std::size_t best_mechanism = 0;
};

/// max over mechanisms of total revenue on values capped at V-bar.
inline OptDeltaResult benchmark_opt_delta_multibuyer(const ValueTrace& trace, double delta,
                                                     const std::vector<MyersonMechanism>& mechanisms) {
  OptDeltaResult out;
  out.v_bar = v_bar(trace, delta);
  std::vector<double> capped(trace.buyers());
  for (std::size_t m = 0; m < mechanisms.size(); ++m) {
    detail::require_same_size(mechanisms[m].bidders(), trace.buyers(), "mechanism bidders vs trace buyers");
    double total = 0.0;
    for (std::size_t t = 0; t < trace.rounds(); ++t) {
      for (std::size_t b = 0; b < capped.size(); ++b) capped[b] = std::min(out.v_bar, trace.value(t, b));
      total += mechanisms[m].execute(capped).payment;
    }
    if (total > out.value) out.value = total, out.best_mechanism = m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence rates

enum class ConvergenceKind { SingleBuyer, SingleBuyerUnknownH, PostedPricing, MultiBuyer };

struct ConvergenceParams {
  ConvergenceKind kind = ConvergenceKind::SingleBuyer;
  double eps = 0.1;
  double delta = 0.1;
  double h = 2.0;
  std::size_t buyers = 1;
  double p_star = 1.0;
  /// Calibrated constant in front of the rate.
  double constant = 20.0;
};

/// Horizon after which G_alg >= (1 - eps) times the delta-guarded benchmark is expected:
///   single buyer     C ln(ln h / eps) / (eps^2 delta)
///   unknown h        C ln(p* / eps) / (eps^2 delta)
///   posted pricing   C ln h / (eps^4 delta)
///   multi buyer      C (n L ln(n L / eps) / (eps^3 delta) + ln(ln h / eps) / (eps^2 delta)),  L = ln(1 / (eps delta))
inline double convergence_threshold(const ConvergenceParams& p) {
  if (!(p.eps > 0.0 && p.eps < 1.0)) throw InvalidArgument("eps must lie in (0, 1)");
  if (!(p.delta > 0.0 && p.delta <= 1.0)) throw InvalidArgument("delta must lie in (0, 1]");
  const double e2d = p.eps * p.eps * p.delta;
  const double loglog = std::log(std::max(std::log(p.h) / p.eps, std::exp(1.0)));
  switch (p.kind) {
    case ConvergenceKind::SingleBuyer:
      return p.constant * loglog / e2d;
    case ConvergenceKind::SingleBuyerUnknownH:
      return p.constant * std::log(std::max(p.p_star / p.eps, std::exp(1.0))) / e2d;
    case ConvergenceKind::PostedPricing:
      return p.constant * std::max(std::log(p.h), 1.0) / (e2d * p.eps * p.eps);
    case ConvergenceKind::MultiBuyer: {
      const double n = static_cast<double>(p.buyers);
      const double l = std::log(1.0 / (p.eps * p.delta));
      return p.constant * (n * l * std::log(std::max(n * l / p.eps, std::exp(1.0))) / (e2d * p.eps) + loglog / e2d);
    }
  }
  return 0.0;
}

struct ConvergenceReport {
  double threshold = 0.0;
  std::size_t threshold_round = 0;
  /// Whether the trace is long enough to evaluate at the threshold.
  bool evaluated = false;
  bool passes = false;
  double alg_gain = 0.0;
  double benchmark = 0.0;
  /// Smallest T' such that the approximation holds for every prefix length >= T'.
  std::optional<std::size_t> empirical_crossing;
};

/// alg_cumulative[t] is the algorithm's revenue over rounds 0..t. The
/// benchmark is G_max(delta) on each prefix.
inline ConvergenceReport convergence_check(std::span<const double> alg_cumulative, const ValueTrace& trace,
                                           const PriceGrid& grid, const ConvergenceParams& params) {
  detail::require_same_size(alg_cumulative.size(), trace.rounds(), "revenue series vs trace");
  ConvergenceReport rep;
  rep.threshold = convergence_threshold(params);
  rep.threshold_round = static_cast<std::size_t>(std::ceil(rep.threshold));
  const std::size_t k = grid.size();
  std::vector<double> revenue(k, 0.0);
  std::vector<std::size_t> sales(k, 0);
  std::optional<std::size_t> last_fail;
  for (std::size_t t = 0; t < trace.rounds(); ++t) {
    const double v = trace.value(t);
    for (std::size_t j = 0; j < k; ++j) {
      if (v >= grid.price(j)) {
        revenue[j] += grid.price(j);
        ++sales[j];
      }
    }
    const std::size_t need = required_sales(params.delta, t + 1);
    double bench = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (sales[j] >= need) bench = std::max(bench, revenue[j]);
    const bool ok = alg_cumulative[t] >= (1.0 - params.eps) * bench;
    if (!ok) last_fail = t + 1;
    if (t + 1 == rep.threshold_round || (t + 1 == trace.rounds() && !rep.evaluated)) {
      rep.alg_gain = alg_cumulative[t];
      rep.benchmark = bench;
      if (t + 1 == rep.threshold_round) {
        rep.evaluated = true;
        rep.passes = ok;
      }
    }
  }
  if (!last_fail) rep.empirical_crossing = 1;
  else if (*last_fail < trace.rounds()) rep.empirical_crossing = *last_fail + 1;
  return rep;
}

}  // namespace msmw
