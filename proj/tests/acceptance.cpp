// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// --quick shrinks seed counts and horizons for a smoke run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "msmw/harness.hpp"
#include "msmw/projection_oracle.hpp"
#include "oracles.hpp"

using namespace msmw;

namespace {

bool g_quick = false;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Runs fn(i) for i in [0, n) on all cores; fn must only write slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::pair<double, double> mean_se(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  const double sd = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
  return {m, sd / std::sqrt(static_cast<double>(v.size()))};
}

std::vector<double> random_ranges(std::mt19937_64& gen, std::size_t k) {
  std::uniform_real_distribution<double> e(0.0, 10.0);
  std::vector<double> c(k);
  for (auto& x : c) x = std::exp2(e(gen));
  return c;
}

std::vector<double> random_prior(std::mt19937_64& gen, std::size_t k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& x : p) s += (x = u(gen));
  for (auto& x : p) x /= s;
  return p;
}

// ---------------------------------------------------------------------------

Outcome projection_correctness() {
  std::mt19937_64 gen(1);
  const int n = g_quick ? 200 : 1000;
  double worst_gap = 0.0, worst_residual = 0.0;
  for (int trial = 0; trial < n; ++trial) {
    const std::size_t k = 1 + gen() % 6;
    const ActionSpace space(random_ranges(gen, k));
    std::normal_distribution<double> z(0.0, 3.0);
    std::vector<double> logw(k);
    for (auto& v : logw) v = z(gen);
    const WeightVector w(logw);
    const ProjectionResult fast = multiscale_project(w, space);
    const SimplexPoint slow = bregman_project_oracle(w, space);
    for (std::size_t i = 0; i < k; ++i) worst_gap = std::max(worst_gap, std::abs(fast.point[i] - slow[i]));
    worst_residual = std::max(worst_residual, std::abs(fast.residual));
  }
  return {worst_gap <= 1e-8 && worst_residual <= 1e-12,
          "max |fast - oracle| = " + num(worst_gap) + ", max residual = " + num(worst_residual)};
}

Outcome omd_equivalence() {
  std::mt19937_64 gen(2);
  double worst = 0.0;
  for (int run = 0; run < 100; ++run) {
    const std::size_t k = 2 + gen() % 4;
    const std::size_t horizon = 1 + gen() % 20;
    const RangeMode mode = run % 2 ? RangeMode::Symmetric : RangeMode::NonNegative;
    const ActionSpace space(random_ranges(gen, k), random_prior(gen, k));
    const double eta = std::uniform_real_distribution<double>(0.01, mode == RangeMode::Symmetric ? 1.0 : 0.9)(gen);
    MsmwLearner learner(space, eta, mode, run);
    std::vector<double> x = learner.initial();
    for (std::size_t t = 0; t < horizon; ++t) {
      std::vector<double> g(k);
      for (std::size_t i = 0; i < k; ++i) {
        const double c = space.range(i);
        g[i] = mode == RangeMode::Symmetric ? std::uniform_real_distribution<double>(-c, c)(gen)
                                            : std::uniform_real_distribution<double>(0.0, c)(gen);
      }
      learner.observe(g, 0);
      std::vector<double> logw(k);
      for (std::size_t i = 0; i < k; ++i) logw[i] = std::log(x[i]) + eta * g[i] / space.range(i);
      x = bregman_project_oracle(WeightVector(logw), space).vector();
      for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(x[i] - learner.probabilities()[i]));
    }
  }
  return {worst <= 1e-8, "max coordinate gap = " + num(worst)};
}

/// Non-negative adversaries for the k = 16 bound sweep, indexed by kind.
std::vector<double> nonneg_rewards(int kind, std::size_t t, std::size_t horizon, const std::vector<double>& c,
                                   std::mt19937_64& gen) {
  const std::size_t k = c.size();
  std::vector<double> g(k, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (kind % 5) {
    case 0:
      for (std::size_t i = 0; i < k; ++i) g[i] = c[i] * u(gen);
      break;
    case 1:
      for (std::size_t i = 0; i < k; ++i) g[i] = u(gen) < 1.0 / (1.0 + static_cast<double>(i)) ? c[i] : 0.0;
      break;
    case 2: {
      const std::size_t star = (t * 4 / horizon) * 5 % k;
      for (std::size_t i = 0; i < k; ++i) g[i] = i == star ? c[i] : 0.25 * c[i] * u(gen) * (i < star);
      break;
    }
    case 3:
      g[0] = c[0];
      if (u(gen) < 0.5 / c[k - 1] * 8.0) g[k - 1] = c[k - 1];
      break;
    default:
      for (std::size_t i = 0; i < k; ++i) g[i] = (t + i) % 7 == 0 ? c[i] : c[0] * u(gen);
      break;
  }
  return g;
}

struct BoundSweep {
  std::size_t bound_violations = 0;
  std::size_t ledger_violations = 0;
  double worst_bound_slack = INFINITY;
  double worst_ledger_slack = INFINITY;
};

BoundSweep deterministic_bound_sweep() {
  const std::size_t k = 16;
  const std::size_t horizon = g_quick ? 2000 : 10000;
  const std::size_t runs = g_quick ? 60 : 500;
  std::vector<double> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = std::ldexp(1.0, static_cast<int>(i));
  std::vector<BoundSweep> per(runs);
  parallel_for(runs, [&](std::size_t r) {
    std::mt19937_64 gen(1000 + r);
    const double eps = r % 2 ? 0.3 : 0.1;
    MsmwLearner learner(ActionSpace::with_uniform_prior(c), eps / 3.0, RangeMode::NonNegative, r);
    for (std::size_t t = 0; t < horizon; ++t) learner.step(nonneg_rewards(static_cast<int>(r / 2), t, horizon, c, gen));
    BoundSweep& s = per[r];
    for (std::size_t i = 0; i < k; ++i) {
      const double regret = learner.ledger().regret(i);
      const double bound = msmw_regret_bound(learner, i);
      s.worst_bound_slack = std::min(s.worst_bound_slack, bound - regret);
      s.bound_violations += regret > bound;
      const InequalityCheck chk = ledger_inequality(learner, i);
      s.worst_ledger_slack = std::min(s.worst_ledger_slack, chk.rhs - chk.lhs);
      s.ledger_violations += !chk.holds();
    }
  });
  BoundSweep total;
  for (const auto& s : per) {
    total.bound_violations += s.bound_violations;
    total.ledger_violations += s.ledger_violations;
    total.worst_bound_slack = std::min(total.worst_bound_slack, s.worst_bound_slack);
    total.worst_ledger_slack = std::min(total.worst_ledger_slack, s.worst_ledger_slack);
  }
  return total;
}

BoundSweep g_sweep;

Outcome regret_bound() {
  g_sweep = deterministic_bound_sweep();
  return {g_sweep.bound_violations == 0, std::to_string(g_sweep.bound_violations) +
                                             " violations, min slack = " + num(g_sweep.worst_bound_slack)};
}

Outcome ledger_inequality_everywhere() {
  std::size_t violations = g_sweep.ledger_violations;
  double worst = g_sweep.worst_ledger_slack;
  std::size_t checks = 0;
  std::mt19937_64 gen(4);
  for (int run = 0; run < (g_quick ? 100 : 400); ++run) {
    const std::size_t k = 2 + gen() % 7;
    const RangeMode mode = run % 2 ? RangeMode::Symmetric : RangeMode::NonNegative;
    const ActionSpace space(random_ranges(gen, k), random_prior(gen, k));
    const double eta = std::uniform_real_distribution<double>(0.01, 0.9)(gen);
    MsmwLearner learner(space, eta, mode, run);
    for (int t = 0; t < 500; ++t) {
      std::vector<double> g(k);
      for (std::size_t i = 0; i < k; ++i) {
        const double c = space.range(i);
        g[i] = mode == RangeMode::Symmetric ? std::uniform_real_distribution<double>(-c, c)(gen)
                                            : std::uniform_real_distribution<double>(0.0, c)(gen);
      }
      learner.step(g);
    }
    std::vector<std::vector<double>> qs;
    for (std::size_t i = 0; i < k; ++i) {
      qs.emplace_back(k, 0.0);
      qs.back()[i] = 1.0;
    }
    qs.push_back(random_prior(gen, k));
    for (const auto& q : qs) {
      const InequalityCheck chk = ledger_inequality(learner.ledger(), space.ranges(), learner.initial(), eta, q);
      worst = std::min(worst, chk.rhs - chk.lhs);
      violations += !chk.holds();
      ++checks;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over the bound sweep plus " +
                               std::to_string(checks) + " mixed-mode checks, min slack = " + num(worst)};
}

Outcome scaling() {
  const std::size_t horizon = 100000;
  const std::size_t seeds = g_quick ? 10 : 50;
  const std::vector<int> exps{6, 8, 10};
  std::vector<double> msmw_mean(exps.size()), hedge_mean(exps.size());
  std::ostringstream os;
  for (std::size_t e = 0; e < exps.size(); ++e) {
    const double h = std::ldexp(1.0, exps[e]);
    const PriceGrid grid(1.0, h);
    const std::size_t star = 1;
    const ValueDistribution dist = ValueDistribution::zoom(2.0, h);
    std::vector<double> m(seeds), hd(seeds);
    parallel_for(2 * seeds, [&](std::size_t job) {
      const std::size_t s = job / 2;
      const ValueTrace trace = make_pricing_environment(dist, horizon, 500 + s);
      const double eps = epsilon_for_horizon(grid.size(), horizon);
      if (job % 2 == 0) {
        MsmwLearner l = MsmwLearner::for_epsilon(grid.action_space(), eps, RangeMode::NonNegative, s);
        for (std::size_t t = 0; t < horizon; ++t) l.step(grid.rewards(trace.value(t)));
        m[s] = l.ledger().regret(star);
      } else {
        Hedge l(grid.action_space(), hedge_textbook_eta(grid.size(), horizon), s);
        for (std::size_t t = 0; t < horizon; ++t) l.step(grid.rewards(trace.value(t)));
        hd[s] = l.ledger().regret(star);
      }
    });
    msmw_mean[e] = mean_se(m).first;
    hedge_mean[e] = mean_se(hd).first;
    os << "h=2^" << exps[e] << " msmw " << num(msmw_mean[e]) << " hedge " << num(hedge_mean[e]) << "; ";
  }
  const double msmw_growth = msmw_mean.back() / msmw_mean.front();
  const double hedge_growth = hedge_mean.back() / hedge_mean.front();
  os << "growth msmw " << num(msmw_growth) << " hedge " << num(hedge_growth);
  const bool pass = msmw_growth < 2.0 && hedge_growth > 4.0 && msmw_mean.back() <= 0.5 * hedge_mean.back();
  return {pass, os.str()};
}

Outcome bandit_unbiasedness() {
  std::mt19937_64 gen(6);
  double worst_ulps = 0.0;
  double worst_floor = INFINITY;
  std::size_t rounds = 0;
  for (int run = 0; run < (g_quick ? 50 : 200); ++run) {
    const std::size_t k = 2 + run % 3;
    const ActionSpace space = ActionSpace::with_uniform_prior(random_ranges(gen, k));
    BanditLearner l = BanditLearner::for_epsilon(space, 0.05 + 0.4 * (run % 5) / 4.0, BanditTarget::BestArm, run);
    const double floor = l.gamma() / static_cast<double>(k);
    for (int t = 0; t < 200; ++t) {
      const auto choice = l.choose();
      std::vector<double> g(k);
      for (std::size_t i = 0; i < k; ++i) g[i] = std::uniform_real_distribution<double>(0.0, space.range(i))(gen);
      std::vector<double> expectation(k, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        const auto est = importance_weighted_estimate(choice.mixed.probs(), j, g[j]);
        for (std::size_t i = 0; i < k; ++i) expectation[i] += choice.mixed[j] * est[i];
      }
      for (std::size_t i = 0; i < k; ++i) {
        worst_ulps = std::max(worst_ulps, std::abs(expectation[i] - g[i]) / std::max(std::nextafter(g[i], INFINITY) - g[i], 1e-300));
        worst_floor = std::min(worst_floor, choice.mixed[i] / floor);
      }
      l.update(choice.arm, g[choice.arm]);
      ++rounds;
    }
  }
  return {worst_ulps <= 1.0 && worst_floor >= 1.0,
          std::to_string(rounds) + " rounds, max |E[g~] - g| = " + num(worst_ulps) + " ulp, min p~/(gamma/k) = " +
              num(worst_floor)};
}

Outcome bandit_calibrated() {
  const std::size_t seeds = g_quick ? 40 : 200;
  const std::vector<std::size_t> checkpoints = g_quick ? std::vector<std::size_t>{1000, 10000}
                                                       : std::vector<std::size_t>{1000, 10000, 100000};
  const std::size_t horizon = checkpoints.back();
  const std::vector<double> ranges{1, 2, 4, 8, 16, 32, 64, 128};
  const std::vector<double> means{0.9, 0.5, 0.6, 0.2, 0.1, 0.05, 0.02, 0.01};
  const double eps = 0.1;
  std::vector<std::vector<double>> per_t(checkpoints.size(), std::vector<double>(seeds));
  std::vector<double> bound_gap(seeds);
  std::size_t star = 0;
  parallel_for(seeds, [&](std::size_t s) {
    const IIDRewards env(ranges, means, 700 + s);
    BanditLearner l = BanditLearner::for_epsilon(ActionSpace::with_uniform_prior(ranges), eps, BanditTarget::BestArm, s);
    RegretLedger ledger(ranges.size());
    std::size_t next = 0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const auto c = l.choose();
      const auto g = env.rewards(t);
      ledger.record(c.mixed.probs(), g, c.arm, ranges);
      l.update(c.arm, g[c.arm]);
      if (t + 1 == checkpoints[next]) {
        per_t[next][s] = ledger.regret(env.best_arm()) / static_cast<double>(t + 1);
        ++next;
      }
    }
    const std::size_t b = env.best_arm();
    bound_gap[s] = ledger.regret(b) - bandit_best_arm_bound(eps, ranges.size(), ledger.per_arm_gain[b], ranges[b]);
  });
  star = IIDRewards(ranges, means, 0).best_arm();
  std::ostringstream os;
  const auto [gap_mean, gap_se] = mean_se(bound_gap);
  bool pass = gap_mean <= 0.0;
  os << "best arm " << star << ", mean(regret - bound) = " << num(gap_mean) << "; regret/T";
  for (std::size_t i = 0; i < checkpoints.size(); ++i) os << " " << num(mean_se(per_t[i]).first);
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    std::vector<double> d(seeds);
    for (std::size_t s = 0; s < seeds; ++s) d[s] = per_t[i - 1][s] - per_t[i][s];
    const auto [dm, dse] = mean_se(d);
    os << "; drop " << checkpoints[i - 1] << "->" << checkpoints[i] << " = " << num(dm) << " (2SE " << num(2 * dse)
       << ")";
    pass = pass && dm > 2.0 * dse;
  }
  return {pass, os.str()};
}

Outcome expert_lower_bound() {
  std::ostringstream os;
  bool pass = true;
  for (const char* h : {"65536", "1048576"}) {
    const auto cfg = ExperimentConfig::from_text(std::string("[experiment]\nproblem = expert_lb\nseeds = 1\n"
                                                             "[environment]\nkind = expert_lb\nh = ") +
                                                 h +
                                                 "\n[learner]\nalgorithm = msmw\n[learner]\nalgorithm = hedge\n"
                                                 "[learner]\nalgorithm = bandit_msmw\n[learner]\nalgorithm = exp3\n");
    const RunResult r = run_experiment(cfg, 1);
    for (const auto& l : r.learners) {
      const Verdict& v = l.verdicts.back();
      pass = pass && v.holds;
      os << "h=" << h << " " << l.learner << (v.holds ? " ok" : " FAILS") << " (" << v.detail << "); ";
    }
  }
  return {pass, os.str()};
}

Outcome bandit_lower_bound() {
  const std::string seeds = g_quick ? "1:100" : "1:400";
  const auto cfg = ExperimentConfig::from_text("[experiment]\nproblem = bandit_lb\nseeds = " + seeds +
                                               "\n[environment]\nkind = bandit_lb\nh = 64\neps = 0.0625\n"
                                               "[learner]\nalgorithm = bandit_msmw\n[learner]\nalgorithm = exp3\n");
  const RunResult r = run_experiment(cfg, 0);
  std::ostringstream os;
  bool pass = true;
  for (const auto& l : r.learners) {
    const Verdict& v = l.verdicts.back();
    pass = pass && v.holds;
    os << l.learner << (v.holds ? " ok" : " FAILS") << " (" << v.detail << "); ";
  }
  double worst_kl = -INFINITY;
  for (int i = 1; i < 1000; ++i) {
    const double e = 0.1 * i / 1000.0;
    worst_kl = std::max(worst_kl, kl_per_round(e) / (64.0 * e * e));
  }
  pass = pass && worst_kl <= 1.0;
  os << "max kl/(64 eps^2) = " << num(worst_kl);
  return {pass, os.str()};
}

ValueTrace small_trace(std::mt19937_64& gen, std::size_t buyers, const std::vector<double>& levels, bool on_grid) {
  const std::size_t rounds = 1 + gen() % 50;
  std::vector<double> v(rounds * buyers);
  std::uniform_real_distribution<double> u(1.0, levels.back());
  for (auto& x : v) x = on_grid ? levels[gen() % levels.size()] : u(gen);
  return ValueTrace(buyers, std::move(v));
}

Outcome benchmarks_brute_force() {
  std::mt19937_64 gen(10);
  std::size_t mismatches = 0;
  const int n = g_quick ? 60 : 200;
  for (int trial = 0; trial < n; ++trial) {
    const std::size_t levels_count = 1 + trial % 3;
    const PriceGrid grid(1.0, std::ldexp(1.0, static_cast<int>(levels_count) - 1));
    const std::size_t buyers = 1 + (trial / 3) % 2;
    const ValueTrace t = small_trace(gen, buyers, grid.prices(), trial % 4 == 0);
    const double delta = (trial % 7) / 6.0;
    if (buyers == 1) {
      const auto g = benchmark_gmax(t, grid);
      const auto o = oracle::gmax(t, grid.prices());
      mismatches += g.value != o.first || g.price != o.second;
      const auto gd = benchmark_gmax_delta(t, grid, delta);
      const auto od = oracle::gmax_delta(t, grid.prices(), delta);
      mismatches += gd.qualified != od.has_value() || (od && gd.value != *od);
    }
    const auto opt = benchmark_opt_delta_multibuyer(t, delta, enumerate_myerson(buyers, grid.prices()));
    mismatches += opt.v_bar != oracle::v_bar(t, delta);
    mismatches += opt.value != oracle::opt_delta(t, delta, grid.prices());
  }
  return {mismatches == 0, std::to_string(n) + " traces, " + std::to_string(mismatches) + " mismatches"};
}

Outcome multibuyer_sanity() {
  std::mt19937_64 gen(11);
  double worst_gap = 0.0;
  std::size_t range_mismatch = 0, witness_fail = 0, mechanisms = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double h = trial % 2 ? 8.0 : 5.0;
    std::vector<double> v(400);
    std::uniform_real_distribution<double> u(1.0, h);
    for (auto& x : v) x = u(gen);
    const ValueTrace t = ValueTrace::single(v);
    std::vector<std::vector<double>> a, b;
    run_single_buyer_auction(t, 0.5, h, trial, std::nullopt,
                             [&](std::size_t, std::span<const double> p, std::span<const double>, const RegretLedger&) {
                               a.emplace_back(p.begin(), p.end());
                             });
    const auto multi = run_multi_buyer_auction(
        t, 0.5, h, trial, std::nullopt,
        [&](std::size_t, std::span<const double> p, std::span<const double>, const RegretLedger&) {
          b.emplace_back(p.begin(), p.end());
        });
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t j = 0; j < a[r].size(); ++j) worst_gap = std::max(worst_gap, std::abs(a[r][j] - b[r][j]));
  }
  for (std::size_t n : {1u, 2u}) {
    for (std::size_t levels = 1; levels * n <= kMyersonSlotCap; ++levels) {
      const std::vector<MyersonMechanism> all = enumerate_myerson(n, levels);
      for (const auto& m : all) {
        double max_pay = 0.0;
        for (std::size_t i = 0; i < m.profile_count(); ++i) {
          std::vector<double> values;
          for (std::size_t l : m.profile(i)) values.push_back(m.levels()[l]);
          max_pay = std::max(max_pay, m.execute(values).payment);
        }
        range_mismatch += m.max_payment() != max_pay;
        ++mechanisms;
      }
      if (n * levels == 6 || (n == 1 && levels == 4)) {
        for (int trial = 0; trial < 50; ++trial) {
          const ValueTrace t = small_trace(gen, n, all.front().levels(), true);
          const double delta = (1 + trial % 10) / 10.0;
          const auto opt = benchmark_opt_delta_multibuyer(t, delta, all);
          witness_fail += opt.value < delta * static_cast<double>(t.rounds()) * opt.v_bar;
        }
      }
    }
  }
  return {worst_gap <= 1e-10 && range_mismatch == 0 && witness_fail == 0,
          "n=1 max gap " + num(worst_gap) + ", " + std::to_string(range_mismatch) + "/" + std::to_string(mechanisms) +
              " range mismatches, " + std::to_string(witness_fail) + " witness failures"};
}

Outcome unknown_h_equivalence() {
  std::mt19937_64 gen(12);
  double worst_gap = 0.0, worst_mass = 0.0, worst_prior = 0.0;
  for (double eps : {0.5, 1.0}) {
    double s = 0.0;
    for (std::size_t j = 0; j < 400; ++j) s += countable_prior(eps, j);
    worst_prior = std::max(worst_prior, std::abs(s - 1.0));
    worst_prior = std::max(worst_prior, std::abs(countable_prior_tail(eps, 0) - 1.0));
    for (int trial = 0; trial < (g_quick ? 3 : 10); ++trial) {
      const double eta = eps / 3.0;
      const std::size_t k = 64;
      std::vector<double> ranges(k), mu(k);
      for (std::size_t j = 0; j < k; ++j) {
        ranges[j] = PriceGrid::price_at(eps, j);
        mu[j] = eta * countable_prior(eps, j) + (j == 0 ? 1.0 - eta : 0.0);
      }
      MsmwLearner explicit_run(ActionSpace::with_uniform_prior(ranges), eta, RangeMode::NonNegative, mu, trial);
      UnknownHLearner lazy(eps, eta, trial);
      std::uniform_real_distribution<double> u(1.0, 16.0);
      double highest = 1.0;
      for (int t = 0; t < 1000; ++t) {
        const auto q = lazy.play_distribution();
        const std::size_t m = PriceGrid::floor_index(eps, highest) + 1;
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) z += explicit_run.probabilities()[j];
        for (std::size_t j = 0; j < m; ++j)
          worst_gap = std::max(worst_gap, std::abs(q[j] - explicit_run.probabilities()[j] / z));
        const auto band = lazy.band_probabilities();
        for (std::size_t j = 0; j < band.size(); ++j)
          worst_gap = std::max(worst_gap, std::abs(band[j] - explicit_run.probabilities()[j]));
        worst_mass = std::max({worst_mass, std::abs(lazy.prior_mass_accounted() - 1.0), std::abs(lazy.total_mass() - 1.0)});
        const double v = (trial + t) % 97 == 0 ? 16.0 : u(gen);
        std::vector<double> g(k);
        for (std::size_t j = 0; j < k; ++j) g[j] = price_reward(ranges[j], v);
        explicit_run.observe(g, 0);
        lazy.observe(v);
        highest = std::max(highest, v);
      }
    }
  }
  return {worst_gap <= 1e-8 && worst_mass <= 1e-10 && worst_prior <= 1e-12,
          "max gap " + num(worst_gap) + ", max mass error " + num(worst_mass) + ", prior sum error " +
              num(worst_prior)};
}

Outcome convergence_direction() {
  ConvergenceParams p;
  p.eps = 0.2;
  p.delta = 0.1;
  p.h = 256.0;
  const double threshold = convergence_threshold(p);
  const auto horizon = static_cast<std::size_t>(std::ceil(threshold));
  const std::size_t seeds = g_quick ? 50 : 200;
  const ValueDistribution dist = ValueDistribution::uniform(1.0, p.h);
  std::vector<double> pass(seeds), ratio(seeds);
  parallel_for(seeds, [&](std::size_t s) {
    const ValueTrace trace = make_pricing_environment(dist, horizon, 900 + s);
    const PriceGrid grid(p.eps, p.h);
    std::vector<double> cum;
    cum.reserve(horizon);
    run_single_buyer_auction(trace, p.eps, p.h, s, std::nullopt,
                             [&](std::size_t, std::span<const double>, std::span<const double>, const RegretLedger& l) {
                               cum.push_back(l.alg_gain_realized);
                             });
    const ConvergenceReport rep = convergence_check(cum, trace, grid, p);
    pass[s] = rep.evaluated && rep.passes ? 1.0 : 0.0;
    ratio[s] = rep.alg_gain / rep.benchmark;
  });
  const double frac = mean_se(pass).first;
  return {frac >= 0.95, "T = " + std::to_string(horizon) + ", k = " + std::to_string(PriceGrid(p.eps, p.h).size()) +
                            ", passing fraction " + num(frac) + ", mean G_alg/G_max(delta) = " +
                            num(mean_se(ratio).first)};
}

Outcome determinism() {
  const std::vector<std::string> configs{
      "[experiment]\nproblem = experts\nT = 2000\nseeds = 1:6\n[environment]\nranges = 1, 8, 64\n"
      "means = 0.7, 0.3, 0.05\n[learner]\nname = m\n[learner]\nname = h\nalgorithm = hedge\n",
      "[experiment]\nproblem = bandit\nT = 2000\nseeds = 1:6\n[environment]\nranges = 1, 8, 64\n"
      "means = 0.7, 0.3, 0.05\n[learner]\nname = b\nalgorithm = bandit_msmw\n[learner]\nname = e\nalgorithm = exp3\n",
      "[experiment]\nproblem = single_buyer\nT = 2000\nseeds = 1:6\neps = 0.25\ndelta = 0.2\n"
      "[environment]\nkind = uniform\nhi = 50\nh = 50\n",
      "[experiment]\nproblem = posted_pricing\nT = 2000\nseeds = 1:6\neps = 0.25\ndelta = 0.2\n"
      "[environment]\nkind = equal_revenue\nh = 50\n",
      "[experiment]\nproblem = multi_buyer\nT = 1000\nseeds = 1:4\neps = 1\ndelta = 0.3\n"
      "[environment]\nkind = uniform\nhi = 8\nh = 8\nbuyers = 2\n",
      "[experiment]\nproblem = single_buyer_unknown_h\nT = 1000\nseeds = 1:4\neps = 0.5\n"
      "[environment]\nkind = uniform\nhi = 30\n",
      "[experiment]\nproblem = bandit_lb\nseeds = 1:20\n[environment]\nkind = bandit_lb\nh = 64\neps = 0.0625\n"};
  std::size_t differing = 0;
  for (const auto& text : configs) {
    const auto cfg = ExperimentConfig::from_text(text);
    RunResult a = run_experiment(cfg, 1);
    RunResult b = run_experiment(cfg, 0);
    a.wall_clock_seconds = b.wall_clock_seconds = 0.0;
    differing += !a.same_results(b) || to_json(a).dump() != to_json(b).dump();
  }
  return {differing == 0, std::to_string(configs.size()) + " configs re-run serially and in parallel, " +
                              std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      g_quick = true;
    } else {
      std::fprintf(stderr, "usage: %s [--quick]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"projection matches the reference projection", projection_correctness},
      {"MSMW equals mirror descent with the reference projection", omd_equivalence},
      {"deterministic per-arm regret bound", regret_bound},
      {"ledger inequality on every logged run", ledger_inequality_everywhere},
      {"multi-scale vs standard scaling on the zoom environment", scaling},
      {"bandit estimator unbiasedness and exploration floor", bandit_unbiasedness},
      {"bandit calibrated bound and decreasing average regret", bandit_calibrated},
      {"expert lower-bound dichotomy", expert_lower_bound},
      {"bandit lower-bound dichotomy", bandit_lower_bound},
      {"benchmarks match brute force", benchmarks_brute_force},
      {"multi-buyer reduction sanity", multibuyer_sanity},
      {"unknown-h lazy learner equivalence", unknown_h_equivalence},
      {"convergence at the calibrated horizon", convergence_direction},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s C%zu %s [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed%s\n", failures, criteria.size(), g_quick ? " (quick mode)" : "");
  return failures == 0 ? 0 : 1;
}
