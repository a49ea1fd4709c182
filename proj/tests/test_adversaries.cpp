#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "msmw/adversaries.hpp"
#include "msmw/auctions.hpp"

using namespace msmw;

TEST(AdaptiveExpertLB, HorizonAndThresholds) {
  const AdaptiveExpertLB lb(std::ldexp(1.0, 20));
  EXPECT_EQ(lb.horizon(), 9u);
  for (std::size_t t = 1; t <= 9; ++t) EXPECT_DOUBLE_EQ(lb.threshold(t), std::ldexp(1.0, static_cast<int>(t)) / 1024.0);
  EXPECT_EQ(AdaptiveExpertLB(std::ldexp(1.0, 16)).horizon(), 7u);
  EXPECT_THROW(AdaptiveExpertLB(8.0), InvalidArgument);
}

TEST(AdaptiveExpertLB, NeverTriggeredWhenArmTwoIgnored) {
  const double h = std::ldexp(1.0, 16);
  AdaptiveExpertLB lb(h);
  double arm2 = 0.0;
  for (std::size_t t = 1; t <= lb.horizon(); ++t) {
    const auto g = lb.step(0.0, t);
    EXPECT_EQ(g[0], 0.0);
    arm2 += g[1];
  }
  EXPECT_FALSE(lb.triggered());
  EXPECT_DOUBLE_EQ(arm2, static_cast<double>(lb.horizon()) * h);
}

TEST(AdaptiveExpertLB, TriggerSwitchesOnce) {
  AdaptiveExpertLB lb(64.0);
  EXPECT_EQ(lb.horizon(), 2u);
  EXPECT_EQ(lb.step(1.0, 1)[1], -64.0);
  EXPECT_TRUE(lb.triggered());
  EXPECT_EQ(lb.trigger_round(), 1u);
  EXPECT_EQ(lb.step(0.0, 2)[1], -64.0);
  EXPECT_THROW(lb.step(1.5, 2), InvalidArgument);
  EXPECT_THROW(lb.step(0.5, 3), InvalidArgument);
}

TEST(AdaptiveExpertLB, DichotomyThresholds) {
  const AdaptiveExpertLB lb(std::ldexp(1.0, 16));
  EXPECT_DOUBLE_EQ(lb.regret1_threshold(), 3.5 + 256.0);
  EXPECT_DOUBLE_EQ(lb.regret2_threshold(), 3.5 * 65536.0 + 65536.0 * 16.0 / 5.0);
}

TEST(KlPerRound, ValuesAndBound) {
  EXPECT_NEAR(bernoulli_kl(0.4, 0.6), 0.081093021621632876396, 1e-15);
  EXPECT_NEAR(kl_per_round(0.05), 0.081093021621632876396, 1e-15);
  EXPECT_LE(kl_per_round(0.05), 0.16);
  EXPECT_EQ(kl_per_round(0.05, 0), 0.0);
  EXPECT_EQ(kl_per_round(0.0), 0.0);
  EXPECT_LT(kl_per_round(1e-6), 1e-10);
  EXPECT_THROW(kl_per_round(0.1), InvalidArgument);
  EXPECT_THROW(kl_per_round(-0.01), InvalidArgument);
  for (int i = 1; i < 1000; ++i) {
    const double eps = 0.1 * i / 1000.0;
    EXPECT_LE(kl_per_round(eps), 64.0 * eps * eps);
  }
}

TEST(StochasticBanditLB, Construction) {
  const auto lb = StochasticBanditLB::from_eps(64.0, 1.0 / 16.0, 1);
  EXPECT_EQ(lb.horizon(), 64u);
  EXPECT_DOUBLE_EQ(lb.eps(), 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(lb.regret1_threshold(), 8.0);
  EXPECT_DOUBLE_EQ(lb.regret2_threshold(), 512.0);
  EXPECT_DOUBLE_EQ(lb.arm2_mean(), -16.0);
  EXPECT_DOUBLE_EQ(StochasticBanditLB::from_eps(64.0, 1.0 / 16.0, 2).arm2_mean(), 16.0);
  EXPECT_THROW(StochasticBanditLB(64.0, 64, 3), InvalidArgument);
  EXPECT_THROW(StochasticBanditLB(64.0, 1, 1), InvalidArgument);
}

TEST(StochasticBanditLB, EmpiricalMeanWithinThreeSigma) {
  for (int instance : {1, 2}) {
    const StochasticBanditLB lb(64.0, 64, instance);
    const CounterRng rng(99, Stream::Environment);
    const int n = 100000;
    double sum = 0.0;
    for (int t = 0; t < n; ++t) {
      const auto g = lb.sample(static_cast<std::size_t>(t), rng);
      EXPECT_EQ(g[0], 0.0);
      ASSERT_TRUE(g[1] == 64.0 || g[1] == -64.0);
      sum += g[1];
    }
    const double sigma = 64.0 / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(sum / n, lb.arm2_mean(), 3.0 * sigma);
  }
}

TEST(IIDRewards, ShapesAndRanges) {
  const IIDRewards b({1.0, 4.0}, {0.3, 0.9}, 5);
  EXPECT_EQ(b.best_arm(), 1u);
  double s1 = 0.0;
  for (std::size_t t = 0; t < 20000; ++t) {
    const auto g = b.rewards(t);
    EXPECT_TRUE(g[0] == 0.0 || g[0] == 1.0);
    s1 += g[1];
  }
  EXPECT_NEAR(s1 / 20000.0, 3.6, 0.05);

  const IIDRewards u({2.0}, {1.0}, 5, RewardShape::Uniform);
  EXPECT_DOUBLE_EQ(u.expected(0), 1.0);
  const IIDRewards s({2.0}, {-1.0}, 5, RewardShape::SignedBernoulli);
  for (std::size_t t = 0; t < 100; ++t) EXPECT_EQ(s.rewards(t)[0], -2.0);
  EXPECT_THROW(IIDRewards({1.0}, {1.5}, 1), InvalidArgument);
  EXPECT_THROW(IIDRewards({1.0}, {-0.5}, 1), InvalidArgument);
  EXPECT_THROW(parse_reward_shape("gaussian"), InvalidArgument);
}

TEST(ValueTrace, FileRoundTripIsBitExact) {
  const auto path = (std::filesystem::temp_directory_path() / "msmw_trace_roundtrip.csv").string();
  const ValueDistribution d = ValueDistribution::uniform(1.0, 37.5);
  const ValueTrace t = make_pricing_environment(d, 500, 3, 2);
  t.write(path);
  const ValueTrace r = ValueTrace::read(path);
  EXPECT_EQ(r.buyers(), 2u);
  EXPECT_EQ(r.values(), t.values());
  std::remove(path.c_str());
}

TEST(ValueTrace, Validation) {
  EXPECT_THROW(ValueTrace::single({0.5}), InvalidArgument);
  EXPECT_THROW(ValueTrace(2, {1.0, 2.0, 3.0}), InvalidArgument);
  const ValueTrace t = ValueTrace::single({1.0, 5.0});
  EXPECT_THROW(t.require_at_most(4.0), InvalidArgument);
  EXPECT_NO_THROW(t.require_at_most(5.0));
  const auto path = (std::filesystem::temp_directory_path() / "msmw_trace_bad.csv").string();
  {
    std::ofstream out(path);
    out << "1,2\n3\n";
  }
  EXPECT_THROW(ValueTrace::read(path), InvalidArgument);
  {
    std::ofstream out(path);
    out << "1.5x\n";
  }
  EXPECT_THROW(ValueTrace::read(path), InvalidArgument);
  std::remove(path.c_str());
}

TEST(ValueDistribution, PointMassIsConstant) {
  const ValueTrace t = make_pricing_environment(ValueDistribution::point_mass(3.25), 50, 1);
  for (double v : t.values()) EXPECT_EQ(v, 3.25);
}

TEST(ValueDistribution, EqualRevenueOnGrid) {
  const ValueDistribution d = ValueDistribution::equal_revenue(0.5, 20.0);
  const PriceGrid grid(0.5, 20.0);
  ASSERT_EQ(d.atoms.size(), grid.size());
  for (double p : grid.prices()) EXPECT_NEAR(p * d.sale_probability(p), 1.0, 1e-12);
}

TEST(ValueDistribution, ZoomAndValidation) {
  const ValueDistribution z = ValueDistribution::zoom(2.0, 1024.0);
  EXPECT_DOUBLE_EQ(z.sale_probability(2.0), 1.0);
  EXPECT_DOUBLE_EQ(z.sale_probability(4.0), 1.0 / 1024.0);
  EXPECT_DOUBLE_EQ(z.sample(0.0), 1024.0);
  EXPECT_DOUBLE_EQ(z.sample(0.5), 2.0);
  EXPECT_THROW(ValueDistribution::zoom(4.0, 2.0), InvalidArgument);
  EXPECT_THROW(ValueDistribution::point_mass(0.5), InvalidArgument);
  EXPECT_THROW(ValueDistribution::uniform(3.0, 2.0), InvalidArgument);
  EXPECT_THROW(ValueDistribution::discrete({1.0, 2.0}, {0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(parse_value_kind("lognormal"), InvalidArgument);
}

TEST(PricingEnvironment, DeterministicPerSeed) {
  const ValueDistribution d = ValueDistribution::uniform(1.0, 10.0);
  EXPECT_EQ(make_pricing_environment(d, 100, 4).values(), make_pricing_environment(d, 100, 4).values());
  EXPECT_NE(make_pricing_environment(d, 100, 4).values(), make_pricing_environment(d, 100, 5).values());
}
