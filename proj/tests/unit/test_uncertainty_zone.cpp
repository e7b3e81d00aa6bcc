#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "uzmm/uncertainty_zone.hpp"
#include "uzmm/verification.hpp"

using namespace uzmm;

namespace {

const ZoneGeometry kDesk{-0.007, 0.007, 0.003, -0.003};

ModelParams zone_params() { return presets::baseline(10, 10.0, 5.0).params; }

DriverPath ramp_then_flat() { return {{0, 1, 2}, {0, 0.007, 0.007}}; }

DriverPath random_walk(std::uint64_t seed, int steps, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  DriverPath w{{0}, {0}};
  for (int k = 1; k <= steps; ++k) {
    w.times.push_back(k * 0.1);
    w.values.push_back(w.values.back() + scale * n(rng));
  }
  return w;
}

}  // namespace

TEST(BarrierSequence, FlatDriverHasOnlySentinel) {
  const DriverPath w{{0, 5}, {0, 0}};
  const auto ev = barrier_sequence(0, 0.002, w, kDesk);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].epsilon, 0);
  EXPECT_DOUBLE_EQ(ev[0].tau, 5.0);
}

TEST(BarrierSequence, RampHitsUpperBarrierOnce) {
  const auto ev = barrier_sequence(0, 0, ramp_then_flat(), kDesk);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0].tau, 1.0, 1e-12);
  EXPECT_EQ(ev[0].epsilon, +1);
  EXPECT_NEAR(ev[0].jump, -0.01, 1e-15);
  EXPECT_EQ(ev[1].epsilon, 0);
}

TEST(BarrierSequence, SubBarrierSawtoothNeverHits) {
  DriverPath w{{0}, {0}};
  for (int k = 1; k <= 40; ++k) {
    w.times.push_back(k);
    w.values.push_back(k % 2 ? 0.006 : -0.006);
  }
  EXPECT_EQ(barrier_sequence(0, 0, w, kDesk).size(), 1u);
}

TEST(BarrierSequence, CrossingTimeIsInterpolated) {
  const DriverPath w{{0, 2}, {0, 0.014}};
  const auto ev = barrier_sequence(0, 0, w, kDesk);
  ASSERT_GE(ev.size(), 2u);
  EXPECT_NEAR(ev[0].tau, 1.0, 1e-12);
}

TEST(BarrierSequence, RejectsStartOnBarrier) {
  EXPECT_THROW(barrier_sequence(0, 0.007, ramp_then_flat(), kDesk), ValidationError);
  EXPECT_THROW(barrier_sequence(0, -0.01, ramp_then_flat(), kDesk), ValidationError);
}

TEST(BarrierSequence, ConstructionPropertiesOnRandomDrivers) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto w = random_walk(seed, 400, 0.002);
    const double y = 0.001 * (static_cast<int>(seed % 11) - 5);
    const auto ev = barrier_sequence(0, y, w, kDesk);
    EXPECT_FALSE(barrier_property_violation(0, y, w, kDesk, ev, 1e-12)) << "seed " << seed;
  }
}

TEST(YPath, FrozenBeforeStartAndFollowsDriverWithoutHits) {
  const DriverPath w{{0, 1, 2, 3}, {0, 0.001, -0.002, 0.003}};
  EXPECT_DOUBLE_EQ(y_path(2, 1.5, 0.001, w, kDesk), 0.001);
  EXPECT_DOUBLE_EQ(y_path(2, 2, 0.001, w, kDesk), 0.001);
  EXPECT_NEAR(y_path(0, 3, 0.001, w, kDesk), 0.001 + 0.003, 1e-15);
  EXPECT_NEAR(y_path(1, 2, 0.0, w, kDesk), -0.003, 1e-15);
}

TEST(YPath, ResetAfterUpperHit) {
  const auto w = ramp_then_flat();
  EXPECT_NEAR(y_path(0, 1.5, 0, w, kDesk), -0.003, 1e-15);
  EXPECT_NEAR(y_path(0, 1.0, 0, w, kDesk), -0.003, 1e-15);
  EXPECT_NEAR(y_path(0, 0.5, 0, w, kDesk), 0.0035, 1e-15);
}

TEST(YPath, RestartConsistency) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto w = random_walk(seed, 300, 0.002);
    const auto ev = barrier_sequence(0, 0, w, kDesk);
    for (double r : {3.05, 11.05, 17.05}) {
      bool hit = false;
      for (const auto& e : ev) hit |= e.tau == r;
      if (hit) continue;
      const double yr = y_path(0, r, 0, w, ev);
      for (double s : {r + 0.33, r + 5.0, 29.9})
        EXPECT_NEAR(y_path(0, s, 0, w, ev), y_path(r, s, yr, w, kDesk), 1e-12);
    }
  }
}

TEST(YPath, DriverLocality) {
  auto w = random_walk(9, 100, 0.002);
  const double base = y_path(2.0, 6.0, 0.001, w, kDesk);
  for (std::size_t k = 0; k < w.times.size(); ++k)
    if (w.times[k] > 6.0) w.values[k] += 0.5;
  EXPECT_DOUBLE_EQ(y_path(2.0, 6.0, 0.001, w, kDesk), base);
  for (std::size_t k = 1; k < w.times.size(); ++k)
    if (w.times[k] < 2.0) w.values[k] += 0.3;
  for (std::size_t k = 0; k < w.times.size(); ++k)
    if (w.times[k] >= 2.0) w.values[k] += 0.3;
  EXPECT_NEAR(y_path(2.0, 6.0, 0.001, w, kDesk), base, 1e-12);
}

TEST(MidPrice, NoHitsIsConstant) {
  const DriverPath w{{0, 1, 2}, {0, 0.002, -0.001}};
  const auto s = midprice_path(0.005, 0, 0, w, zone_params());
  for (double p : s.mid_price) EXPECT_DOUBLE_EQ(p, 0.005);
  EXPECT_TRUE(s.jumps.empty());
}

TEST(MidPrice, UpperHitMovesOneTickUp) {
  const auto s = midprice_path(0.005, 0, 0, ramp_then_flat(), zone_params());
  ASSERT_EQ(s.jumps.size(), 1u);
  EXPECT_EQ(s.jumps[0].direction, +1);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    EXPECT_NEAR(s.efficient_price[k], s.mid_price[k] + s.signed_distance[k], 1e-15);
    if (s.times[k] > 1.0) {
      EXPECT_NEAR(s.mid_price[k], 0.015, 1e-15);
    }
  }
  EXPECT_NEAR(s.mid_price.back(), 0.015, 1e-15);
}

TEST(MidPrice, UpThenDownReturnsAndEfficientPriceIsContinuous) {
  const DriverPath w{{0, 1, 2, 3}, {0, 0.007, 0.007, -0.004}};
  const auto s = midprice_path(0.005, 0, 0, w, zone_params());
  ASSERT_EQ(s.jumps.size(), 2u);
  EXPECT_EQ(s.jumps[0].direction, +1);
  EXPECT_EQ(s.jumps[1].direction, -1);
  EXPECT_NEAR(s.mid_price.back(), 0.005, 1e-15);
  for (std::size_t k = 1; k < s.times.size(); ++k)
    if (s.times[k] == s.times[k - 1]) {
      EXPECT_NEAR(s.efficient_price[k], s.efficient_price[k - 1], 1e-15);
    }
  EXPECT_NEAR(s.efficient_price.back(), 0.005 - 0.004, 1e-15);
}

TEST(MidPrice, RejectsOffGridStart) {
  EXPECT_THROW(midprice_path(0.01, 0, 0, ramp_then_flat(), zone_params()), ValidationError);
}

TEST(Driver, ZeroVolatilityIsConstant) {
  const auto w = simulate_driver(0.0, 10, 0.1, 5);
  for (double v : w.values) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(w.horizon(), 10.0);
}

TEST(Driver, IncrementVarianceAndDeterminism) {
  const double sigma = 0.005, dt = 0.1;
  const auto w = simulate_driver(sigma, 1e4, dt, 42);
  ASSERT_EQ(w.times.size(), 100001u);
  double sum = 0, sq = 0;
  const std::size_t n = w.values.size() - 1;
  for (std::size_t k = 1; k <= n; ++k) {
    const double d = w.values[k] - w.values[k - 1];
    sum += d;
    sq += d * d;
  }
  const double var = (sq - sum * sum / n) / (n - 1);
  EXPECT_NEAR(var / (sigma * sigma * dt), 1.0, 0.05);
  const auto again = simulate_driver(sigma, 1e4, dt, 42);
  EXPECT_EQ(w.values, again.values);
  EXPECT_NE(simulate_driver(sigma, 1e4, dt, 43).values, w.values);
}

TEST(EtaEstimate, PureAlternationAndGuards) {
  const std::vector<JumpMark> alt{{1, +1}, {2, -1}, {3, +1}, {4, -1}};
  EXPECT_DOUBLE_EQ(estimate_eta(alt), 0.0);
  const std::vector<JumpMark> same{{1, +1}, {2, +1}, {3, +1}};
  EXPECT_THROW(estimate_eta(same), std::domain_error);
  const std::vector<JumpMark> one{{1, +1}};
  EXPECT_THROW(estimate_eta(one), std::domain_error);
  const std::vector<JumpMark> mixed{{1, +1}, {2, +1}, {3, -1}, {4, -1}, {5, +1}};
  EXPECT_DOUBLE_EQ(estimate_eta(mixed), 2.0 / (2 * 2));
}

TEST(EtaEstimate, SimulatedPathRecoversZoneRatio) {
  auto p = zone_params();
  p.horizon = 30000;
  p.volatility = 0.002;
  const auto w = simulate_driver(p.volatility, p.horizon, 0.01, 11);
  const auto s = midprice_path(0.5 * p.tick, 0, 0, w, p);
  ASSERT_GE(s.jumps.size(), 2000u);
  EXPECT_NEAR(estimate_eta(s), 0.2, 0.03);
}
