#include <gtest/gtest.h>

#include <cmath>

#include "uzmm/hjb_solver.hpp"
#include "uzmm/verification.hpp"

using namespace uzmm;

namespace {

PolicyGrid constant_policy(const MarketModel& m, const Lattice& lat, int quote) {
  const auto& p = m.params;
  const kernels::LayerShape shape{p.inventory_levels(), lat.n_y + 1};
  std::vector<std::uint16_t> ask(shape.size()), bid(shape.size());
  for (int i = 0; i < shape.levels; ++i)
    for (int j = 0; j < shape.nodes; ++j) {
      ask[i * shape.nodes + j] = static_cast<std::uint16_t>(std::min(quote, i));
      bid[i * shape.nodes + j] = static_cast<std::uint16_t>(std::min(quote, 2 * p.steps() - i));
    }
  PolicyGrid policy(shape, p.volume_step());
  policy.put(0, ask, bid);
  return policy;
}

}  // namespace

TEST(Platform, ZeroPolicyGivesZeroVolume) {
  const auto m = presets::baseline(10, 60, 5);
  const auto lat = make_lattice(m.params, 50, 35);
  const auto w = solve_platform(constant_policy(m, lat, 0), m, lat, {0, 25});
  for (int k : {0, 25})
    for (double v : w.layer(k)) EXPECT_EQ(v, 0.0);
}

TEST(Platform, NoOrderFlowGivesNoVolume) {
  auto base = presets::baseline(10, 60, 5);
  const MarketModel m(base.params, AffineIntensity{0.0, 1e-12}, AffineIntensity{0.0, 1e-12},
                      base.ask_measure, base.bid_measure, QuadraticPenalty{0.001});
  const auto lat = make_lattice(m.params, 50, 35);
  SolveOptions o;
  o.keep_all = true;
  const auto sol = solve_hjb(m, lat, o);
  const auto w = solve_platform(sol.policy, m, lat);
  for (double v : w.layer(0)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1e-9);
  }
}

TEST(Platform, ShortHorizonFirstOrderExpansion) {
  const int quote = 4;  // volume 20
  for (double horizon : {0.02, 0.01}) {
    const auto m = presets::baseline(10, horizon, 5);
    const auto lat = make_lattice(m.params, 10, 35);
    const auto w = solve_platform(constant_policy(m, lat, quote), m, lat);
    const double fill = m.ask_measure.expected_fill(quote * 5.0);
    const int centre = m.params.inventory_index(0);
    for (int j = 0; j <= lat.n_y; ++j) {
      const double y = lat.y_nodes[j];
      const double first = horizon * (m.ask_intensity(0, y) + m.bid_intensity(0, y)) * fill;
      EXPECT_NEAR(w.at(0, centre, j), first, 10 * horizon * horizon) << horizon;
    }
  }
}

TEST(Platform, FusedStepperMatchesStoredPolicy) {
  const auto m = presets::baseline(10, 60, 5);
  const auto lat = make_lattice(m.params, stable_time_steps(m), 35);
  PlatformStepper fused(m, lat);
  fused.keep({0, 30});
  SolveOptions o;
  o.keep_all = true;
  o.observer = [&](const LayerEvent& e) { fused.on_layer(e); };
  const auto sol = solve_hjb(m, lat, o);
  EXPECT_EQ(fused.current_step(), 0);
  const auto stored = solve_platform(sol.policy, m, lat, {0, 30});
  EXPECT_EQ(fused.stored().layer(0), stored.layer(0));
  EXPECT_EQ(fused.stored().layer(30), stored.layer(30));
  for (double v : stored.layer(0)) EXPECT_GE(v, 0.0);
  double centre = 0;
  for (int j = 0; j <= lat.n_y; ++j) centre = std::max(centre, stored.at(0, m.params.inventory_index(0), j));
  EXPECT_GT(centre, 0.0);
}

TEST(Platform, RejectsInadmissiblePolicyAndOutOfOrderSteps) {
  const auto m = presets::baseline(10, 60, 5);
  const auto lat = make_lattice(m.params, 20, 35);
  PlatformStepper s(m, lat);
  const std::size_t size = static_cast<std::size_t>(m.params.inventory_levels()) * 36;
  std::vector<std::uint16_t> zero(size, 0), big(size, 0);
  big[0] = 1;  // selling at -Qbar
  EXPECT_THROW(s.step(20, big, zero), ValidationError);
  EXPECT_THROW(s.step(19, zero, zero), std::logic_error);
  s.step(20, zero, zero);
  EXPECT_EQ(s.current_step(), 19);
}
