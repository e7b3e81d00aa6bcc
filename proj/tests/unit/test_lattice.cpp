#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "uzmm/lattice.hpp"
#include "uzmm/verification.hpp"

using namespace uzmm;

namespace {

const ModelParams kParams = presets::baseline(10, 1.0, 5.0).params;  // ybar 0.007, y- 0.003
constexpr double kPi = std::numbers::pi;

// Smooth field on [-ybar, ybar] and its derivatives.
struct Field {
  double w = kPi / 0.007;
  double v(double y) const { return std::cos(w * y) + 0.5 * std::sin(0.5 * w * y) + 2.0; }
  double d1(double y) const { return -w * std::sin(w * y) + 0.25 * w * std::cos(0.5 * w * y); }
  double d2(double y) const { return -w * w * std::cos(w * y) - 0.125 * w * w * std::sin(0.5 * w * y); }
};

// Max error of one solve of (I - dt L) v = f built from the exact field.
double steady_error(int n_y, const LinearCoefficients& c, double dt) {
  const auto lat = make_lattice(kParams, 1, n_y);
  const Field f;
  std::vector<double> rhs(n_y + 1), out(n_y + 1);
  for (int j = 1; j < n_y; ++j) {
    const double y = lat.y_nodes[j];
    rhs[j] = f.v(y) - dt * (c.diffusion * f.d2(y) + c.drift * f.d1(y) + c.reaction * f.v(y));
  }
  rhs[0] = f.v(lat.y_nodes[0]) - f.v(kParams.y_minus());
  rhs[n_y] = f.v(lat.y_nodes[n_y]) - f.v(kParams.y_plus());
  NonlocalSystem(lat, c, dt).solve(rhs, out);
  double err = 0;
  for (int j = 0; j <= n_y; ++j) err = std::max(err, std::abs(out[j] - f.v(lat.y_nodes[j])));
  return err;
}

// Implicit Euler on u_t = L u + s with u = exp(-t) v(y); error at t = 1.
double transient_error(int n_y, int steps, const LinearCoefficients& c) {
  const auto lat = make_lattice(kParams, 1, n_y);
  const Field f;
  const double dt = 1.0 / steps;
  const NonlocalSystem system(lat, c, dt);
  std::vector<double> u(n_y + 1), rhs(n_y + 1);
  for (int j = 0; j <= n_y; ++j) u[j] = f.v(lat.y_nodes[j]);
  const double gap_lo = f.v(lat.y_nodes[0]) - f.v(kParams.y_minus());
  const double gap_hi = f.v(lat.y_nodes[n_y]) - f.v(kParams.y_plus());
  for (int m = 1; m <= steps; ++m) {
    const double e = std::exp(-m * dt);
    for (int j = 1; j < n_y; ++j) {
      const double y = lat.y_nodes[j];
      const double source = -f.v(y) - (c.diffusion * f.d2(y) + c.drift * f.d1(y) + c.reaction * f.v(y));
      rhs[j] = u[j] + dt * e * source;
    }
    rhs[0] = e * gap_lo;
    rhs[n_y] = e * gap_hi;
    system.solve(rhs, u);
  }
  double err = 0;
  for (int j = 0; j <= n_y; ++j) err = std::max(err, std::abs(u[j] - std::exp(-1.0) * f.v(lat.y_nodes[j])));
  return err;
}

}  // namespace

TEST(Lattice, GeometryAndAlignment) {
  const auto lat = make_lattice(kParams, 50, 70);
  EXPECT_EQ(lat.t_nodes.size(), 51u);
  EXPECT_DOUBLE_EQ(lat.t_nodes.back(), 1.0);
  EXPECT_DOUBLE_EQ(lat.y_nodes.front(), -0.007);
  EXPECT_DOUBLE_EQ(lat.y_nodes.back(), 0.007);
  EXPECT_TRUE(lat.aligned());
  EXPECT_EQ(lat.y_minus.node, 50);
  EXPECT_EQ(lat.y_plus.node, 20);
  EXPECT_EQ(lat.nearest_node(0.0), 35);
  EXPECT_EQ(lat.step_at_or_before(0.519), 25);
  EXPECT_EQ(lat.nearest_step(0.519), 26);

  const auto odd = make_lattice(kParams, 1, 10);
  EXPECT_FALSE(odd.aligned());
  EXPECT_GE(odd.y_plus.weight, 0.0);
  EXPECT_LE(odd.y_plus.weight, 1.0);
  EXPECT_NEAR(odd.y_plus.apply(odd.y_nodes), kParams.y_plus(), 1e-15);
  EXPECT_NEAR(odd.y_minus.apply(odd.y_nodes), kParams.y_minus(), 1e-15);

  EXPECT_THROW(make_lattice(kParams, 0, 70), ValidationError);
  EXPECT_THROW(make_lattice(kParams, 10, 3), ValidationError);
}

TEST(Lattice, StabilityNumber) {
  const auto m = presets::baseline(100, 3600);
  const double per_second = 2 * 0.17 * std::exp(100 * 0.01 * 1.2);
  EXPECT_NEAR(stability_number(m, 1.0), per_second, 1e-12);
  const int n_t = stable_time_steps(m);
  EXPECT_LE(stability_number(m, 3600.0 / n_t), 1.0);
  EXPECT_GT(stability_number(m, 3600.0 / (n_t - 1)), 1.0);
}

TEST(ImplicitStep, ZeroOperatorIsIdentityAwayFromBoundaries) {
  const auto lat = make_lattice(kParams, 1, 70);
  std::vector<double> layer(71);
  for (int j = 0; j <= 70; ++j) layer[j] = std::sin(300 * lat.y_nodes[j]) - 2;
  const auto out = implicit_step(layer, lat, {}, 0.5);
  for (int j = 1; j < 70; ++j) EXPECT_EQ(out[j], layer[j]);
  EXPECT_EQ(out[0], layer[lat.y_minus.node]);
  EXPECT_EQ(out[70], layer[lat.y_plus.node]);
}

TEST(ImplicitStep, ConstantLayerUnchangedByDiffusion) {
  for (int n_y : {70, 33}) {
    const auto lat = make_lattice(kParams, 1, n_y);
    const std::vector<double> layer(n_y + 1, -3.25);
    LinearCoefficients c;
    c.diffusion = 1.25e-5;
    const auto out = implicit_step(layer, lat, c, 10.0);
    for (double v : out) EXPECT_NEAR(v, -3.25, 1e-12);
  }
}

TEST(ImplicitStep, SecondOrderInSpaceWithCentralDrift) {
  LinearCoefficients c{1.25e-5, 1e-3, -0.5, {}};
  double prev = steady_error(35, c, 1.0);
  for (int n_y : {70, 140, 280}) {
    const double err = steady_error(n_y, c, 1.0);
    const double order = std::log2(prev / err);
    EXPECT_NEAR(order, 2.0, 0.15) << n_y;
    prev = err;
  }
  const auto lat = make_lattice(kParams, 1, 280);
  EXPECT_FALSE(NonlocalSystem(lat, c, 1.0).upwind());
}

TEST(ImplicitStep, FirstOrderInSpaceWithUpwindDrift) {
  LinearCoefficients c{1.25e-5, 2.0, 0.0, {}};
  const auto lat = make_lattice(kParams, 1, 280);
  ASSERT_TRUE(NonlocalSystem(lat, c, 1e-3).upwind());
  double prev = steady_error(35, c, 1e-3);
  for (int n_y : {70, 140, 280}) {
    const double err = steady_error(n_y, c, 1e-3);
    EXPECT_NEAR(std::log2(prev / err), 1.0, 0.2) << n_y;
    prev = err;
  }
}

TEST(ImplicitStep, FirstOrderInTime) {
  LinearCoefficients c{1.25e-5, 1e-3, -0.5, {}};
  double prev = transient_error(560, 10, c);
  for (int steps : {20, 40, 80}) {
    const double err = transient_error(560, steps, c);
    EXPECT_NEAR(std::log2(prev / err), 1.0, 0.1) << steps;
    prev = err;
  }
}

TEST(ImplicitStep, ReactionProfileMatchesConstantReaction) {
  const auto lat = make_lattice(kParams, 1, 35);
  std::vector<double> rhs(36);
  for (int j = 0; j <= 35; ++j) rhs[j] = std::cos(400 * lat.y_nodes[j]);
  LinearCoefficients a{1e-5, 0, -0.3, {}};
  LinearCoefficients b{1e-5, 0, -0.1, std::vector<double>(36, -0.2)};
  const auto x = implicit_step(rhs, lat, a, 0.7);
  const auto y = implicit_step(rhs, lat, b, 0.7);
  for (int j = 0; j <= 35; ++j) EXPECT_NEAR(x[j], y[j], 1e-14);
}
