#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uzmm/hjb_solver.hpp"
#include "uzmm/kernels.hpp"
#include "uzmm/verification.hpp"

using namespace uzmm;
using namespace uzmm::kernels;

namespace {

struct Fixture {
  MarketModel model;
  Lattice lattice;
  GridMeasure ask, bid;
  QuoteSpace qs;
  LayerShape shape;
};

Fixture make(const MarketModel& model, int n_y) {
  Fixture f{model, make_lattice(model.params, 10, n_y), {}, {}, QuoteSpace::from_params(model.params), {}};
  std::tie(f.ask, f.bid) = grid_measures(model);
  f.shape = {model.params.inventory_levels(), n_y + 1};
  return f;
}

void expect_identical(const HamiltonianLayer& a, const HamiltonianLayer& b) {
  ASSERT_EQ(a.ask.size(), b.ask.size());
  for (std::size_t k = 0; k < a.ask.size(); ++k) {
    ASSERT_EQ(a.ask[k], b.ask[k]) << k;
    ASSERT_EQ(a.bid[k], b.bid[k]) << k;
    ASSERT_EQ(a.ask_quote[k], b.ask_quote[k]) << k;
    ASSERT_EQ(a.bid_quote[k], b.bid_quote[k]) << k;
  }
}

void compare_all(const Fixture& f, const std::vector<double>& u) {
  const MeasurePair mu{&f.ask, &f.bid};
  const int max_quote = std::max(f.ask.cap_index, f.bid.cap_index);
  const auto table = DiscountTable::build(f.qs, f.lattice.y_nodes, max_quote);
  HamiltonianLayer s, p, c;
  serial::hamiltonian_layer(u, f.shape, f.lattice.y_nodes, mu, f.qs, s);
  parallel::hamiltonian_layer(u, f.shape, table, mu, f.qs, p);
  shortcut::hamiltonian_layer(u, f.shape, f.lattice.y_nodes, table, mu, f.qs, c);
  expect_identical(s, p);
  expect_identical(s, c);
}

}  // namespace

TEST(Kernels, DiscountTableMatchesFormula) {
  const auto f = make(presets::baseline(10, 60, 5), 35);
  const auto t = DiscountTable::build(f.qs, f.lattice.y_nodes, 20);
  for (int j = 0; j <= 20; ++j)
    for (int node = 0; node <= 35; ++node) {
      const double y = f.lattice.y_nodes[node];
      EXPECT_EQ(t.ask[j * t.nodes + node], quote_discount(1.0, j * 5.0, 0.005 - y));
      EXPECT_EQ(t.bid[j * t.nodes + node], quote_discount(1.0, j * 5.0, 0.005 + y));
    }
}

TEST(Kernels, AgreeBitForBitOnSolvedLayers) {
  const auto f = make(presets::baseline(10, 60, 5), 35);
  SolveOptions options;
  options.snapshot_times = {0.0, 30.0, 60.0};
  const auto sol = solve_hjb(f.model, make_lattice(f.model.params, 100, 35), options);
  for (int step : sol.values.steps()) compare_all(f, sol.values.layer(step));
}

TEST(Kernels, AgreeOnRandomNegativeLayers) {
  const auto f = make(presets::baseline(20, 60, 2.5), 14);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> layer(f.shape.size());
    for (auto& v : layer) v = -std::exp(u(rng));
    compare_all(f, layer);
  }
}

TEST(Kernels, DegenerateMeasureStaysOnScan) {
  const auto f = make(presets::degenerate(10, 60), 35);
  std::vector<double> layer(f.shape.size());
  for (int i = 0; i < f.shape.levels; ++i)
    for (int j = 0; j < f.shape.nodes; ++j) layer[i * f.shape.nodes + j] = -1.0 - 0.01 * (i - 10) * (i - 10);
  compare_all(f, layer);
  HamiltonianLayer s;
  serial::hamiltonian_layer(layer, f.shape, f.lattice.y_nodes, {&f.ask, &f.bid}, f.qs, s);
  for (std::size_t k = 0; k < layer.size(); ++k) {
    EXPECT_EQ(s.ask[k], layer[k]);
    EXPECT_EQ(s.ask_quote[k], 0);
  }
}
