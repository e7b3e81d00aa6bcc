#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "uzmm/hamiltonian.hpp"

using namespace uzmm;

namespace {

// gamma 1, delta 0.01, unit volume step, Qbar 10.
const QuoteSpace kQs{1.0, 0.01, 1.0, 10};

GridMeasure measure(std::vector<Atom> atoms, double cap, bool degenerate = false) {
  return on_grid(ExecutionMeasure::from_atoms(std::move(atoms), cap, degenerate), 1.0);
}

GridMeasure power_law(double cap, double decay) {
  return on_grid(power_law_measure(cap, volume_range(cap, 1.0), decay), 1.0);
}

std::vector<double> constant_slice(double v) { return std::vector<double>(kQs.levels(), v); }

GridMeasure random_measure(std::mt19937_64& rng, int cap) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Atom> atoms;
  double total = 0;
  for (int z = 0; z <= cap; ++z)
    if (z == cap || u(rng) < 0.4) {
      atoms.push_back({static_cast<double>(z), 0.05 + u(rng)});
      total += atoms.back().mass;
    }
  double acc = 0;
  for (std::size_t m = 0; m + 1 < atoms.size(); ++m) acc += atoms[m].mass /= total;
  atoms.back().mass = 1.0 - acc;
  return measure(atoms, cap);
}

// Naive double loop straight from the definition.
struct Naive {
  double value;
  int argmax;
};

Naive naive(Side side, const std::vector<double>& phi, int i, double y, const GridMeasure& mu,
            const QuoteSpace& qs) {
  const int n = qs.steps;
  const int room = side == Side::ask ? std::min(mu.cap_index, i) : std::min(mu.cap_index, 2 * n - i);
  const double k = qs.risk_aversion * (side == Side::ask ? qs.tick / 2 - y : qs.tick / 2 + y);
  Naive best{-INFINITY, 0};
  for (int q = 0; q <= room; ++q) {
    double s = 0;
    for (std::size_t m = 0; m < mu.size(); ++m) {
      const int f = std::min(q, mu.index[m]);
      s += mu.mass[m] * std::exp(-k * f * qs.volume_step) * phi[side == Side::ask ? i - f : i + f];
    }
    if (q == 0 || s > best.value + 1e-12 * std::abs(best.value)) best = {s, q};
  }
  return best;
}

}  // namespace

TEST(IntegralAsk, ZeroQuoteReturnsSlice) {
  std::vector<double> phi(kQs.levels());
  for (int r = 0; r < kQs.levels(); ++r) phi[r] = -1.0 - 0.1 * r;
  const auto mu = power_law(20, 0.9);
  for (int i = 0; i < kQs.levels(); ++i) {
    EXPECT_NEAR(integral_ask(phi, i, 0.002, 0, mu, kQs), phi[i], 1e-14);
    EXPECT_NEAR(integral_bid(phi, i, 0.002, 0, mu, kQs), phi[i], 1e-14);
  }
}

TEST(IntegralAsk, SingleAtomClosedForm) {
  const auto mu = measure({{8, 1.0}}, 8);
  const auto phi = constant_slice(-1.0);
  const double y = -0.003, k = kQs.risk_aversion * (kQs.tick / 2 - y);
  for (int q = 0; q <= 15; ++q)
    EXPECT_NEAR(integral_ask(phi, 15, y, q, mu, kQs), -std::exp(-k * std::min(q, 8)), 1e-15);
}

TEST(IntegralAsk, ThreeAtomsMatchDirectSum) {
  const auto mu = measure({{0, 0.2}, {3, 0.5}, {7, 0.3}}, 7);
  std::vector<double> phi(kQs.levels());
  for (int r = 0; r < kQs.levels(); ++r) phi[r] = -std::exp(0.05 * (r - 10) * (r - 10) / 10.0);
  const int i = 14, q = 5;
  const double y = 0.001, k = 0.005 - y;
  const double direct = 0.2 * phi[i] + 0.5 * std::exp(-3 * k) * phi[i - 3] + 0.3 * std::exp(-5 * k) * phi[i - 5];
  EXPECT_NEAR(integral_ask(phi, i, y, q, mu, kQs), direct, 1e-15);
  const double bid_direct =
      0.2 * phi[i] + 0.5 * std::exp(-3 * (0.005 + y)) * phi[i + 3] + 0.3 * std::exp(-6 * (0.005 + y)) * phi[i + 6];
  EXPECT_NEAR(integral_bid(phi, i, y, 6, mu, kQs), bid_direct, 1e-15);
}

TEST(IntegralAsk, RejectsInadmissibleQuote) {
  const auto mu = power_law(20, 0.9);
  const auto phi = constant_slice(-1.0);
  EXPECT_THROW(integral_ask(phi, 3, 0, 4, mu, kQs), std::out_of_range);
  EXPECT_THROW(integral_bid(phi, 18, 0, 3, mu, kQs), std::out_of_range);
  EXPECT_THROW(integral_ask(phi, 21, 0, 0, mu, kQs), std::out_of_range);
}

TEST(HamiltonianAsk, NegativeGainQuotesNothing) {
  const auto mu = power_law(20, 0.9);
  const auto r = hamiltonian_ask(constant_slice(-1.0), 15, 0.006, mu, kQs);
  EXPECT_EQ(r.argmax_index, 0);
  EXPECT_DOUBLE_EQ(r.value, -1.0);
  EXPECT_DOUBLE_EQ(r.admissible_max, 15.0);
}

TEST(HamiltonianAsk, PositiveGainSingleAtomQuotesCapOrRoom) {
  const double y = -0.002, k = 0.005 - y;
  for (int cap : {4, 20})
    for (int i : {2, 10, 20}) {
      const auto mu = measure({{static_cast<double>(cap), 1.0}}, cap);
      const auto r = hamiltonian_ask(constant_slice(-1.0), i, y, mu, kQs);
      const int expected = std::min(cap, i);
      EXPECT_EQ(r.argmax_index, expected);
      EXPECT_DOUBLE_EQ(r.argmax_quote, expected * 1.0);
      EXPECT_NEAR(r.value, -std::exp(-k * expected), 1e-15);
    }
}

TEST(HamiltonianAsk, ZeroGainTiesBreakToZero) {
  const auto mu = power_law(20, 0.9);
  const auto r = hamiltonian_ask(constant_slice(-1.0), 15, kQs.tick / 2, mu, kQs);
  EXPECT_EQ(r.argmax_index, 0);
  EXPECT_DOUBLE_EQ(r.value, -1.0);
  EXPECT_EQ(hamiltonian_ask_fast(constant_slice(-1.0), 15, kQs.tick / 2, mu, kQs).argmax_index, 0);
}

TEST(HamiltonianBid, NegativeGainQuotesNothing) {
  const auto mu = power_law(20, 0.9);
  const auto r = hamiltonian_bid(constant_slice(-1.0), 5, -0.006, mu, kQs);
  EXPECT_EQ(r.argmax_index, 0);
  EXPECT_DOUBLE_EQ(r.value, -1.0);
}

TEST(HamiltonianBid, FullInventoryBlocksBuying) {
  const auto mu = power_law(20, 0.9);
  std::vector<double> phi(kQs.levels());
  for (int r = 0; r < kQs.levels(); ++r) phi[r] = -1.0 - 0.01 * r;
  const auto r = hamiltonian_bid(phi, 20, 0.003, mu, kQs);
  EXPECT_EQ(r.argmax_index, 0);
  EXPECT_DOUBLE_EQ(r.admissible_max, 0.0);
  EXPECT_DOUBLE_EQ(r.value, phi[20]);
}

TEST(HamiltonianBid, MirrorsAskUnderSymmetry) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = random_measure(rng, 1 + static_cast<int>(u(rng) * 19));
    std::vector<double> phi(kQs.levels());
    for (int r = 0; r <= 10; ++r) phi[10 + r] = phi[10 - r] = -std::exp(2 * (u(rng) - 0.5));
    const int i = static_cast<int>(u(rng) * kQs.levels());
    const double y = 0.007 * (2 * u(rng) - 1);
    const auto a = hamiltonian_ask(phi, i, y, mu, kQs);
    const auto b = hamiltonian_bid(phi, 2 * kQs.steps - i, -y, mu, kQs);
    EXPECT_EQ(a.argmax_index, b.argmax_index);
    EXPECT_EQ(a.value, b.value);
  }
}

TEST(HamiltonianFast, AgreesWithBruteForceAndNaive) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 20);
    const QuoteSpace qs{0.2 + 2 * u(rng), 0.002 + 0.03 * u(rng), 1.0, n};
    const auto mu = random_measure(rng, 1 + static_cast<int>(u(rng) * (2 * n - 1)));
    std::vector<double> phi(qs.levels());
    for (auto& v : phi) v = -std::exp(3 * (u(rng) - 0.5));
    const int i = static_cast<int>(u(rng) * qs.levels());
    const double y = qs.tick * 0.7 * (2 * u(rng) - 1);
    for (Side side : {Side::ask, Side::bid}) {
      const bool ask = side == Side::ask;
      const auto brute = ask ? hamiltonian_ask(phi, i, y, mu, qs) : hamiltonian_bid(phi, i, y, mu, qs);
      const auto fast = ask ? hamiltonian_ask_fast(phi, i, y, mu, qs) : hamiltonian_bid_fast(phi, i, y, mu, qs);
      const auto ref = naive(side, phi, i, y, mu, qs);
      EXPECT_NEAR(fast.value, brute.value, 1e-12 * std::abs(brute.value));
      EXPECT_NEAR(ref.value, brute.value, 1e-12 * std::abs(brute.value));
      EXPECT_EQ(fast.argmax_index, brute.argmax_index);
      EXPECT_EQ(ref.argmax, brute.argmax_index);
      EXPECT_LE(brute.argmax_quote, brute.admissible_max);
    }
  }
}

TEST(HamiltonianFast, ZeroQuoteEndpointAndSingleAtom) {
  const auto mu = measure({{6, 1.0}}, 6);
  const double y = 0.001, k = 0.005 - y;
  const auto r = hamiltonian_ask_fast(constant_slice(-1.0), 12, y, mu, kQs);
  EXPECT_EQ(r.argmax_index, 6);
  EXPECT_NEAR(r.value, -std::exp(-6 * k), 1e-15);
  std::vector<double> phi(kQs.levels(), -1.0);
  phi[0] = -0.5;
  const auto edge = hamiltonian_ask_fast(phi, 0, y, power_law(20, 0.9), kQs);
  EXPECT_EQ(edge.argmax_index, 0);
  EXPECT_DOUBLE_EQ(edge.value, -0.5);
}

TEST(HamiltonianValue, MonotoneInSignedDistance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto mu = power_law(20, 0.8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> phi(kQs.levels());
    for (auto& v : phi) v = -std::exp(u(rng));
    const int i = static_cast<int>(u(rng) * kQs.levels());
    double prev_a = INFINITY, prev_b = -INFINITY;
    for (int j = 0; j <= 28; ++j) {
      const double y = -0.007 + j * 0.0005;
      const double a = hamiltonian_ask_fast(phi, i, y, mu, kQs).value;
      const double b = hamiltonian_bid_fast(phi, i, y, mu, kQs).value;
      EXPECT_LE(a, prev_a + 1e-15);
      EXPECT_GE(b, prev_b - 1e-15);
      prev_a = a;
      prev_b = b;
    }
  }
}

TEST(Shortcut, AffineLogSlices) {
  const auto mu = power_law(20, 0.9);
  const double y = -0.002;
  const double gain = kQs.risk_aversion * (kQs.tick / 2 - y) * kQs.volume_step;
  for (double slope : {-3 * gain, -0.5 * gain, 0.0, 0.5 * gain, 3 * gain}) {
    std::vector<double> g(kQs.levels()), phi(kQs.levels());
    for (int r = 0; r < kQs.levels(); ++r) {
      g[r] = slope * r;
      phi[r] = -std::exp(-g[r]);
    }
    for (int i : {0, 7, 20}) {
      const auto s = argmax_shortcut_ask(g, i, y, mu.cap_index, kQs);
      ASSERT_TRUE(s);
      EXPECT_EQ(*s, hamiltonian_ask(phi, i, y, mu, kQs).argmax_index) << "slope " << slope;
    }
  }
  // Growing fast enough in inventory: selling never pays.
  std::vector<double> steep(kQs.levels());
  for (int r = 0; r < kQs.levels(); ++r) steep[r] = 2 * gain * r;
  EXPECT_EQ(*argmax_shortcut_ask(steep, 15, y, mu.cap_index, kQs), 0);
  // Flat: quote the full room.
  EXPECT_EQ(*argmax_shortcut_ask(std::vector<double>(kQs.levels(), 0.0), 15, y, mu.cap_index, kQs), 15);
}

TEST(Shortcut, RandomConcaveMatchesBruteForce) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(u(rng) * 19);
    const QuoteSpace qs{0.5 + u(rng), 0.005 + 0.02 * u(rng), 1.0, n};
    const auto mu = random_measure(rng, 1 + static_cast<int>(u(rng) * (2 * n - 1)));
    std::vector<double> g(qs.levels()), phi(qs.levels());
    double level = 3 * (u(rng) - 0.5), slope = 0.3 * (u(rng) - 0.2);
    for (int r = 0; r < qs.levels(); ++r) {
      g[r] = level;
      phi[r] = -std::exp(-level);
      level += slope;
      slope -= 0.001 + 0.05 * u(rng);
    }
    const int i = static_cast<int>(u(rng) * qs.levels());
    const double y = 0.7 * qs.tick * (2 * u(rng) - 1);
    const auto a = argmax_shortcut_ask(g, i, y, mu.cap_index, qs);
    const auto b = argmax_shortcut_bid(g, i, y, mu.cap_index, qs);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(*a, hamiltonian_ask(phi, i, y, mu, qs).argmax_index);
    EXPECT_EQ(*b, hamiltonian_bid(phi, i, y, mu, qs).argmax_index);
  }
}

TEST(Shortcut, NonConcaveIsFlagged) {
  std::vector<double> g(kQs.levels(), 0.0);
  g[10] = 1.0;
  g[11] = -1.0;
  EXPECT_FALSE(is_discretely_concave(g));
  EXPECT_FALSE(argmax_shortcut_ask(g, 10, 0.0, 20, kQs));
  EXPECT_FALSE(argmax_shortcut_bid(g, 10, 0.0, 20, kQs));
}
