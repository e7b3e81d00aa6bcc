#include "uzmm/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <type_traits>
#include <sstream>

#include "uzmm/hamiltonian.hpp"
#include "uzmm/montecarlo.hpp"

namespace uzmm {

namespace presets {

namespace {

ModelParams baseline_params(int steps, double horizon) {
  ModelParams p;
  p.horizon = horizon;
  p.volatility = 0.005;
  p.tick = 0.01;
  p.zone_ratio = 0.2;
  p.risk_aversion = 1.0;
  p.inventory_cap = 50.0;
  p.volume_steps = steps;
  p.ask_cap = 100.0;
  p.bid_cap = 100.0;
  return p;
}

}  // namespace

MarketModel baseline(int steps, double horizon, double spacing) {
  const auto mu = power_law_measure(100.0, volume_range(100.0, spacing), 0.9);
  return {baseline_params(steps, horizon), AffineIntensity{10.0, 0.1}, AffineIntensity{10.0, 0.1},
          mu, mu, QuadraticPenalty{0.001}};
}

MarketModel degenerate(int steps, double horizon) {
  const auto mu = ExecutionMeasure::from_atoms({{0.0, 1.0}}, 100.0, true);
  return {baseline_params(steps, horizon), AffineIntensity{10.0, 0.1}, AffineIntensity{10.0, 0.1},
          mu, mu, QuadraticPenalty{0.001}};
}

MarketModel sweep(int steps, double volatility) {
  auto p = baseline_params(steps, 240.0);
  p.volatility = volatility;
  const auto mu = power_law_measure(100.0, volume_range(100.0, 1.0), 0.9);
  return {p, ExponentialIntensity{1.5, 200.0}, ExponentialIntensity{1.5, 200.0}, mu, mu,
          QuadraticPenalty{0.005}};
}

std::vector<double> sweep_ticks() { return log_spaced(0.002, 0.02, 11); }

}  // namespace presets

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

}  // namespace

std::optional<int> barrier_property_violation(double t, double y, const DriverPath& w,
                                              const ZoneGeometry& g,
                                              std::span<const BarrierEvent> events, double tol) {
  const double T = w.horizon();
  if (events.empty() || events.back().epsilon != 0 || events.back().tau != T) return 1;
  for (std::size_t i = 0; i + 1 < events.size(); ++i)
    if (events[i].epsilon == 0) return 1;

  double jumps = 0.0;
  double previous = t;
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    const auto& e = events[i];
    if (e.tau < T && e.epsilon == 0) return 2;
    if (!(e.tau >= previous && e.tau <= T)) return 1;
    const double at = y + (w.at(e.tau) - w.at(t)) + jumps;
    if (std::abs(at - (e.epsilon > 0 ? g.upper : g.lower)) > tol) return 3;
    if (i > 0 && std::abs(w.at(e.tau) - w.at(events[i - 1].tau)) < g.min_gap() - tol) return 4;
    jumps += e.jump;
    previous = e.tau;
  }

  std::vector<double> probes;
  for (double s : w.times)
    if (s > t) probes.push_back(s);
  for (const auto& e : events) probes.push_back(e.tau);
  std::sort(probes.begin(), probes.end());
  const std::size_t count = probes.size();
  for (std::size_t k = 0; k + 1 < count; ++k) probes.push_back(0.5 * (probes[k] + probes[k + 1]));
  for (double s : probes) {
    if (s <= t) continue;
    const double v = y_path(t, s, y, w, events);
    if (!(v > g.lower - tol && v < g.upper + tol)) return 5;
  }
  return std::nullopt;
}

CheckResult check_degenerate_oracle(VerifyLevel) {
  const auto start = Clock::now();
  const auto model = presets::degenerate(10, 60.0);
  const auto lattice = make_lattice(model.params, 100, 100);
  SolveOptions options;
  options.keep_all = true;
  const auto sol = solve_hjb(model, lattice, options);
  const auto& p = model.params;
  double err = 0.0;
  for (int k = 0; k <= lattice.n_t; ++k)
    for (int i = 0; i < p.inventory_levels(); ++i) {
      const double q = p.inventory(i);
      const double exact = -std::exp(p.risk_aversion * model.penalty(q) +
                                     0.5 * std::pow(p.volatility * p.risk_aversion * q, 2) *
                                         (p.horizon - lattice.t_nodes[k]));
      for (int j = 0; j <= lattice.n_y; ++j)
        err = std::max(err, std::abs(sol.values.at(k, i, j) / exact - 1.0));
    }
  const double secs = since(start);
  return {"AC1", "degenerate-measure closed form", err <= 1e-3 && secs < 10.0,
          "max rel err " + fmt(err) + ", " + fmt(secs, 3) + " s", "<= 1e-3, < 10 s", secs};
}

CheckResult check_zero_policy_mc(VerifyLevel level) {
  const auto start = Clock::now();
  const auto model = presets::baseline(10, 3600.0, 5.0);
  SimConfig c;
  c.n_paths = level == VerifyLevel::full ? 20000 : 2000;
  c.dt = 1.0;
  c.seed = 20240601;
  c.start_inventory = 10.0;
  const auto e = estimate_utility(c, model);
  const double exact = zero_policy_utility(model, 0.0, 10.0);
  const double z = (e.mean - exact) / e.std_error;
  const double secs = since(start);
  return {"AC2", "zero-policy Monte Carlo closed form",
          std::abs(z) <= 3.0 && secs < 60.0 && e.envelope_violations == 0,
          "mean " + fmt(e.mean, 6) + " vs " + fmt(exact, 6) + " (z " + fmt(z, 3) + ", " +
              std::to_string(c.n_paths) + " paths), " + fmt(secs, 3) + " s",
          "|z| <= 3, < 60 s", secs};
}

CheckResult check_pde_mc_consistency(VerifyLevel level) {
  const auto start = Clock::now();
  const auto model = presets::baseline(20, 300.0, 2.5);
  const auto lattice = make_lattice(model.params, stable_time_steps(model), 70);
  SolveOptions options;
  options.keep_all = true;
  const auto sol = solve_hjb(model, lattice, options);
  const std::pair<double, double> states[] = {{0, 0}, {-10, 0}, {10, 0}, {0, -0.003}, {0, 0.003}};
  double worst = 0.0;
  long violations = 0;
  std::ostringstream measured;
  for (const auto& [q, y] : states) {
    SimConfig c;
    c.n_paths = level == VerifyLevel::full ? 10000 : 1500;
    c.dt = 0.01;
    c.seed = 7;
    c.start_inventory = q;
    c.start_y = y;
    c.policy = QuotePolicy::from_grid(sol.policy, lattice);
    const auto e = estimate_utility(c, model);
    const double pde = sol.values.at(0, model.params.inventory_index(q), lattice.nearest_node(y));
    const double z = (e.mean - pde) / e.std_error;
    worst = std::max(worst, std::abs(z));
    violations += e.envelope_violations + e.admissibility_violations;
    measured << "(" << q << "," << y << "): z " << fmt(z, 3) << "; ";
  }
  const double secs = since(start);
  measured << "max |z| " << fmt(worst, 3) << ", " << fmt(secs, 3) << " s";
  return {"AC3", "PDE value vs Monte Carlo under the extracted policy",
          worst <= 3.0 && violations == 0 && secs < 300.0, measured.str(), "|z| <= 3 at 5 states, < 300 s",
          secs};
}

std::vector<CheckResult> check_baseline_properties(VerifyLevel level) {
  const auto start = Clock::now();
  const bool full = level == VerifyLevel::full;
  const auto model = full ? presets::baseline(100, 3600.0) : presets::baseline(50, 600.0);
  const auto& p = model.params;
  const int n_t = full ? 7500 : stable_time_steps(model);
  const auto lattice = make_lattice(p, n_t, full ? 350 : 70);
  const double T = p.horizon;

  SolveOptions options;
  for (int k = 0; k <= 16; ++k) options.snapshot_times.push_back(0.05 * k * T);
  options.snapshot_times.push_back(0.5 * T);
  const int levels = p.inventory_levels();
  const int nodes = lattice.n_y + 1;
  double worst_curvature = -std::numeric_limits<double>::infinity();
  std::vector<double> g(levels);
  options.observer = [&](const LayerEvent& e) {
    for (int j = 0; j < nodes; ++j) {
      for (int i = 0; i < levels; ++i) g[i] = -std::log(-e.values[static_cast<std::size_t>(i) * nodes + j]);
      for (int i = 1; i + 1 < levels; ++i)
        worst_curvature = std::max(worst_curvature, g[i - 1] - 2 * g[i] + g[i + 1]);
    }
  };
  const auto sol = solve_hjb(model, lattice, options);
  const double solve_secs = since(start);

  // Monotone quotes in y at t = 0 and T/2.
  long violations = 0, strict = 0;
  for (double t : {0.0, 0.5 * T}) {
    const int k = lattice.nearest_step(t);
    for (int i = 0; i < levels; ++i)
      for (int j = 0; j + 1 < nodes; ++j) {
        const int da = sol.policy.ask_index(k, i, j + 1) - sol.policy.ask_index(k, i, j);
        const int db = sol.policy.bid_index(k, i, j) - sol.policy.bid_index(k, i, j + 1);
        violations += (da > 1) + (db > 1);
        strict += (da > 0) + (db > 0);
      }
  }

  // Quote spread over time on the probe grid.
  const double probes_q[] = {-15, -8, 0, 8, 15};
  const double probes_y[] = {-0.006, -0.004, -0.002, 0.0, 0.002, 0.004, 0.006};
  int widest = 0, widest_bid = 0;
  for (double q : probes_q)
    for (double y : probes_y) {
      const int i = p.inventory_index(q);
      const int j = lattice.nearest_node(y);
      int lo = 1 << 30, hi = -1, blo = 1 << 30, bhi = -1;
      for (int k : sol.policy.steps()) {
        if (lattice.t_nodes[k] > 0.8 * T + 1e-9) continue;
        lo = std::min(lo, sol.policy.ask_index(k, i, j));
        hi = std::max(hi, sol.policy.ask_index(k, i, j));
        blo = std::min(blo, sol.policy.bid_index(k, i, j));
        bhi = std::max(bhi, sol.policy.bid_index(k, i, j));
      }
      widest = std::max(widest, hi - lo);
      widest_bid = std::max(widest_bid, bhi - blo);
    }

  const double h = p.volume_step();
  std::vector<CheckResult> out;
  out.push_back({"AC4", "ask quotes nonincreasing and bid quotes nondecreasing in y", violations == 0,
                 std::to_string(violations) + " violations beyond one step (" + std::to_string(strict) +
                     " single-step reversals), n=" + std::to_string(p.steps()),
                 "0 violations beyond one volume step", solve_secs});
  out.push_back({"AC5", "discrete log-concavity in inventory", worst_curvature <= 1e-6,
                 "max second difference " + fmt(worst_curvature, 3) + " over all layers",
                 "<= 1e-6", solve_secs});
  out.push_back({"AC6", "ask quotes stationary on [0, 0.8T]", widest <= 1,
                 "max ask spread " + fmt(widest * h) + " (bid " + fmt(widest_bid * h) +
                     ") over 35 probes, step " + fmt(h),
                 "<= one volume step", solve_secs});
  return out;
}

CheckResult check_refinement(VerifyLevel level) {
  const auto start = Clock::now();
  const int n_y = level == VerifyLevel::full ? 70 : 35;
  std::vector<HjbSolution> sols;
  for (int n : {10, 20, 40}) {
    const auto model = presets::baseline(n, 300.0, 5.0);
    const auto lattice = make_lattice(model.params, stable_time_steps(model), n_y);
    SolveOptions options;
    options.keep_all = true;
    sols.push_back(solve_hjb(model, lattice, options));
  }
  auto gap = [&](const HjbSolution& a, const HjbSolution& b, int ratio) {
    double m = 0.0;
    const int levels = a.values.shape().levels;
    for (int k = 0; k <= a.lattice.n_t; ++k)
      for (int i = 0; i < levels; ++i)
        for (int j = 0; j <= a.lattice.n_y; ++j)
          m = std::max(m, std::abs(a.values.at(k, i, j) - b.values.at(k, i * ratio, j)));
    return m;
  };
  // Each pair is compared on the coarser of its two inventory grids.
  const double g1 = gap(sols[0], sols[1], 2);
  const double g2 = gap(sols[1], sols[2], 2);
  const double secs = since(start);
  return {"AC7", "inventory-grid refinement", g1 > g2,
          "gap(10,20) " + fmt(g1) + ", gap(20,40) " + fmt(g2) + ", " + fmt(secs, 3) + " s",
          "gap(10,20) > gap(20,40)", secs};
}

CheckResult check_tick_shift(VerifyLevel level) {
  const auto start = Clock::now();
  const bool full = level == VerifyLevel::full;
  SweepSettings s;
  s.deltas = full ? presets::sweep_ticks() : log_spaced(0.002, 0.02, 6);
  s.eta0 = presets::kSweepEta0;
  s.delta0 = presets::kSweepDelta0;
  s.n_y = full ? 70 : 28;
  std::vector<double> argmax;
  std::ostringstream measured;
  bool volume_drops = true;
  std::vector<double> previous;
  for (double sigma : {0.005, 0.0075, 0.01, 0.015}) {
    const auto r = run_sweep(presets::sweep(50, sigma), s);
    argmax.push_back(r.argmax_delta);
    measured << "sigma " << sigma << ": " << fmt(r.argmax_delta, 3) << "; ";
    std::vector<double> w;
    for (const auto& row : r.rows) w.push_back(row.mean_w);
    if (!previous.empty())
      for (std::size_t k = 0; k < w.size(); ++k) volume_drops = volume_drops && w[k] <= previous[k];
    previous = w;
  }
  const bool monotone = std::is_sorted(argmax.begin(), argmax.end()) && argmax.back() > argmax.front();
  const double secs = since(start);
  measured << "mean W decreasing in sigma: " << (volume_drops ? "yes" : "no") << ", " << fmt(secs, 3)
           << " s";
  return {"AC8", "optimal tick moves right as volatility grows", monotone && volume_drops,
          measured.str(), "argmax nondecreasing in sigma, strictly larger at 0.015 than 0.005", secs};
}

CheckResult check_tick_optima() {
  const auto start = Clock::now();
  SweepSettings s;
  s.deltas = log_spaced(0.002, 0.02, 21);
  s.eta0 = presets::kSweepEta0;
  s.delta0 = presets::kSweepDelta0;
  s.n_y = 140;
  const double step = std::log(s.deltas[1] / s.deltas[0]);
  const std::pair<double, double> cases[] = {{0.005, 0.0032}, {0.0075, 0.0044}, {0.01, 0.0064}, {0.015, 0.015}};
  bool ok = true;
  std::ostringstream measured;
  for (const auto& [sigma, reference] : cases) {
    const auto r = run_sweep(presets::sweep(100, sigma), s);
    ok = ok && std::abs(std::log(r.argmax_delta / reference)) <= step * (1 + 1e-9);
    measured << "sigma " << sigma << ": " << fmt(r.argmax_delta, 3) << " (reference " << reference << "); ";
  }
  const double secs = since(start);
  return {"AC8-full", "fine-grid optimal ticks", ok, measured.str() + fmt(secs, 4) + " s",
          "within one grid step of 0.0032/0.0044/0.0064/0.015", secs};
}

namespace {

GridMeasure random_measure(std::mt19937_64& rng, int cap_index) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution keep(0.5);
  std::vector<Atom> atoms;
  double total = 0.0;
  for (int q = 0; q <= cap_index; ++q)
    if (q == cap_index || keep(rng)) {
      atoms.push_back({static_cast<double>(q), u(rng)});
      total += atoms.back().mass;
    }
  double acc = 0.0;
  for (auto& a : atoms) acc += a.mass /= total;
  atoms.back().mass += 1.0 - acc;
  return on_grid(ExecutionMeasure::from_atoms(atoms, cap_index), 1.0);
}

}  // namespace

CheckResult check_hamiltonian_oracle(VerifyLevel level) {
  const auto start = Clock::now();
  const bool full = level == VerifyLevel::full;
  std::mt19937_64 rng(90210);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  long value_mismatch = 0, argmax_mismatch = 0, shortcut_mismatch = 0;
  double worst = 0.0;
  const int instances = full ? 10000 : 2000;
  for (int k = 0; k < instances; ++k) {
    const int n = 1 + static_cast<int>(u01(rng) * 20);
    const QuoteSpace qs{0.1 + 2.0 * u01(rng), 0.001 + 0.05 * u01(rng), 1.0, n};
    const double eta = 0.05 + 0.4 * u01(rng);
    const double ybar = qs.tick * (eta + 0.5);
    const auto mu = random_measure(rng, 1 + static_cast<int>(u01(rng) * 2 * n));
    std::vector<double> phi(qs.levels());
    for (auto& v : phi) v = -std::exp(3.0 * (u01(rng) - 0.5));
    const int i = static_cast<int>(u01(rng) * qs.levels());
    const double y = ybar * (2 * u01(rng) - 1);
    for (int side = 0; side < 2; ++side) {
      const auto a = side ? hamiltonian_bid(phi, i, y, mu, qs) : hamiltonian_ask(phi, i, y, mu, qs);
      const auto b = side ? hamiltonian_bid_fast(phi, i, y, mu, qs) : hamiltonian_ask_fast(phi, i, y, mu, qs);
      const double rel = std::abs(a.value - b.value) / std::abs(a.value);
      worst = std::max(worst, rel);
      value_mismatch += rel > 1e-12;
      argmax_mismatch += a.argmax_index != b.argmax_index;
    }
  }
  const int concave = 500;
  for (int k = 0; k < concave; ++k) {
    const int n = 2 + static_cast<int>(u01(rng) * 19);
    const QuoteSpace qs{0.5 + u01(rng), 0.005 + 0.02 * u01(rng), 1.0, n};
    const double ybar = qs.tick * 0.7;
    const auto mu = random_measure(rng, 1 + static_cast<int>(u01(rng) * 2 * n));
    std::vector<double> g(qs.levels()), phi(qs.levels());
    double slope = 0.3 * (u01(rng) - 0.2), level_g = 3.0 * (u01(rng) - 0.5);
    for (int r = 0; r < qs.levels(); ++r) {
      g[r] = level_g;
      phi[r] = -std::exp(-g[r]);
      level_g += slope;
      slope -= 0.001 + 0.05 * u01(rng);
    }
    const int i = static_cast<int>(u01(rng) * qs.levels());
    const double y = ybar * (2 * u01(rng) - 1);
    const auto ask = argmax_shortcut_ask(g, i, y, mu.cap_index, qs);
    const auto bid = argmax_shortcut_bid(g, i, y, mu.cap_index, qs);
    shortcut_mismatch += !ask || *ask != hamiltonian_ask(phi, i, y, mu, qs).argmax_index;
    shortcut_mismatch += !bid || *bid != hamiltonian_bid(phi, i, y, mu, qs).argmax_index;
  }
  const double secs = since(start);
  return {"AC9", "fast and shortcut Hamiltonians against brute force",
          value_mismatch == 0 && argmax_mismatch == 0 && shortcut_mismatch == 0,
          std::to_string(instances) + " instances: max rel diff " + fmt(worst, 3) + ", " +
              std::to_string(value_mismatch + argmax_mismatch) + " mismatches; " +
              std::to_string(concave) + " concave: " + std::to_string(shortcut_mismatch) +
              " argmax mismatches",
          "0 mismatches at 1e-12", secs};
}

CheckResult check_eta_estimate(VerifyLevel level) {
  const auto start = Clock::now();
  ModelParams p = presets::baseline(10, 1.0, 5.0).params;
  p.volatility = 0.002;
  const double horizon = level == VerifyLevel::full ? 30000.0 : 8000.0;
  const auto w = simulate_driver(p.volatility, horizon, 0.01, 424242);
  p.horizon = horizon;
  const auto path = midprice_path(0.5 * p.tick, 0.0, 0.0, w, p);
  const double eta = estimate_eta(path);
  const long jumps = static_cast<long>(path.jumps.size());
  const bool enough = level == VerifyLevel::quick || jumps >= 2000;
  const double secs = since(start);
  return {"AC10", "uncertainty-zone ratio recovered from simulated mid-prices",
          enough && eta >= 0.17 && eta <= 0.23,
          "eta_hat " + fmt(eta) + " from " + std::to_string(jumps) + " jumps", level == VerifyLevel::full ? "[0.17, 0.23], >= 2000 jumps" : "[0.17, 0.23]",
          secs};
}

CheckResult check_barrier_properties(VerifyLevel level) {
  const auto start = Clock::now();
  std::mt19937_64 rng(1357);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int drivers = level == VerifyLevel::full ? 1000 : 200;
  long failures = 0, continuity = 0, hits = 0;
  int first_property = 0;
  for (int k = 0; k < drivers; ++k) {
    ModelParams p = presets::baseline(10, 1.0, 5.0).params;
    p.tick = 0.001 + 0.05 * u01(rng);
    p.zone_ratio = 0.02 + 0.46 * u01(rng);
    const auto g = ZoneGeometry::from_params(p);
    DriverPath w;
    const int knots = 2 + static_cast<int>(u01(rng) * 300);
    const double scale = p.ybar() * (0.05 + u01(rng));
    w.times = {0.0};
    w.values = {0.0};
    for (int m = 1; m < knots; ++m) {
      w.times.push_back(w.times.back() + 0.01 + u01(rng));
      w.values.push_back(w.values.back() + scale * normal(rng));
    }
    p.horizon = w.horizon();
    const double t = u01(rng) * 0.5 * p.horizon;
    const double y = g.lower + (g.upper - g.lower) * (0.001 + 0.998 * u01(rng));
    const auto events = barrier_sequence(t, y, w, g);
    hits += static_cast<long>(events.size()) - 1;
    const double tol = 1e-9 * (g.upper - g.lower);
    if (const auto bad = barrier_property_violation(t, y, w, g, events, tol)) {
      ++failures;
      if (!first_property) first_property = *bad;
    }
    const double p0 = 0.5 * p.tick + p.tick * std::round(10 * normal(rng));
    const auto path = midprice_path(p0, t, y, w, p);
    for (std::size_t m = 0; m < path.times.size(); ++m)
      if (std::abs(path.mid_price[m] + path.signed_distance[m] - path.efficient_price[m]) >
          1e-9 * (1 + std::abs(p0)))
        ++continuity;
  }
  const double secs = since(start);
  return {"AC11", "barrier construction properties and S = P + Y",
          failures == 0 && continuity == 0,
          std::to_string(drivers) + " drivers, " + std::to_string(hits) + " hits: " +
              std::to_string(failures) + " property failures" +
              (first_property ? " (first: property " + std::to_string(first_property) + ")" : "") +
              ", " + std::to_string(continuity) + " samples with S != P + Y",
          "0 failures", secs};
}

std::vector<CheckResult> run_checks(VerifyLevel level, bool include_slow,
                                    const std::function<void(const CheckResult&)>& report) {
  std::vector<CheckResult> out;
  auto run = [&](const char* id, auto&& check) {
    const auto start = Clock::now();
    std::vector<CheckResult> got;
    try {
      if constexpr (std::is_same_v<decltype(check()), CheckResult>)
        got.push_back(check());
      else
        got = check();
    } catch (const std::exception& e) {
      got.push_back({id, "aborted", false, e.what(), "no error", since(start)});
    }
    for (auto& r : got) {
      if (report) report(r);
      out.push_back(std::move(r));
    }
  };
  run("AC1", [&] { return check_degenerate_oracle(level); });
  run("AC2", [&] { return check_zero_policy_mc(level); });
  run("AC3", [&] { return check_pde_mc_consistency(level); });
  run("AC4-6", [&] { return check_baseline_properties(level); });
  run("AC7", [&] { return check_refinement(level); });
  run("AC8", [&] { return check_tick_shift(level); });
  if (include_slow) run("AC8-full", [&] { return check_tick_optima(); });
  run("AC9", [&] { return check_hamiltonian_oracle(level); });
  run("AC10", [&] { return check_eta_estimate(level); });
  run("AC11", [&] { return check_barrier_properties(level); });
  return out;
}

}  // namespace uzmm
