// Hamiltonian layer kernels and a full solve on a solved baseline layer.
// Arguments: volume steps n (inventory levels 2n + 1), y nodes fixed at 71.

#include <benchmark/benchmark.h>

#include <map>

#include "uzmm/hjb_solver.hpp"
#include "uzmm/kernels.hpp"
#include "uzmm/verification.hpp"

using namespace uzmm;
using namespace uzmm::kernels;

namespace {

struct Setup {
  MarketModel model;
  Lattice lattice;
  GridMeasure ask, bid;
  QuoteSpace qs;
  LayerShape shape;
  DiscountTable table;
  std::vector<double> u;
};

// The t = T/2 layer of a baseline solve, so slices have a realistic shape.
const Setup& setup(int steps) {
  static std::map<int, Setup> cache;
  auto it = cache.find(steps);
  if (it != cache.end()) return it->second;
  const auto model = presets::baseline(steps, 600, 100.0 / steps);
  const auto lattice = make_lattice(model.params, stable_time_steps(model), 70);
  SolveOptions o;
  o.snapshot_times = {300.0};
  o.method = HamiltonianMethod::shortcut;
  const auto sol = solve_hjb(model, lattice, o);
  Setup s{model, lattice, {}, {}, QuoteSpace::from_params(model.params),
          {model.params.inventory_levels(), 71}, {}, {}};
  std::tie(s.ask, s.bid) = grid_measures(model);
  s.table = DiscountTable::build(s.qs, lattice.y_nodes, std::max(s.ask.cap_index, s.bid.cap_index));
  s.u = sol.values.layer(sol.values.steps().front());
  return cache.emplace(steps, std::move(s)).first->second;
}

void BM_Serial(benchmark::State& state) {
  const auto& s = setup(static_cast<int>(state.range(0)));
  HamiltonianLayer out;
  for (auto _ : state) {
    serial::hamiltonian_layer(s.u, s.shape, s.lattice.y_nodes, {&s.ask, &s.bid}, s.qs, out);
    benchmark::DoNotOptimize(out.ask.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.shape.size()));
}

void BM_Parallel(benchmark::State& state) {
  const auto& s = setup(static_cast<int>(state.range(0)));
  HamiltonianLayer out;
  for (auto _ : state) {
    parallel::hamiltonian_layer(s.u, s.shape, s.table, {&s.ask, &s.bid}, s.qs, out);
    benchmark::DoNotOptimize(out.ask.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.shape.size()));
}

void BM_Shortcut(benchmark::State& state) {
  const auto& s = setup(static_cast<int>(state.range(0)));
  HamiltonianLayer out;
  for (auto _ : state) {
    shortcut::hamiltonian_layer(s.u, s.shape, s.lattice.y_nodes, s.table, {&s.ask, &s.bid}, s.qs, out);
    benchmark::DoNotOptimize(out.ask.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.shape.size()));
}

void BM_Solve(benchmark::State& state) {
  const auto model = presets::baseline(10, 600, 10);
  const auto lattice = make_lattice(model.params, stable_time_steps(model), 70);
  SolveOptions o;
  o.method = static_cast<HamiltonianMethod>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_hjb(model, lattice, o).diagnostics.max_value);
}

}  // namespace

BENCHMARK(BM_Serial)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Shortcut)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solve)
    ->ArgName("method")
    ->Arg(static_cast<int>(HamiltonianMethod::serial))
    ->Arg(static_cast<int>(HamiltonianMethod::parallel))
    ->Arg(static_cast<int>(HamiltonianMethod::shortcut))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
