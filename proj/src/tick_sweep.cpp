#include "uzmm/tick_sweep.hpp"

#include <algorithm>
#include <cmath>

#include "uzmm/csv.hpp"

namespace uzmm {

double eta_of_delta(double delta, double eta0, double delta0) {
  if (!(delta > 0)) throw ValidationError("tick must be positive");
  return eta0 * std::sqrt(delta0 / delta);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0 && hi >= lo) || count < 1) throw ValidationError("bad log-spaced range");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double ratio = std::log(hi / lo);
  for (int k = 0; k < count; ++k) out[k] = lo * std::exp(ratio * k / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

TickSweepRow sweep_row(const MarketModel& base, double delta, const SweepSettings& s) {
  const double eta = eta_of_delta(delta, s.eta0, s.delta0);
  if (!(eta < 0.5)) throw ValidationError("eta(delta) must stay below 1/2");
  const MarketModel model = base.with_tick(delta, eta);
  const int n_t = s.n_t > 0 ? s.n_t
                            : static_cast<int>(std::ceil(stable_time_steps(model) * s.time_step_factor));
  const Lattice lattice = make_lattice(model.params, n_t, s.n_y);

  PlatformStepper platform(model, lattice);
  platform.keep({0});
  SolveOptions options;
  options.method = s.method;
  options.observer = [&](const LayerEvent& e) { platform.on_layer(e); };
  const auto sol = solve_hjb(model, lattice, options);

  const int centre = model.params.steps();
  const auto& w = platform.stored().layer(0);
  TickSweepRow row;
  row.delta = delta;
  row.eta = eta;
  row.n_t = n_t;
  row.stability = sol.diagnostics.stability;
  row.seconds = sol.diagnostics.seconds;
  row.utility = sol.values.at(0, centre, lattice.nearest_node(0.0));
  double sum = 0.0;
  for (int j = 0; j <= lattice.n_y; ++j) sum += w[platform.stored().offset(centre, j)];
  row.mean_w = sum / (lattice.n_y + 1);
  if (s.profiles) {
    row.ys = lattice.y_nodes;
    for (int j = 0; j <= lattice.n_y; ++j) row.profile.push_back(w[platform.stored().offset(centre, j)]);
  }
  return row;
}

TickSweepResult run_sweep(const MarketModel& base, const SweepSettings& s,
                          std::optional<double> volatility) {
  const MarketModel model = volatility ? base.with_volatility(*volatility) : base;
  TickSweepResult result;
  result.volatility = model.params.volatility;
  auto deltas = s.deltas;
  std::sort(deltas.begin(), deltas.end());
  deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
  for (double d : deltas) {
    if (!(eta_of_delta(d, s.eta0, s.delta0) < 0.5)) {
      result.excluded.push_back(d);
      continue;
    }
    result.rows.push_back(sweep_row(model, d, s));
  }
  if (result.rows.empty()) throw ValidationError("no tick in the sweep grid gives eta < 1/2");
  const auto best = std::max_element(result.rows.begin(), result.rows.end(),
                                     [](const auto& a, const auto& b) { return a.mean_w < b.mean_w; });
  result.argmax_delta = best->delta;
  result.max_mean_w = best->mean_w;
  return result;
}

void write_sweep_csv(const std::filesystem::path& path, const TickSweepResult& result) {
  CsvWriter out(path, {"delta", "eta", "mean_W"});
  for (const auto& r : result.rows) out.row({r.delta, r.eta, r.mean_w});
}

void write_profiles_csv(const std::filesystem::path& path, const TickSweepResult& result) {
  CsvWriter out(path, {"delta", "y", "W"});
  for (const auto& r : result.rows)
    for (std::size_t j = 0; j < r.profile.size(); ++j) out.row({r.delta, r.ys[j], r.profile[j]});
}

}  // namespace uzmm
