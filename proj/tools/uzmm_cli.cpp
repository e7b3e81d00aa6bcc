// uzmm: solve, imbalance, tick-sweep, simulate and verify front end.
//
// Exit codes: 0 ok, 1 validation or usage error, 2 numerical failure,
// 3 verification failure.

#include <omp.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "manifest.hpp"
#include "uzmm/config.hpp"
#include "uzmm/csv.hpp"
#include "uzmm/hjb_solver.hpp"
#include "uzmm/montecarlo.hpp"
#include "uzmm/tick_sweep.hpp"
#include "uzmm/verification.hpp"

namespace fs = std::filesystem;
using namespace uzmm;

namespace {

struct Globals {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 0;
  std::vector<std::string> argv;
};

struct VerificationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
  return s;
}

ConfigDocument load_config(const Globals& g) {
  if (g.config.empty()) throw ValidationError("--config is required for this command");
  return ConfigDocument::from_file(g.config);
}

// n_t and n_y from [grid]; n_t = auto picks the smallest stable count.
std::pair<int, int> grid_size(const ConfigDocument& doc, const MarketModel& model) {
  const int n_y = doc.get_int("grid", "n_y", 70);
  const auto n_t_text = doc.find("grid", "n_t").value_or("auto");
  if (n_t_text == "auto") {
    const double factor = doc.get_double("grid", "time_step_factor", 1.0);
    return {static_cast<int>(std::ceil(stable_time_steps(model) * factor)), n_y};
  }
  return {doc.get_int("grid", "n_t"), n_y};
}

HamiltonianMethod parse_method(const std::string& s) {
  if (s == "serial") return HamiltonianMethod::serial;
  if (s == "parallel") return HamiltonianMethod::parallel;
  if (s == "shortcut") return HamiltonianMethod::shortcut;
  throw ValidationError("method must be serial, parallel or shortcut, got '" + s + "'");
}

fs::path write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  return path;
}

// Also writes resolved.ini: the config with command-line overrides applied.
cli::RunManifest start_manifest(const Globals& g, const std::string& command, const ConfigDocument& doc) {
  cli::RunManifest m(g.out, command, g.config, doc.to_string(), g.seed,
                     g.threads > 0 ? g.threads : omp_get_max_threads(), g.argv);
  m.add_artifact(write_text(fs::path(g.out) / "resolved.ini", doc.to_string()));
  return m;
}

void report_warnings(const SolverDiagnostics& d, cli::RunManifest& manifest) {
  for (const auto& w : d.warnings) {
    std::cerr << "warning: " << w << '\n';
    manifest.note("warning: " + w);
  }
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::vector<double> snapshots;
  std::string method;
  bool platform = false;
};

int cmd_solve(const Globals& g, const SolveArgs& a) {
  auto doc = load_config(g);
  if (!a.snapshots.empty()) doc.set("grid", "snapshot_times", join(a.snapshots));
  if (!a.method.empty()) doc.set("grid", "method", a.method);
  const auto model = build_model(doc);
  const auto [n_t, n_y] = grid_size(doc, model);
  auto manifest = start_manifest(g, "solve", doc);
  const auto lattice = make_lattice(model.params, n_t, n_y);

  SolveOptions o;
  if (doc.find("grid", "snapshot_times")) o.snapshot_times = doc.get_list("grid", "snapshot_times");
  o.method = parse_method(doc.find("grid", "method").value_or("parallel"));
  std::optional<PlatformStepper> platform;
  std::vector<int> keep;
  for (double t : o.snapshot_times) keep.push_back(lattice.nearest_step(t));
  if (keep.empty()) keep.push_back(0);
  if (a.platform) {
    platform.emplace(model, lattice);
    platform->keep(keep);
    o.observer = [&](const LayerEvent& e) { platform->on_layer(e); };
  }
  const auto sol = solve_hjb(model, lattice, o);
  report_warnings(sol.diagnostics, manifest);

  const fs::path out = g.out;
  write_values_csv(out / "value.csv", sol.values, lattice, model.params);
  write_policy_csv(out / "policy.csv", sol.policy, lattice, model.params);
  manifest.add_artifact(out / "value.csv");
  manifest.add_artifact(out / "policy.csv");
  if (platform) {
    write_values_csv(out / "platform.csv", platform->stored(), lattice, model.params);
    manifest.add_artifact(out / "platform.csv");
  }
  manifest.add_artifact(write_text(out / "policy.gp",
      "# optimal quotes against y at the first stored time, one curve per inventory\n"
      "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'y'\n"
      "set ylabel 'q_ask'\nt0 = real(system(\"awk -F, 'NR==2{print $1}' policy.csv\"))\n"
      "plot for [Q in '-15 -8 0 8 15'] 'policy.csv' using ($1==t0 && $2==Q ? $3 : 1/0):4 "
      "with linespoints title 'Q='.Q\n"));

  std::cout << "solved n_t=" << n_t << " n_y=" << n_y << " in " << sol.diagnostics.seconds
            << " s; u range [" << sol.diagnostics.min_value << ", " << sol.diagnostics.max_value
            << "]\n";
  manifest.finish("ok");
  return 0;
}

// ---------------------------------------------------------------------------
// imbalance

struct ImbalanceArgs {
  double time = 0.0;
  std::vector<double> inventories{-15, -8, 0, 8, 15};
};

int cmd_imbalance(const Globals& g, const ImbalanceArgs& a) {
  auto doc = load_config(g);
  doc.set("imbalance", "time", format_number(a.time));
  doc.set("imbalance", "inventories", join(a.inventories));
  const auto model = build_model(doc);
  const auto [n_t, n_y] = grid_size(doc, model);
  auto manifest = start_manifest(g, "imbalance", doc);
  const auto lattice = make_lattice(model.params, n_t, n_y);
  for (double q : a.inventories) model.params.inventory_index(q);
  SolveOptions o;
  o.snapshot_times = {a.time};
  o.method = parse_method(doc.find("grid", "method").value_or("parallel"));
  const auto sol = solve_hjb(model, lattice, o);
  report_warnings(sol.diagnostics, manifest);
  const auto table = imbalance_curves(sol.policy, lattice, model.params, a.time, a.inventories);
  const fs::path out = g.out;
  write_imbalance_csv(out / "imbalance.csv", table);
  manifest.add_artifact(out / "imbalance.csv");
  std::ostringstream gp;
  gp << "# volume imbalance against y, one curve per inventory\n"
        "set datafile separator ','\nset xlabel 'y'\nset ylabel 'imbalance'\nset yrange [-1:1]\n"
        "plot for [Q in '" << std::regex_replace(join(a.inventories), std::regex(","), " ") << "'] 'imbalance.csv' using ($2==Q ? $1 : 1/0):3 "
        "with linespoints title 'Q='.Q\n";
  manifest.add_artifact(write_text(out / "imbalance.gp", gp.str()));
  std::cout << "imbalance at t=" << table.time << " for " << a.inventories.size() << " inventories\n";
  manifest.finish("ok");
  return 0;
}

// ---------------------------------------------------------------------------
// tick-sweep

struct SweepArgs {
  std::vector<double> deltas;
  std::vector<double> volatilities;
  bool profiles = false;
};

int cmd_tick_sweep(const Globals& g, const SweepArgs& a) {
  auto doc = load_config(g);
  if (!a.deltas.empty()) doc.set("sweep", "deltas", join(a.deltas));
  if (!a.volatilities.empty()) doc.set("sweep", "volatilities", join(a.volatilities));
  if (a.profiles) doc.set("sweep", "profiles", "1");
  const auto model = build_model(doc);

  SweepSettings s;
  if (doc.find("sweep", "deltas")) {
    s.deltas = doc.get_list("sweep", "deltas");
  } else {
    s.deltas = log_spaced(doc.get_double("sweep", "delta_min"), doc.get_double("sweep", "delta_max"),
                          doc.get_int("sweep", "count"));
  }
  s.eta0 = doc.get_double("sweep", "eta0", s.eta0);
  s.delta0 = doc.get_double("sweep", "delta0", s.delta0);
  s.n_y = doc.get_int("grid", "n_y", s.n_y);
  const auto n_t = doc.find("grid", "n_t").value_or("auto");
  s.n_t = n_t == "auto" ? 0 : doc.get_int("grid", "n_t");
  s.time_step_factor = doc.get_double("grid", "time_step_factor", 1.0);
  s.method = parse_method(doc.find("grid", "method").value_or("shortcut"));
  s.profiles = doc.get_int("sweep", "profiles", 0) != 0;
  std::vector<double> sigmas = doc.find("sweep", "volatilities") ? doc.get_list("sweep", "volatilities")
                                                                 : std::vector<double>{model.params.volatility};

  auto manifest = start_manifest(g, "tick-sweep", doc);
  const fs::path out = g.out;
  CsvWriter argmax(out / "argmax.csv", {"sigma", "argmax_delta", "max_mean_W"});
  std::string plots;
  for (double sigma : sigmas) {
    const auto r = run_sweep(model, s, sigma);
    const std::string tag = sigmas.size() > 1 ? "_sigma" + format_number(sigma) : "";
    write_sweep_csv(out / ("sweep" + tag + ".csv"), r);
    manifest.add_artifact(out / ("sweep" + tag + ".csv"));
    if (s.profiles) {
      write_profiles_csv(out / ("profiles" + tag + ".csv"), r);
      manifest.add_artifact(out / ("profiles" + tag + ".csv"));
    }
    for (double d : r.excluded) {
      std::cerr << "excluded delta " << d << ": eta >= 1/2\n";
      manifest.note("excluded delta " + format_number(d));
    }
    argmax.row({sigma, r.argmax_delta, r.max_mean_w});
    plots += (plots.empty() ? "" : ", ") + std::string("'sweep") + tag + ".csv' using 1:3 with linespoints title 'sigma=" +
             format_number(sigma) + "'";
    std::cout << "sigma " << sigma << ": argmax delta " << r.argmax_delta << " (mean W " << r.max_mean_w
              << ", " << r.rows.size() << " ticks)\n";
  }
  manifest.add_artifact(out / "argmax.csv");
  manifest.add_artifact(write_text(out / "tick_sweep.gp",
      "# platform value averaged over y against the tick size\n"
      "set datafile separator ','\nset logscale x\nset xlabel 'tick'\nset ylabel 'mean W'\nplot " +
          plots + "\n"));
  manifest.finish("ok");
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string policy_file;
  std::optional<int> paths;
  std::optional<double> dt;
  std::optional<double> start_q, start_y, start_t;
};

struct LoadedPolicy {
  Lattice lattice;
  PolicyGrid grid;
};

// Rebuilds a policy grid from policy.csv on the lattice of the config.
LoadedPolicy read_policy(const fs::path& path, const MarketModel& model, int n_t, int n_y) {
  LoadedPolicy p{make_lattice(model.params, n_t, n_y), {}};
  const auto& params = model.params;
  const kernels::LayerShape shape{params.inventory_levels(), n_y + 1};
  p.grid = PolicyGrid(shape, params.volume_step());
  const auto table = read_csv(path);
  const std::size_t ct = table.column("t"), cq = table.column("Q"), cy = table.column("y"),
                    ca = table.column("q_ask"), cb = table.column("q_bid");
  std::map<int, std::pair<std::vector<std::uint16_t>, std::vector<std::uint16_t>>> layers;
  std::map<int, std::size_t> filled;
  const double h = params.volume_step();
  for (const auto& row : table.rows) {
    for (std::size_t c : {ct, cq, cy, ca, cb})
      if (!row.at(c)) throw ValidationError("policy file has an empty cell");
    const int k = p.lattice.nearest_step(*row[ct]);
    if (std::abs(p.lattice.t_nodes[k] - *row[ct]) > 1e-9 * std::max(1.0, params.horizon))
      throw ValidationError("policy time " + format_number(*row[ct]) + " is not on the config's time grid");
    const int j = p.lattice.nearest_node(*row[cy]);
    if (std::abs(p.lattice.y_nodes[j] - *row[cy]) > 1e-9 * params.ybar())
      throw ValidationError("policy y " + format_number(*row[cy]) + " is not on the config's y grid");
    const int i = params.inventory_index(*row[cq]);
    const auto qa = grid_multiple(*row[ca], h), qb = grid_multiple(*row[cb], h);
    if (!qa || !qb || *qa < 0 || *qb < 0) throw ValidationError("policy quote off the volume grid");
    auto& layer = layers[k];
    if (layer.first.empty()) {
      layer.first.assign(shape.size(), 0);
      layer.second.assign(shape.size(), 0);
    }
    layer.first[i * shape.nodes + j] = static_cast<std::uint16_t>(*qa);
    layer.second[i * shape.nodes + j] = static_cast<std::uint16_t>(*qb);
    ++filled[k];
  }
  if (layers.empty()) throw ValidationError("policy file has no rows");
  for (auto& [k, layer] : layers) {
    if (filled[k] != shape.size())
      throw ValidationError("policy layer at t = " + format_number(p.lattice.t_nodes[k]) + " is incomplete");
    p.grid.put(k, std::move(layer.first), std::move(layer.second));
  }
  return p;
}

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  auto doc = load_config(g);
  if (a.paths) doc.set("simulation", "n_paths", std::to_string(*a.paths));
  if (a.dt) doc.set("simulation", "dt", format_number(*a.dt));
  if (a.start_q) doc.set("simulation", "start_inventory", format_number(*a.start_q));
  if (a.start_y) doc.set("simulation", "start_y", format_number(*a.start_y));
  if (a.start_t) doc.set("simulation", "start_time", format_number(*a.start_t));
  if (!a.policy_file.empty()) {
    doc.set("simulation", "policy", "file");
    doc.set("simulation", "policy_file", fs::absolute(a.policy_file).string());
  }
  const auto model = build_model(doc);

  SimConfig c;
  c.n_paths = doc.get_int("simulation", "n_paths", c.n_paths);
  c.dt = doc.get_double("simulation", "dt", c.dt);
  c.start_inventory = doc.get_double("simulation", "start_inventory", 0.0);
  c.start_y = doc.get_double("simulation", "start_y", 0.0);
  c.start_time = doc.get_double("simulation", "start_time", 0.0);
  c.seed = g.seed;
  const std::string kind = doc.find("simulation", "policy").value_or("zero");

  auto manifest = start_manifest(g, "simulate", doc);
  std::optional<LoadedPolicy> loaded;
  std::optional<HjbSolution> solved;
  if (kind == "zero") {
    c.policy = QuotePolicy::zero();
  } else if (kind == "constant") {
    c.policy = QuotePolicy::constant(doc.get_double("simulation", "ask"), doc.get_double("simulation", "bid"));
  } else if (kind == "file") {
    const auto [n_t, n_y] = grid_size(doc, model);
    loaded = read_policy(doc.get_string("simulation", "policy_file"), model, n_t, n_y);
    c.policy = QuotePolicy::from_grid(loaded->grid, loaded->lattice);
  } else if (kind == "solve") {
    const auto [n_t, n_y] = grid_size(doc, model);
    loaded = LoadedPolicy{make_lattice(model.params, n_t, n_y), {}};
    SolveOptions o;
    o.keep_all = true;
    solved = solve_hjb(model, loaded->lattice, o);
    report_warnings(solved->diagnostics, manifest);
    c.policy = QuotePolicy::from_grid(solved->policy, loaded->lattice);
  } else {
    throw ValidationError("[simulation] policy must be zero, constant, file or solve, got '" + kind + "'");
  }

  PathResult first;
  const auto e = estimate_utility(c, model, &first);
  const fs::path out = g.out;
  write_trades_csv(out / "trades.csv", first.trades);
  write_path_csv(first.path, out / "path.csv");
  write_jumps_csv(first.path, out / "jumps.csv");
  for (const char* f : {"trades.csv", "path.csv", "jumps.csv"}) manifest.add_artifact(out / f);

  std::ostringstream s;
  s << "mean = " << format_number(e.mean) << '\n';
  if (std::isnan(e.std_error)) {
    s << "std_error = undefined\n";
    std::cerr << "warning: standard error is undefined for a single path\n";
  } else {
    s << "std_error = " << format_number(e.std_error) << '\n';
  }
  s << "n_paths = " << e.n_paths << '\n'
    << "mean_pnl = " << format_number(e.mean_pnl) << '\n'
    << "mean_fills = " << format_number(e.mean_fills) << '\n'
    << "envelope_violations = " << e.envelope_violations << '\n'
    << "admissibility_violations = " << e.admissibility_violations << '\n';
  if (kind == "zero") {
    const double exact = zero_policy_utility(model, c.start_time, c.start_inventory);
    s << "closed_form = " << format_number(exact) << '\n';
    if (e.std_error > 0) s << "z = " << format_number((e.mean - exact) / e.std_error) << '\n';
  }
  if (solved) {
    const double pde = solved->values.at(loaded->lattice.step_at_or_before(c.start_time),
                                         model.params.inventory_index(c.start_inventory),
                                         loaded->lattice.nearest_node(c.start_y));
    s << "pde_value = " << format_number(pde) << '\n';
  }
  manifest.add_artifact(write_text(out / "summary.txt", s.str()));
  manifest.add_artifact(write_text(out / "path.gp",
      "# efficient price and mid-price of the first simulated path\n"
      "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'time'\n"
      "plot 'path.csv' using 1:2 with lines, 'path.csv' using 1:4 with steps\n"));
  std::cout << s.str();
  manifest.finish("ok");
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string level = "quick";
  bool slow = false;
};

int cmd_verify(const Globals& g, const VerifyArgs& a) {
  if (a.level != "quick" && a.level != "full") throw ValidationError("--level must be quick or full");
  ConfigDocument doc;
  doc.set("verify", "level", a.level);
  doc.set("verify", "slow", a.slow ? "1" : "0");
  auto manifest = start_manifest(g, "verify", doc);
  const auto level = a.level == "full" ? VerifyLevel::full : VerifyLevel::quick;
  const auto results = run_checks(level, a.slow, [](const CheckResult& r) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.id << ' ' << r.title << ": " << r.measured
              << " [expected " << r.expected << "]" << std::endl;
  });
  nlohmann::ordered_json report;
  report["level"] = a.level;
  bool all = true;
  auto& list = report["criteria"] = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    all = all && r.passed;
    list.push_back({{"id", r.id}, {"title", r.title}, {"passed", r.passed}, {"measured", r.measured},
                    {"expected", r.expected}, {"seconds", r.seconds}});
  }
  report["passed"] = all;
  const fs::path out = fs::path(g.out) / "report.json";
  manifest.add_artifact(write_text(out, report.dump(2) + "\n"));
  manifest.finish(all ? "ok" : "verification_failed");
  if (!all) throw VerificationFailed("one or more criteria failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  for (int k = 0; k < argc; ++k) g.argv.emplace_back(argv[k]);

  CLI::App app{"Market making with an uncertainty-zone mid-price: solver, simulator and checks"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_option("--config", g.config, "Run configuration (INI)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve the market maker's HJB system and export u and the quotes");
  s->add_option("--snapshot-times", solve.snapshots, "Times to export (default: t = 0)")->delimiter(',');
  s->add_option("--method", solve.method, "Hamiltonian kernel: serial, parallel or shortcut");
  s->add_flag("--platform", solve.platform, "Also solve the platform PDE under the optimal policy");

  ImbalanceArgs imb;
  auto* im = app.add_subcommand("imbalance", "Quoted volume imbalance against y");
  im->add_option("--time", imb.time, "Time of the curves");
  im->add_option("--inventories", imb.inventories, "Inventories, one curve each")->delimiter(',');

  SweepArgs sweep;
  auto* ts = app.add_subcommand("tick-sweep", "Platform volume averaged over y against the tick size");
  ts->add_option("--deltas", sweep.deltas, "Tick grid (overrides [sweep])")->delimiter(',');
  ts->add_option("--volatilities", sweep.volatilities, "One sweep per volatility")->delimiter(',');
  ts->add_flag("--profiles", sweep.profiles, "Write W(0, 0, y) for every tick");

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Monte Carlo estimate of the expected utility");
  sm->add_option("--policy", sim.policy_file, "policy.csv written by solve (on the config's grid)");
  sm->add_option("--paths", sim.paths, "Number of paths");
  sm->add_option("--dt", sim.dt, "Simulation time step");
  sm->add_option("--start-inventory", sim.start_q, "Initial inventory");
  sm->add_option("--start-y", sim.start_y, "Initial signed distance");
  sm->add_option("--start-time", sim.start_t, "Initial time");

  VerifyArgs ver;
  auto* vf = app.add_subcommand("verify", "Run the acceptance checks and write report.json");
  vf->add_option("--level", ver.level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  vf->add_flag("--slow", ver.slow, "Include the fine-grid optimal tick comparison (hours)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (g.threads > 0) omp_set_num_threads(g.threads);
    if (*s) return cmd_solve(g, solve);
    if (*im) return cmd_imbalance(g, imb);
    if (*ts) return cmd_tick_sweep(g, sweep);
    if (*sm) return cmd_simulate(g, sim);
    if (*vf) return cmd_verify(g, ver);
  } catch (const VerificationFailed& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
