#include "uzmm/hjb_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "uzmm/csv.hpp"
#include "uzmm/hamiltonian.hpp"

namespace uzmm {

std::pair<GridMeasure, GridMeasure> grid_measures(const MarketModel& model) {
  const double h = model.params.volume_step();
  return {on_grid(model.ask_measure, h), on_grid(model.bid_measure, h)};
}

namespace {

void check_lattice(const ModelParams& p, const Lattice& lattice) {
  const double tol = 1e-12 * std::max(1.0, p.horizon);
  if (std::abs(lattice.horizon() - p.horizon) > tol)
    throw ValidationError("lattice horizon does not match the model horizon");
  if (std::abs(lattice.y_nodes.back() - p.ybar()) > 1e-12 * p.ybar())
    throw ValidationError("lattice y range does not match delta (eta + 1/2)");
}

std::set<int> snapshot_steps(const Lattice& lattice, const SolveOptions& options) {
  std::set<int> steps;
  if (options.keep_all) {
    for (int k = 0; k <= lattice.n_t; ++k) steps.insert(k);
    return steps;
  }
  if (options.snapshot_times.empty()) steps.insert(0);
  for (double t : options.snapshot_times) {
    if (!(t >= 0.0 && t <= lattice.horizon()))
      throw ValidationError("snapshot time outside [0, T]");
    steps.insert(lattice.nearest_step(t));
  }
  return steps;
}

void rates_at(const Intensity& intensity, double t, std::span<const double> ys,
              std::vector<double>& out) {
  out.resize(ys.size());
  for (std::size_t j = 0; j < ys.size(); ++j) out[j] = intensity.rate(t, ys[j]);
}

class LayerEvaluator {
 public:
  LayerEvaluator(const MarketModel& model, const Lattice& lattice, HamiltonianMethod method)
      : qs_(QuoteSpace::from_params(model.params)),
        shape_{model.params.inventory_levels(), lattice.n_y + 1},
        y_nodes_(lattice.y_nodes),
        method_(method) {
    std::tie(ask_, bid_) = grid_measures(model);
    if (method_ != HamiltonianMethod::serial)
      discount_ = kernels::DiscountTable::build(qs_, y_nodes_, std::max(ask_.cap_index, bid_.cap_index));
  }

  long evaluate(std::span<const double> u, kernels::HamiltonianLayer& out) const {
    const kernels::MeasurePair mu{&ask_, &bid_};
    switch (method_) {
      case HamiltonianMethod::serial:
        kernels::serial::hamiltonian_layer(u, shape_, y_nodes_, mu, qs_, out);
        return 0;
      case HamiltonianMethod::parallel:
        kernels::parallel::hamiltonian_layer(u, shape_, discount_, mu, qs_, out);
        return 0;
      case HamiltonianMethod::shortcut:
        return kernels::shortcut::hamiltonian_layer(u, shape_, y_nodes_, discount_, mu, qs_, out);
    }
    return 0;
  }

  const kernels::LayerShape& shape() const { return shape_; }

 private:
  QuoteSpace qs_;
  kernels::LayerShape shape_;
  std::vector<double> y_nodes_;
  HamiltonianMethod method_;
  GridMeasure ask_, bid_;
  kernels::DiscountTable discount_;
};

}  // namespace

HjbSolution solve_hjb(const MarketModel& model, const Lattice& lattice,
                      const SolveOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const auto& p = model.params;
  validate(p);
  if (!p.discrete()) throw ValidationError("the HJB solver needs a finite volume grid (volume_steps)");
  check_lattice(p, lattice);

  const LayerEvaluator evaluator(model, lattice, options.method);
  const auto shape = evaluator.shape();
  const int levels = shape.levels;
  const int nodes = shape.nodes;
  const double dt = lattice.dt();
  const double sigma2 = p.volatility * p.volatility;
  const double gamma = p.risk_aversion;

  HjbSolution sol{lattice, ValueGrid(shape), PolicyGrid(shape, p.volume_step()), {}};
  auto& diag = sol.diagnostics;
  diag.stability = stability_number(model, dt);
  if (diag.stability > 1.0) {
    std::ostringstream msg;
    msg << "explicit coupling stability number " << diag.stability
        << " exceeds 1; consider n_t >= " << stable_time_steps(model);
    diag.warnings.push_back(msg.str());
    diag.stability_warning = true;
  }
  const auto keep = snapshot_steps(lattice, options);

  std::vector<double> reaction(levels);
  std::vector<double> growth(levels);
  for (int i = 0; i < levels; ++i) {
    const double q = p.inventory(i);
    reaction[i] = 0.5 * sigma2 * gamma * gamma * q * q;
    growth[i] = std::exp(reaction[i] * dt);
  }

  const bool literal = options.scheme == TimeScheme::literal;
  const bool steady = model.ask_intensity.time_independent() && model.bid_intensity.time_independent();
  std::vector<double> lam_a, lam_b;
  rates_at(model.ask_intensity, lattice.t_nodes[lattice.n_t], lattice.y_nodes, lam_a);
  rates_at(model.bid_intensity, lattice.t_nodes[lattice.n_t], lattice.y_nodes, lam_b);

  auto build_systems = [&](std::vector<NonlocalSystem>& out) {
    out.clear();
    out.reserve(levels);
    for (int i = 0; i < levels; ++i) {
      LinearCoefficients c{0.5 * sigma2, -sigma2 * gamma * p.inventory(i), 0.0, {}};
      if (literal) {
        c.reaction = reaction[i];
        c.reaction_profile.resize(nodes);
        for (int j = 0; j < nodes; ++j) c.reaction_profile[j] = -lam_a[j] - lam_b[j];
      }
      out.emplace_back(lattice, c, dt);
      diag.upwind_rows = diag.upwind_rows || out.back().upwind();
    }
  };
  std::vector<NonlocalSystem> systems;
  if (!literal || steady) {
    if (!steady) {
      rates_at(model.ask_intensity, lattice.t_nodes[lattice.n_t - 1], lattice.y_nodes, lam_a);
      rates_at(model.bid_intensity, lattice.t_nodes[lattice.n_t - 1], lattice.y_nodes, lam_b);
    }
    build_systems(systems);
  }

  std::vector<double> u(shape.size());
  for (int i = 0; i < levels; ++i) {
    const double terminal = -std::exp(gamma * model.penalty(p.inventory(i)));
    if (!std::isfinite(terminal)) throw NumericalError("terminal utility overflows");
    std::fill_n(u.begin() + static_cast<std::ptrdiff_t>(i) * nodes, nodes, terminal);
  }
  diag.min_value = *std::min_element(u.begin(), u.end());
  diag.max_value = *std::max_element(u.begin(), u.end());
  if (keep.count(lattice.n_t)) sol.values.put(lattice.n_t, u);

  std::vector<double> next(shape.size());
  kernels::HamiltonianLayer ham;
  for (int k = lattice.n_t;; --k) {
    diag.shortcut_fallbacks += evaluator.evaluate(u, ham);
    if (options.observer) options.observer(LayerEvent{k, lattice.t_nodes[k], u, ham});
    if (keep.count(k)) sol.policy.put(k, ham.ask_quote, ham.bid_quote);
    if (k == 0) break;

    const double t_new = lattice.t_nodes[k - 1];
    if (!steady) {
      rates_at(model.ask_intensity, t_new, lattice.y_nodes, lam_a);
      rates_at(model.bid_intensity, t_new, lattice.y_nodes, lam_b);
      if (literal) build_systems(systems);
    }

#pragma omp parallel
    {
      std::vector<double> rhs(nodes);
#pragma omp for schedule(static)
      for (int i = 0; i < levels; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * nodes;
        for (int j = 1; j + 1 < nodes; ++j) {
          const double v = u[row + j];
          if (literal) {
            rhs[j] = v + dt * (lam_a[j] * ham.ask[row + j] + lam_b[j] * ham.bid[row + j]);
          } else {
            const double g = lam_a[j] * (ham.ask[row + j] - v) + lam_b[j] * (ham.bid[row + j] - v);
            rhs[j] = growth[i] * (v + dt * g);
          }
        }
        rhs[0] = 0.0;
        rhs[nodes - 1] = 0.0;
        systems[i].solve(rhs, std::span<double>(next.data() + row, nodes));
      }
    }

    double lo = next[0], hi = next[0];
    for (double v : next) {
      if (!std::isfinite(v) || v >= 0.0) {
        std::ostringstream msg;
        msg << "utility left the negative reals at t = " << t_new << " (value " << v << ")";
        throw NumericalError(msg.str());
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    diag.min_value = std::min(diag.min_value, lo);
    diag.max_value = std::max(diag.max_value, hi);
    u.swap(next);
    if (keep.count(k - 1)) sol.values.put(k - 1, u);
  }

  diag.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sol;
}

PolicyLayer extract_policy(std::span<const double> values, const MarketModel& model,
                           const Lattice& lattice) {
  const LayerEvaluator evaluator(model, lattice, HamiltonianMethod::parallel);
  if (values.size() != evaluator.shape().size())
    throw std::invalid_argument("value layer has the wrong size");
  for (double v : values)
    if (!(v < 0.0)) throw ValidationError("policy extraction needs a strictly negative layer");
  kernels::HamiltonianLayer ham;
  evaluator.evaluate(values, ham);
  return {std::move(ham.ask_quote), std::move(ham.bid_quote)};
}

// ---------------------------------------------------------------------------

PlatformStepper::PlatformStepper(const MarketModel& model, const Lattice& lattice)
    : model_(model),
      lattice_(lattice),
      system_(lattice, {0.5 * model.params.volatility * model.params.volatility, 0.0, 0.0, {}},
              lattice.dt()),
      shape_{model.params.inventory_levels(), lattice.n_y + 1},
      stored_(shape_),
      current_(lattice.n_t) {
  check_lattice(model.params, lattice);
  std::tie(ask_mu_, bid_mu_) = grid_measures(model);
  w_.assign(shape_.size(), 0.0);
  next_.assign(shape_.size(), 0.0);
}

void PlatformStepper::keep(std::vector<int> steps) {
  keep_ = std::move(steps);
  if (std::count(keep_.begin(), keep_.end(), current_)) stored_.put(current_, w_);
}

namespace {

// sum_z mu(z) (W(R) - W(Q) + q ^ z), R the inventory after filling q ^ z.
double expected_gain(const GridMeasure& mu, int quote, int i, int sign, const double* w,
                     int nodes, double h) {
  const double here = w[static_cast<std::size_t>(i) * nodes];
  double sum = 0.0;
  double tail = 1.0;
  for (std::size_t m = 0; m < mu.size() && mu.index[m] <= quote; ++m) {
    const int a = mu.index[m];
    sum += mu.mass[m] * (w[static_cast<std::size_t>(i + sign * a) * nodes] - here + a * h);
    tail = mu.tail[m];
  }
  if (tail > 0.0)
    sum += tail * (w[static_cast<std::size_t>(i + sign * quote) * nodes] - here + quote * h);
  return sum;
}

}  // namespace

void PlatformStepper::step(int step, std::span<const std::uint16_t> ask_quotes,
                           std::span<const std::uint16_t> bid_quotes) {
  if (step != current_ || step < 1) throw std::logic_error("platform steps must run backward from n_t");
  if (ask_quotes.size() != shape_.size() || bid_quotes.size() != shape_.size())
    throw std::invalid_argument("policy layer has the wrong size");
  const int levels = shape_.levels;
  const int nodes = shape_.nodes;
  const int n = model_.params.steps();
  const double h = model_.params.volume_step();
  const double dt = lattice_.dt();
  const double t_new = lattice_.t_nodes[step - 1];
  for (std::size_t at = 0; at < shape_.size(); ++at) {
    const int i = static_cast<int>(at / nodes);
    if (ask_quotes[at] > std::min(ask_mu_.cap_index, i) ||
        bid_quotes[at] > std::min(bid_mu_.cap_index, 2 * n - i))
      throw ValidationError("policy quote is not admissible");
  }

#pragma omp parallel
  {
    std::vector<double> rhs(nodes);
#pragma omp for schedule(static)
    for (int i = 0; i < levels; ++i) {
      const std::size_t row = static_cast<std::size_t>(i) * nodes;
      for (int j = 1; j + 1 < nodes; ++j) {
        const double y = lattice_.y_nodes[j];
        const double ea = expected_gain(ask_mu_, ask_quotes[row + j], i, -1, w_.data() + j, nodes, h);
        const double eb = expected_gain(bid_mu_, bid_quotes[row + j], i, +1, w_.data() + j, nodes, h);
        rhs[j] = w_[row + j] + dt * (model_.ask_intensity.rate(t_new, y) * ea +
                                     model_.bid_intensity.rate(t_new, y) * eb);
      }
      rhs[0] = 0.0;
      rhs[nodes - 1] = 0.0;
      system_.solve(rhs, std::span<double>(next_.data() + row, nodes));
    }
  }
  for (double v : next_)
    if (!std::isfinite(v)) throw NumericalError("platform value is not finite");
  w_.swap(next_);
  current_ = step - 1;
  if (std::count(keep_.begin(), keep_.end(), current_)) stored_.put(current_, w_);
}

void PlatformStepper::on_layer(const LayerEvent& event) {
  if (event.step >= 1) step(event.step, event.hamiltonian.ask_quote, event.hamiltonian.bid_quote);
}

ValueGrid solve_platform(const PolicyGrid& policy, const MarketModel& model,
                         const Lattice& lattice, const std::vector<int>& keep_steps) {
  PlatformStepper stepper(model, lattice);
  stepper.keep(keep_steps);
  for (int k = lattice.n_t; k >= 1; --k) {
    const int src = policy.at_or_before(k);
    stepper.step(k, policy.ask_layer(src), policy.bid_layer(src));
  }
  return stepper.stored();
}

// ---------------------------------------------------------------------------

std::optional<double> volume_imbalance(double ask_quote, double bid_quote) {
  const double total = ask_quote + bid_quote;
  if (total == 0.0) return std::nullopt;
  return (bid_quote - ask_quote) / total;
}

ImbalanceTable imbalance_curves(const PolicyGrid& policy, const Lattice& lattice,
                                const ModelParams& params, double time,
                                std::span<const double> inventories) {
  const int step = policy.at_or_before(lattice.step_at_or_before(time));
  ImbalanceTable table;
  table.time = lattice.t_nodes[step];
  table.ys = lattice.y_nodes;
  table.inventories.assign(inventories.begin(), inventories.end());
  std::vector<int> rows;
  for (double q : inventories) rows.push_back(params.inventory_index(q));
  for (int j = 0; j <= lattice.n_y; ++j) {
    std::vector<std::optional<double>> line;
    for (int i : rows) line.push_back(volume_imbalance(policy.ask(step, i, j), policy.bid(step, i, j)));
    table.values.push_back(std::move(line));
  }
  return table;
}

void write_values_csv(const std::filesystem::path& path, const ValueGrid& values,
                      const Lattice& lattice, const ModelParams& params) {
  CsvWriter out(path, {"t", "Q", "y", "u"});
  for (int k : values.steps()) {
    const auto& layer = values.layer(k);
    for (int i = 0; i < values.shape().levels; ++i)
      for (int j = 0; j < values.shape().nodes; ++j)
        out.row({lattice.t_nodes[k], params.inventory(i), lattice.y_nodes[j],
                 layer[values.offset(i, j)]});
  }
}

void write_policy_csv(const std::filesystem::path& path, const PolicyGrid& policy,
                      const Lattice& lattice, const ModelParams& params) {
  CsvWriter out(path, {"t", "Q", "y", "q_ask", "q_bid"});
  for (int k : policy.steps())
    for (int i = 0; i < policy.shape().levels; ++i)
      for (int j = 0; j < policy.shape().nodes; ++j)
        out.row({lattice.t_nodes[k], params.inventory(i), lattice.y_nodes[j], policy.ask(k, i, j),
                 policy.bid(k, i, j)});
}

void write_imbalance_csv(const std::filesystem::path& path, const ImbalanceTable& table) {
  CsvWriter out(path, {"y", "Q", "I"});
  for (std::size_t j = 0; j < table.ys.size(); ++j)
    for (std::size_t c = 0; c < table.inventories.size(); ++c)
      out.row(std::vector<std::optional<double>>{table.ys[j], table.inventories[c], table.values[j][c]});
}

}  // namespace uzmm
