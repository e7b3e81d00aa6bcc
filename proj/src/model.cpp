#include "uzmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace uzmm {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

std::string str(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

const char* to_string(Side side) { return side == Side::ask ? "ask" : "bid"; }

std::optional<long> grid_multiple(double x, double step) {
  const double ratio = x / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) return std::nullopt;
  return static_cast<long>(rounded);
}

double ModelParams::volume_step() const {
  if (!volume_steps) fail("continuous volumes have no volume step");
  return inventory_cap / *volume_steps;
}

int ModelParams::steps() const {
  if (!volume_steps) fail("continuous volumes have no volume step");
  return *volume_steps;
}

int ModelParams::inventory_index(double q) const {
  const auto m = grid_multiple(q, volume_step());
  if (!m || std::abs(*m) > steps())
    fail("inventory " + str(q) + " is not on the inventory grid");
  return static_cast<int>(*m) + steps();
}

int ModelParams::ask_cap_steps() const {
  return static_cast<int>(*grid_multiple(ask_cap, volume_step()));
}

int ModelParams::bid_cap_steps() const {
  return static_cast<int>(*grid_multiple(bid_cap, volume_step()));
}

const ModelParams& validate(const ModelParams& p) {
  if (!(p.horizon > 0)) fail("horizon must be positive");
  if (!(p.volatility > 0)) fail("volatility must be positive");
  if (!(p.tick > 0)) fail("tick must be positive");
  if (!(p.risk_aversion > 0)) fail("risk_aversion must be positive");
  if (!(p.inventory_cap > 0)) fail("inventory_cap must be positive");
  if (!(p.zone_ratio > 0 && p.zone_ratio < 0.5))
    fail("eta out of range: zone_ratio must lie in (0, 1/2), got " + str(p.zone_ratio));
  if (p.volume_steps && *p.volume_steps <= 0) fail("volume_steps must be positive");
  for (auto [name, cap] : {std::pair{"ask_cap", p.ask_cap}, std::pair{"bid_cap", p.bid_cap}}) {
    if (!(cap > 0 && cap <= 2 * p.inventory_cap * (1 + 1e-12)))
      fail(std::string(name) + " must lie in (0, 2 * inventory_cap]");
    if (p.volume_steps && !grid_multiple(cap, p.inventory_cap / *p.volume_steps))
      fail(std::string(name) + " " + str(cap) + " is not on the volume grid of step " +
           str(p.inventory_cap / *p.volume_steps));
  }
  return p;
}

// ---------------------------------------------------------------------------

Intensity::Intensity(IntensityShape shape, Side side, const ModelParams& params)
    : shape_(std::move(shape)), side_(side), horizon_(params.horizon), ybar_(params.ybar()) {
  const std::string who = std::string(to_string(side)) + " intensity: ";
  if (const auto* a = std::get_if<AffineIntensity>(&shape_)) {
    if (!(a->level > 0)) fail(who + "affine level B must be positive");
    if (!(std::abs(a->slope) * ybar_ < a->level))
      fail(who + "affine intensity must stay positive: need |A| * ybar < B");
    bound_ = a->level + std::abs(a->slope) * ybar_;
  } else if (const auto* e = std::get_if<ExponentialIntensity>(&shape_)) {
    if (!(e->scale > 0)) fail(who + "exponential scale A must be positive");
    if (!std::isfinite(e->rate)) fail(who + "exponential rate B must be finite");
    bound_ = e->scale;
  } else {
    const auto& t = std::get<TableIntensity>(shape_);
    if (t.times.empty() || t.ys.size() < 2) fail(who + "table needs >= 1 time and >= 2 y samples");
    if (t.rates.size() != t.times.size() * t.ys.size()) fail(who + "table shape mismatch");
    if (!std::is_sorted(t.times.begin(), t.times.end()) ||
        !std::is_sorted(t.ys.begin(), t.ys.end()))
      fail(who + "table axes must be increasing");
    if (t.ys.front() > -ybar_ + 1e-15 || t.ys.back() < ybar_ - 1e-15)
      fail(who + "table must cover [-ybar, ybar]");
    for (double r : t.rates)
      if (!(r > 0) || !std::isfinite(r)) fail(who + "table rates must be positive");
    bound_ = *std::max_element(t.rates.begin(), t.rates.end());
  }
}

bool Intensity::time_independent() const {
  if (const auto* t = std::get_if<TableIntensity>(&shape_)) return t->times.size() == 1;
  return true;
}

double Intensity::operator()(double t, double y) const {
  if (!(y >= -ybar_ * (1 + 1e-12) && y <= ybar_ * (1 + 1e-12)))
    fail("intensity evaluated at y = " + str(y) + " outside [-ybar, ybar]");
  if (!(t >= 0 && t <= horizon_ * (1 + 1e-12)))
    fail("intensity evaluated at t = " + str(t) + " outside [0, T]");
  return rate(t, y);
}

namespace {

// Index i with xs[i] <= x <= xs[i+1] and the weight of xs[i+1]; clamps.
std::pair<std::size_t, double> bracket(const std::vector<double>& xs, double x) {
  if (xs.size() == 1 || x <= xs.front()) return {0, 0.0};
  if (x >= xs.back()) return {xs.size() - 2, 1.0};
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  return {i, (x - xs[i]) / (xs[i + 1] - xs[i])};
}

}  // namespace

double Intensity::rate(double t, double y) const noexcept {
  const double sign = side_ == Side::ask ? 1.0 : -1.0;
  if (const auto* a = std::get_if<AffineIntensity>(&shape_))
    return sign * a->slope * y + a->level;
  if (const auto* e = std::get_if<ExponentialIntensity>(&shape_))
    return e->scale * std::exp(std::min(sign * e->rate * y, 0.0));
  const auto& tab = std::get<TableIntensity>(shape_);
  const std::size_t ny = tab.ys.size();
  const auto [j, wy] = bracket(tab.ys, y);
  auto row = [&](std::size_t i) {
    return (1 - wy) * tab.rates[i * ny + j] + wy * tab.rates[i * ny + j + 1];
  };
  if (tab.times.size() == 1) return row(0);
  const auto [i, wt] = bracket(tab.times, t);
  return (1 - wt) * row(i) + wt * row(i + 1);
}

// ---------------------------------------------------------------------------

ExecutionMeasure ExecutionMeasure::from_atoms(std::vector<Atom> atoms, double cap,
                                              bool allow_degenerate) {
  if (atoms.empty()) fail("execution measure needs at least one atom");
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.volume < b.volume; });
  double total = 0.0;
  for (std::size_t m = 0; m < atoms.size(); ++m) {
    if (!(atoms[m].mass >= 0) || !std::isfinite(atoms[m].mass))
      fail("execution measure masses must be nonnegative");
    if (atoms[m].volume < 0 || atoms[m].volume > cap * (1 + 1e-12))
      fail("execution measure atom " + str(atoms[m].volume) + " outside [0, cap]");
    if (m > 0 && !(atoms[m].volume > atoms[m - 1].volume))
      fail("execution measure atoms must have distinct volumes");
    total += atoms[m].mass;
  }
  if (std::abs(total - 1.0) > 1e-12) fail("execution measure masses must sum to 1");
  ExecutionMeasure mu;
  mu.cap_ = cap;
  const bool cap_supported = std::abs(atoms.back().volume - cap) <= 1e-12 * std::max(1.0, cap) &&
                             atoms.back().mass > 0;
  if (!cap_supported) {
    if (!allow_degenerate) fail("execution measure must put positive mass on its cap");
    mu.degenerate_ = true;
  }
  mu.atoms_ = std::move(atoms);
  return mu;
}

double ExecutionMeasure::tail_mass(double volume) const {
  double s = 0.0;
  for (const auto& a : atoms_)
    if (a.volume > volume) s += a.mass;
  return s;
}

double ExecutionMeasure::expected_fill(double quote) const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.mass * std::min(quote, a.volume);
  return s;
}

ExecutionMeasure power_law_measure(double cap, std::span<const double> volumes, double decay) {
  if (volumes.empty()) fail("power-law measure needs at least one atom volume");
  if (!(decay > 0 && decay <= 1)) fail("power-law decay must lie in (0, 1]");
  const double largest = *std::max_element(volumes.begin(), volumes.end());
  if (std::abs(largest - cap) > 1e-12 * std::max(1.0, cap))
    fail("power-law cap must equal the largest atom volume");
  std::vector<Atom> atoms;
  atoms.reserve(volumes.size());
  double total = 0.0;
  for (double v : volumes) {
    const double w = std::pow(decay, v);
    atoms.push_back({v, w});
    total += w;
  }
  for (auto& a : atoms) a.mass /= total;
  // Renormalize the rounding residue onto the largest atom.
  double sum = 0.0;
  for (const auto& a : atoms) sum += a.mass;
  auto top = std::max_element(atoms.begin(), atoms.end(),
                              [](const Atom& a, const Atom& b) { return a.mass < b.mass; });
  top->mass += 1.0 - sum;
  return ExecutionMeasure::from_atoms(std::move(atoms), cap);
}

std::vector<double> volume_range(double cap, double step) {
  const auto count = grid_multiple(cap, step);
  if (!count) fail("cap is not a multiple of the step");
  std::vector<double> v(static_cast<std::size_t>(*count) + 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) * step;
  return v;
}

GridMeasure on_grid(const ExecutionMeasure& measure, double step) {
  GridMeasure g;
  for (const auto& a : measure.atoms()) {
    const auto m = grid_multiple(a.volume, step);
    if (!m)
      fail("execution measure atom " + str(a.volume) + " is not a multiple of the volume step " +
           str(step));
    g.index.push_back(static_cast<int>(*m));
    g.mass.push_back(a.mass);
  }
  g.tail.assign(g.size(), 0.0);
  double acc = 0.0;
  for (std::size_t m = g.size(); m-- > 0;) {
    g.tail[m] = acc;
    acc += g.mass[m];
  }
  g.cap_index = static_cast<int>(*grid_multiple(measure.cap(), step));
  return g;
}

// ---------------------------------------------------------------------------

Penalty::Penalty(PenaltyShape shape, double inventory_cap)
    : shape_(std::move(shape)), cap_(inventory_cap) {
  if (const auto* t = std::get_if<TablePenalty>(&shape_)) {
    if (t->inventories.size() < 2 || t->inventories.size() != t->values.size())
      fail("penalty table needs >= 2 matching inventories and values");
    if (!std::is_sorted(t->inventories.begin(), t->inventories.end()))
      fail("penalty table inventories must be increasing");
    if (t->inventories.front() > -cap_ * (1 - 1e-12) || t->inventories.back() < cap_ * (1 - 1e-12))
      fail("penalty table must cover [-inventory_cap, inventory_cap]");
    for (double v : t->values)
      if (!std::isfinite(v)) fail("penalty table values must be finite");
  } else if (!std::isfinite(std::get<QuadraticPenalty>(shape_).coefficient)) {
    fail("penalty coefficient must be finite");
  }
}

double Penalty::operator()(double q) const {
  if (std::abs(q) > cap_ * (1 + 1e-12))
    fail("penalty evaluated at inventory " + str(q) + " outside [-Qbar, Qbar]");
  if (const auto* p = std::get_if<QuadraticPenalty>(&shape_)) return p->coefficient * q * q;
  const auto& t = std::get<TablePenalty>(shape_);
  const auto [i, w] = bracket(t.inventories, q);
  return (1 - w) * t.values[i] + w * t.values[i + 1];
}

double Penalty::sup_on_grid(const ModelParams& params) const {
  double s = 0.0;
  for (int i = 0; i < params.inventory_levels(); ++i)
    s = std::max(s, std::abs((*this)(params.inventory(i))));
  return s;
}

bool Penalty::convex_on_grid(const ModelParams& params, double tol) const {
  for (int i = 1; i + 1 < params.inventory_levels(); ++i) {
    const double d2 = (*this)(params.inventory(i - 1)) - 2 * (*this)(params.inventory(i)) +
                      (*this)(params.inventory(i + 1));
    if (d2 < -tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

MarketModel::MarketModel(ModelParams p, IntensityShape ask, IntensityShape bid,
                         ExecutionMeasure ask_mu, ExecutionMeasure bid_mu, PenaltyShape pen)
    : params(validate(p)),
      ask_intensity(std::move(ask), Side::ask, params),
      bid_intensity(std::move(bid), Side::bid, params),
      ask_measure(std::move(ask_mu)),
      bid_measure(std::move(bid_mu)),
      penalty(std::move(pen), params.inventory_cap) {
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, b); };
  if (!same(ask_measure.cap(), params.ask_cap)) fail("ask measure cap must equal ask_cap");
  if (!same(bid_measure.cap(), params.bid_cap)) fail("bid measure cap must equal bid_cap");
  if (params.discrete()) {
    (void)on_grid(ask_measure, params.volume_step());
    (void)on_grid(bid_measure, params.volume_step());
  }
}

MarketModel MarketModel::with_tick(double tick, double zone_ratio) const {
  ModelParams p = params;
  p.tick = tick;
  p.zone_ratio = zone_ratio;
  return MarketModel(p, ask_intensity.shape(), bid_intensity.shape(), ask_measure, bid_measure,
                     penalty.shape());
}

MarketModel MarketModel::with_volatility(double sigma) const {
  ModelParams p = params;
  p.volatility = sigma;
  return MarketModel(p, ask_intensity.shape(), bid_intensity.shape(), ask_measure, bid_measure,
                     penalty.shape());
}

}  // namespace uzmm
