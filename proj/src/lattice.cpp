#include "uzmm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uzmm {

namespace {

Stencil stencil_for(double y, const std::vector<double>& nodes) {
  const int n = static_cast<int>(nodes.size()) - 1;
  const double s = (y - nodes.front()) / (nodes[1] - nodes[0]);
  const double r = std::round(s);
  if (std::abs(s - r) < 1e-9) {
    const int node = static_cast<int>(r);
    return node == n ? Stencil{n - 1, 1.0} : Stencil{node, 0.0};
  }
  const int node = std::clamp(static_cast<int>(std::floor(s)), 0, n - 1);
  return {node, s - node};
}

}  // namespace

int Lattice::step_at_or_before(double t) const {
  const double s = t / dt();
  const double r = std::round(s);
  const double k = std::abs(s - r) < 1e-9 ? r : std::floor(s);
  return static_cast<int>(std::clamp(k, 0.0, static_cast<double>(n_t)));
}

int Lattice::nearest_step(double t) const {
  return static_cast<int>(std::clamp(std::round(t / dt()), 0.0, static_cast<double>(n_t)));
}

int Lattice::nearest_node(double y) const {
  const double s = (y - y_nodes.front()) / dy();
  return static_cast<int>(std::clamp(std::round(s), 0.0, static_cast<double>(n_y)));
}

Lattice make_lattice(const ModelParams& params, int n_t, int n_y) {
  validate(params);
  if (n_t < 1) throw ValidationError("lattice needs at least one time step");
  if (n_y < 4) throw ValidationError("lattice needs at least four y intervals");
  Lattice l;
  l.n_t = n_t;
  l.n_y = n_y;
  l.t_nodes.resize(n_t + 1);
  for (int k = 0; k <= n_t; ++k) l.t_nodes[k] = params.horizon * k / n_t;
  l.t_nodes.back() = params.horizon;
  const double ybar = params.ybar();
  l.y_nodes.resize(n_y + 1);
  for (int j = 0; j <= n_y; ++j) l.y_nodes[j] = -ybar + 2.0 * ybar * j / n_y;
  l.y_nodes.front() = -ybar;
  l.y_nodes.back() = ybar;
  l.y_plus = stencil_for(params.y_plus(), l.y_nodes);
  l.y_minus = stencil_for(params.y_minus(), l.y_nodes);
  return l;
}

double stability_number(const MarketModel& model, double dt) {
  const auto& p = model.params;
  const double lambda = std::max(model.ask_intensity.bound(), model.bid_intensity.bound());
  const double qbar = std::max(p.ask_cap, p.bid_cap);
  return dt * 2.0 * lambda * std::exp(p.risk_aversion * qbar * p.tick * (p.zone_ratio + 1.0));
}

int stable_time_steps(const MarketModel& model) {
  const double per_unit = stability_number(model, 1.0);
  return std::max(1, static_cast<int>(std::ceil(model.params.horizon * per_unit - 1e-9)));
}

NonlocalSystem::NonlocalSystem(const Lattice& lattice, const LinearCoefficients& c, double dt)
    : n_(lattice.n_y), lower_(lattice.y_minus), upper_(lattice.y_plus) {
  const double dy = lattice.dy();
  const double d2 = c.diffusion / (dy * dy);
  upwind_ = std::abs(c.drift) * dy > 2.0 * c.diffusion;
  double lo = d2, mid = -2.0 * d2, hi = d2;
  if (upwind_) {
    if (c.drift > 0) {
      mid -= c.drift / dy;
      hi += c.drift / dy;
    } else {
      lo -= c.drift / dy;
      mid += c.drift / dy;
    }
  } else {
    lo -= c.drift / (2.0 * dy);
    hi += c.drift / (2.0 * dy);
  }

  sub_.assign(n_ + 1, 0.0);
  super_.assign(n_ + 1, 0.0);
  std::vector<double> diag(n_ + 1, 1.0);
  for (int j = 1; j < n_; ++j) {
    const double react = c.reaction + (c.reaction_profile.empty() ? 0.0 : c.reaction_profile[j]);
    sub_[j] = -dt * lo;
    super_[j] = -dt * hi;
    diag[j] = 1.0 - dt * (mid + react);
  }

  pivot_inv_.assign(n_ + 1, 0.0);
  c_prime_.assign(n_ + 1, 0.0);
  for (int j = 1; j < n_; ++j) {
    const double p = diag[j] - (j > 1 ? sub_[j] * c_prime_[j - 1] : 0.0);
    if (p == 0.0 || !std::isfinite(p)) throw NumericalError("singular tridiagonal system");
    pivot_inv_[j] = 1.0 / p;
    c_prime_[j] = super_[j] * pivot_inv_[j];
  }

  std::vector<double> zero(n_ + 1, 0.0);
  e_lower_.assign(n_ + 1, 0.0);
  e_upper_.assign(n_ + 1, 0.0);
  {
    auto r = zero;
    r[1] = -sub_[1];
    dirichlet(r, e_lower_);
    e_lower_[0] = 1.0;
  }
  {
    auto r = zero;
    r[n_ - 1] = -super_[n_ - 1];
    dirichlet(r, e_upper_);
    e_upper_[n_] = 1.0;
  }
  const double a = 1.0 - lower_.apply(e_lower_);
  const double b = -lower_.apply(e_upper_);
  const double cc = -upper_.apply(e_lower_);
  const double d = 1.0 - upper_.apply(e_upper_);
  const double det = a * d - b * cc;
  if (std::abs(det) < 1e-14 * (std::abs(a * d) + std::abs(b * cc)) || !std::isfinite(det))
    throw NumericalError("singular nonlocal boundary correction");
  inv_[0] = d / det;
  inv_[1] = -b / det;
  inv_[2] = -cc / det;
  inv_[3] = a / det;
}

// Interior solve with v[0] = v[n] = 0; rhs[0] and rhs[n] are ignored.
void NonlocalSystem::dirichlet(std::span<const double> rhs, std::span<double> out) const {
  out[0] = 0.0;
  out[n_] = 0.0;
  double prev = 0.0;
  for (int j = 1; j < n_; ++j) {
    prev = (rhs[j] - (j > 1 ? sub_[j] * prev : 0.0)) * pivot_inv_[j];
    out[j] = prev;
  }
  for (int j = n_ - 2; j >= 1; --j) out[j] -= c_prime_[j] * out[j + 1];
}

void NonlocalSystem::solve(std::span<const double> rhs, std::span<double> out) const {
  const double g_lower = rhs[0];
  const double g_upper = rhs[n_];
  dirichlet(rhs, out);
  const double r0 = g_lower + lower_.apply(out);
  const double r1 = g_upper + upper_.apply(out);
  const double alpha = inv_[0] * r0 + inv_[1] * r1;
  const double beta = inv_[2] * r0 + inv_[3] * r1;
  for (int j = 1; j < n_; ++j) out[j] += alpha * e_lower_[j] + beta * e_upper_[j];
  out[0] = alpha;
  out[n_] = beta;
}

std::vector<double> implicit_step(std::span<const double> layer, const Lattice& lattice,
                                  const LinearCoefficients& coefficients, double dt) {
  if (static_cast<int>(layer.size()) != lattice.n_y + 1)
    throw std::invalid_argument("layer must have n_y + 1 values");
  NonlocalSystem system(lattice, coefficients, dt);
  std::vector<double> rhs(layer.begin(), layer.end());
  rhs.front() = 0.0;
  rhs.back() = 0.0;
  std::vector<double> out(rhs.size());
  system.solve(rhs, out);
  return out;
}

}  // namespace uzmm
