#pragma once

// Time/space lattice for the backward solvers and the implicit linear solve
// in y with nonlocal boundary rows.

#include <span>
#include <vector>

#include "uzmm/model.hpp"

namespace uzmm {

/// Linear interpolation weights: v(y) ~ (1 - weight) v[node] + weight v[node + 1].
struct Stencil {
  int node = 0;
  double weight = 0.0;

  double apply(std::span<const double> v) const {
    return weight == 0.0 ? v[node] : (1.0 - weight) * v[node] + weight * v[node + 1];
  }
};

struct Lattice {
  int n_t = 0;
  int n_y = 0;
  std::vector<double> t_nodes;  ///< n_t + 1 values on [0, T]
  std::vector<double> y_nodes;  ///< n_y + 1 values on [-ybar, ybar]
  Stencil y_plus;   ///< read by the upper boundary row
  Stencil y_minus;  ///< read by the lower boundary row

  double dt() const { return t_nodes[1] - t_nodes[0]; }
  double dy() const { return y_nodes[1] - y_nodes[0]; }
  double horizon() const { return t_nodes.back(); }
  /// Both reset levels fall on nodes.
  bool aligned() const { return y_plus.weight == 0.0 && y_minus.weight == 0.0; }
  /// Layer index of the latest lattice time not after t (clamped to [0, n_t]).
  int step_at_or_before(double t) const;
  /// Layer index of the lattice time closest to t.
  int nearest_step(double t) const;
  /// Index of the y node closest to y.
  int nearest_node(double y) const;
};

/// Throws ValidationError for n_t < 1, n_y < 4 or invalid params.
Lattice make_lattice(const ModelParams& params, int n_t, int n_y);

/// dt * 2 Lambda* * exp(gamma max(qbar) delta (eta + 1)); the explicit
/// coupling is considered safe at or below 1.
double stability_number(const MarketModel& model, double dt);
/// Smallest n_t whose stability number is at most 1.
int stable_time_steps(const MarketModel& model);

/// L v = diffusion v'' + drift v' + (reaction + reaction_profile[j]) v.
struct LinearCoefficients {
  double diffusion = 0.0;
  double drift = 0.0;
  double reaction = 0.0;
  std::vector<double> reaction_profile;  ///< per node, or empty
};

/// The system (I - dt L) v = rhs on interior nodes, with boundary rows
///   v[0]   - interp(v, y-) = rhs[0]
///   v[n_y] - interp(v, y+) = rhs[n_y].
/// Interior rows are tridiagonal; the two boundary couplings are removed by
/// a 2x2 capacitance correction on top of a Dirichlet Thomas solve. The
/// factorization is built once and reused for any number of right-hand
/// sides.
///
/// The drift uses central differences while the matrix stays an M-matrix
/// (|drift| dy <= 2 diffusion) and one-sided upwind differences otherwise.
class NonlocalSystem {
 public:
  NonlocalSystem(const Lattice& lattice, const LinearCoefficients& coefficients, double dt);

  /// out may alias rhs.
  void solve(std::span<const double> rhs, std::span<double> out) const;
  bool upwind() const { return upwind_; }

 private:
  void dirichlet(std::span<const double> rhs, std::span<double> out) const;

  int n_ = 0;
  Stencil lower_;
  Stencil upper_;
  bool upwind_ = false;
  std::vector<double> sub_, super_;   ///< interior rows 1..n-1
  std::vector<double> pivot_inv_, c_prime_;
  std::vector<double> e_lower_, e_upper_;  ///< responses to unit boundary values
  double inv_[4] = {};                      ///< inverse of the 2x2 capacitance matrix
};

/// One implicit step (I - dt L) v_new = layer for a single inventory level.
std::vector<double> implicit_step(std::span<const double> layer, const Lattice& lattice,
                                  const LinearCoefficients& coefficients, double dt);

}  // namespace uzmm
