#pragma once

// Market model: parameters, order-flow intensities, execution measures and
// the terminal inventory penalty.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace uzmm {

/// Thrown when a configuration or model input violates a model constraint.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a solver produces an invalid state (non-finite or
/// nonnegative utilities, singular systems).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Side { ask, bid };

const char* to_string(Side side);

/// Market and preference constants. All prices are in currency units, times
/// in seconds, volumes in shares.
struct ModelParams {
  double horizon = 0.0;        ///< T
  double volatility = 0.0;     ///< sigma of the efficient price (Bachelier)
  double tick = 0.0;           ///< delta
  double zone_ratio = 0.0;     ///< eta, relative size of the uncertainty zone
  double risk_aversion = 0.0;  ///< gamma
  double inventory_cap = 0.0;  ///< Qbar
  std::optional<int> volume_steps;  ///< n; empty means continuous volumes
  double ask_cap = 0.0;        ///< qbar^a
  double bid_cap = 0.0;        ///< qbar^b

  /// Half-width of the signed-distance domain, delta * (eta + 1/2).
  double ybar() const { return tick * (zone_ratio + 0.5); }
  /// Reset level after an upward mid-price jump, delta * (eta - 1/2).
  double y_plus() const { return tick * (zone_ratio - 0.5); }
  /// Reset level after a downward mid-price jump, delta * (1/2 - eta).
  double y_minus() const { return tick * (0.5 - zone_ratio); }

  bool discrete() const { return volume_steps.has_value(); }
  /// Qbar / n. Throws for continuous volumes.
  double volume_step() const;
  /// n. Throws for continuous volumes.
  int steps() const;
  /// Number of inventory grid points, 2n + 1.
  int inventory_levels() const { return 2 * steps() + 1; }
  /// Inventory at grid index i (i = 0 is -Qbar).
  double inventory(int index) const { return (index - steps()) * volume_step(); }
  /// Grid index of inventory Q; throws when Q is off the grid.
  int inventory_index(double inventory) const;
  int ask_cap_steps() const;
  int bid_cap_steps() const;
};

/// Checks every parameter constraint and returns the argument unchanged.
const ModelParams& validate(const ModelParams& params);

/// Rounds x / step to the nearest integer and checks it is within 1e-9
/// (relative) of a grid point. Returns nullopt when off-grid.
std::optional<long> grid_multiple(double x, double step);

// ---------------------------------------------------------------------------
// Intensities

/// Lambda^a(y) = A y + B, Lambda^b(y) = -A y + B.
struct AffineIntensity {
  double slope = 0.0;  ///< A
  double level = 0.0;  ///< B
};

/// Lambda^a(y) = A exp(min(B y, 0)), Lambda^b(y) = A exp(min(-B y, 0)).
struct ExponentialIntensity {
  double scale = 0.0;  ///< A
  double rate = 0.0;   ///< B
};

/// Rates sampled on a (t, y) rectangle, bilinear in between. Rows are times.
struct TableIntensity {
  std::vector<double> times;
  std::vector<double> ys;
  std::vector<double> rates;  ///< row-major, times.size() x ys.size()
};

using IntensityShape =
    std::variant<AffineIntensity, ExponentialIntensity, TableIntensity>;

/// A validated order-flow intensity for one side of the book.
class Intensity {
 public:
  Intensity(IntensityShape shape, Side side, const ModelParams& params);

  /// Checked evaluation. Throws ValidationError when y is outside
  /// [-ybar, ybar] or t outside [0, T].
  double operator()(double t, double y) const;
  /// Unchecked evaluation for hot loops.
  double rate(double t, double y) const noexcept;

  /// Lambda*, an upper bound of the rate on [0,T] x [-ybar, ybar].
  double bound() const { return bound_; }
  bool time_independent() const;
  Side side() const { return side_; }
  const IntensityShape& shape() const { return shape_; }

 private:
  IntensityShape shape_;
  Side side_;
  double horizon_;
  double ybar_;
  double bound_ = 0.0;
};

// ---------------------------------------------------------------------------
// Execution measures

struct Atom {
  double volume;
  double mass;
};

/// Discrete law of market-order volumes on one side.
class ExecutionMeasure {
 public:
  /// Validates and normalizes nothing: masses must already sum to one.
  /// `allow_degenerate` admits measures whose cap carries no mass (test mode,
  /// e.g. the single atom {0: 1}).
  static ExecutionMeasure from_atoms(std::vector<Atom> atoms, double cap,
                                     bool allow_degenerate = false);

  std::span<const Atom> atoms() const { return atoms_; }
  double cap() const { return cap_; }
  bool degenerate() const { return degenerate_; }
  /// Mass of atoms with volume strictly greater than v.
  double tail_mass(double volume) const;
  /// E[min(q, Z)].
  double expected_fill(double quote) const;

 private:
  std::vector<Atom> atoms_;
  double cap_ = 0.0;
  bool degenerate_ = false;
};

/// mu({q}) proportional to decay^q over the given volumes; the cap must be
/// the largest volume.
ExecutionMeasure power_law_measure(double cap, std::span<const double> volumes,
                                   double decay);

/// Volumes 0, step, 2 step, ..., cap.
std::vector<double> volume_range(double cap, double step);

/// An execution measure expressed in volume-grid indices.
struct GridMeasure {
  std::vector<int> index;     ///< atom volume / step, strictly increasing
  std::vector<double> mass;
  std::vector<double> tail;   ///< tail[m] = mass of atoms strictly after m
  int cap_index = 0;

  std::size_t size() const { return index.size(); }
};

/// Throws ValidationError if an atom is not a multiple of `step`.
GridMeasure on_grid(const ExecutionMeasure& measure, double step);

// ---------------------------------------------------------------------------
// Penalty

struct QuadraticPenalty {
  double coefficient = 0.0;
};

/// Values at given inventories, linear in between.
struct TablePenalty {
  std::vector<double> inventories;
  std::vector<double> values;
};

using PenaltyShape = std::variant<QuadraticPenalty, TablePenalty>;

class Penalty {
 public:
  Penalty(PenaltyShape shape, double inventory_cap);

  /// Throws ValidationError when |Q| > Qbar.
  double operator()(double inventory) const;
  /// max |l(Q)| over the inventory grid of `params`.
  double sup_on_grid(const ModelParams& params) const;
  /// Discrete second differences on the grid are >= -tol.
  bool convex_on_grid(const ModelParams& params, double tol = 1e-12) const;
  const PenaltyShape& shape() const { return shape_; }

 private:
  PenaltyShape shape_;
  double cap_;
};

// ---------------------------------------------------------------------------

/// Everything the solvers and the simulator need, validated together.
struct MarketModel {
  ModelParams params;
  Intensity ask_intensity;
  Intensity bid_intensity;
  ExecutionMeasure ask_measure;
  ExecutionMeasure bid_measure;
  Penalty penalty;

  /// Validates cross-constraints: caps match the parameter caps and, for
  /// finite n, every atom lies on the volume grid.
  MarketModel(ModelParams params, IntensityShape ask, IntensityShape bid,
              ExecutionMeasure ask_measure, ExecutionMeasure bid_measure,
              PenaltyShape penalty);

  /// Same model with a new tick and zone ratio; intensities and measures are
  /// re-validated against the new geometry.
  MarketModel with_tick(double tick, double zone_ratio) const;
  MarketModel with_volatility(double sigma) const;
};

}  // namespace uzmm
