#pragma once

// Signed distance Y = S - P between the efficient price and the mid-price,
// built pathwise from a continuous driver: Y follows the driver until it
// reaches the lower barrier a (reset to a0) or the upper barrier b (reset to
// b0). The mid-price moves one tick up at every upper hit and one tick down
// at every lower hit.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uzmm/model.hpp"

namespace uzmm {

/// Piecewise-linear continuous path with w(0) = 0.
struct DriverPath {
  std::vector<double> times;   ///< increasing, starts at 0
  std::vector<double> values;  ///< values[0] == 0

  double horizon() const { return times.back(); }
  /// Linear interpolation; s is clamped to [0, T].
  double at(double s) const;
  /// Throws ValidationError on malformed paths.
  void validate() const;
};

/// Barriers (a, b) and reset levels (a0, b0), with a < a0, b0 < b.
struct ZoneGeometry {
  double lower;             ///< a
  double upper;             ///< b
  double reset_from_lower;  ///< a0
  double reset_from_upper;  ///< b0

  /// (a, b, a0, b0) = (-ybar, ybar, y_minus, y_plus).
  static ZoneGeometry from_params(const ModelParams& params);
  /// min{a0 - a, b - a0, b0 - a, b - b0}: lower bound of the driver
  /// displacement between two consecutive hits.
  double min_gap() const;
  void validate() const;
};

struct BarrierEvent {
  double tau;      ///< hit time
  int epsilon;     ///< +1 upper barrier, -1 lower barrier, 0 terminal sentinel
  double jump;     ///< b0 - b, a0 - a, or 0
};

/// Hits of the barriers on (t, T], in order, followed by the terminal
/// sentinel {T, 0, 0}. Crossing times inside a driver segment are solved
/// linearly.
std::vector<BarrierEvent> barrier_sequence(double t, double y, const DriverPath& w,
                                           const ZoneGeometry& geometry);

/// Y(t, s, y, w); equals y for s <= t and is right-continuous at hits.
double y_path(double t, double s, double y, const DriverPath& w, const ZoneGeometry& geometry);

/// Same, reusing an event list from barrier_sequence(t, y, w, geometry).
double y_path(double t, double s, double y, const DriverPath& w,
              std::span<const BarrierEvent> events);

/// Moves the signed distance along a straight segment of length `dx`,
/// applying resets at the barriers. `on_hit(fraction, epsilon)` receives the
/// position of each hit as a fraction of the segment. Returns the end value.
template <class OnHit>
double advance_signed_distance(double y, double dx, const ZoneGeometry& g, OnHit&& on_hit) {
  double travelled = 0.0;
  const double length = dx;
  for (;;) {
    const double target = y + (dx - travelled);
    if (target >= g.upper) {
      travelled += g.upper - y;
      on_hit(travelled / length, +1);
      y = g.reset_from_upper;
    } else if (target <= g.lower) {
      travelled += g.lower - y;
      on_hit(travelled / length, -1);
      y = g.reset_from_lower;
    } else {
      return target;
    }
  }
}

struct JumpMark {
  double time;
  int direction;  ///< +1 mid-price up, -1 down
};

/// Sampled trajectory. At a jump time two samples share the time stamp: the
/// pre-jump and the post-jump state.
struct PathSample {
  std::vector<double> times;
  std::vector<double> efficient_price;  ///< S
  std::vector<double> signed_distance;  ///< Y
  std::vector<double> mid_price;        ///< P
  std::vector<JumpMark> jumps;
};

/// Mid-price path started at mid-price p0 and signed distance y at time t,
/// sampled at t, at every driver knot after t, and around every jump.
/// p0 must lie on the inter-tick grid delta/2 + delta Z.
PathSample midprice_path(double p0, double t, double y, const DriverPath& w,
                         const ModelParams& params);

/// w = sigma * Brownian motion on a uniform grid of step dt (last step
/// possibly shorter). Deterministic for a given seed.
DriverPath simulate_driver(double sigma, double horizon, double dt, std::uint64_t seed);

/// Continuations over twice the alternations of consecutive mid-price moves.
/// Throws std::domain_error with fewer than two jumps or no alternation.
double estimate_eta(std::span<const JumpMark> jumps);
inline double estimate_eta(const PathSample& sample) { return estimate_eta(sample.jumps); }

/// time,S,Y,P
void write_path_csv(const PathSample& sample, const std::filesystem::path& path);
/// time,direction
void write_jumps_csv(const PathSample& sample, const std::filesystem::path& path);

}  // namespace uzmm
