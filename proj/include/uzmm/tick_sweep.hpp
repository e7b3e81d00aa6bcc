#pragma once

// Platform tick-size study: for each candidate tick, set the zone ratio by
// the square-root law, solve the market maker's problem, push the optimal
// policy through the platform PDE and average W(0, 0, y) over the y nodes.

#include <filesystem>
#include <optional>
#include <vector>

#include "uzmm/hjb_solver.hpp"

namespace uzmm {

/// eta0 * sqrt(delta0 / delta).
double eta_of_delta(double delta, double eta0, double delta0);

/// count points from lo to hi, geometrically spaced (both ends included).
std::vector<double> log_spaced(double lo, double hi, int count);

struct SweepSettings {
  std::vector<double> deltas;
  double eta0 = 0.2;
  double delta0 = 0.1;
  int n_y = 70;
  /// Fixed n_t; 0 picks the smallest stable count per tick (times
  /// time_step_factor).
  int n_t = 0;
  double time_step_factor = 1.0;
  HamiltonianMethod method = HamiltonianMethod::shortcut;
  bool profiles = false;  ///< keep W(0, 0, .) per row
};

struct TickSweepRow {
  double delta = 0.0;
  double eta = 0.0;
  double mean_w = 0.0;
  int n_t = 0;
  double stability = 0.0;
  double seconds = 0.0;
  double utility = 0.0;  ///< u(0, 0, 0 node nearest y = 0)
  std::vector<double> ys;
  std::vector<double> profile;  ///< W(0, 0, y) when requested
};

struct TickSweepResult {
  double volatility = 0.0;
  std::vector<TickSweepRow> rows;   ///< sorted by delta
  std::vector<double> excluded;     ///< ticks with eta >= 1/2
  double argmax_delta = 0.0;
  double max_mean_w = 0.0;
};

/// One row; throws ValidationError when eta(delta) >= 1/2.
TickSweepRow sweep_row(const MarketModel& base, double delta, const SweepSettings& settings);

/// Throws ValidationError when no tick of the grid is admissible.
TickSweepResult run_sweep(const MarketModel& base, const SweepSettings& settings,
                          std::optional<double> volatility = std::nullopt);

/// delta, eta, mean_W.
void write_sweep_csv(const std::filesystem::path& path, const TickSweepResult& result);
/// delta, y, W for rows that kept their profile.
void write_profiles_csv(const std::filesystem::path& path, const TickSweepResult& result);

}  // namespace uzmm
