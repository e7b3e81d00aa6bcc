#pragma once

// Oracle and property checks shared by the acceptance suite and the
// `verify` subcommand. Each check reports what it measured against what it
// expected; sizes scale down at the quick level.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uzmm/hjb_solver.hpp"
#include "uzmm/tick_sweep.hpp"
#include "uzmm/uncertainty_zone.hpp"

namespace uzmm {

enum class VerifyLevel { quick, full };

struct CheckResult {
  std::string id;
  std::string title;
  bool passed = false;
  std::string measured;
  std::string expected;
  double seconds = 0.0;
};

namespace presets {

/// gamma 1, sigma 0.005, delta 0.01, eta 0.2, Qbar 50, qbar 100, affine
/// A 10, B 0.1, l = 0.001 Q^2, mu ~ 0.9^q on multiples of `spacing`.
MarketModel baseline(int steps, double horizon, double spacing = 1.0);
/// Baseline with mu = {0: 1}.
MarketModel degenerate(int steps, double horizon);
/// Tick-sweep block: T 240, exponential A 1.5, B 200, l = 0.005 Q^2.
MarketModel sweep(int steps, double volatility);
/// Log-spaced ticks of the desk sweep.
std::vector<double> sweep_ticks();
inline constexpr double kSweepEta0 = 0.2;
inline constexpr double kSweepDelta0 = 0.01;

}  // namespace presets

/// First violated construction property of the barrier sequence (1 to 5),
/// or nullopt. tol is absolute on the signed distance.
std::optional<int> barrier_property_violation(double t, double y, const DriverPath& w,
                                              const ZoneGeometry& g,
                                              std::span<const BarrierEvent> events,
                                              double tol);

CheckResult check_degenerate_oracle(VerifyLevel level);
CheckResult check_zero_policy_mc(VerifyLevel level);
CheckResult check_pde_mc_consistency(VerifyLevel level);
/// Monotone quotes, log-concavity and quote stationarity from one baseline
/// solve.
std::vector<CheckResult> check_baseline_properties(VerifyLevel level);
CheckResult check_refinement(VerifyLevel level);
CheckResult check_tick_shift(VerifyLevel level);
/// Fine-grid optimal ticks against the reference values (slow).
CheckResult check_tick_optima();
CheckResult check_hamiltonian_oracle(VerifyLevel level);
CheckResult check_eta_estimate(VerifyLevel level);
CheckResult check_barrier_properties(VerifyLevel level);

/// All checks of a level in criterion order. A check that throws is
/// reported as failed. `report` sees each result as soon as it is known.
std::vector<CheckResult> run_checks(VerifyLevel level, bool include_slow,
                                    const std::function<void(const CheckResult&)>& report = {});

}  // namespace uzmm
