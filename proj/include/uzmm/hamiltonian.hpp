#pragma once

// Bid and ask Hamiltonians over a discrete inventory slice.
//
// For an inventory slice phi (phi[i] is the value at inventory (i - n) h),
// inventory index i, signed distance y and quote index j (volume j h):
//
//   ask integral  sum_z mu^a(z) exp(-gamma (q ^ z)(delta/2 - y)) phi(Q - q ^ z)
//   bid integral  sum_z mu^b(z) exp(-gamma (q ^ z)(delta/2 + y)) phi(Q + q ^ z)
//
// and the Hamiltonians are their maxima over admissible quotes
// 0 <= q <= min(qbar, Q + Qbar) (ask) or min(qbar, Qbar - Q) (bid).
// Maximizers are reported as the smallest maximizing quote; values within
// a relative 1e-12 count as tied.

#include <cmath>
#include <optional>
#include <span>

#include "uzmm/model.hpp"

namespace uzmm {

/// Grid and preference constants shared by every Hamiltonian evaluation.
struct QuoteSpace {
  double risk_aversion;  ///< gamma
  double tick;           ///< delta
  double volume_step;    ///< h = Qbar / n
  int steps;             ///< n

  static QuoteSpace from_params(const ModelParams& params);
  int levels() const { return 2 * steps + 1; }
};

inline constexpr double kTieTolerance = 1e-12;

/// Candidate strictly improves on the incumbent beyond the tie tolerance.
inline bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + kTieTolerance * std::abs(incumbent);
}

/// Per-unit spread gain exponent: delta/2 - y on the ask, delta/2 + y on the bid.
inline double spread_gain(Side side, double tick, double y) {
  return side == Side::ask ? 0.5 * tick - y : 0.5 * tick + y;
}

/// exp(-gamma * volume * gain), shared by all evaluators so that they agree
/// bit for bit.
inline double quote_discount(double gamma, double volume, double gain) {
  return std::exp(-gamma * volume * gain);
}

struct HamiltonianResult {
  double value = 0.0;
  double argmax_quote = 0.0;    ///< volume
  double admissible_max = 0.0;  ///< volume
  int argmax_index = 0;         ///< argmax_quote / h
};

/// Largest admissible quote index at inventory index i.
int max_quote_index(Side side, int inventory_index, const GridMeasure& mu, const QuoteSpace& qs);

double integral_ask(std::span<const double> phi, int inventory_index, double y, int quote_index,
                    const GridMeasure& mu, const QuoteSpace& qs);
double integral_bid(std::span<const double> phi, int inventory_index, double y, int quote_index,
                    const GridMeasure& mu, const QuoteSpace& qs);

/// Brute force: one integral per admissible quote.
HamiltonianResult hamiltonian_ask(std::span<const double> phi, int inventory_index, double y,
                                  const GridMeasure& mu, const QuoteSpace& qs);
HamiltonianResult hamiltonian_bid(std::span<const double> phi, int inventory_index, double y,
                                  const GridMeasure& mu, const QuoteSpace& qs);

/// Single pass over quotes and atoms. For a quote q the integral splits into
/// atoms at or below q (running prefix sum) plus the tail mass above q, all
/// of which fills exactly q.
HamiltonianResult hamiltonian_ask_fast(std::span<const double> phi, int inventory_index, double y,
                                       const GridMeasure& mu, const QuoteSpace& qs);
HamiltonianResult hamiltonian_bid_fast(std::span<const double> phi, int inventory_index, double y,
                                       const GridMeasure& mu, const QuoteSpace& qs);

/// True when all second differences are <= tol.
bool is_discretely_concave(std::span<const double> values, double tol = 1e-10);

/// Quote maximizing the Hamiltonian when log_phi = -ln(-phi) is concave in
/// the inventory. The maximizer of gain * q + log_phi(Q - q) is read off the
/// first inventory where the forward difference of log_phi drops below the
/// per-step gain, then clamped to the admissible range. Returns nullopt when
/// log_phi is not discretely concave.
std::optional<int> argmax_shortcut_ask(std::span<const double> log_phi, int inventory_index,
                                       double y, int cap_index, const QuoteSpace& qs);
std::optional<int> argmax_shortcut_bid(std::span<const double> log_phi, int inventory_index,
                                       double y, int cap_index, const QuoteSpace& qs);

/// Turning inventory of the concave shortcut, as an inventory index; the
/// ask maximizer is clamp(i - r, ...) and the bid maximizer clamp(r - i, ...).
/// Only depends on y, so callers scanning many inventories compute it once.
int shortcut_pivot_ask(std::span<const double> log_phi, double gain_per_step);
int shortcut_pivot_bid(std::span<const double> log_phi, double gain_per_step);

}  // namespace uzmm
