#pragma once

// Monte Carlo simulation of the controlled system under P^{t,y}: the signed
// distance follows sigma W with barrier resets, market orders arrive as
// marked Poisson processes with intensities Lambda^a(t, Y), Lambda^b(t, Y)
// (thinning against Lambda*), and each order of size z consumes q ^ z of
// the quoted volume q.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uzmm/hjb_solver.hpp"
#include "uzmm/uncertainty_zone.hpp"

namespace uzmm {

/// Quotes as a function of (t, Q, y).
class QuotePolicy {
 public:
  /// Never quotes.
  static QuotePolicy zero();
  /// Fixed volumes, clipped to the admissible room at each state.
  static QuotePolicy constant(double ask, double bid);
  /// Lookup in a solved policy: nearest earlier stored layer, nearest y
  /// node. With `strict`, y must lie within half a node spacing of a node
  /// and the time on a stored layer.
  static QuotePolicy from_grid(const PolicyGrid& grid, const Lattice& lattice, bool strict = false);

  /// Quote indices (ask, bid) at inventory index i.
  std::pair<int, int> quotes(double t, int inventory_index, double y, const ModelParams& params) const;

 private:
  enum class Kind { zero, constant, grid } kind_ = Kind::zero;
  double ask_ = 0.0, bid_ = 0.0;
  const PolicyGrid* grid_ = nullptr;
  const Lattice* lattice_ = nullptr;
  bool strict_ = false;
};

struct SimConfig {
  int n_paths = 1000;
  double dt = 0.01;
  std::uint64_t seed = 1;
  double start_time = 0.0;
  double start_inventory = 0.0;
  double start_y = 0.0;
  double start_mid = 0.0;  ///< on delta/2 + delta Z; 0 picks delta/2
  QuotePolicy policy = QuotePolicy::zero();
  bool record_first_path = false;  ///< trade log and price path of path 0
};

struct Trade {
  double time;
  Side side;
  double quoted;
  double executed;
  double y;
  double mid;
  double inventory_after;
  double pnl_after;
};

struct PathResult {
  double pnl = 0.0;
  double inventory = 0.0;  ///< terminal
  double utility = 0.0;    ///< -exp(-gamma (PnL - l(Q_T)))
  long arrivals = 0;       ///< accepted market orders
  long fills = 0;          ///< arrivals with positive executed volume
  long jumps = 0;
  double log_envelope = 0.0;  ///< upper bound for log |utility|
  bool within_envelope = true;
  bool admissible = true;
  std::vector<Trade> trades;
  PathSample path;
};

/// Path `index` of the configuration; its RNG stream is seeded with
/// (seed, index) and does not depend on other paths.
PathResult simulate_path(const SimConfig& config, const MarketModel& model, long index,
                         bool record = false);

struct UtilityEstimate {
  double mean = 0.0;
  double std_error = 0.0;  ///< NaN for a single path
  long n_paths = 0;
  double mean_pnl = 0.0;
  long envelope_violations = 0;
  long admissibility_violations = 0;
  double mean_fills = 0.0;
};

/// Sample mean and standard error of -exp(-gamma (PnL_T - l(Q_T))).
/// Paths run in parallel; the reduction is pairwise and independent of the
/// thread count. If `first` is given, path 0 is recorded into it.
UtilityEstimate estimate_utility(const SimConfig& config, const MarketModel& model,
                                 PathResult* first = nullptr);

/// -exp(gamma l(Q) + gamma^2 sigma^2 Q^2 (T - t) / 2): zero-policy utility.
double zero_policy_utility(const MarketModel& model, double t, double inventory);

/// time,side,quoted,executed,Y,P,inventory_after,pnl_after (side: +1 ask, -1 bid).
void write_trades_csv(const std::filesystem::path& path, const std::vector<Trade>& trades);

/// Pairwise (cascade) sum.
double pairwise_sum(std::span<const double> values);

}  // namespace uzmm
