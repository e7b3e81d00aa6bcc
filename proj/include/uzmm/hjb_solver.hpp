#pragma once

// Backward solver for the market maker's HJB system on the (t, Q, y)
// lattice, optimal quote extraction, and the platform's linear PDE for the
// expected traded volume W under a given policy.
//
// Time step from layer k+1 to layer k (dt, c0 = sigma^2 gamma^2 Q^2 / 2):
//   G      = Lambda^a(t_k, y) (H^a[u^{k+1}] - u^{k+1}) + Lambda^b(t_k, y) (H^b[u^{k+1}] - u^{k+1})
//   (I - dt L0) u^k = exp(c0 dt) (u^{k+1} + dt G)
// where L0 = (sigma^2/2) d_yy - sigma^2 gamma Q d_y holds the nonlocal
// boundary rows. The coupling is explicit, the linear part implicit, and
// the constant reaction c0 is integrated exactly.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uzmm/kernels.hpp"
#include "uzmm/lattice.hpp"
#include "uzmm/model.hpp"

namespace uzmm {

/// Time layers of a [2n+1][n_y+1] field, keyed by layer index.
template <class T>
class LayerStore {
 public:
  LayerStore() = default;
  explicit LayerStore(kernels::LayerShape shape) : shape_(shape) {}

  void put(int step, std::vector<T> values) { layers_[step] = std::move(values); }
  bool has(int step) const { return layers_.count(step) != 0; }
  const std::vector<T>& layer(int step) const {
    const auto it = layers_.find(step);
    if (it == layers_.end()) throw std::out_of_range("time layer not stored");
    return it->second;
  }
  /// Latest stored layer index at or before `step`.
  int at_or_before(int step) const {
    auto it = layers_.upper_bound(step);
    if (it == layers_.begin()) throw std::out_of_range("no stored time layer at or before request");
    return std::prev(it)->first;
  }
  std::vector<int> steps() const {
    std::vector<int> s;
    for (const auto& [k, v] : layers_) s.push_back(k);
    return s;
  }
  const kernels::LayerShape& shape() const { return shape_; }
  std::size_t offset(int i, int j) const { return static_cast<std::size_t>(i) * shape_.nodes + j; }

 private:
  kernels::LayerShape shape_;
  std::map<int, std::vector<T>> layers_;
};

/// u(t_k, Q_i, y_j) at stored layers.
class ValueGrid : public LayerStore<double> {
 public:
  using LayerStore::LayerStore;
  double at(int step, int i, int j) const { return layer(step)[offset(i, j)]; }
};

/// Optimal quotes as volume-grid indices at stored layers.
class PolicyGrid {
 public:
  PolicyGrid() = default;
  PolicyGrid(kernels::LayerShape shape, double volume_step)
      : ask_(shape), bid_(shape), volume_step_(volume_step) {}

  void put(int step, std::vector<std::uint16_t> ask, std::vector<std::uint16_t> bid) {
    ask_.put(step, std::move(ask));
    bid_.put(step, std::move(bid));
  }
  bool has(int step) const { return ask_.has(step); }
  int at_or_before(int step) const { return ask_.at_or_before(step); }
  std::vector<int> steps() const { return ask_.steps(); }

  const std::vector<std::uint16_t>& ask_layer(int step) const { return ask_.layer(step); }
  const std::vector<std::uint16_t>& bid_layer(int step) const { return bid_.layer(step); }
  int ask_index(int step, int i, int j) const { return ask_.layer(step)[ask_.offset(i, j)]; }
  int bid_index(int step, int i, int j) const { return bid_.layer(step)[bid_.offset(i, j)]; }
  double ask(int step, int i, int j) const { return ask_index(step, i, j) * volume_step_; }
  double bid(int step, int i, int j) const { return bid_index(step, i, j) * volume_step_; }

  const kernels::LayerShape& shape() const { return ask_.shape(); }
  double volume_step() const { return volume_step_; }

 private:
  LayerStore<std::uint16_t> ask_;
  LayerStore<std::uint16_t> bid_;
  double volume_step_ = 0.0;
};

enum class HamiltonianMethod { serial, parallel, shortcut };

/// exponential: the scheme in the header comment. literal: reaction
/// c0 - Lambda^a - Lambda^b implicit and Lambda H explicit (kept for
/// comparison; first order in the reaction).
enum class TimeScheme { exponential, literal };

/// Passed to the observer once per layer, from k = n_t down to 0, after
/// the Hamiltonians (and hence the policy) of that layer are known.
struct LayerEvent {
  int step;
  double time;
  std::span<const double> values;
  const kernels::HamiltonianLayer& hamiltonian;
};

struct SolveOptions {
  std::vector<double> snapshot_times;  ///< stored layers (nearest lattice times); empty: t = 0 only
  bool keep_all = false;               ///< store every layer
  HamiltonianMethod method = HamiltonianMethod::parallel;
  TimeScheme scheme = TimeScheme::exponential;
  std::function<void(const LayerEvent&)> observer;
};

struct SolverDiagnostics {
  double stability = 0.0;  ///< stability_number(model, dt)
  bool stability_warning = false;
  bool upwind_rows = false;  ///< some inventory level needed the upwind drift
  long shortcut_fallbacks = 0;
  double min_value = 0.0;
  double max_value = 0.0;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

struct HjbSolution {
  Lattice lattice;
  ValueGrid values;
  PolicyGrid policy;
  SolverDiagnostics diagnostics;
};

HjbSolution solve_hjb(const MarketModel& model, const Lattice& lattice,
                      const SolveOptions& options = {});

/// Grid measures of both sides, checked against the volume grid.
std::pair<GridMeasure, GridMeasure> grid_measures(const MarketModel& model);

/// Optimal quotes (volume-grid indices) for one value layer.
struct PolicyLayer {
  std::vector<std::uint16_t> ask;
  std::vector<std::uint16_t> bid;
};
PolicyLayer extract_policy(std::span<const double> values, const MarketModel& model,
                           const Lattice& lattice);

/// Advances W backward one layer at a time, fed with the policy of the
/// later layer:
///   (I - dt (sigma^2/2) d_yy) W^k = W^{k+1} + dt E^{k+1}
///   E = Lambda^a(t_k, y) sum_z mu^a(z) (W(Q - q^a ^ z) - W(Q) + q^a ^ z) + (bid mirror).
class PlatformStepper {
 public:
  PlatformStepper(const MarketModel& model, const Lattice& lattice);

  /// Consumes the policy of layer `step` (the current later layer) and
  /// produces layer step - 1. Steps must arrive as n_t, n_t - 1, ..., 1.
  void step(int step, std::span<const std::uint16_t> ask_quotes,
            std::span<const std::uint16_t> bid_quotes);
  /// Hooks the stepper into solve_hjb's observer.
  void on_layer(const LayerEvent& event);

  int current_step() const { return current_; }
  const std::vector<double>& current() const { return w_; }
  /// Layers to retain (others are dropped); must be set before stepping.
  void keep(std::vector<int> steps);
  const ValueGrid& stored() const { return stored_; }

 private:
  const MarketModel& model_;
  const Lattice& lattice_;
  GridMeasure ask_mu_, bid_mu_;
  NonlocalSystem system_;
  kernels::LayerShape shape_;
  std::vector<double> w_, next_;
  std::vector<int> keep_;
  ValueGrid stored_;
  int current_;
};

/// W for a stored policy. Every layer 1..n_t is looked up at or before.
ValueGrid solve_platform(const PolicyGrid& policy, const MarketModel& model,
                         const Lattice& lattice, const std::vector<int>& keep_steps = {0});

/// (q^b - q^a) / (q^b + q^a) over y nodes for each listed inventory;
/// missing where both quotes vanish.
struct ImbalanceTable {
  double time = 0.0;
  std::vector<double> ys;
  std::vector<double> inventories;
  std::vector<std::vector<std::optional<double>>> values;  ///< [y][inventory]
};

std::optional<double> volume_imbalance(double ask_quote, double bid_quote);

ImbalanceTable imbalance_curves(const PolicyGrid& policy, const Lattice& lattice,
                                const ModelParams& params, double time,
                                std::span<const double> inventories);

/// CSV exports. value.csv: t,Q,y,u; policy.csv: t,Q,y,q_ask,q_bid;
/// imbalance.csv: y,Q,I (I blank when undefined).
void write_values_csv(const std::filesystem::path& path, const ValueGrid& values,
                      const Lattice& lattice, const ModelParams& params);
void write_policy_csv(const std::filesystem::path& path, const PolicyGrid& policy,
                      const Lattice& lattice, const ModelParams& params);
void write_imbalance_csv(const std::filesystem::path& path, const ImbalanceTable& table);

}  // namespace uzmm
