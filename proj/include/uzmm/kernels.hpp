#pragma once

// Layer-wide Hamiltonian evaluation. A layer holds u(Q_i, y_j) in row-major
// [inventory][node] order. Three implementations:
//   serial::   reference, one hamiltonian_*_fast call per grid point
//   parallel:: OpenMP across inventories, vectorized across nodes
//   shortcut:: concave fast path with per-node fallback to the scan
// All three produce bit-identical values and quotes.

#include <cstdint>
#include <span>
#include <vector>

#include "uzmm/hamiltonian.hpp"

namespace uzmm::kernels {

struct LayerShape {
  int levels = 0;  ///< 2n + 1
  int nodes = 0;   ///< n_y + 1

  std::size_t size() const { return static_cast<std::size_t>(levels) * nodes; }
};

struct HamiltonianLayer {
  std::vector<double> ask;
  std::vector<double> bid;
  std::vector<std::uint16_t> ask_quote;  ///< quote index
  std::vector<std::uint16_t> bid_quote;

  void resize(const LayerShape& shape);
};

/// exp(-gamma j h gain(y)) for j = 0..max_quote at each node, [j][node].
struct DiscountTable {
  int quotes = 0;
  int nodes = 0;
  std::vector<double> ask;
  std::vector<double> bid;

  static DiscountTable build(const QuoteSpace& qs, std::span<const double> y_nodes, int max_quote);
};

struct MeasurePair {
  const GridMeasure* ask;
  const GridMeasure* bid;
};

namespace serial {
void hamiltonian_layer(std::span<const double> u, const LayerShape& shape,
                       std::span<const double> y_nodes, MeasurePair mu, const QuoteSpace& qs,
                       HamiltonianLayer& out);
}  // namespace serial

namespace parallel {
void hamiltonian_layer(std::span<const double> u, const LayerShape& shape,
                       const DiscountTable& discount, MeasurePair mu, const QuoteSpace& qs,
                       HamiltonianLayer& out);
}  // namespace parallel

namespace shortcut {
/// Returns the number of nodes whose log-slice was not concave and that
/// were evaluated by the scan instead.
int hamiltonian_layer(std::span<const double> u, const LayerShape& shape,
                      std::span<const double> y_nodes, const DiscountTable& discount,
                      MeasurePair mu, const QuoteSpace& qs, HamiltonianLayer& out);
}  // namespace shortcut

}  // namespace uzmm::kernels
