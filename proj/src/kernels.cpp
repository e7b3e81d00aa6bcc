#include "uzmm/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace uzmm::kernels {

void HamiltonianLayer::resize(const LayerShape& shape) {
  ask.resize(shape.size());
  bid.resize(shape.size());
  ask_quote.resize(shape.size());
  bid_quote.resize(shape.size());
}

DiscountTable DiscountTable::build(const QuoteSpace& qs, std::span<const double> y_nodes,
                                   int max_quote) {
  DiscountTable t;
  t.quotes = max_quote + 1;
  t.nodes = static_cast<int>(y_nodes.size());
  t.ask.resize(static_cast<std::size_t>(t.quotes) * t.nodes);
  t.bid.resize(t.ask.size());
  for (int j = 0; j < t.quotes; ++j)
    for (int k = 0; k < t.nodes; ++k) {
      const double y = y_nodes[k];
      const std::size_t at = static_cast<std::size_t>(j) * t.nodes + k;
      t.ask[at] = quote_discount(qs.risk_aversion, j * qs.volume_step,
                                 spread_gain(Side::ask, qs.tick, y));
      t.bid[at] = quote_discount(qs.risk_aversion, j * qs.volume_step,
                                 spread_gain(Side::bid, qs.tick, y));
    }
  return t;
}

namespace serial {

void hamiltonian_layer(std::span<const double> u, const LayerShape& shape,
                       std::span<const double> y_nodes, MeasurePair mu, const QuoteSpace& qs,
                       HamiltonianLayer& out) {
  out.resize(shape);
  std::vector<double> column(static_cast<std::size_t>(shape.levels));
  for (int k = 0; k < shape.nodes; ++k) {
    for (int i = 0; i < shape.levels; ++i) column[i] = u[static_cast<std::size_t>(i) * shape.nodes + k];
    for (int i = 0; i < shape.levels; ++i) {
      const std::size_t at = static_cast<std::size_t>(i) * shape.nodes + k;
      const auto a = hamiltonian_ask_fast(column, i, y_nodes[k], *mu.ask, qs);
      const auto b = hamiltonian_bid_fast(column, i, y_nodes[k], *mu.bid, qs);
      out.ask[at] = a.value;
      out.ask_quote[at] = static_cast<std::uint16_t>(a.argmax_index);
      out.bid[at] = b.value;
      out.bid_quote[at] = static_cast<std::uint16_t>(b.argmax_index);
    }
  }
}

}  // namespace serial

namespace {

// One inventory row, one side, all nodes at once.
void scan_row(Side side, std::span<const double> u, const LayerShape& shape,
              const double* discount, const GridMeasure& mu, int i, int jmax, double* prefix,
              double* best, std::uint16_t* quote) {
  const int nodes = shape.nodes;
  auto row = [&](int fill) {
    const int r = side == Side::ask ? i - fill : i + fill;
    return u.data() + static_cast<std::size_t>(r) * nodes;
  };
  std::fill(prefix, prefix + nodes, 0.0);
  double tail = 1.0;
  std::size_t m = 0;
  for (int j = 0; j <= jmax; ++j) {
    for (; m < mu.size() && mu.index[m] <= j; ++m) {
      const double w = mu.mass[m];
      const double* d = discount + static_cast<std::size_t>(mu.index[m]) * nodes;
      const double* v = row(mu.index[m]);
#pragma omp simd
      for (int k = 0; k < nodes; ++k) prefix[k] += w * d[k] * v[k];
      tail = mu.tail[m];
    }
    const double* d = discount + static_cast<std::size_t>(j) * nodes;
    const double* v = row(j);
    if (j == 0) {
      for (int k = 0; k < nodes; ++k) {
        best[k] = prefix[k] + tail * d[k] * v[k];
        quote[k] = 0;
      }
      continue;
    }
    const auto jq = static_cast<std::uint16_t>(j);
#pragma omp simd
    for (int k = 0; k < nodes; ++k) {
      const double f = prefix[k] + tail * d[k] * v[k];
      const bool better = f > best[k] + kTieTolerance * std::abs(best[k]);
      best[k] = better ? f : best[k];
      quote[k] = better ? jq : quote[k];
    }
  }
}

}  // namespace

namespace parallel {

void hamiltonian_layer(std::span<const double> u, const LayerShape& shape,
                       const DiscountTable& discount, MeasurePair mu, const QuoteSpace& qs,
                       HamiltonianLayer& out) {
  out.resize(shape);
  const int levels = shape.levels;
  const int nodes = shape.nodes;
#pragma omp parallel
  {
    std::vector<double> prefix(static_cast<std::size_t>(nodes));
#pragma omp for schedule(dynamic, 4)
    for (int i = 0; i < levels; ++i) {
      const std::size_t at = static_cast<std::size_t>(i) * nodes;
      scan_row(Side::ask, u, shape, discount.ask.data(), *mu.ask, i,
               max_quote_index(Side::ask, i, *mu.ask, qs), prefix.data(), out.ask.data() + at,
               out.ask_quote.data() + at);
      scan_row(Side::bid, u, shape, discount.bid.data(), *mu.bid, i,
               max_quote_index(Side::bid, i, *mu.bid, qs), prefix.data(), out.bid.data() + at,
               out.bid_quote.data() + at);
    }
  }
}

}  // namespace parallel

namespace shortcut {

namespace {

// Scan arithmetic truncated at quote q; identical operations to scan_row's
// candidate value at j = q.
double value_at(Side side, const double* column, const double* discount_column, int nodes,
                const GridMeasure& mu, int i, int q) {
  double prefix = 0.0;
  double tail = 1.0;
  for (std::size_t m = 0; m < mu.size() && mu.index[m] <= q; ++m) {
    const int a = mu.index[m];
    const int r = side == Side::ask ? i - a : i + a;
    prefix += mu.mass[m] * discount_column[static_cast<std::size_t>(a) * nodes] * column[r];
    tail = mu.tail[m];
  }
  const int r = side == Side::ask ? i - q : i + q;
  return prefix + tail * discount_column[static_cast<std::size_t>(q) * nodes] * column[r];
}

}  // namespace

int hamiltonian_layer(std::span<const double> u, const LayerShape& shape,
                      std::span<const double> y_nodes, const DiscountTable& discount,
                      MeasurePair mu, const QuoteSpace& qs, HamiltonianLayer& out) {
  out.resize(shape);
  const int levels = shape.levels;
  const int nodes = shape.nodes;
  const int n = qs.steps;
  int fallbacks = 0;
  // Without mass at the cap the Hamiltonian is flat above the largest atom
  // and the turning point is not the smallest maximizer.
  const bool trivial = mu.ask->index.back() < mu.ask->cap_index || mu.bid->index.back() < mu.bid->cap_index;
#pragma omp parallel reduction(+ : fallbacks)
  {
    std::vector<double> column(static_cast<std::size_t>(levels));
    std::vector<double> logs(static_cast<std::size_t>(levels));
#pragma omp for schedule(static)
    for (int k = 0; k < nodes; ++k) {
      bool negative = true;
      for (int i = 0; i < levels; ++i) {
        column[i] = u[static_cast<std::size_t>(i) * nodes + k];
        negative = negative && column[i] < 0;
        logs[i] = negative ? -std::log(-column[i]) : 0.0;
      }
      const bool usable = !trivial && negative && is_discretely_concave(logs);
      const double y = y_nodes[k];
      if (!usable) {
        ++fallbacks;
        for (int i = 0; i < levels; ++i) {
          const std::size_t at = static_cast<std::size_t>(i) * nodes + k;
          const auto a = hamiltonian_ask_fast(column, i, y, *mu.ask, qs);
          const auto b = hamiltonian_bid_fast(column, i, y, *mu.bid, qs);
          out.ask[at] = a.value;
          out.ask_quote[at] = static_cast<std::uint16_t>(a.argmax_index);
          out.bid[at] = b.value;
          out.bid_quote[at] = static_cast<std::uint16_t>(b.argmax_index);
        }
        continue;
      }
      const double h = qs.volume_step;
      const int pivot_ask = shortcut_pivot_ask(
          logs, qs.risk_aversion * spread_gain(Side::ask, qs.tick, y) * h);
      const int pivot_bid = shortcut_pivot_bid(
          logs, qs.risk_aversion * spread_gain(Side::bid, qs.tick, y) * h);
      for (int i = 0; i < levels; ++i) {
        const std::size_t at = static_cast<std::size_t>(i) * nodes + k;
        const int qa = std::clamp(i - pivot_ask, 0, std::min(mu.ask->cap_index, i));
        const int qb = std::clamp(pivot_bid - i, 0, std::min(mu.bid->cap_index, 2 * n - i));
        out.ask[at] = value_at(Side::ask, column.data(), discount.ask.data() + k, nodes, *mu.ask, i, qa);
        out.ask_quote[at] = static_cast<std::uint16_t>(qa);
        out.bid[at] = value_at(Side::bid, column.data(), discount.bid.data() + k, nodes, *mu.bid, i, qb);
        out.bid_quote[at] = static_cast<std::uint16_t>(qb);
      }
    }
  }
  return fallbacks;
}

}  // namespace shortcut

}  // namespace uzmm::kernels
