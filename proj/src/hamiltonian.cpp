#include "uzmm/hamiltonian.hpp"

#include <algorithm>
#include <stdexcept>

namespace uzmm {

QuoteSpace QuoteSpace::from_params(const ModelParams& p) {
  return {p.risk_aversion, p.tick, p.volume_step(), p.steps()};
}

int max_quote_index(Side side, int i, const GridMeasure& mu, const QuoteSpace& qs) {
  const int room = side == Side::ask ? i : 2 * qs.steps - i;
  return std::min(mu.cap_index, room);
}

namespace {

// Inventory index reached after filling `fill` steps on `side`.
inline int after_fill(Side side, int i, int fill) { return side == Side::ask ? i - fill : i + fill; }

void check_point(std::span<const double> phi, int i, const QuoteSpace& qs) {
  if (static_cast<int>(phi.size()) != qs.levels())
    throw std::invalid_argument("inventory slice must have 2n + 1 values");
  if (i < 0 || i >= qs.levels()) throw std::out_of_range("inventory index off the grid");
}

double integral(Side side, std::span<const double> phi, int i, double y, int j,
                const GridMeasure& mu, const QuoteSpace& qs) {
  check_point(phi, i, qs);
  const int room = side == Side::ask ? i : 2 * qs.steps - i;
  if (j < 0 || j > room) throw std::out_of_range("quote exceeds the admissible inventory room");
  const double gain = spread_gain(side, qs.tick, y);
  double s = 0.0;
  for (std::size_t m = 0; m < mu.size(); ++m) {
    const int fill = std::min(j, mu.index[m]);
    s += mu.mass[m] * quote_discount(qs.risk_aversion, fill * qs.volume_step, gain) *
         phi[after_fill(side, i, fill)];
  }
  return s;
}

HamiltonianResult brute(Side side, std::span<const double> phi, int i, double y,
                        const GridMeasure& mu, const QuoteSpace& qs) {
  check_point(phi, i, qs);
  const int jmax = max_quote_index(side, i, mu, qs);
  HamiltonianResult r;
  r.admissible_max = jmax * qs.volume_step;
  for (int j = 0; j <= jmax; ++j) {
    const double f = integral(side, phi, i, y, j, mu, qs);
    if (j == 0 || strictly_better(f, r.value)) {
      r.value = f;
      r.argmax_index = j;
    }
  }
  r.argmax_quote = r.argmax_index * qs.volume_step;
  return r;
}

HamiltonianResult scan(Side side, std::span<const double> phi, int i, double y,
                       const GridMeasure& mu, const QuoteSpace& qs) {
  check_point(phi, i, qs);
  const int jmax = max_quote_index(side, i, mu, qs);
  const double gain = spread_gain(side, qs.tick, y);
  const double gamma = qs.risk_aversion;
  const double h = qs.volume_step;
  HamiltonianResult r;
  r.admissible_max = jmax * h;
  double prefix = 0.0;
  double tail = 1.0;
  std::size_t m = 0;
  for (int j = 0; j <= jmax; ++j) {
    for (; m < mu.size() && mu.index[m] <= j; ++m) {
      const int a = mu.index[m];
      prefix += mu.mass[m] * quote_discount(gamma, a * h, gain) * phi[after_fill(side, i, a)];
      tail = mu.tail[m];
    }
    const double f = prefix + tail * quote_discount(gamma, j * h, gain) * phi[after_fill(side, i, j)];
    if (j == 0 || strictly_better(f, r.value)) {
      r.value = f;
      r.argmax_index = j;
    }
  }
  r.argmax_quote = r.argmax_index * h;
  return r;
}

}  // namespace

double integral_ask(std::span<const double> phi, int i, double y, int j, const GridMeasure& mu,
                    const QuoteSpace& qs) {
  return integral(Side::ask, phi, i, y, j, mu, qs);
}

double integral_bid(std::span<const double> phi, int i, double y, int j, const GridMeasure& mu,
                    const QuoteSpace& qs) {
  return integral(Side::bid, phi, i, y, j, mu, qs);
}

HamiltonianResult hamiltonian_ask(std::span<const double> phi, int i, double y,
                                  const GridMeasure& mu, const QuoteSpace& qs) {
  return brute(Side::ask, phi, i, y, mu, qs);
}

HamiltonianResult hamiltonian_bid(std::span<const double> phi, int i, double y,
                                  const GridMeasure& mu, const QuoteSpace& qs) {
  return brute(Side::bid, phi, i, y, mu, qs);
}

HamiltonianResult hamiltonian_ask_fast(std::span<const double> phi, int i, double y,
                                       const GridMeasure& mu, const QuoteSpace& qs) {
  return scan(Side::ask, phi, i, y, mu, qs);
}

HamiltonianResult hamiltonian_bid_fast(std::span<const double> phi, int i, double y,
                                       const GridMeasure& mu, const QuoteSpace& qs) {
  return scan(Side::bid, phi, i, y, mu, qs);
}

bool is_discretely_concave(std::span<const double> v, double tol) {
  for (std::size_t r = 1; r + 1 < v.size(); ++r)
    if (v[r - 1] - 2 * v[r] + v[r + 1] > tol) return false;
  return true;
}

// Objective along the inventory R reached after the fill: gain * (Q - R) +
// g(R) on the ask, gain * (R - Q) + g(R) on the bid. Both are concave in R.

int shortcut_pivot_ask(std::span<const double> g, double gain_per_step) {
  // Moving R -> R + h changes the ask objective by g(R + h) - g(R) - gain h.
  // Ties move on, towards the smaller quote.
  const int last = static_cast<int>(g.size()) - 1;
  for (int r = 0; r < last; ++r)
    if (g[r + 1] - g[r] - gain_per_step < -kTieTolerance) return r;
  return last;
}

int shortcut_pivot_bid(std::span<const double> g, double gain_per_step) {
  // Moving R -> R + h changes the bid objective by g(R + h) - g(R) + gain h.
  // Ties stop, keeping the smaller quote.
  const int last = static_cast<int>(g.size()) - 1;
  for (int r = 0; r < last; ++r)
    if (g[r + 1] - g[r] + gain_per_step <= kTieTolerance) return r;
  return last;
}

std::optional<int> argmax_shortcut_ask(std::span<const double> g, int i, double y, int cap_index,
                                       const QuoteSpace& qs) {
  if (static_cast<int>(g.size()) != qs.levels()) throw std::invalid_argument("slice size");
  if (!is_discretely_concave(g)) return std::nullopt;
  const double step_gain = qs.risk_aversion * spread_gain(Side::ask, qs.tick, y) * qs.volume_step;
  const int pivot = shortcut_pivot_ask(g, step_gain);
  return std::clamp(i - pivot, 0, std::min(cap_index, i));
}

std::optional<int> argmax_shortcut_bid(std::span<const double> g, int i, double y, int cap_index,
                                       const QuoteSpace& qs) {
  if (static_cast<int>(g.size()) != qs.levels()) throw std::invalid_argument("slice size");
  if (!is_discretely_concave(g)) return std::nullopt;
  const double step_gain = qs.risk_aversion * spread_gain(Side::bid, qs.tick, y) * qs.volume_step;
  const int pivot = shortcut_pivot_bid(g, step_gain);
  return std::clamp(pivot - i, 0, std::min(cap_index, 2 * qs.steps - i));
}

}  // namespace uzmm
