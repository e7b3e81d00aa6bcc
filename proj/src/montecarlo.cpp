#include "uzmm/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include "uzmm/csv.hpp"

namespace uzmm {

QuotePolicy QuotePolicy::zero() { return {}; }

QuotePolicy QuotePolicy::constant(double ask, double bid) {
  if (!(ask >= 0 && bid >= 0)) throw ValidationError("constant quotes must be nonnegative");
  QuotePolicy q;
  q.kind_ = Kind::constant;
  q.ask_ = ask;
  q.bid_ = bid;
  return q;
}

QuotePolicy QuotePolicy::from_grid(const PolicyGrid& grid, const Lattice& lattice, bool strict) {
  QuotePolicy q;
  q.kind_ = Kind::grid;
  q.grid_ = &grid;
  q.lattice_ = &lattice;
  q.strict_ = strict;
  return q;
}

std::pair<int, int> QuotePolicy::quotes(double t, int i, double y, const ModelParams& params) const {
  switch (kind_) {
    case Kind::zero:
      return {0, 0};
    case Kind::constant: {
      const double h = params.volume_step();
      const auto a = grid_multiple(ask_, h);
      const auto b = grid_multiple(bid_, h);
      if (!a || !b) throw ValidationError("constant quotes must lie on the volume grid");
      const int room_bid = 2 * params.steps() - i;
      return {static_cast<int>(std::min<long>({*a, i, params.ask_cap_steps()})),
              static_cast<int>(std::min<long>({*b, room_bid, params.bid_cap_steps()}))};
    }
    case Kind::grid: {
      const int step = lattice_->step_at_or_before(t);
      const int j = lattice_->nearest_node(y);
      if (strict_) {
        if (!grid_->has(step)) throw ValidationError("policy layer not stored for this time");
        if (std::abs(y - lattice_->y_nodes[j]) > 0.5 * lattice_->dy() * (1 + 1e-9))
          throw ValidationError("signed distance off the policy lattice");
      }
      const int k = grid_->at_or_before(step);
      return {grid_->ask_index(k, i, j), grid_->bid_index(k, i, j)};
    }
  }
  return {0, 0};
}

namespace {

struct MarkSampler {
  std::vector<double> cdf;
  std::vector<int> index;

  explicit MarkSampler(const GridMeasure& mu) : index(mu.index) {
    double acc = 0.0;
    for (double m : mu.mass) cdf.push_back(acc += m);
  }
  int draw(double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return index[std::min<std::size_t>(it - cdf.begin(), index.size() - 1)];
  }
};

void check_config(const SimConfig& c, const ModelParams& p) {
  if (!(c.dt > 0)) throw ValidationError("simulation dt must be positive");
  if (c.n_paths < 1) throw ValidationError("simulation needs at least one path");
  if (!(c.start_time >= 0 && c.start_time < p.horizon)) throw ValidationError("start time outside [0, T)");
  if (!(std::abs(c.start_y) < p.ybar())) throw ValidationError("start y outside (-ybar, ybar)");
  p.inventory_index(c.start_inventory);
}

}  // namespace

PathResult simulate_path(const SimConfig& c, const MarketModel& model, long index, bool record) {
  const auto& p = model.params;
  validate(p);
  check_config(c, p);
  const auto [mu_a, mu_b] = grid_measures(model);
  const MarkSampler marks_a(mu_a), marks_b(mu_b);
  const ZoneGeometry geometry = ZoneGeometry::from_params(p);
  const double h = p.volume_step();
  const double gamma = p.risk_aversion;
  const double sigma = p.volatility;
  const double horizon = p.horizon;
  const double bound_a = model.ask_intensity.bound();
  const double bound_b = model.bid_intensity.bound();
  const double inf = std::numeric_limits<double>::infinity();

  const auto seed = c.seed;
  const auto path = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  auto clock = [&](double rate) { return rate > 0 ? std::exponential_distribution<double>(rate)(rng) : inf; };

  PathResult r;
  double t = c.start_time;
  double y = c.start_y;
  int i = p.inventory_index(c.start_inventory);
  double mid = c.start_mid != 0.0 ? c.start_mid : 0.5 * p.tick;
  double segment_w = 0.0;  // Brownian displacement since the last fill
  double abs_segments = 0.0;
  double next_a = t + clock(bound_a);
  double next_b = t + clock(bound_b);

  auto sample = [&](double s) {
    r.path.times.push_back(s);
    r.path.efficient_price.push_back(mid + y);
    r.path.signed_distance.push_back(y);
    r.path.mid_price.push_back(mid);
  };
  if (record) sample(t);

  while (t < horizon * (1 - 1e-14)) {
    const double step = std::min(c.dt, horizon - t);
    for (;;) {
      const double s = std::min(next_a, next_b);
      if (!(s < t + step)) break;
      const Side side = next_a <= next_b ? Side::ask : Side::bid;
      const Intensity& intensity = side == Side::ask ? model.ask_intensity : model.bid_intensity;
      const double bound = intensity.bound();
      (side == Side::ask ? next_a : next_b) = s + clock(bound);
      if (!(uniform(rng) * bound < intensity.rate(s, y))) continue;
      ++r.arrivals;
      const auto [qa, qb] = c.policy.quotes(s, i, y, p);
      const int quote = side == Side::ask ? qa : qb;
      const int room = side == Side::ask ? std::min(i, mu_a.cap_index)
                                         : std::min(2 * p.steps() - i, mu_b.cap_index);
      if (quote < 0 || quote > room) r.admissible = false;
      const int z = (side == Side::ask ? marks_a : marks_b).draw(uniform(rng));
      const int fill = std::clamp(std::min(quote, z), 0, room);
      if (fill > 0) {
        ++r.fills;
        const double gain = side == Side::ask ? 0.5 * p.tick - y : 0.5 * p.tick + y;
        r.pnl += fill * h * gain;
        i += side == Side::ask ? -fill : fill;
        abs_segments += std::abs(segment_w);
        segment_w = 0.0;
      }
      if (record && fill > 0)
        r.trades.push_back({s, side, quote * h, fill * h, y, mid, p.inventory(i), r.pnl});
    }

    const double dw = std::sqrt(step) * normal(rng);
    r.pnl += sigma * p.inventory(i) * dw;
    segment_w += dw;
    y = advance_signed_distance(y, sigma * dw, geometry, [&](double fraction, int epsilon) {
      ++r.jumps;
      const double s = t + fraction * step;
      if (record) {
        y = epsilon > 0 ? geometry.upper : geometry.lower;
        sample(s);
      }
      mid += epsilon * p.tick;
      if (record) {
        y = epsilon > 0 ? geometry.reset_from_upper : geometry.reset_from_lower;
        sample(s);
        r.path.jumps.push_back({s, epsilon});
      }
    });
    t += step;
    if (record) sample(t);
  }
  abs_segments += std::abs(segment_w);

  const double q_final = p.inventory(i);
  r.inventory = q_final;
  const double exponent = -gamma * (r.pnl - model.penalty(q_final));
  r.utility = -std::exp(exponent);
  const double qbar = std::max(p.ask_cap, p.bid_cap);
  r.log_envelope = gamma * (model.penalty.sup_on_grid(p) + p.tick * p.zone_ratio * qbar * r.fills +
                            sigma * p.inventory_cap * abs_segments);
  r.within_envelope = exponent <= r.log_envelope + 1e-9 * (1.0 + std::abs(r.log_envelope));
  return r;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

UtilityEstimate estimate_utility(const SimConfig& c, const MarketModel& model, PathResult* first) {
  check_config(c, model.params);
  const long n = c.n_paths;
  std::vector<double> utility(n), pnl(n), fills(n);
  std::vector<char> envelope(n), admissible(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
  for (long k = 0; k < n; ++k) {
    try {
      const bool record = first && k == 0;
      auto r = simulate_path(c, model, k, record);
      utility[k] = r.utility;
      pnl[k] = r.pnl;
      fills[k] = static_cast<double>(r.fills);
      envelope[k] = r.within_envelope;
      admissible[k] = r.admissible;
      if (record) *first = std::move(r);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  UtilityEstimate e;
  e.n_paths = n;
  e.mean = pairwise_sum(utility) / n;
  e.mean_pnl = pairwise_sum(pnl) / n;
  e.mean_fills = pairwise_sum(fills) / n;
  if (n >= 2) {
    std::vector<double> sq(n);
    for (long k = 0; k < n; ++k) sq[k] = (utility[k] - e.mean) * (utility[k] - e.mean);
    e.std_error = std::sqrt(pairwise_sum(sq) / (n - 1) / n);
  } else {
    e.std_error = std::numeric_limits<double>::quiet_NaN();
  }
  e.envelope_violations = std::count(envelope.begin(), envelope.end(), 0);
  e.admissibility_violations = std::count(admissible.begin(), admissible.end(), 0);
  return e;
}

double zero_policy_utility(const MarketModel& model, double t, double inventory) {
  const auto& p = model.params;
  const double g = p.risk_aversion;
  return -std::exp(g * model.penalty(inventory) +
                   0.5 * g * g * p.volatility * p.volatility * inventory * inventory * (p.horizon - t));
}

void write_trades_csv(const std::filesystem::path& path, const std::vector<Trade>& trades) {
  CsvWriter out(path, {"time", "side", "quoted", "executed", "Y", "P", "inventory_after", "pnl_after"});
  for (const auto& t : trades)
    out.row({t.time, t.side == Side::ask ? 1.0 : -1.0, t.quoted, t.executed, t.y, t.mid,
             t.inventory_after, t.pnl_after});
}

}  // namespace uzmm
