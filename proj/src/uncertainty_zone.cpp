#include "uzmm/uncertainty_zone.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "uzmm/csv.hpp"

namespace uzmm {

double DriverPath::at(double s) const {
  if (s <= times.front()) return values.front();
  if (s >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double f = (s - times[i]) / (times[i + 1] - times[i]);
  return values[i] + f * (values[i + 1] - values[i]);
}

void DriverPath::validate() const {
  if (times.size() < 2 || times.size() != values.size())
    throw ValidationError("driver path needs >= 2 knots and matching arrays");
  if (times.front() != 0.0 || values.front() != 0.0)
    throw ValidationError("driver path must start at (0, 0)");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ValidationError("driver times must increase");
}

ZoneGeometry ZoneGeometry::from_params(const ModelParams& p) {
  return {-p.ybar(), p.ybar(), p.y_minus(), p.y_plus()};
}

double ZoneGeometry::min_gap() const {
  return std::min({reset_from_lower - lower, upper - reset_from_lower,
                   reset_from_upper - lower, upper - reset_from_upper});
}

void ZoneGeometry::validate() const {
  if (!(lower < upper && reset_from_lower > lower && reset_from_lower < upper &&
        reset_from_upper > lower && reset_from_upper < upper))
    throw ValidationError("zone geometry needs a < b and a0, b0 in (a, b)");
}

std::vector<BarrierEvent> barrier_sequence(double t, double y, const DriverPath& w,
                                           const ZoneGeometry& g) {
  w.validate();
  g.validate();
  if (!(y > g.lower && y < g.upper))
    throw ValidationError("starting signed distance must lie strictly inside the barriers");
  const double T = w.horizon();
  if (!(t >= 0 && t <= T)) throw ValidationError("start time outside [0, T]");

  std::vector<BarrierEvent> events;
  const auto first = std::upper_bound(w.times.begin(), w.times.end(), t);
  double s0 = t;
  double w0 = w.at(t);
  for (auto it = first; it != w.times.end(); ++it) {
    const auto i = static_cast<std::size_t>(it - w.times.begin());
    const double s1 = w.times[i];
    const double w1 = w.values[i];
    y = advance_signed_distance(y, w1 - w0, g, [&](double f, int eps) {
      const double tau = s0 + f * (s1 - s0);
      events.push_back({tau, eps,
                        eps > 0 ? g.reset_from_upper - g.upper : g.reset_from_lower - g.lower});
    });
    s0 = s1;
    w0 = w1;
  }
  events.push_back({T, 0, 0.0});
  return events;
}

double y_path(double t, double s, double y, const DriverPath& w,
              std::span<const BarrierEvent> events) {
  if (s <= t) return y;
  double value = y + (w.at(s) - w.at(t));
  for (const auto& e : events) {
    if (e.epsilon == 0 || e.tau > s) break;
    value += e.jump;
  }
  return value;
}

double y_path(double t, double s, double y, const DriverPath& w, const ZoneGeometry& g) {
  const auto events = barrier_sequence(t, y, w, g);
  return y_path(t, s, y, w, events);
}

PathSample midprice_path(double p0, double t, double y, const DriverPath& w,
                         const ModelParams& params) {
  const double delta = params.tick;
  const double offset = p0 / delta - 0.5;
  if (std::abs(offset - std::round(offset)) > 1e-9)
    throw ValidationError("p0 must lie on the inter-tick grid delta/2 + delta Z");
  const ZoneGeometry g = ZoneGeometry::from_params(params);
  const auto events = barrier_sequence(t, y, w, g);

  PathSample out;
  const double s_start = p0 + y;  // efficient price at time t
  const double w_t = w.at(t);
  auto push = [&](double time, double yy, double p) {
    out.times.push_back(time);
    out.signed_distance.push_back(yy);
    out.mid_price.push_back(p);
    out.efficient_price.push_back(s_start + (w.at(time) - w_t));
  };

  double p = p0;
  double yy = y;
  std::size_t next_event = 0;
  push(t, yy, p);
  const auto first = std::upper_bound(w.times.begin(), w.times.end(), t);
  for (auto it = first; it != w.times.end(); ++it) {
    const double knot = *it;
    while (events[next_event].epsilon != 0 && events[next_event].tau <= knot) {
      const auto& e = events[next_event++];
      // Pre-jump state: the driver has carried Y onto the barrier.
      const double y_pre = e.epsilon > 0 ? g.upper : g.lower;
      push(e.tau, y_pre, p);
      // Y jumps down at an upper hit: the mid-price moves up one tick.
      p += e.jump < 0 ? delta : -delta;
      yy = e.epsilon > 0 ? g.reset_from_upper : g.reset_from_lower;
      out.jumps.push_back({e.tau, e.jump < 0 ? +1 : -1});
      push(e.tau, yy, p);
    }
    push(knot, y_path(t, knot, y, w, events), p);
  }
  return out;
}

DriverPath simulate_driver(double sigma, double horizon, double dt, std::uint64_t seed) {
  if (!(dt > 0)) throw ValidationError("driver time step must be positive");
  if (!(horizon > 0)) throw ValidationError("driver horizon must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  DriverPath w;
  w.times.resize(steps + 1);
  w.values.resize(steps + 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t i = 1; i <= steps; ++i) {
    w.times[i] = std::min(static_cast<double>(i) * dt, horizon);
    const double h = w.times[i] - w.times[i - 1];
    w.values[i] = w.values[i - 1] + sigma * std::sqrt(h) * normal(rng);
  }
  return w;
}

double estimate_eta(std::span<const JumpMark> jumps) {
  if (jumps.size() < 2) throw std::domain_error("eta estimate needs at least two mid-price jumps");
  long continuations = 0;
  long alternations = 0;
  for (std::size_t i = 1; i < jumps.size(); ++i)
    (jumps[i].direction == jumps[i - 1].direction ? continuations : alternations) += 1;
  if (alternations == 0) throw std::domain_error("eta estimate undefined without alternations");
  return static_cast<double>(continuations) / (2.0 * static_cast<double>(alternations));
}

void write_path_csv(const PathSample& s, const std::filesystem::path& path) {
  CsvWriter out(path, {"time", "S", "Y", "P"});
  for (std::size_t i = 0; i < s.times.size(); ++i)
    out.row({s.times[i], s.efficient_price[i], s.signed_distance[i], s.mid_price[i]});
}

void write_jumps_csv(const PathSample& s, const std::filesystem::path& path) {
  CsvWriter out(path, {"time", "direction"});
  for (const auto& j : s.jumps) out.row({j.time, static_cast<double>(j.direction)});
}

}  // namespace uzmm
