#include "ednet/stochastic.hpp"

#include <cmath>
#include <numbers>

namespace ednet {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t base_seed, const StreamKey& key) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(base_seed),       hi(base_seed),
                    lo(key.replication), hi(key.replication),
                    key.ed,              static_cast<std::uint32_t>(key.purpose),
                    key.tag,             0x6564u /* stream-family marker */};
  return std::mt19937_64(seq);
}

// Marsaglia-Tsang, valid for shape >= 1.
double gamma_ge1(double shape, RandomStream& rs) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rs.standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rs.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// log of a unit-scale gamma draw; shape < 1 uses G(a) = G(a + 1) * U^(1/a).
double log_standard_gamma(double shape, RandomStream& rs) {
  if (shape >= 1.0) return std::log(gamma_ge1(shape, rs));
  return std::log(gamma_ge1(shape + 1.0, rs)) + std::log(rs.uniform()) / shape;
}

struct LawSampler {
  RandomStream& rs;

  double operator()(const Exponential& d) const { return d.mean * rs.unit_exponential(); }
  double operator()(const Weibull& d) const { return d.scale * std::pow(rs.unit_exponential(), 1.0 / d.shape); }
  double operator()(const Gamma& d) const { return d.scale * rs.standard_gamma(d.shape); }
  double operator()(const LogNormal& d) const {
    const double ratio = d.stddev / d.mean;
    const double sigma2 = std::log1p(ratio * ratio);
    const double mu = std::log(d.mean) - 0.5 * sigma2;
    return std::exp(mu + std::sqrt(sigma2) * rs.standard_normal());
  }
  double operator()(const ScaledBeta& d) const {
    const double lx = log_standard_gamma(d.shape1, rs);
    const double ly = log_standard_gamma(d.shape2, rs);
    // x / (x + y) evaluated in log space so tiny shapes cannot produce 0/0.
    return d.scale / (1.0 + std::exp(ly - lx));
  }
};

}  // namespace

RandomStream::RandomStream(std::uint64_t base_seed, const StreamKey& key) : engine_(seeded_engine(base_seed, key)) {}

double RandomStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::standard_normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::unit_exponential() { return -std::log(uniform()); }

double RandomStream::standard_gamma(double shape) { return std::exp(log_standard_gamma(shape, *this)); }

double sample_service(const DistributionSpec& spec, RandomStream& stream) {
  const double draw = std::visit(LawSampler{stream}, spec.law);
  return spec.offset + std::max(0.0, draw);
}

std::vector<double> nhpp_arrival_times(std::span<const RatePiece> daily_pattern, double horizon_minutes,
                                       RandomStream& stream) {
  std::vector<double> times;
  if (daily_pattern.empty() || !(horizon_minutes > 0.0)) return times;
  double daily_mass = 0.0;
  for (const auto& p : daily_pattern) daily_mass += p.rate_per_minute * (p.end_minute - p.start_minute);
  if (!(daily_mass > 0.0)) return times;

  // Walk the pattern, spending unit-exponential mass against the cumulative rate.
  double remaining = stream.unit_exponential();
  double day_start = 0.0;
  while (day_start < horizon_minutes) {
    for (const auto& piece : daily_pattern) {
      const double begin = day_start + piece.start_minute;
      const double end = std::min(day_start + piece.end_minute, horizon_minutes);
      if (begin >= horizon_minutes) break;
      if (piece.rate_per_minute <= 0.0) continue;
      double t = begin;
      for (;;) {
        const double next = t + remaining / piece.rate_per_minute;
        if (next >= end) {
          remaining -= piece.rate_per_minute * (end - t);
          break;
        }
        t = (!times.empty() && next <= times.back()) ? std::nextafter(times.back(), end) : next;
        times.push_back(t);
        remaining = stream.unit_exponential();
      }
    }
    day_start += 1440.0;
  }
  return times;
}

std::vector<RatePiece> daily_rate_pattern(const EDConfig& ed, const std::string& tag_label) {
  std::vector<RatePiece> pattern;
  const auto it = ed.arrivals.rates_per_hour.find(tag_label);
  if (it == ed.arrivals.rates_per_hour.end())
    throw ConfigError("ED " + std::to_string(ed.id) + " has no arrival rates for tag '" + tag_label + "'");
  for (std::size_t j = 0; j < ed.slots.size(); ++j)
    pattern.push_back({ed.slots[j].start_hour * 60.0, ed.slots[j].end_hour * 60.0, it->second.at(j) / 60.0});
  return pattern;
}

std::vector<ArrivalEvent> gen_arrivals(const EDConfig& ed, std::size_t ed_index, const SeverityTag& tag,
                                       std::size_t tag_index, double horizon_days, RandomStream& stream) {
  const auto pattern = daily_rate_pattern(ed, tag.label);
  const auto times = nhpp_arrival_times(pattern, horizon_days * 1440.0, stream);
  std::vector<ArrivalEvent> events;
  events.reserve(times.size());
  for (double t : times) events.push_back({t, tag_index, ed_index});
  return events;
}

}  // namespace ednet
