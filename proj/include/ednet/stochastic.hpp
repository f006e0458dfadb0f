#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ednet/distribution.hpp"
#include "ednet/model.hpp"

namespace ednet {

enum class StreamPurpose : std::uint32_t { Arrivals = 1, Service = 2 };

/// Identifies one independent random substream within a run.
struct StreamKey {
  std::uint64_t replication = 0;
  std::uint32_t ed = 0;
  StreamPurpose purpose = StreamPurpose::Arrivals;
  std::uint32_t tag = 0;

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// A seeded 64-bit Mersenne Twister whose state is fully determined by
/// (base_seed, key). Copyable; each worker owns its streams.
class RandomStream {
 public:
  RandomStream(std::uint64_t base_seed, const StreamKey& key);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double standard_normal();
  /// Exponential with mean 1.
  double unit_exponential();
  /// Gamma with unit scale.
  double standard_gamma(double shape);

  std::uint64_t next_raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// offset + one draw from the law; always >= offset.
double sample_service(const DistributionSpec& spec, RandomStream& stream);

/// One piece of a daily rate pattern: [start, end) in minutes-of-day.
struct RatePiece {
  double start_minute = 0.0;
  double end_minute = 1440.0;
  double rate_per_minute = 0.0;
};

/// Exact NHPP arrival epochs in [0, horizon_minutes) for a rate pattern that
/// repeats every 24h, generated by inverting the cumulative rate function.
std::vector<double> nhpp_arrival_times(std::span<const RatePiece> daily_pattern, double horizon_minutes,
                                       RandomStream& stream);

struct ArrivalEvent {
  double time = 0.0;  // minutes since horizon start
  std::size_t tag = 0;
  std::size_t ed = 0;
};

/// Daily pattern for one (ED, tag) built from the configured hourly rates.
std::vector<RatePiece> daily_rate_pattern(const EDConfig& ed, const std::string& tag_label);

/// Ordered arrival events of one tag at one ED over `horizon_days`.
std::vector<ArrivalEvent> gen_arrivals(const EDConfig& ed, std::size_t ed_index, const SeverityTag& tag,
                                       std::size_t tag_index, double horizon_days, RandomStream& stream);

}  // namespace ednet
