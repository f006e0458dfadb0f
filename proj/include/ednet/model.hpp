#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ednet/distribution.hpp"

namespace ednet {

/// Raised for malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Triage severity class. Lower ordinal means more urgent.
struct SeverityTag {
  int ordinal = 1;
  std::string label;

  friend bool operator==(const SeverityTag&, const SeverityTag&) = default;
};

/// A contiguous block of hours within the day, e.g. [0, 8).
struct TimeSlot {
  std::string label;
  double start_hour = 0.0;
  double end_hour = 24.0;

  double duration_minutes() const { return (end_hour - start_hour) * 60.0; }

  friend bool operator==(const TimeSlot&, const TimeSlot&) = default;
};

/// Piecewise-constant hourly arrival rates keyed by tag label, one entry per slot.
struct ArrivalModel {
  std::map<std::string, std::vector<double>> rates_per_hour;

  friend bool operator==(const ArrivalModel&, const ArrivalModel&) = default;
};

struct EDConfig {
  int id = 0;
  std::string name;
  std::vector<TimeSlot> slots;
  ArrivalModel arrivals;
  // Service law keyed by tag label, one entry per slot.
  std::map<std::string, std::vector<DistributionSpec>> service;
  std::vector<int> lower;
  std::vector<int> upper;
  std::vector<int> as_is;
  // Informational yearly counts per tag and slot; never used by the simulator.
  std::map<std::string, std::vector<double>> yearly_counts;

  friend bool operator==(const EDConfig&, const EDConfig&) = default;
};

struct NetworkConfig {
  std::string name;
  std::vector<SeverityTag> tags;
  std::map<std::string, double> thresholds_minutes;
  std::map<std::string, double> weights;
  std::vector<std::vector<double>> travel_minutes;
  std::vector<EDConfig> eds;
  // The as-is allocation may legitimately sit outside [lower, upper].
  bool as_is_exempt_from_bounds = false;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

enum class BlockingRule { AllAD, HighAcuityAD, LowAcuityAD };
enum class DestinationRule { NearestED, LeastCrowdedED };
// When the initiating criterion is evaluated.
enum class EntryCheck { OnSeize, OnArrival };

struct ADPolicy {
  std::string id = "no-ad";
  bool enabled = false;
  double segment_hours = 6.0;
  std::optional<double> daily_max_hours;
  BlockingRule blocking = BlockingRule::AllAD;
  DestinationRule destination = DestinationRule::NearestED;
  EntryCheck entry_check = EntryCheck::OnSeize;

  friend bool operator==(const ADPolicy&, const ADPolicy&) = default;
};

struct RunDesign {
  int replications = 30;
  double horizon_days = 365.0;
  double warmup_hours = 48.0;
  std::uint64_t base_seed = 12345;

  double horizon_minutes() const { return horizon_days * 1440.0; }
  double warmup_minutes() const { return warmup_hours * 60.0; }

  friend bool operator==(const RunDesign&, const RunDesign&) = default;
};

/// Integer sanitary-resource levels s(i, j), stored row-major by ED.
class Allocation {
 public:
  Allocation() = default;
  Allocation(std::vector<std::size_t> slots_per_ed, std::vector<int> values);

  static Allocation filled(std::vector<std::size_t> slots_per_ed, int value);
  /// The as-is allocation declared in the configuration.
  static Allocation as_is(const NetworkConfig& cfg);
  static Allocation lower_bounds(const NetworkConfig& cfg);
  static Allocation upper_bounds(const NetworkConfig& cfg);
  static std::vector<std::size_t> shape_of(const NetworkConfig& cfg);

  int at(std::size_t ed, std::size_t slot) const { return values_[offsets_[ed] + slot]; }
  int& at(std::size_t ed, std::size_t slot) { return values_[offsets_[ed] + slot]; }

  std::size_t ed_count() const { return slots_per_ed_.size(); }
  std::size_t slot_count(std::size_t ed) const { return slots_per_ed_[ed]; }
  const std::vector<std::size_t>& shape() const { return slots_per_ed_; }

  // Flat coordinate view, used by the optimizer.
  std::size_t size() const { return values_.size(); }
  std::span<const int> values() const { return values_; }
  int operator[](std::size_t k) const { return values_[k]; }
  int& operator[](std::size_t k) { return values_[k]; }
  int sum() const;

  std::string to_string() const;

  friend bool operator==(const Allocation&, const Allocation&) = default;
  friend auto operator<=>(const Allocation& a, const Allocation& b) {
    if (auto c = a.slots_per_ed_ <=> b.slots_per_ed_; c != 0) return c;
    return a.values_ <=> b.values_;
  }

 private:
  std::vector<std::size_t> slots_per_ed_;
  std::vector<std::size_t> offsets_;
  std::vector<int> values_;
};

/// One invariant breach found by validation.
struct Violation {
  std::string code;
  std::string where;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
  friend auto operator<=>(const Violation&, const Violation&) = default;
};

// Violation codes.
namespace violation {
inline constexpr const char* kNoTags = "no_tags";
inline constexpr const char* kBadTagOrdinal = "bad_tag_ordinal";
inline constexpr const char* kDuplicateTag = "duplicate_tag";
inline constexpr const char* kMissingTagThreshold = "missing_tag_threshold";
inline constexpr const char* kMissingTagWeight = "missing_tag_weight";
inline constexpr const char* kUnknownTag = "unknown_tag";
inline constexpr const char* kNegativeThreshold = "negative_threshold";
inline constexpr const char* kNegativeWeight = "negative_weight";
inline constexpr const char* kNoEds = "no_eds";
inline constexpr const char* kDuplicateEdId = "duplicate_ed_id";
inline constexpr const char* kTravelDimension = "travel_dimension";
inline constexpr const char* kAsymmetricTravel = "asymmetric_travel";
inline constexpr const char* kNonzeroTravelDiagonal = "nonzero_travel_diagonal";
inline constexpr const char* kNegativeTravel = "negative_travel";
inline constexpr const char* kSlotPartition = "slot_partition";
inline constexpr const char* kSlotDuration = "slot_duration";
inline constexpr const char* kMissingRates = "missing_rates";
inline constexpr const char* kNegativeRate = "negative_rate";
inline constexpr const char* kMissingService = "missing_service";
inline constexpr const char* kInvalidDistribution = "invalid_distribution";
inline constexpr const char* kBoundDimension = "bound_dimension";
inline constexpr const char* kBoundInversion = "bound_inversion";
inline constexpr const char* kBoundViolation = "bound_violation";
inline constexpr const char* kZeroServer = "zero_server";
inline constexpr const char* kDimensionMismatch = "dimension_mismatch";
inline constexpr const char* kInvalidPolicy = "invalid_policy";
inline constexpr const char* kDuplicatePolicy = "duplicate_policy";
inline constexpr const char* kInvalidDesign = "invalid_design";
}  // namespace violation

/// Every invariant breach of the network configuration, sorted. Empty means valid.
std::vector<Violation> validate_config(const NetworkConfig& cfg);

/// Checks an allocation's shape and server counts; with `require_bounds`, also l <= s <= u.
std::vector<Violation> validate_allocation(const Allocation& alloc, const NetworkConfig& cfg,
                                           bool require_bounds);

std::vector<Violation> validate_policy(const ADPolicy& policy);
std::vector<Violation> validate_design(const RunDesign& design);

/// Resource-minutes of an allocation: sum over EDs and slots of duration * s.
/// Throws std::invalid_argument when `alloc` is not dimensioned to `cfg`.
std::int64_t f2(const Allocation& alloc, const NetworkConfig& cfg);

/// Integer slot length in minutes; throws ConfigError if not a whole number.
std::int64_t slot_minutes(const TimeSlot& slot);

/// Tags sorted by urgency (ascending ordinal).
std::vector<SeverityTag> tags_by_priority(const NetworkConfig& cfg);

std::string to_string(BlockingRule rule);
std::string to_string(DestinationRule rule);
std::string to_string(EntryCheck check);
BlockingRule parse_blocking_rule(const std::string& text);
DestinationRule parse_destination_rule(const std::string& text);
EntryCheck parse_entry_check(const std::string& text);

}  // namespace ednet
