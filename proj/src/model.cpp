#include "ednet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace ednet {

namespace {

std::string ed_where(std::size_t i, const std::string& field) {
  return "eds[" + std::to_string(i) + "]." + field;
}

void add(std::vector<Violation>& out, const char* code, std::string where, std::string message) {
  out.push_back(Violation{code, std::move(where), std::move(message)});
}

void check_tags(const NetworkConfig& cfg, std::vector<Violation>& out) {
  if (cfg.tags.empty()) add(out, violation::kNoTags, "tags", "at least one severity tag is required");
  std::set<std::string> labels;
  std::set<int> ordinals;
  for (std::size_t k = 0; k < cfg.tags.size(); ++k) {
    const auto& tag = cfg.tags[k];
    const std::string where = "tags[" + std::to_string(k) + "]";
    if (tag.ordinal < 1) add(out, violation::kBadTagOrdinal, where, "ordinal must be >= 1");
    if (!ordinals.insert(tag.ordinal).second)
      add(out, violation::kBadTagOrdinal, where, "ordinal " + std::to_string(tag.ordinal) + " repeated");
    if (tag.label.empty() || !labels.insert(tag.label).second)
      add(out, violation::kDuplicateTag, where, "label '" + tag.label + "' empty or repeated");
    if (!cfg.thresholds_minutes.contains(tag.label))
      add(out, violation::kMissingTagThreshold, "thresholds." + tag.label, "no threshold for tag");
    if (!cfg.weights.contains(tag.label))
      add(out, violation::kMissingTagWeight, "weights." + tag.label, "no weight for tag");
  }
  for (const auto& [label, v] : cfg.thresholds_minutes) {
    if (!labels.contains(label)) add(out, violation::kUnknownTag, "thresholds." + label, "unknown tag");
    if (!(std::isfinite(v) && v >= 0.0))
      add(out, violation::kNegativeThreshold, "thresholds." + label, "threshold must be finite and >= 0");
  }
  for (const auto& [label, v] : cfg.weights) {
    if (!labels.contains(label)) add(out, violation::kUnknownTag, "weights." + label, "unknown tag");
    if (!(std::isfinite(v) && v >= 0.0))
      add(out, violation::kNegativeWeight, "weights." + label, "weight must be finite and >= 0");
  }
}

void check_travel(const NetworkConfig& cfg, std::vector<Violation>& out) {
  const std::size_t n = cfg.eds.size();
  const auto& t = cfg.travel_minutes;
  bool square = t.size() == n;
  for (const auto& row : t) square = square && row.size() == n;
  if (!square) {
    add(out, violation::kTravelDimension, "travel_minutes",
        "travel matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::string where = "travel_minutes[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (!(std::isfinite(t[i][j]) && t[i][j] >= 0.0))
        add(out, violation::kNegativeTravel, where, "travel time must be finite and >= 0");
      if (i == j && t[i][j] != 0.0) add(out, violation::kNonzeroTravelDiagonal, where, "diagonal must be 0");
      if (i < j && t[i][j] != t[j][i])
        add(out, violation::kAsymmetricTravel, where,
            "travel[" + std::to_string(i) + "][" + std::to_string(j) + "] != travel[" + std::to_string(j) +
                "][" + std::to_string(i) + "]");
    }
  }
}

void check_slots(const EDConfig& ed, std::size_t i, std::vector<Violation>& out) {
  if (ed.slots.empty()) {
    add(out, violation::kSlotPartition, ed_where(i, "slots"), "at least one slot is required");
    return;
  }
  double cursor = 0.0;
  for (std::size_t j = 0; j < ed.slots.size(); ++j) {
    const auto& s = ed.slots[j];
    const std::string where = ed_where(i, "slots[" + std::to_string(j) + "]");
    if (s.start_hour != cursor || !(s.end_hour > s.start_hour))
      add(out, violation::kSlotPartition, where, "slots must tile [0, 24) in order without gaps");
    const double minutes = s.duration_minutes();
    if (minutes != std::round(minutes))
      add(out, violation::kSlotDuration, where, "slot duration must be a whole number of minutes");
    cursor = s.end_hour;
  }
  if (cursor != 24.0) add(out, violation::kSlotPartition, ed_where(i, "slots"), "slots must end at hour 24");
}

template <typename Map, typename Check>
void check_tag_table(const NetworkConfig& cfg, const Map& table, std::size_t i, const std::string& field,
                     std::size_t slots, const char* missing_code, Check&& check,
                     std::vector<Violation>& out) {
  for (const auto& tag : cfg.tags) {
    auto it = table.find(tag.label);
    const std::string where = ed_where(i, field + "." + tag.label);
    if (it == table.end() || it->second.size() != slots) {
      add(out, missing_code, where, "expected one entry per slot for tag '" + tag.label + "'");
      continue;
    }
    for (std::size_t j = 0; j < slots; ++j) check(it->second[j], where + "[" + std::to_string(j) + "]");
  }
  for (const auto& [label, values] : table) {
    const bool known = std::any_of(cfg.tags.begin(), cfg.tags.end(),
                                   [&](const SeverityTag& t) { return t.label == label; });
    if (!known) add(out, violation::kUnknownTag, ed_where(i, field + "." + label), "unknown tag");
  }
}

void check_ed(const NetworkConfig& cfg, const EDConfig& ed, std::size_t i, std::vector<Violation>& out) {
  check_slots(ed, i, out);
  const std::size_t m = ed.slots.size();

  check_tag_table(cfg, ed.arrivals.rates_per_hour, i, "arrival_rates", m, violation::kMissingRates,
                  [&](double rate, const std::string& where) {
                    if (!(std::isfinite(rate) && rate >= 0.0))
                      add(out, violation::kNegativeRate, where, "rate must be finite and >= 0");
                  },
                  out);
  check_tag_table(cfg, ed.service, i, "service", m, violation::kMissingService,
                  [&](const DistributionSpec& d, const std::string& where) {
                    if (!is_valid(d))
                      add(out, violation::kInvalidDistribution, where,
                          "invalid service law '" + format_distribution(d) + "'");
                  },
                  out);

  if (ed.lower.size() != m || ed.upper.size() != m || ed.as_is.size() != m) {
    add(out, violation::kBoundDimension, ed_where(i, "bounds"), "lower, upper and as_is need one value per slot");
    return;
  }
  for (std::size_t j = 0; j < m; ++j) {
    const std::string where = ed_where(i, "slot " + std::to_string(j));
    if (ed.lower[j] < 0 || ed.lower[j] > ed.upper[j])
      add(out, violation::kBoundInversion, where, "need 0 <= lower <= upper");
    if (ed.upper[j] < 1) add(out, violation::kZeroServer, where, "upper bound admits no server");
    if (ed.as_is[j] < 1) add(out, violation::kZeroServer, ed_where(i, "as_is[" + std::to_string(j) + "]"),
                             "as-is server count must be >= 1");
    if (!cfg.as_is_exempt_from_bounds && (ed.as_is[j] < ed.lower[j] || ed.as_is[j] > ed.upper[j]))
      add(out, violation::kBoundViolation, ed_where(i, "as_is[" + std::to_string(j) + "]"),
          "as-is value outside [lower, upper]");
  }
}

}  // namespace

Allocation::Allocation(std::vector<std::size_t> slots_per_ed, std::vector<int> values)
    : slots_per_ed_(std::move(slots_per_ed)), values_(std::move(values)) {
  offsets_.reserve(slots_per_ed_.size());
  std::size_t total = 0;
  for (auto m : slots_per_ed_) {
    offsets_.push_back(total);
    total += m;
  }
  if (total != values_.size()) throw std::invalid_argument("allocation shape does not match value count");
}

Allocation Allocation::filled(std::vector<std::size_t> slots_per_ed, int value) {
  const std::size_t total = std::accumulate(slots_per_ed.begin(), slots_per_ed.end(), std::size_t{0});
  return Allocation(std::move(slots_per_ed), std::vector<int>(total, value));
}

std::vector<std::size_t> Allocation::shape_of(const NetworkConfig& cfg) {
  std::vector<std::size_t> shape;
  for (const auto& ed : cfg.eds) shape.push_back(ed.slots.size());
  return shape;
}

namespace {
Allocation from_rows(const NetworkConfig& cfg, std::vector<int> EDConfig::*field) {
  std::vector<int> values;
  for (const auto& ed : cfg.eds) {
    const auto& row = ed.*field;
    if (row.size() != ed.slots.size()) throw ConfigError("ED " + std::to_string(ed.id) + ": bound row size mismatch");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Allocation(Allocation::shape_of(cfg), std::move(values));
}
}  // namespace

Allocation Allocation::as_is(const NetworkConfig& cfg) { return from_rows(cfg, &EDConfig::as_is); }
Allocation Allocation::lower_bounds(const NetworkConfig& cfg) { return from_rows(cfg, &EDConfig::lower); }
Allocation Allocation::upper_bounds(const NetworkConfig& cfg) { return from_rows(cfg, &EDConfig::upper); }

int Allocation::sum() const { return std::accumulate(values_.begin(), values_.end(), 0); }

std::string Allocation::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < values_.size(); ++i) os << (i ? "," : "") << values_[i];
  return os.str();
}

std::vector<Violation> validate_config(const NetworkConfig& cfg) {
  std::vector<Violation> out;
  check_tags(cfg, out);
  if (cfg.eds.empty()) add(out, violation::kNoEds, "eds", "at least one ED is required");
  std::set<int> ids;
  for (std::size_t i = 0; i < cfg.eds.size(); ++i) {
    if (!ids.insert(cfg.eds[i].id).second)
      add(out, violation::kDuplicateEdId, ed_where(i, "id"), "ED id " + std::to_string(cfg.eds[i].id) + " repeated");
    check_ed(cfg, cfg.eds[i], i, out);
  }
  check_travel(cfg, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Violation> validate_allocation(const Allocation& alloc, const NetworkConfig& cfg, bool require_bounds) {
  std::vector<Violation> out;
  if (alloc.shape() != Allocation::shape_of(cfg)) {
    add(out, violation::kDimensionMismatch, "allocation", "allocation is not dimensioned to the network");
    return out;
  }
  for (std::size_t i = 0; i < alloc.ed_count(); ++i) {
    const auto& ed = cfg.eds[i];
    for (std::size_t j = 0; j < alloc.slot_count(i); ++j) {
      const int s = alloc.at(i, j);
      const std::string where = "s[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (s < 1) add(out, violation::kZeroServer, where, "server count must be >= 1");
      if (require_bounds && j < ed.lower.size() && j < ed.upper.size() && (s < ed.lower[j] || s > ed.upper[j]))
        add(out, violation::kBoundViolation, where,
            std::to_string(s) + " outside [" + std::to_string(ed.lower[j]) + ", " + std::to_string(ed.upper[j]) + "]");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Violation> validate_policy(const ADPolicy& policy) {
  std::vector<Violation> out;
  const std::string where = "policies." + policy.id;
  if (policy.id.empty()) add(out, violation::kInvalidPolicy, "policies", "policy id must be non-empty");
  if (!(std::isfinite(policy.segment_hours) && policy.segment_hours > 0.0))
    add(out, violation::kInvalidPolicy, where, "segment_hours must be > 0");
  if (policy.daily_max_hours) {
    const double cap = *policy.daily_max_hours;
    if (!(std::isfinite(cap) && cap > 0.0)) add(out, violation::kInvalidPolicy, where, "daily_max_hours must be > 0");
    else if (policy.segment_hours > cap)
      add(out, violation::kInvalidPolicy, where, "segment_hours exceeds daily_max_hours");
  }
  return out;
}

std::vector<Violation> validate_design(const RunDesign& design) {
  std::vector<Violation> out;
  if (design.replications < 1) add(out, violation::kInvalidDesign, "design.replications", "need at least one replication");
  if (!(std::isfinite(design.horizon_days) && design.horizon_days >= 1.0))
    add(out, violation::kInvalidDesign, "design.horizon_days", "horizon must be at least one day");
  if (!(std::isfinite(design.warmup_hours) && design.warmup_hours >= 0.0))
    add(out, violation::kInvalidDesign, "design.warmup_hours", "warmup must be >= 0");
  else if (design.horizon_days * 24.0 <= design.warmup_hours)
    add(out, violation::kInvalidDesign, "design.warmup_hours", "warmup must be shorter than the horizon");
  return out;
}

std::int64_t slot_minutes(const TimeSlot& slot) {
  const double minutes = slot.duration_minutes();
  if (minutes != std::round(minutes) || minutes <= 0.0)
    throw ConfigError("slot '" + slot.label + "' is not a positive whole number of minutes");
  return static_cast<std::int64_t>(minutes);
}

std::int64_t f2(const Allocation& alloc, const NetworkConfig& cfg) {
  if (alloc.shape() != Allocation::shape_of(cfg))
    throw std::invalid_argument("f2: allocation is not dimensioned to the network");
  std::int64_t total = 0;
  for (std::size_t i = 0; i < cfg.eds.size(); ++i)
    for (std::size_t j = 0; j < cfg.eds[i].slots.size(); ++j)
      total += slot_minutes(cfg.eds[i].slots[j]) * alloc.at(i, j);
  return total;
}

std::vector<SeverityTag> tags_by_priority(const NetworkConfig& cfg) {
  auto tags = cfg.tags;
  std::stable_sort(tags.begin(), tags.end(),
                   [](const SeverityTag& a, const SeverityTag& b) { return a.ordinal < b.ordinal; });
  return tags;
}

std::string to_string(BlockingRule rule) {
  switch (rule) {
    case BlockingRule::AllAD: return "all";
    case BlockingRule::HighAcuityAD: return "high_acuity";
    case BlockingRule::LowAcuityAD: return "low_acuity";
  }
  return "all";
}

std::string to_string(DestinationRule rule) {
  return rule == DestinationRule::NearestED ? "nearest" : "least_crowded";
}

std::string to_string(EntryCheck check) { return check == EntryCheck::OnSeize ? "on_seize" : "on_arrival"; }

BlockingRule parse_blocking_rule(const std::string& text) {
  if (text == "all") return BlockingRule::AllAD;
  if (text == "high_acuity") return BlockingRule::HighAcuityAD;
  if (text == "low_acuity") return BlockingRule::LowAcuityAD;
  throw ConfigError("unknown blocking rule '" + text + "' (expected all, high_acuity, low_acuity)");
}

DestinationRule parse_destination_rule(const std::string& text) {
  if (text == "nearest") return DestinationRule::NearestED;
  if (text == "least_crowded") return DestinationRule::LeastCrowdedED;
  throw ConfigError("unknown destination rule '" + text + "' (expected nearest, least_crowded)");
}

EntryCheck parse_entry_check(const std::string& text) {
  if (text == "on_seize") return EntryCheck::OnSeize;
  if (text == "on_arrival") return EntryCheck::OnArrival;
  throw ConfigError("unknown entry check '" + text + "' (expected on_seize, on_arrival)");
}

}  // namespace ednet
