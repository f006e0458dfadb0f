#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ednet/model.hpp"
#include "ednet/stochastic.hpp"

namespace ednet {

/// Fatal internal inconsistency of the event calendar.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using PatientId = std::int64_t;
using TravelMatrix = std::vector<std::vector<double>>;

/// Dense, index-based view of a validated NetworkConfig. Tags are indexed by
/// priority rank (0 = most urgent); EDs keep configuration order.
class NetworkModel {
 public:
  explicit NetworkModel(const NetworkConfig& cfg);

  std::size_t ed_count() const { return eds_.size(); }
  std::size_t tag_count() const { return tags_.size(); }
  std::size_t slot_count(std::size_t ed) const { return eds_[ed].slot_end.size(); }
  std::vector<std::size_t> slots_per_ed() const;

  /// Slot of `ed` containing absolute time `minutes`.
  std::size_t slot_at(std::size_t ed, double minutes) const;
  /// Minute-of-day at which slot `slot` of `ed` ends.
  double slot_end_minute(std::size_t ed, std::size_t slot) const { return eds_[ed].slot_end[slot]; }

  const DistributionSpec& service(std::size_t ed, std::size_t tag, std::size_t slot) const {
    return eds_[ed].service[tag][slot];
  }
  const std::vector<RatePiece>& arrival_pattern(std::size_t ed, std::size_t tag) const {
    return eds_[ed].pattern[tag];
  }
  double rate_per_hour(std::size_t ed, std::size_t tag, std::size_t slot) const {
    return eds_[ed].pattern[tag][slot].rate_per_minute * 60.0;
  }
  const TravelMatrix& travel() const { return travel_; }
  double threshold(std::size_t tag) const { return thresholds_[tag]; }
  double weight(std::size_t tag) const { return weights_[tag]; }
  const SeverityTag& tag(std::size_t rank) const { return tags_[rank]; }
  int ed_id(std::size_t ed) const { return eds_[ed].id; }
  const std::string& slot_label(std::size_t ed, std::size_t slot) const { return eds_[ed].slot_labels[slot]; }
  const NetworkConfig& config() const { return config_; }

 private:
  struct Ed {
    int id = 0;
    std::vector<double> slot_end;  // minute-of-day
    std::vector<std::string> slot_labels;
    std::vector<std::vector<RatePiece>> pattern;             // [tag] -> one piece per slot
    std::vector<std::vector<DistributionSpec>> service;      // [tag][slot]
  };
  NetworkConfig config_;
  std::vector<SeverityTag> tags_;
  std::vector<double> thresholds_;
  std::vector<double> weights_;
  TravelMatrix travel_;
  std::vector<Ed> eds_;
};

struct Patient {
  PatientId id = 0;
  std::size_t tag = 0;  // priority rank
  std::size_t origin = 0;
  std::size_t arrival_slot = 0;  // slot of `origin` containing arrival_time
  double arrival_time = 0.0;
  double service_minutes = 0.0;  // drawn at creation
  std::optional<std::size_t> diverted_to;
  double transport_minutes = 0.0;
  std::optional<double> visit_start;
  std::optional<double> departure;

  std::size_t serving_ed() const { return diverted_to.value_or(origin); }
  double ready_time() const { return arrival_time + transport_minutes; }
};

/// Mutable per-ED state during one replication.
struct EDState {
  int capacity = 1;
  int busy = 0;
  std::size_t slot = 0;
  std::vector<std::deque<PatientId>> queue;  // one FIFO lane per priority rank
  bool on_diversion = false;
  std::optional<double> segment_end;
  std::int64_t budget_day = -1;
  double budget_used_minutes = 0.0;  // charged to budget_day

  explicit EDState(std::size_t tag_count = 1, int capacity_ = 1) : capacity(capacity_), queue(tag_count) {}

  std::size_t queue_length() const;
  int free_servers() const { return capacity > busy ? capacity - busy : 0; }
  double diverted_minutes_on(std::int64_t day) const { return day == budget_day ? budget_used_minutes : 0.0; }
};

struct CellStats {
  std::int64_t count = 0;
  double sum_nva = 0.0;
  double sum_dtdt = 0.0;
  double sum_transport = 0.0;
  double max_nva = 0.0;

  double mean_nva() const { return count ? sum_nva / static_cast<double>(count) : 0.0; }
  double mean_dtdt() const { return count ? sum_dtdt / static_cast<double>(count) : 0.0; }

  friend bool operator==(const CellStats&, const CellStats&) = default;
};

struct DiversionStats {
  std::int64_t episodes = 0;
  std::int64_t extensions = 0;
  std::int64_t diverted_patients = 0;
  std::int64_t received_patients = 0;
  double diversion_minutes = 0.0;

  friend bool operator==(const DiversionStats&, const DiversionStats&) = default;
};

/// End-of-horizon patient accounting: arrivals = completed + in_service + in_queue + in_transit.
struct FlowCounts {
  std::int64_t arrivals = 0;
  std::int64_t completed = 0;
  std::int64_t in_service = 0;
  std::int64_t in_queue = 0;
  std::int64_t in_transit = 0;

  friend bool operator==(const FlowCounts&, const FlowCounts&) = default;
};

/// Observations of one replication. Cells are indexed (ed, slot, tag rank);
/// only patients arriving after warmup and seen before the horizon are counted.
struct ReplicationStats {
  std::vector<std::size_t> ed_offsets;
  std::size_t tag_count = 0;
  std::vector<CellStats> cells;
  std::vector<DiversionStats> diversion;
  FlowCounts flow;

  static ReplicationStats shaped(const std::vector<std::size_t>& slots_per_ed, std::size_t tag_count);

  std::size_t cell_index(std::size_t ed, std::size_t slot, std::size_t tag) const {
    return ed_offsets[ed] + slot * tag_count + tag;
  }
  const CellStats& cell(std::size_t ed, std::size_t slot, std::size_t tag) const {
    return cells[cell_index(ed, slot, tag)];
  }
  CellStats& cell(std::size_t ed, std::size_t slot, std::size_t tag) { return cells[cell_index(ed, slot, tag)]; }
  std::int64_t observed_patients() const;

  /// Pools another replication's sums into this one.
  void merge(const ReplicationStats& other);

  friend bool operator==(const ReplicationStats&, const ReplicationStats&) = default;
};

enum class TraceKind {
  Arrival,
  Divert,
  TransferArrival,
  Queue,
  Seize,
  Release,
  SlotChange,
  DiversionStart,
  DiversionExtend,
  DiversionEnd,
};

std::string to_string(TraceKind kind);

/// One engine event; `other` is the destination ED for Divert and the new
/// capacity for SlotChange, `value` the segment end for diversion events.
struct TraceEvent {
  double time = 0.0;
  TraceKind kind = TraceKind::Arrival;
  std::size_t ed = 0;
  PatientId patient = -1;
  int tag = -1;
  int other = -1;
  double value = 0.0;
};

using TraceSink = std::function<void(const TraceEvent&)>;

// Diversion policy logic.

/// Whether a patient of priority rank `tag` is subject to diversion.
bool is_blocked(std::size_t tag, BlockingRule rule);

/// Eligible destinations are the other EDs that are not on diversion.
/// Nearest minimizes travel time; LeastCrowded minimizes (queue + busy) / capacity,
/// ties broken by travel time and then index.
std::optional<std::size_t> select_destination(std::size_t origin, DestinationRule rule,
                                              std::span<const EDState> states, const TravelMatrix& travel);

enum class ArrivalAction { Queue, Serve, Divert };

struct ArrivalDecision {
  ArrivalAction action = ArrivalAction::Queue;
  std::size_t destination = 0;

  friend bool operator==(const ArrivalDecision&, const ArrivalDecision&) = default;
};

/// Routing of a patient materializing at `ed`. Patients that were already
/// diverted are never diverted again.
ArrivalDecision on_arrival(const Patient& patient, std::size_t ed, std::span<const EDState> states,
                           const ADPolicy& policy, const TravelMatrix& travel);

enum class DiversionTrigger { StateChange, Arrival, SegmentEnd };
enum class DiversionTransition { None, Enter, Extend, Exit };

/// Diversion state machine. StateChange (seize, release, capacity change) and
/// Arrival may only start a segment, according to policy.entry_check; a
/// SegmentEnd re-evaluation exits when a server is free, otherwise extends if
/// the day's budget fits another full segment, otherwise exits. Segments are
/// charged to the calendar day in which they start.
DiversionTransition update_diversion_status(EDState& state, const ADPolicy& policy, double now,
                                            DiversionTrigger trigger);

/// Pops waiting patients (most urgent first, FIFO within rank) while a server is free.
std::vector<PatientId> seize_waiting(EDState& state);

/// Applies a new slot's capacity without preemption, then seizes freed capacity.
std::vector<PatientId> on_slot_boundary(EDState& state, std::size_t new_slot, int new_capacity);

/// Records a served patient's NVA, DTDT and transport time against
/// (origin, arrival slot, tag). Both run from arrival to the first visit, so a
/// diverted patient's transport counts in each.
void collect(const Patient& patient, ReplicationStats& stats);

/// Simulates one replication. Deterministic in (design.base_seed, replication).
ReplicationStats run_replication(const NetworkModel& model, const Allocation& alloc, const ADPolicy& policy,
                                 const RunDesign& design, std::uint64_t replication,
                                 const TraceSink* trace = nullptr);

ReplicationStats run_replication(const NetworkConfig& cfg, const Allocation& alloc, const ADPolicy& policy,
                                 const RunDesign& design, std::uint64_t replication,
                                 const TraceSink* trace = nullptr);

}  // namespace ednet
