#include "ednet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace ednet {

// ---------------------------------------------------------------------------
// NetworkModel

NetworkModel::NetworkModel(const NetworkConfig& cfg) : config_(cfg) {
  if (auto v = validate_config(cfg); !v.empty())
    throw ConfigError("invalid network configuration: " + v.front().code + " at " + v.front().where + " (" +
                      v.front().message + ")");
  tags_ = tags_by_priority(cfg);
  for (const auto& t : tags_) {
    thresholds_.push_back(cfg.thresholds_minutes.at(t.label));
    weights_.push_back(cfg.weights.at(t.label));
  }
  travel_ = cfg.travel_minutes;
  for (const auto& e : cfg.eds) {
    Ed ed;
    ed.id = e.id;
    for (const auto& s : e.slots) {
      ed.slot_end.push_back(s.end_hour * 60.0);
      ed.slot_labels.push_back(s.label);
    }
    for (const auto& t : tags_) {
      ed.pattern.push_back(daily_rate_pattern(e, t.label));
      ed.service.push_back(e.service.at(t.label));
    }
    eds_.push_back(std::move(ed));
  }
}

std::vector<std::size_t> NetworkModel::slots_per_ed() const {
  std::vector<std::size_t> out;
  for (const auto& e : eds_) out.push_back(e.slot_end.size());
  return out;
}

std::size_t NetworkModel::slot_at(std::size_t ed, double minutes) const {
  const double minute_of_day = minutes - 1440.0 * std::floor(minutes / 1440.0);
  const auto& ends = eds_[ed].slot_end;
  for (std::size_t j = 0; j < ends.size(); ++j)
    if (minute_of_day < ends[j]) return j;
  return ends.size() - 1;
}

// ---------------------------------------------------------------------------
// State helpers

std::size_t EDState::queue_length() const {
  std::size_t n = 0;
  for (const auto& lane : queue) n += lane.size();
  return n;
}

ReplicationStats ReplicationStats::shaped(const std::vector<std::size_t>& slots_per_ed, std::size_t tag_count) {
  ReplicationStats s;
  s.tag_count = tag_count;
  std::size_t total = 0;
  for (auto m : slots_per_ed) {
    s.ed_offsets.push_back(total);
    total += m * tag_count;
  }
  s.cells.assign(total, CellStats{});
  s.diversion.assign(slots_per_ed.size(), DiversionStats{});
  return s;
}

std::int64_t ReplicationStats::observed_patients() const {
  std::int64_t n = 0;
  for (const auto& c : cells) n += c.count;
  return n;
}

void ReplicationStats::merge(const ReplicationStats& other) {
  if (other.cells.size() != cells.size() || other.diversion.size() != diversion.size())
    throw std::invalid_argument("cannot merge statistics of different shapes");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& a = cells[c];
    const auto& b = other.cells[c];
    a.count += b.count;
    a.sum_nva += b.sum_nva;
    a.sum_dtdt += b.sum_dtdt;
    a.sum_transport += b.sum_transport;
    a.max_nva = std::max(a.max_nva, b.max_nva);
  }
  for (std::size_t i = 0; i < diversion.size(); ++i) {
    auto& a = diversion[i];
    const auto& b = other.diversion[i];
    a.episodes += b.episodes;
    a.extensions += b.extensions;
    a.diverted_patients += b.diverted_patients;
    a.received_patients += b.received_patients;
    a.diversion_minutes += b.diversion_minutes;
  }
  flow.arrivals += other.flow.arrivals;
  flow.completed += other.flow.completed;
  flow.in_service += other.flow.in_service;
  flow.in_queue += other.flow.in_queue;
  flow.in_transit += other.flow.in_transit;
}

std::string to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::Arrival: return "arrival";
    case TraceKind::Divert: return "divert";
    case TraceKind::TransferArrival: return "transfer_arrival";
    case TraceKind::Queue: return "queue";
    case TraceKind::Seize: return "seize";
    case TraceKind::Release: return "release";
    case TraceKind::SlotChange: return "slot_change";
    case TraceKind::DiversionStart: return "diversion_start";
    case TraceKind::DiversionExtend: return "diversion_extend";
    case TraceKind::DiversionEnd: return "diversion_end";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Diversion policy logic

bool is_blocked(std::size_t tag, BlockingRule rule) {
  switch (rule) {
    case BlockingRule::AllAD: return true;
    case BlockingRule::HighAcuityAD: return tag == 0;
    case BlockingRule::LowAcuityAD: return tag > 0;
  }
  return false;
}

std::optional<std::size_t> select_destination(std::size_t origin, DestinationRule rule,
                                              std::span<const EDState> states, const TravelMatrix& travel) {
  std::optional<std::size_t> best;
  double best_ratio = 0.0;
  for (std::size_t d = 0; d < states.size(); ++d) {
    if (d == origin || states[d].on_diversion) continue;
    if (!best) {
      best = d;
      best_ratio = static_cast<double>(states[d].queue_length() + static_cast<std::size_t>(states[d].busy)) /
                   static_cast<double>(std::max(1, states[d].capacity));
      continue;
    }
    const double t_d = travel[origin][d];
    const double t_best = travel[origin][*best];
    if (rule == DestinationRule::NearestED) {
      if (t_d < t_best) best = d;
      continue;
    }
    const double ratio = static_cast<double>(states[d].queue_length() + static_cast<std::size_t>(states[d].busy)) /
                         static_cast<double>(std::max(1, states[d].capacity));
    if (ratio < best_ratio || (ratio == best_ratio && t_d < t_best)) {
      best = d;
      best_ratio = ratio;
    }
  }
  return best;
}

ArrivalDecision on_arrival(const Patient& patient, std::size_t ed, std::span<const EDState> states,
                           const ADPolicy& policy, const TravelMatrix& travel) {
  const EDState& here = states[ed];
  if (policy.enabled && here.on_diversion && !patient.diverted_to && is_blocked(patient.tag, policy.blocking)) {
    if (auto dest = select_destination(ed, policy.destination, states, travel))
      return {ArrivalAction::Divert, *dest};
  }
  if (here.busy < here.capacity && here.queue_length() == 0) return {ArrivalAction::Serve, ed};
  return {ArrivalAction::Queue, ed};
}

namespace {

std::int64_t day_of(double minutes) { return static_cast<std::int64_t>(std::floor(minutes / 1440.0)); }

bool budget_fits(const EDState& state, const ADPolicy& policy, double now, double segment) {
  if (!policy.daily_max_hours) return true;
  const double used = state.diverted_minutes_on(day_of(now));
  return used + segment <= *policy.daily_max_hours * 60.0;
}

void charge(EDState& state, double now, double segment) {
  const std::int64_t day = day_of(now);
  if (state.budget_day != day) {
    state.budget_day = day;
    state.budget_used_minutes = 0.0;
  }
  state.budget_used_minutes += segment;
}

}  // namespace

DiversionTransition update_diversion_status(EDState& state, const ADPolicy& policy, double now,
                                            DiversionTrigger trigger) {
  if (!policy.enabled) return DiversionTransition::None;
  const double segment = policy.segment_hours * 60.0;

  if (trigger == DiversionTrigger::SegmentEnd) {
    if (!state.on_diversion) return DiversionTransition::None;
    if (state.free_servers() < 1 && budget_fits(state, policy, now, segment)) {
      charge(state, now, segment);
      state.segment_end = now + segment;
      return DiversionTransition::Extend;
    }
    state.on_diversion = false;
    state.segment_end.reset();
    return DiversionTransition::Exit;
  }

  const bool checks_here = (trigger == DiversionTrigger::StateChange) == (policy.entry_check == EntryCheck::OnSeize);
  if (!checks_here || state.on_diversion) return DiversionTransition::None;
  if (state.busy < state.capacity) return DiversionTransition::None;
  if (!budget_fits(state, policy, now, segment)) return DiversionTransition::None;
  charge(state, now, segment);
  state.on_diversion = true;
  state.segment_end = now + segment;
  return DiversionTransition::Enter;
}

std::vector<PatientId> seize_waiting(EDState& state) {
  std::vector<PatientId> seized;
  for (auto& lane : state.queue) {
    while (state.busy < state.capacity && !lane.empty()) {
      seized.push_back(lane.front());
      lane.pop_front();
      ++state.busy;
    }
  }
  return seized;
}

std::vector<PatientId> on_slot_boundary(EDState& state, std::size_t new_slot, int new_capacity) {
  state.slot = new_slot;
  state.capacity = new_capacity;
  return seize_waiting(state);
}

void collect(const Patient& patient, ReplicationStats& stats) {
  if (!patient.visit_start) throw std::logic_error("collect: patient has not been seen");
  const double nva = *patient.visit_start - patient.arrival_time;
  CellStats& c = stats.cell(patient.origin, patient.arrival_slot, patient.tag);
  ++c.count;
  c.sum_nva += nva;
  c.sum_dtdt += nva;
  c.sum_transport += patient.transport_minutes;
  c.max_nva = std::max(c.max_nva, nva);
}

// ---------------------------------------------------------------------------
// Event loop

namespace {

enum class EventKind : std::uint8_t { Departure, SlotBoundary, SegmentEnd, TransferArrival, Arrival };

struct Event {
  double time;
  EventKind kind;
  std::uint32_t ed;
  std::uint64_t seq;
  std::int64_t subject;  // patient id, or arrival stream index

  // Min-heap order: time, then kind, then scheduling order.
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

class Replication {
 public:
  Replication(const NetworkModel& model, const Allocation& alloc, const ADPolicy& policy, const RunDesign& design,
              std::uint64_t replication, const TraceSink* trace)
      : model_(model),
        alloc_(alloc),
        policy_(policy),
        horizon_(design.horizon_minutes()),
        warmup_(design.warmup_minutes()),
        trace_(trace),
        stats_(ReplicationStats::shaped(model.slots_per_ed(), model.tag_count())) {
    const std::size_t n = model.ed_count();
    const std::size_t tags = model.tag_count();
    states_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      EDState s(tags, alloc.at(i, 0));
      s.slot = 0;
      states_.push_back(std::move(s));
      day_of_slot_.push_back(0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < tags; ++k) {
        const auto ed32 = static_cast<std::uint32_t>(i);
        const auto tag32 = static_cast<std::uint32_t>(k);
        RandomStream arrivals(design.base_seed, {replication, ed32, StreamPurpose::Arrivals, tag32});
        arrival_times_.push_back(nhpp_arrival_times(model.arrival_pattern(i, k), horizon_, arrivals));
        service_streams_.emplace_back(design.base_seed, StreamKey{replication, ed32, StreamPurpose::Service, tag32});
      }
    }
    arrival_cursor_.assign(arrival_times_.size(), 0);
  }

  ReplicationStats run() {
    const std::size_t tags = model_.tag_count();
    for (std::size_t i = 0; i < model_.ed_count(); ++i) {
      schedule_slot_boundary(i);
      for (std::size_t k = 0; k < tags; ++k) schedule_next_arrival(i * tags + k);
    }
    while (!calendar_.empty()) {
      const Event e = calendar_.top();
      if (e.time >= horizon_) break;
      calendar_.pop();
      if (e.time < now_) throw SimulationError("event calendar regressed in time");
      now_ = e.time;
      switch (e.kind) {
        case EventKind::Arrival: handle_arrival(static_cast<std::size_t>(e.subject)); break;
        case EventKind::TransferArrival: handle_transfer(e.ed, e.subject); break;
        case EventKind::Departure: handle_departure(e.ed, e.subject); break;
        case EventKind::SlotBoundary: handle_slot_boundary(e.ed); break;
        case EventKind::SegmentEnd: handle_segment_end(e.ed); break;
      }
    }
    for (const auto& s : states_) {
      stats_.flow.in_service += s.busy;
      stats_.flow.in_queue += static_cast<std::int64_t>(s.queue_length());
    }
    stats_.flow.in_transit = in_transit_;
    return std::move(stats_);
  }

 private:
  void push(double time, EventKind kind, std::size_t ed, std::int64_t subject) {
    calendar_.push(Event{time, kind, static_cast<std::uint32_t>(ed), seq_++, subject});
  }

  void emit(TraceKind kind, std::size_t ed, PatientId patient = -1, int other = -1, double value = 0.0) {
    if (!trace_) return;
    const int tag = patient >= 0 ? static_cast<int>(patients_[static_cast<std::size_t>(patient)].tag) : -1;
    (*trace_)(TraceEvent{now_, kind, ed, patient, tag, other, value});
  }

  void schedule_next_arrival(std::size_t stream) {
    auto& cursor = arrival_cursor_[stream];
    const auto& times = arrival_times_[stream];
    if (cursor < times.size()) push(times[cursor++], EventKind::Arrival, stream / model_.tag_count(),
                                     static_cast<std::int64_t>(stream));
  }

  void schedule_slot_boundary(std::size_t ed) {
    const double t = 1440.0 * static_cast<double>(day_of_slot_[ed]) + model_.slot_end_minute(ed, states_[ed].slot);
    push(t, EventKind::SlotBoundary, ed, -1);
  }

  bool counted(const Patient& p) const { return p.arrival_time >= warmup_; }

  void handle_arrival(std::size_t stream) {
    const std::size_t tags = model_.tag_count();
    const std::size_t ed = stream / tags;
    Patient p;
    p.id = static_cast<PatientId>(patients_.size());
    p.tag = stream % tags;
    p.origin = ed;
    p.arrival_time = now_;
    p.arrival_slot = model_.slot_at(ed, now_);
    p.service_minutes = sample_service(model_.service(ed, p.tag, p.arrival_slot), service_streams_[stream]);
    patients_.push_back(p);
    ++stats_.flow.arrivals;
    emit(TraceKind::Arrival, ed, p.id);
    schedule_next_arrival(stream);
    materialize(p.id, ed, true);
  }

  void handle_transfer(std::size_t ed, PatientId id) {
    --in_transit_;
    if (counted(patients_[static_cast<std::size_t>(id)])) ++stats_.diversion[ed].received_patients;
    emit(TraceKind::TransferArrival, ed, id);
    materialize(id, ed, false);
  }

  void materialize(PatientId id, std::size_t ed, bool fresh) {
    EDState& state = states_[ed];
    if (fresh) apply(ed, update_diversion_status(state, policy_, now_, DiversionTrigger::Arrival));
    Patient& p = patients_[static_cast<std::size_t>(id)];
    const ArrivalDecision decision = on_arrival(p, ed, states_, policy_, model_.travel());
    switch (decision.action) {
      case ArrivalAction::Divert: {
        p.diverted_to = decision.destination;
        p.transport_minutes = model_.travel()[ed][decision.destination];
        ++in_transit_;
        if (counted(p)) ++stats_.diversion[ed].diverted_patients;
        emit(TraceKind::Divert, ed, id, static_cast<int>(decision.destination), p.transport_minutes);
        push(now_ + p.transport_minutes, EventKind::TransferArrival, decision.destination, id);
        break;
      }
      case ArrivalAction::Serve:
        ++state.busy;
        begin_visit(id, ed);
        apply(ed, update_diversion_status(state, policy_, now_, DiversionTrigger::StateChange));
        break;
      case ArrivalAction::Queue:
        state.queue[p.tag].push_back(id);
        emit(TraceKind::Queue, ed, id);
        break;
    }
  }

  void begin_visit(PatientId id, std::size_t ed) {
    Patient& p = patients_[static_cast<std::size_t>(id)];
    p.visit_start = now_;
    p.departure = now_ + p.service_minutes;
    if (counted(p)) collect(p, stats_);
    emit(TraceKind::Seize, ed, id);
    push(*p.departure, EventKind::Departure, ed, id);
  }

  void handle_departure(std::size_t ed, PatientId id) {
    EDState& state = states_[ed];
    --state.busy;
    ++stats_.flow.completed;
    emit(TraceKind::Release, ed, id);
    for (PatientId next : seize_waiting(state)) begin_visit(next, ed);
    apply(ed, update_diversion_status(state, policy_, now_, DiversionTrigger::StateChange));
  }

  void handle_slot_boundary(std::size_t ed) {
    EDState& state = states_[ed];
    std::size_t next = state.slot + 1;
    if (next == model_.slot_count(ed)) {
      next = 0;
      ++day_of_slot_[ed];
    }
    const int capacity = alloc_.at(ed, next);
    const auto seized = on_slot_boundary(state, next, capacity);
    emit(TraceKind::SlotChange, ed, -1, capacity);
    for (PatientId id : seized) begin_visit(id, ed);
    apply(ed, update_diversion_status(state, policy_, now_, DiversionTrigger::StateChange));
    schedule_slot_boundary(ed);
  }

  void handle_segment_end(std::size_t ed) {
    EDState& state = states_[ed];
    if (!state.on_diversion || !state.segment_end || *state.segment_end != now_) return;
    apply(ed, update_diversion_status(state, policy_, now_, DiversionTrigger::SegmentEnd));
  }

  void apply(std::size_t ed, DiversionTransition transition) {
    EDState& state = states_[ed];
    const double segment = policy_.segment_hours * 60.0;
    switch (transition) {
      case DiversionTransition::None: return;
      case DiversionTransition::Enter:
        if (now_ >= warmup_) {
          ++stats_.diversion[ed].episodes;
          stats_.diversion[ed].diversion_minutes += segment;
        }
        emit(TraceKind::DiversionStart, ed, -1, -1, *state.segment_end);
        push(*state.segment_end, EventKind::SegmentEnd, ed, -1);
        return;
      case DiversionTransition::Extend:
        if (now_ >= warmup_) {
          ++stats_.diversion[ed].extensions;
          stats_.diversion[ed].diversion_minutes += segment;
        }
        emit(TraceKind::DiversionExtend, ed, -1, -1, *state.segment_end);
        push(*state.segment_end, EventKind::SegmentEnd, ed, -1);
        return;
      case DiversionTransition::Exit:
        emit(TraceKind::DiversionEnd, ed);
        return;
    }
  }

  const NetworkModel& model_;
  const Allocation& alloc_;
  const ADPolicy& policy_;
  const double horizon_;
  const double warmup_;
  const TraceSink* trace_;
  ReplicationStats stats_;

  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::int64_t in_transit_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> calendar_;
  std::vector<EDState> states_;
  std::vector<std::int64_t> day_of_slot_;
  std::vector<Patient> patients_;
  std::vector<std::vector<double>> arrival_times_;  // [ed * tags + tag]
  std::vector<std::size_t> arrival_cursor_;
  std::vector<RandomStream> service_streams_;
};

}  // namespace

ReplicationStats run_replication(const NetworkModel& model, const Allocation& alloc, const ADPolicy& policy,
                                 const RunDesign& design, std::uint64_t replication, const TraceSink* trace) {
  if (alloc.shape() != model.slots_per_ed())
    throw std::invalid_argument("run_replication: allocation is not dimensioned to the network");
  for (std::size_t k = 0; k < alloc.size(); ++k)
    if (alloc[k] < 1) throw std::invalid_argument("run_replication: every slot needs at least one server");
  if (!(design.horizon_minutes() > design.warmup_minutes()))
    throw std::invalid_argument("run_replication: horizon must exceed warmup");
  return Replication(model, alloc, policy, design, replication, trace).run();
}

ReplicationStats run_replication(const NetworkConfig& cfg, const Allocation& alloc, const ADPolicy& policy,
                                 const RunDesign& design, std::uint64_t replication, const TraceSink* trace) {
  const NetworkModel model(cfg);
  return run_replication(model, alloc, policy, design, replication, trace);
}

}  // namespace ednet
