#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ednet/engine.hpp"
#include "support.hpp"

using namespace ednet;

namespace {

ADPolicy ad_policy(double segment, std::optional<double> cap, DestinationRule dest,
                   BlockingRule blocking = BlockingRule::AllAD) {
  ADPolicy p;
  p.id = "ad";
  p.enabled = true;
  p.segment_hours = segment;
  p.daily_max_hours = cap;
  p.destination = dest;
  p.blocking = blocking;
  return p;
}

std::vector<EDState> idle_states(std::size_t n, int capacity = 4) {
  std::vector<EDState> s;
  for (std::size_t i = 0; i < n; ++i) s.emplace_back(2, capacity);
  return s;
}

RunDesign short_design(int days = 30, int reps = 1) {
  RunDesign d;
  d.replications = reps;
  d.horizon_days = days;
  d.warmup_hours = 48;
  d.base_seed = 777;
  return d;
}

}  // namespace

TEST_CASE("nearest destination follows the travel matrix") {
  const auto travel = testsupport::case_study().network.travel_minutes;
  auto states = idle_states(6);
  CHECK(select_destination(3, DestinationRule::NearestED, states, travel) == 4u);  // ED4 -> ED5, 7.04
  states[4].on_diversion = true;
  CHECK(select_destination(0, DestinationRule::NearestED, states, travel) == 3u);  // ED1 -> ED4, 28.40
  for (auto& s : states) s.on_diversion = true;
  states[0].on_diversion = true;
  CHECK_FALSE(select_destination(0, DestinationRule::NearestED, states, travel).has_value());
}

TEST_CASE("least crowded destination matches an exhaustive minimum") {
  const auto travel = testsupport::case_study().network.travel_minutes;
  std::mt19937 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    auto states = idle_states(6);
    for (auto& s : states) {
      s.capacity = 1 + static_cast<int>(rng() % 6);
      s.busy = static_cast<int>(rng() % (s.capacity + 2));
      for (int q = static_cast<int>(rng() % 4); q > 0; --q) s.queue[rng() % 2].push_back(q);
      s.on_diversion = rng() % 4 == 0;
    }
    const std::size_t origin = rng() % 6;
    // oracle: lexicographic (ratio, travel, index) over eligible EDs
    std::optional<std::size_t> best;
    auto key = [&](std::size_t d) {
      const double ratio = static_cast<double>(states[d].queue_length() + states[d].busy) / states[d].capacity;
      return std::make_tuple(ratio, travel[origin][d], d);
    };
    for (std::size_t d = 0; d < 6; ++d) {
      if (d == origin || states[d].on_diversion) continue;
      if (!best || key(d) < key(*best)) best = d;
    }
    CHECK(select_destination(origin, DestinationRule::LeastCrowdedED, states, travel) == best);
  }
}

TEST_CASE("arrival routing") {
  const auto travel = testsupport::case_study().network.travel_minutes;
  const auto policy = ad_policy(6, std::nullopt, DestinationRule::NearestED);
  Patient p;
  p.tag = 1;
  SECTION("diverted when origin is on diversion") {
    auto states = idle_states(6);
    states[0].busy = 4;
    states[0].on_diversion = true;
    const auto d = on_arrival(p, 0, states, policy, travel);
    CHECK(d.action == ArrivalAction::Divert);
    CHECK(d.destination == 4u);
  }
  SECTION("served immediately when a server is free") {
    auto states = idle_states(6);
    states[0].busy = 3;
    CHECK(on_arrival(p, 0, states, policy, travel).action == ArrivalAction::Serve);
  }
  SECTION("queues when every other ED is on diversion") {
    auto states = idle_states(6);
    for (auto& s : states) {
      s.on_diversion = true;
      s.busy = 4;
    }
    CHECK(on_arrival(p, 0, states, policy, travel).action == ArrivalAction::Queue);
  }
  SECTION("already diverted patients are never diverted again") {
    auto states = idle_states(6);
    states[2].on_diversion = true;
    states[2].busy = 4;
    p.diverted_to = 2;
    CHECK(on_arrival(p, 2, states, policy, travel).action == ArrivalAction::Queue);
  }
  SECTION("blocking rules select tags") {
    CHECK(is_blocked(0, BlockingRule::AllAD));
    CHECK(is_blocked(1, BlockingRule::AllAD));
    CHECK(is_blocked(0, BlockingRule::HighAcuityAD));
    CHECK_FALSE(is_blocked(1, BlockingRule::HighAcuityAD));
    CHECK_FALSE(is_blocked(0, BlockingRule::LowAcuityAD));
    CHECK(is_blocked(1, BlockingRule::LowAcuityAD));
  }
}

TEST_CASE("diversion state machine") {
  const auto policy = ad_policy(6, 12.0, DestinationRule::NearestED);
  EDState s(2, 4);
  SECTION("saturation starts a full segment") {
    s.busy = 4;
    CHECK(update_diversion_status(s, policy, 100.0, DiversionTrigger::StateChange) == DiversionTransition::Enter);
    CHECK(s.on_diversion);
    CHECK(*s.segment_end == 460.0);
    CHECK(s.diverted_minutes_on(0) == 360.0);
  }
  SECTION("no entry while a server is free") {
    s.busy = 3;
    CHECK(update_diversion_status(s, policy, 100.0, DiversionTrigger::StateChange) == DiversionTransition::None);
    CHECK_FALSE(s.on_diversion);
  }
  SECTION("exit at segment end with a free server") {
    s.busy = 4;
    update_diversion_status(s, policy, 100.0, DiversionTrigger::StateChange);
    s.busy = 3;
    CHECK(update_diversion_status(s, policy, 460.0, DiversionTrigger::SegmentEnd) == DiversionTransition::Exit);
    CHECK_FALSE(s.on_diversion);
  }
  SECTION("extension while saturated, then the daily cap forces exit") {
    s.busy = 4;
    update_diversion_status(s, policy, 0.0, DiversionTrigger::StateChange);
    CHECK(update_diversion_status(s, policy, 360.0, DiversionTrigger::SegmentEnd) == DiversionTransition::Extend);
    CHECK(*s.segment_end == 720.0);
    CHECK(update_diversion_status(s, policy, 720.0, DiversionTrigger::SegmentEnd) == DiversionTransition::Exit);
    CHECK(s.diverted_minutes_on(0) == 720.0);
    // budget of day 0 spent: no new entry that day
    CHECK(update_diversion_status(s, policy, 800.0, DiversionTrigger::StateChange) == DiversionTransition::None);
    // next day starts a fresh budget
    CHECK(update_diversion_status(s, policy, 1440.0, DiversionTrigger::StateChange) == DiversionTransition::Enter);
  }
  SECTION("status only changes at re-evaluation points") {
    s.busy = 4;
    update_diversion_status(s, policy, 0.0, DiversionTrigger::StateChange);
    s.busy = 0;
    CHECK(update_diversion_status(s, policy, 10.0, DiversionTrigger::StateChange) == DiversionTransition::None);
    CHECK(update_diversion_status(s, policy, 10.0, DiversionTrigger::Arrival) == DiversionTransition::None);
    CHECK(s.on_diversion);
  }
  SECTION("arrival-only entry check") {
    auto p = policy;
    p.entry_check = EntryCheck::OnArrival;
    s.busy = 4;
    CHECK(update_diversion_status(s, p, 0.0, DiversionTrigger::StateChange) == DiversionTransition::None);
    CHECK(update_diversion_status(s, p, 0.0, DiversionTrigger::Arrival) == DiversionTransition::Enter);
  }
  SECTION("disabled policy never diverts") {
    ADPolicy off;
    s.busy = 4;
    CHECK(update_diversion_status(s, off, 0.0, DiversionTrigger::StateChange) == DiversionTransition::None);
  }
}

TEST_CASE("slot boundary capacity changes") {
  SECTION("capacity gain seizes waiting patients at once") {
    EDState s(2, 2);
    s.busy = 2;
    s.queue[1] = {10, 11, 12};
    const auto seized = on_slot_boundary(s, 1, 4);
    CHECK(seized == std::vector<PatientId>{10, 11});
    CHECK(s.busy == 4);
    CHECK(s.queue_length() == 1);
  }
  SECTION("capacity loss drains without preemption") {
    EDState s(2, 4);
    s.busy = 4;
    s.queue[0] = {7};
    CHECK(on_slot_boundary(s, 1, 2).empty());
    CHECK(s.busy == 4);
    s.busy = 3;  // one completion
    CHECK(seize_waiting(s).empty());
    s.busy = 2;  // second completion
    CHECK(seize_waiting(s).empty());
    s.busy = 1;
    CHECK(seize_waiting(s) == std::vector<PatientId>{7});
  }
  SECTION("unchanged capacity only moves the slot index") {
    EDState s(2, 3);
    s.busy = 3;
    s.queue[1] = {1};
    CHECK(on_slot_boundary(s, 2, 3).empty());
    CHECK(s.slot == 2u);
    CHECK(s.busy == 3);
    CHECK(s.queue_length() == 1);
  }
  SECTION("most urgent first, FIFO within a tag") {
    EDState s(2, 0);
    s.queue[1] = {1, 2};
    s.queue[0] = {3, 4};
    CHECK(on_slot_boundary(s, 1, 3) == std::vector<PatientId>{3, 4, 1});
  }
}

TEST_CASE("NVA and DTDT bookkeeping") {
  const auto cfg = testsupport::case_study().network;
  auto stats = ReplicationStats::shaped(Allocation::shape_of(cfg), 2);
  SECTION("plain wait") {
    Patient p;
    p.origin = 0;
    p.arrival_time = 100.0;
    p.visit_start = 112.0;
    collect(p, stats);
    CHECK(stats.cell(0, 0, 0).sum_nva == 12.0);
    CHECK(stats.cell(0, 0, 0).sum_dtdt == 12.0);
  }
  SECTION("diverted ED1 to ED5 with no wait") {
    Patient p;
    p.origin = 0;
    p.tag = 1;
    p.arrival_slot = 1;
    p.arrival_time = 500.0;
    p.diverted_to = 4;
    p.transport_minutes = cfg.travel_minutes[0][4];
    p.visit_start = p.arrival_time + p.transport_minutes;
    collect(p, stats);
    CHECK(stats.cell(0, 1, 1).mean_nva() == Catch::Approx(19.32));
    CHECK(stats.cell(0, 1, 1).mean_dtdt() == Catch::Approx(19.32));
    CHECK(stats.cell(4, 1, 1).count == 0);
  }
  SECTION("diverted ED2 to ED3 plus a four minute wait") {
    Patient p;
    p.origin = 1;
    p.arrival_slot = 2;
    p.arrival_time = 1000.0;
    p.diverted_to = 2;
    p.transport_minutes = cfg.travel_minutes[1][2];
    p.visit_start = p.arrival_time + p.transport_minutes + 4.0;
    collect(p, stats);
    CHECK(stats.cell(1, 2, 0).mean_nva() == Catch::Approx(19.41));
    CHECK(stats.cell(1, 2, 0).mean_dtdt() == Catch::Approx(19.41));
  }
}

TEST_CASE("zero arrival rates leave every statistic at zero") {
  auto cfg = testsupport::small_network(3, 0.0, 0.0, 30.0, 2);
  const NetworkModel model(cfg);
  const auto stats = run_replication(model, Allocation::as_is(cfg), ad_policy(6, std::nullopt, DestinationRule::NearestED),
                                     short_design(), 0);
  CHECK(stats.flow == FlowCounts{});
  for (const auto& c : stats.cells) CHECK(c == CellStats{});
  for (const auto& d : stats.diversion) CHECK(d == DiversionStats{});
}

TEST_CASE("disabled diversion yields independent queues") {
  const auto p = testsupport::case_study();
  const NetworkModel model(p.network);
  const auto stats = run_replication(model, Allocation::as_is(p.network), p.policy("no_ad"), short_design(60), 0);
  for (const auto& d : stats.diversion) {
    CHECK(d.diverted_patients == 0);
    CHECK(d.received_patients == 0);
    CHECK(d.episodes == 0);
  }
  for (const auto& c : stats.cells) CHECK(c.sum_transport == 0.0);
  // streams are keyed by ED index, so ED1 simulated alone matches ED1 inside the network
  const RunDesign d = short_design(60);
  auto solo1 = p.network;
  solo1.eds = {p.network.eds[0]};
  solo1.travel_minutes = {{0.0}};
  const auto first = run_replication(solo1, Allocation({3}, p.network.eds[0].as_is), p.policy("no_ad"), d, 0);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 2; ++k) CHECK(first.cell(0, j, k) == stats.cell(0, j, k));
}

TEST_CASE("patients are conserved and runs are deterministic") {
  const auto p = testsupport::case_study();
  const NetworkModel model(p.network);
  for (const auto& policy : p.policies) {
    INFO(policy.id);
    const auto a = run_replication(model, Allocation::as_is(p.network), policy, short_design(90), 3);
    const auto b = run_replication(model, Allocation::as_is(p.network), policy, short_design(90), 3);
    CHECK(a == b);
    const auto& f = a.flow;
    CHECK(f.arrivals == f.completed + f.in_service + f.in_queue + f.in_transit);
    CHECK(f.arrivals > 0);
    for (const auto& c : a.cells) {
      CHECK(c.sum_nva >= 0.0);
      CHECK(c.sum_dtdt >= 0.0);
      CHECK(c.sum_nva >= c.sum_dtdt - 1e-6 * std::max(1.0, c.sum_nva));
    }
  }
}

TEST_CASE("seizures respect priority and FIFO order") {
  const auto p = testsupport::case_study();
  const NetworkModel model(p.network);
  for (const char* id : {"no_ad", "seg6h_nocap_least_crowded"}) {
    std::map<std::size_t, std::vector<std::pair<int, PatientId>>> queued;  // ed -> (tag, id) in queue order
    bool ok = true;
    std::size_t seizures_from_queue = 0;
    const TraceSink sink = [&](const TraceEvent& e) {
      if (e.kind == TraceKind::Queue) queued[e.ed].push_back({e.tag, e.patient});
      if (e.kind != TraceKind::Seize) return;
      auto& q = queued[e.ed];
      const auto it = std::find_if(q.begin(), q.end(), [&](const auto& x) { return x.second == e.patient; });
      if (it == q.end()) return;
      ++seizures_from_queue;
      for (auto jt = q.begin(); jt != it; ++jt)
        if (jt->first <= e.tag) ok = false;  // a more urgent or an earlier same-tag patient was skipped
      q.erase(it);
    };
    run_replication(model, Allocation::as_is(p.network), p.policy(id), short_design(60), 0, &sink);
    CHECK(seizures_from_queue > 100);
    CHECK(ok);
  }
}

TEST_CASE("red waits no longer than yellow under identical service") {
  auto cfg = testsupport::small_network(2, 0.8, 4.0, 40.0, 4);
  const NetworkModel model(cfg);
  ADPolicy off;
  RunDesign d = short_design(120, 10);
  ReplicationStats pooled = ReplicationStats::shaped(model.slots_per_ed(), 2);
  for (int r = 0; r < d.replications; ++r) pooled.merge(run_replication(model, Allocation::as_is(cfg), off, d, r));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      REQUIRE(pooled.cell(i, j, 0).count > 100);
      CHECK(pooled.cell(i, j, 0).mean_dtdt() <= pooled.cell(i, j, 1).mean_dtdt());
    }
}

TEST_CASE("one more server does not raise mean network NVA") {
  const auto p = testsupport::case_study();
  const NetworkModel model(p.network);
  RunDesign d = p.design;
  d.horizon_days = 120;
  const Allocation base = Allocation::as_is(p.network);
  auto per_rep_total = [&](const Allocation& a) {
    std::vector<double> out;
    for (int r = 0; r < d.replications; ++r) {
      const auto s = run_replication(model, a, p.policy("no_ad"), d, r);
      double t = 0.0;
      for (const auto& c : s.cells) t += c.mean_nva();
      out.push_back(t);
    }
    return out;
  };
  const auto before = per_rep_total(base);
  for (std::size_t k : {0u, 4u, 8u, 11u, 17u}) {
    Allocation more = base;
    ++more[k];
    const auto after = per_rep_total(more);
    double mean = 0.0, sq = 0.0;
    const double n = static_cast<double>(before.size());
    for (std::size_t r = 0; r < before.size(); ++r) mean += (after[r] - before[r]) / n;
    for (std::size_t r = 0; r < before.size(); ++r) sq += std::pow(after[r] - before[r] - mean, 2);
    const double se = std::sqrt(sq / (n - 1) / n);
    INFO("coordinate " << k << " mean change " << mean << " se " << se);
    CHECK(mean <= 2.0 * se);
  }
}

TEST_CASE("allocation shape and server counts are checked") {
  const auto p = testsupport::case_study();
  CHECK_THROWS_AS(run_replication(p.network, Allocation::filled({3, 3}, 2), p.policy("no_ad"), short_design(), 0),
                  std::invalid_argument);
  Allocation zero = Allocation::as_is(p.network);
  zero[5] = 0;
  CHECK_THROWS_AS(run_replication(p.network, zero, p.policy("no_ad"), short_design(), 0), std::invalid_argument);
}
