#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "ednet/sbo.hpp"
#include "support.hpp"

using namespace ednet;

namespace {

// Pareto set of a lattice box by enumeration, under the same constrained dominance.
std::set<std::vector<int>> brute_force_front(const LatticeProblem& p) {
  std::vector<std::pair<std::vector<int>, Objectives>> all;
  std::vector<int> x = p.lower;
  for (;;) {
    all.emplace_back(x, p.evaluate(x));
    std::size_t c = 0;
    while (c < x.size() && x[c] == p.upper[c]) {
      x[c] = p.lower[c];
      ++c;
    }
    if (c == x.size()) break;
    ++x[c];
  }
  std::set<std::vector<int>> front;
  for (const auto& [xa, oa] : all) {
    const bool dominated =
        std::any_of(all.begin(), all.end(), [&](const auto& other) { return dominates(other.second, oa); });
    if (!dominated) front.insert(xa);
  }
  return front;
}

std::set<std::vector<int>> archive_set(const SolveResult& r) {
  std::set<std::vector<int>> s;
  for (const auto& p : r.archive) s.insert(p.x);
  return s;
}

RunDesign tiny_design(int reps = 4, double days = 20) {
  RunDesign d;
  d.replications = reps;
  d.horizon_days = days;
  d.warmup_hours = 24;
  d.base_seed = 99;
  return d;
}

}  // namespace

TEST_CASE("constrained dominance") {
  CHECK(dominates(Objectives{40, 40000, 0}, Objectives{50, 41000, 0}));
  CHECK(dominates(Objectives{60, 50000, 0}, Objectives{40, 40000, 3.2}));
  CHECK_FALSE(dominates(Objectives{40, 40000, 0}, Objectives{30, 45000, 0}));
  CHECK_FALSE(dominates(Objectives{30, 45000, 0}, Objectives{40, 40000, 0}));
  CHECK(dominates(Objectives{90, 90000, 1.0}, Objectives{10, 10000, 2.0}));
  CHECK(dominates(Objectives{10, 10000, 2.0}, Objectives{20, 10000, 2.0}));
  CHECK_FALSE(dominates(Objectives{10, 10000, 0}, Objectives{10, 10000, 0}));
}

TEST_CASE("single-variable problem recovers its Pareto set") {
  LatticeProblem p{{0}, {6}, [](std::span<const int> x) {
                     const double v = x[0];
                     return Objectives{v, (v - 3) * (v - 3), 0.0};
                   }};
  for (int start = 0; start <= 6; ++start) {
    const auto r = solve_lattice(p, {start}, {1000, 2});
    CHECK(archive_set(r) == std::set<std::vector<int>>{{0}, {1}, {2}, {3}});
  }
}

TEST_CASE("constant-sum objectives keep every point") {
  LatticeProblem p{{0, 0, 0}, {3, 3, 3}, [](std::span<const int> x) {
                     const double s = x[0] + x[1] + x[2];
                     return Objectives{s, 9.0 - s, 0.0};
                   }};
  const auto r = solve_lattice(p, {1, 2, 0}, {10000, 2});
  for (const auto& pt : r.archive) CHECK(pt.obj.f1 + pt.obj.f2 == 9.0);
  CHECK(archive_set(r) == brute_force_front(p));
  CHECK(r.archive.size() == 64);
}

TEST_CASE("budget zero returns the evaluated start only") {
  LatticeProblem p{{0, 0}, {5, 5}, [](std::span<const int> x) { return Objectives{double(x[0]), double(x[1]), 0}; }};
  const auto r = solve_lattice(p, {2, 3}, {0, 2});
  REQUIRE(r.archive.size() == 1);
  CHECK(r.archive[0].x == std::vector<int>{2, 3});
  CHECK(r.evaluations == 1);
  CHECK(r.iterations == 0);
  CHECK_THROWS_AS(solve_lattice(p, {2, 3}, {-1, 2}), std::invalid_argument);
}

TEST_CASE("out-of-bounds start is projected and flagged") {
  LatticeProblem p{{2, 2}, {6, 6}, [](std::span<const int> x) { return Objectives{double(x[0]), double(x[1]), 0}; }};
  const auto r = solve_lattice(p, {1, 9}, {50, 2});
  CHECK(r.start_projected);
  CHECK(archive_set(r) == std::set<std::vector<int>>{{2, 2}});
}

TEST_CASE("hypervolume of simple point sets") {
  const std::vector<std::pair<double, double>> one{{1.0, 1.0}};
  CHECK(hypervolume(one, {3.0, 3.0}) == 4.0);
  const std::vector<std::pair<double, double>> two{{1.0, 2.0}, {2.0, 1.0}};
  CHECK(hypervolume(two, {3.0, 3.0}) == 3.0);
  const std::vector<std::pair<double, double>> dominated{{1.0, 1.0}, {2.0, 2.0}};
  CHECK(hypervolume(dominated, {3.0, 3.0}) == 4.0);
  CHECK(hypervolume({}, {3.0, 3.0}) == 0.0);
}

TEST_CASE("archive stays nondominated and hypervolume never drops") {
  LatticeProblem p{{0, 0, 0, 0}, {5, 5, 5, 5}, [](std::span<const int> x) {
                     double a = 0, b = 0, v = 0;
                     for (std::size_t i = 0; i < x.size(); ++i) {
                       a += (x[i] - 1.0 * i) * (x[i] - 1.0 * i);
                       b += (5.0 - x[i]) * (i + 1);
                     }
                     v = std::max(0.0, 4.0 - (x[0] + x[3]));
                     return Objectives{a, b, v};
                   }};
  const auto r = solve_lattice(p, {0, 0, 0, 0}, {300, 2});
  for (const auto& snap : r.snapshots)
    for (const auto& a : snap)
      for (const auto& b : snap) REQUIRE_FALSE(dominates(a.obj, b.obj));
  for (std::size_t i = 1; i < r.hypervolume_trace.size(); ++i)
    CHECK(r.hypervolume_trace[i] >= r.hypervolume_trace[i - 1]);
  CHECK(archive_set(r) == brute_force_front(p));
}

TEST_CASE("evaluation of the as-is allocation") {
  const auto proj = testsupport::case_study();
  const auto e = eval_point(proj.network, Allocation::as_is(proj.network), proj.policy("no_ad"), tiny_design());
  CHECK(e.f2 == 31680.0);
  CHECK(e.f1 > 0.0);
  CHECK(e.cell_means.size() == 36);
  CHECK(e.n_reps == 4);
  CHECK(e.f1_per_rep.size() == 4);
  double sum = 0;
  for (double v : e.violations) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(e.viol_norm == Catch::Approx(sum));
  const auto again = eval_point(proj.network, Allocation::as_is(proj.network), proj.policy("no_ad"), tiny_design());
  CHECK(again.f1 == e.f1);
  CHECK(again.cell_means == e.cell_means);
  CHECK(again.f1_per_rep == e.f1_per_rep);
}

TEST_CASE("evaluation with no arrivals is zero and feasible") {
  auto cfg = testsupport::small_network(3, 0.0, 0.0, 30.0, 2);
  const auto e = eval_point(cfg, Allocation::as_is(cfg), ADPolicy{}, tiny_design());
  CHECK(e.f1 == 0.0);
  CHECK(e.viol_norm == 0.0);
  CHECK(e.feasible());
}

TEST_CASE("evaluation refuses allocations outside the bounds") {
  const auto proj = testsupport::case_study();
  Allocation a = Allocation::as_is(proj.network);
  a[0] = 7;
  CHECK_THROWS_AS(eval_point(proj.network, a, proj.policy("no_ad"), tiny_design()), std::invalid_argument);
}

TEST_CASE("simulation-based search keeps its invariants") {
  auto cfg = testsupport::small_network(2, 0.3, 1.5, 60.0, 2);
  for (auto& ed : cfg.eds) {
    ed.lower = {1, 1, 1};
    ed.upper = {4, 4, 4};
  }
  ADPolicy policy;
  policy.id = "ad";
  policy.enabled = true;
  policy.destination = DestinationRule::LeastCrowdedED;
  const auto r = solve(cfg, policy, tiny_design(), Allocation::as_is(cfg), {40, 2});
  REQUIRE_FALSE(r.front.empty());
  for (std::size_t i = 0; i < r.front.size(); ++i) {
    const auto& e = r.front[i];
    CHECK(validate_allocation(e.alloc, cfg, true).empty());
    CHECK(e.f2 == static_cast<double>(f2(e.alloc, cfg)));
    if (e.feasible()) CHECK(e.viol_norm == 0.0);
    if (i) CHECK(r.front[i - 1].f2 <= e.f2);
    for (const auto& other : r.front) CHECK_FALSE(dominates(other, e));
  }
  for (std::size_t i = 1; i < r.search.hypervolume_trace.size(); ++i)
    CHECK(r.search.hypervolume_trace[i] >= r.search.hypervolume_trace[i - 1]);
}

TEST_CASE("policy comparison") {
  auto cfg = testsupport::small_network(2, 0.3, 1.5, 60.0, 2);
  ADPolicy off;
  off.id = "off";
  ADPolicy twin = off;
  twin.id = "twin";
  const auto single = compare_policies(cfg, tiny_design(2, 10), {off}, Allocation::as_is(cfg), {15, 2});
  REQUIRE(single.fronts.size() == 1);
  for (const auto& iv : single.intervals) CHECK(iv.leaders == std::vector<std::string>{"off"});

  const auto both = compare_policies(cfg, tiny_design(2, 10), {off, twin}, Allocation::as_is(cfg), {15, 2});
  REQUIRE(both.fronts.size() == 2);
  REQUIRE(both.fronts[0].front.size() == both.fronts[1].front.size());
  for (std::size_t i = 0; i < both.fronts[0].front.size(); ++i) {
    CHECK(both.fronts[0].front[i].alloc == both.fronts[1].front[i].alloc);
    CHECK(both.fronts[0].front[i].f1 == both.fronts[1].front[i].f1);
  }
  for (const auto& iv : both.intervals) CHECK(iv.leaders == std::vector<std::string>{"off", "twin"});
}

TEST_CASE("attainment and dominance intervals") {
  auto make = [](double f1, double f2, double viol) {
    Evaluation e;
    e.f1 = f1;
    e.f2 = f2;
    e.viol_norm = viol;
    return e;
  };
  OptimizationResult a, b;
  a.policy_id = "a";
  b.policy_id = "b";
  a.front = {make(50, 100, 0), make(30, 200, 0), make(10, 300, 0)};
  b.front = {make(5, 50, 1.0), make(40, 150, 0), make(20, 250, 0), make(15, 300, 0)};
  CHECK(attaining_point(a.front, 99) == nullptr);
  CHECK(attaining_point(a.front, 250)->f1 == 30);
  CHECK(attaining_point(b.front, 60) == nullptr);
  const auto iv = dominance_intervals({a, b});
  REQUIRE(iv.size() == 5);
  CHECK(iv[0].f2_from == 100);
  CHECK(iv[0].f2_to == 150);
  CHECK(iv[0].leaders == std::vector<std::string>{"a"});
  CHECK(iv[1].f2_from == 150);
  CHECK(iv[1].leaders == std::vector<std::string>{"b"});
  CHECK(iv[2].f2_from == 200);
  CHECK(iv[2].leaders == std::vector<std::string>{"a"});
  CHECK(iv[2].f2_to == 250);
  CHECK(iv[3].f2_from == 250);
  CHECK(iv[3].leaders == std::vector<std::string>{"b"});
  CHECK(iv[3].f2_to == 300);
  CHECK(iv[4].f2_from == 300);
  CHECK(iv[4].leaders == std::vector<std::string>{"a"});
}
