#include "ednet/sbo.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "ednet/parallel.hpp"

namespace ednet {

bool dominates(const Objectives& a, const Objectives& b) {
  const bool fa = a.feasible();
  const bool fb = b.feasible();
  if (fa != fb) return fa;
  if (!fa && a.viol_norm != b.viol_norm) return a.viol_norm < b.viol_norm;
  return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

bool dominates(const Evaluation& a, const Evaluation& b) { return dominates(a.objectives(), b.objectives()); }

Evaluation summarize(const NetworkModel& model, const Allocation& alloc, std::span<const ReplicationStats> reps) {
  Evaluation ev;
  ev.alloc = alloc;
  ev.f2 = static_cast<double>(f2(alloc, model.config()));
  ev.n_reps = static_cast<int>(reps.size());
  if (reps.empty()) throw std::invalid_argument("summarize: no replications");
  const std::size_t cells = reps.front().cells.size();
  const std::size_t tags = model.tag_count();
  ev.cell_means.assign(cells, 0.0);
  ev.f1_per_rep.assign(reps.size(), 0.0);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    for (std::size_t c = 0; c < cells; ++c) {
      const double m = reps[r].cells[c].mean_nva();
      ev.cell_means[c] += m;
      ev.f1_per_rep[r] += model.weight(c % tags) * m;
    }
  }
  ev.violations.assign(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    ev.cell_means[c] /= static_cast<double>(reps.size());
    ev.f1 += model.weight(c % tags) * ev.cell_means[c];
    ev.violations[c] = std::max(0.0, ev.cell_means[c] - model.threshold(c % tags));
    ev.viol_norm += ev.violations[c];
  }
  return ev;
}

Evaluation eval_point(const NetworkModel& model, const Allocation& alloc, const ADPolicy& policy,
                      const RunDesign& design) {
  if (auto v = validate_allocation(alloc, model.config(), true); !v.empty())
    throw std::invalid_argument("eval_point: " + v.front().code + " at " + v.front().where);
  const auto n = static_cast<std::size_t>(design.replications);
  std::vector<ReplicationStats> reps(n);
  parallel_for(n, [&](std::size_t r) { reps[r] = run_replication(model, alloc, policy, design, r); });
  return summarize(model, alloc, reps);
}

Evaluation eval_point(const NetworkConfig& cfg, const Allocation& alloc, const ADPolicy& policy,
                      const RunDesign& design) {
  const NetworkModel model(cfg);
  return eval_point(model, alloc, policy, design);
}

double hypervolume(std::span<const std::pair<double, double>> points, std::pair<double, double> reference) {
  std::vector<std::pair<double, double>> inside;  // (f2, f1)
  for (const auto& [f1, f2] : points)
    if (f1 <= reference.first && f2 <= reference.second) inside.emplace_back(f2, f1);
  std::sort(inside.begin(), inside.end());
  double area = 0.0;
  double best_f1 = reference.first;
  for (const auto& [f2, f1] : inside) {
    if (f1 >= best_f1) continue;
    area += (reference.second - f2) * (best_f1 - f1);
    best_f1 = f1;
  }
  return area;
}

// ---------------------------------------------------------------------------
// Direct search

namespace {

bool archive_order(const ArchivePoint& a, const ArchivePoint& b) {
  if (a.obj.f2 != b.obj.f2) return a.obj.f2 < b.obj.f2;
  if (a.obj.f1 != b.obj.f1) return a.obj.f1 < b.obj.f1;
  return a.x < b.x;
}

}  // namespace

SolveResult solve_lattice(const LatticeProblem& problem, std::vector<int> start, const SolverOptions& options,
                          bool keep_snapshots) {
  const std::size_t dim = start.size();
  if (problem.lower.size() != dim || problem.upper.size() != dim)
    throw std::invalid_argument("solve: bounds and start differ in dimension");
  for (std::size_t c = 0; c < dim; ++c)
    if (problem.lower[c] > problem.upper[c]) throw std::invalid_argument("solve: lower bound above upper bound");
  if (options.budget < 0) throw std::invalid_argument("solve: budget must be >= 0");
  if (options.initial_step < 1) throw std::invalid_argument("solve: initial step must be >= 1");

  SolveResult result;
  for (std::size_t c = 0; c < dim; ++c) {
    const int clamped = std::clamp(start[c], problem.lower[c], problem.upper[c]);
    if (clamped != start[c]) result.start_projected = true;
    start[c] = clamped;
  }

  std::map<std::vector<int>, Objectives> seen;
  double f1_max = -std::numeric_limits<double>::infinity();
  double f2_max = -std::numeric_limits<double>::infinity();
  auto evaluate = [&](const std::vector<int>& x) {
    if (auto it = seen.find(x); it != seen.end()) return it->second;
    const Objectives obj = problem.evaluate(x);
    ++result.evaluations;
    if (obj.feasible()) {
      f1_max = std::max(f1_max, obj.f1);
      f2_max = std::max(f2_max, obj.f2);
    }
    seen.emplace(x, obj);
    return obj;
  };

  std::vector<ArchivePoint> archive;
  std::uint64_t order = 0;
  archive.push_back({start, evaluate(start), options.initial_step, order++});
  if (keep_snapshots) result.snapshots.push_back(archive);

  auto in_archive = [&](const std::vector<int>& x) {
    return std::any_of(archive.begin(), archive.end(), [&](const ArchivePoint& p) { return p.x == x; });
  };

  while (result.iterations < options.budget) {
    auto selected = archive.end();
    for (auto it = archive.begin(); it != archive.end(); ++it) {
      if (it->step <= 0) continue;
      if (selected == archive.end() || it->step > selected->step ||
          (it->step == selected->step && it->order < selected->order))
        selected = it;
    }
    if (selected == archive.end()) break;
    ++result.iterations;

    const std::vector<int> center = selected->x;
    const int step = selected->step;
    std::vector<std::vector<int>> probes;
    for (std::size_t c = 0; c < dim; ++c) {
      for (int sign : {+1, -1}) {
        std::vector<int> y = center;
        y[c] = std::clamp(center[c] + sign * step, problem.lower[c], problem.upper[c]);
        if (y == center || in_archive(y)) continue;
        if (std::find(probes.begin(), probes.end(), y) != probes.end()) continue;
        probes.push_back(std::move(y));
      }
    }
    std::vector<Objectives> values;
    values.reserve(probes.size());
    for (const auto& y : probes) values.push_back(evaluate(y));

    // Re-polling a point at the same step can only revisit archived or
    // already rejected lattice points, so every poll moves the step down.
    for (auto& p : archive)
      if (p.x == center) p.step = p.step > 1 ? p.step / 2 : 0;

    for (std::size_t k = 0; k < probes.size(); ++k) {
      const Objectives& obj = values[k];
      if (in_archive(probes[k])) continue;
      const bool beaten =
          std::any_of(archive.begin(), archive.end(), [&](const ArchivePoint& p) { return dominates(p.obj, obj); });
      if (beaten) continue;
      std::erase_if(archive, [&](const ArchivePoint& p) { return dominates(obj, p.obj); });
      archive.push_back({probes[k], obj, options.initial_step, order++});
    }
    if (keep_snapshots) result.snapshots.push_back(archive);
  }

  std::sort(archive.begin(), archive.end(), archive_order);
  result.archive = std::move(archive);
  if (f1_max > -std::numeric_limits<double>::infinity()) result.reference = {f1_max, f2_max};
  for (auto& snap : result.snapshots) {
    std::sort(snap.begin(), snap.end(), archive_order);
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : snap)
      if (p.obj.feasible()) pts.emplace_back(p.obj.f1, p.obj.f2);
    result.hypervolume_trace.push_back(hypervolume(pts, result.reference));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Case-study problem

Evaluator::Evaluator(const NetworkConfig& cfg, ADPolicy policy, RunDesign design)
    : model_(cfg), policy_(std::move(policy)), design_(design), shape_(Allocation::shape_of(cfg)) {}

const Evaluation& Evaluator::evaluate(const Allocation& alloc) {
  std::vector<int> key(alloc.values().begin(), alloc.values().end());
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  return cache_.emplace(std::move(key), eval_point(model_, alloc, policy_, design_)).first->second;
}

OptimizationResult solve(const NetworkConfig& cfg, const ADPolicy& policy, const RunDesign& design,
                         const Allocation& start, const SolverOptions& options) {
  Evaluator evaluator(cfg, policy, design);
  const auto shape = Allocation::shape_of(cfg);
  if (start.shape() != shape) throw std::invalid_argument("solve: start allocation is not dimensioned to the network");
  const Allocation lo = Allocation::lower_bounds(cfg);
  const Allocation hi = Allocation::upper_bounds(cfg);

  LatticeProblem problem;
  problem.lower.assign(lo.values().begin(), lo.values().end());
  problem.upper.assign(hi.values().begin(), hi.values().end());
  problem.evaluate = [&](std::span<const int> x) {
    return evaluator.evaluate(Allocation(shape, std::vector<int>(x.begin(), x.end()))).objectives();
  };

  OptimizationResult out;
  out.policy_id = policy.id;
  out.start = start;
  out.search = solve_lattice(problem, std::vector<int>(start.values().begin(), start.values().end()), options);
  for (const auto& p : out.search.archive) out.front.push_back(evaluator.evaluate(Allocation(shape, p.x)));
  return out;
}

const Evaluation* attaining_point(const std::vector<Evaluation>& front, double f2_budget) {
  const Evaluation* best = nullptr;
  for (const auto& e : front) {
    if (!e.feasible() || e.f2 > f2_budget) continue;
    if (!best || e.f1 < best->f1 || (e.f1 == best->f1 && e.f2 < best->f2)) best = &e;
  }
  return best;
}

std::vector<DominanceInterval> dominance_intervals(const std::vector<OptimizationResult>& fronts) {
  std::set<double> cuts;
  for (const auto& f : fronts)
    for (const auto& e : f.front)
      if (e.feasible()) cuts.insert(e.f2);
  const std::vector<double> v(cuts.begin(), cuts.end());

  std::vector<DominanceInterval> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::string> leaders;
    for (const auto& f : fronts) {
      const Evaluation* e = attaining_point(f.front, v[i]);
      if (!e) continue;
      if (e->f1 < best) {
        best = e->f1;
        leaders = {f.policy_id};
      } else if (e->f1 == best) {
        leaders.push_back(f.policy_id);
      }
    }
    const double to = i + 1 < v.size() ? v[i + 1] : v[i];
    if (!out.empty() && out.back().leaders == leaders) {
      out.back().f2_to = to;
      continue;
    }
    out.push_back({v[i], to, std::move(leaders)});
  }
  return out;
}

PolicyComparison compare_policies(const NetworkConfig& cfg, const RunDesign& design,
                                  const std::vector<ADPolicy>& policies, const Allocation& start,
                                  const SolverOptions& options) {
  if (policies.empty()) throw std::invalid_argument("compare_policies: no policies given");
  PolicyComparison out;
  for (const auto& p : policies) out.fronts.push_back(solve(cfg, p, design, start, options));
  out.intervals = dominance_intervals(out.fronts);
  return out;
}

}  // namespace ednet
