#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ednet/engine.hpp"
#include "ednet/model.hpp"

namespace ednet {

/// Objective pair plus aggregate constraint violation of one lattice point.
struct Objectives {
  double f1 = 0.0;
  double f2 = 0.0;
  double viol_norm = 0.0;

  bool feasible() const { return viol_norm <= 0.0; }
  friend bool operator==(const Objectives&, const Objectives&) = default;
};

/// Constrained dominance: feasible beats infeasible; among infeasible points the
/// smaller viol_norm wins, equal violations fall through to Pareto comparison.
bool dominates(const Objectives& a, const Objectives& b);

/// SAA evaluation of one allocation. Cell vectors are indexed like ReplicationStats::cells.
struct Evaluation {
  Allocation alloc;
  double f1 = 0.0;
  double f2 = 0.0;
  std::vector<double> cell_means;  // mean over replications of per-replication mean NVA
  std::vector<double> violations;  // max(0, cell_mean - threshold)
  double viol_norm = 0.0;
  int n_reps = 0;
  std::vector<double> f1_per_rep;  // for paired comparisons under CRN

  Objectives objectives() const { return {f1, f2, viol_norm}; }
  bool feasible() const { return viol_norm <= 0.0; }
};

bool dominates(const Evaluation& a, const Evaluation& b);

/// Builds an Evaluation from already simulated replications.
Evaluation summarize(const NetworkModel& model, const Allocation& alloc, std::span<const ReplicationStats> reps);

/// Runs design.replications replications (concurrently) and summarizes them.
/// Throws std::invalid_argument when alloc is outside the configured bounds.
Evaluation eval_point(const NetworkModel& model, const Allocation& alloc, const ADPolicy& policy,
                      const RunDesign& design);
Evaluation eval_point(const NetworkConfig& cfg, const Allocation& alloc, const ADPolicy& policy,
                      const RunDesign& design);

/// Area dominated by the points inside the box bounded by `reference`
/// (both objectives minimized).
double hypervolume(std::span<const std::pair<double, double>> points, std::pair<double, double> reference);

// Generic integer-lattice direct search.

struct LatticeProblem {
  std::vector<int> lower;
  std::vector<int> upper;
  std::function<Objectives(std::span<const int>)> evaluate;
};

struct SolverOptions {
  int budget = 1000;  // iterations; one iteration probes around one archive point
  int initial_step = 2;
};

struct ArchivePoint {
  std::vector<int> x;
  Objectives obj;
  int step = 0;  // 0 = expired
  std::uint64_t order = 0;
};

struct SolveResult {
  std::vector<ArchivePoint> archive;  // sorted by f2, then f1, then x
  std::vector<std::vector<ArchivePoint>> snapshots;  // archive after start and after each iteration
  std::vector<double> hypervolume_trace;             // one value per snapshot
  std::pair<double, double> reference{0.0, 0.0};     // (f1_max, f2_max) over feasible evaluated points
  int iterations = 0;
  std::size_t evaluations = 0;
  bool start_projected = false;
};

/// Coordinate direct search: select the archive point with the largest live
/// step (earliest first), probe +-step along every coordinate (projected onto
/// the bounds), insert nondominated probes in probe order and prune. A point
/// with no successful probe halves its step; at step 1 it expires.
SolveResult solve_lattice(const LatticeProblem& problem, std::vector<int> start, const SolverOptions& options,
                          bool keep_snapshots = true);

/// Memoizing evaluator for one (config, policy, design).
class Evaluator {
 public:
  Evaluator(const NetworkConfig& cfg, ADPolicy policy, RunDesign design);

  const Evaluation& evaluate(const Allocation& alloc);
  const NetworkModel& model() const { return model_; }
  const ADPolicy& policy() const { return policy_; }
  std::size_t cache_size() const { return cache_.size(); }

 private:
  NetworkModel model_;
  ADPolicy policy_;
  RunDesign design_;
  std::vector<std::size_t> shape_;
  std::map<std::vector<int>, Evaluation> cache_;
};

struct OptimizationResult {
  std::string policy_id;
  std::vector<Evaluation> front;  // archive, sorted by f2
  SolveResult search;
  Allocation start;
};

OptimizationResult solve(const NetworkConfig& cfg, const ADPolicy& policy, const RunDesign& design,
                         const Allocation& start, const SolverOptions& options);

/// Smallest f1 among feasible front points with f2 <= budget.
const Evaluation* attaining_point(const std::vector<Evaluation>& front, double f2_budget);

struct DominanceInterval {
  double f2_from = 0.0;
  double f2_to = 0.0;
  std::vector<std::string> leaders;  // policies attaining the lowest f1 on this range
};

/// Splits the f2 axis at every front value and reports which policies lead.
/// Ranges where no policy has a feasible point are omitted.
std::vector<DominanceInterval> dominance_intervals(const std::vector<OptimizationResult>& fronts);

struct PolicyComparison {
  std::vector<OptimizationResult> fronts;
  std::vector<DominanceInterval> intervals;
};

PolicyComparison compare_policies(const NetworkConfig& cfg, const RunDesign& design,
                                  const std::vector<ADPolicy>& policies, const Allocation& start,
                                  const SolverOptions& options);

}  // namespace ednet
