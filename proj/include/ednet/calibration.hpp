#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ednet/model.hpp"

namespace ednet {

/// Observed mean door-to-doctor times keyed by (ED id, slot label, tag label).
struct DTDTTargets {
  std::map<std::tuple<int, std::string, std::string>, double> minutes;

  void set(int ed_id, const std::string& slot, const std::string& tag, double value) {
    minutes[{ed_id, slot, tag}] = value;
  }
  std::optional<double> get(int ed_id, const std::string& slot, const std::string& tag) const;
};

struct CalibrationOptions {
  std::optional<std::vector<int>> lower;  // defaults to the ED's configured bounds
  std::optional<std::vector<int>> upper;
  std::optional<std::vector<int>> start;  // defaults to as-is clamped to the bounds
  int max_passes = 5;
};

struct CalibrationResult {
  std::vector<int> servers;  // one per slot
  double objective = 0.0;    // sum over (slot, tag) of |target - simulated mean DTDT|
  std::vector<double> objective_trace;  // start value, then after each pass
  int passes = 0;
  bool converged = false;  // a full pass changed nothing
  std::size_t evaluations = 0;
};

/// SAA mean DTDT per (slot, tag rank) for ED `ed_index` simulated alone,
/// without diversion, with per-slot servers `servers`.
std::vector<std::vector<double>> simulate_mean_dtdt(const NetworkConfig& cfg, std::size_t ed_index,
                                                    const std::vector<int>& servers, const RunDesign& design);

/// Coordinate descent over slots: each slot in turn is set to the value in
/// [l_j, u_j] minimizing the total absolute DTDT error, smallest value on ties.
/// A sweep that changes nothing while the error is positive is followed by
/// joint moves over every pair of slots. Sweeps stop when a pass changes
/// nothing or after max_passes.
CalibrationResult calibrate_ed(const NetworkConfig& cfg, std::size_t ed_index, const DTDTTargets& targets,
                               const RunDesign& design, const CalibrationOptions& options = {});

}  // namespace ednet
