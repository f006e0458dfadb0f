#include "ednet/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "ednet/engine.hpp"
#include "ednet/parallel.hpp"

namespace ednet {

std::optional<double> DTDTTargets::get(int ed_id, const std::string& slot, const std::string& tag) const {
  const auto it = minutes.find({ed_id, slot, tag});
  if (it == minutes.end()) return std::nullopt;
  return it->second;
}

namespace {

NetworkConfig single_ed(const NetworkConfig& cfg, std::size_t ed_index, const std::vector<int>& lower,
                        const std::vector<int>& upper) {
  NetworkConfig sub;
  sub.name = cfg.name;
  sub.tags = cfg.tags;
  sub.thresholds_minutes = cfg.thresholds_minutes;
  sub.weights = cfg.weights;
  sub.travel_minutes = {{0.0}};
  sub.eds = {cfg.eds.at(ed_index)};
  sub.eds[0].lower = lower;
  sub.eds[0].upper = upper;
  sub.eds[0].as_is = lower;
  sub.as_is_exempt_from_bounds = true;
  return sub;
}

class DtdtOracle {
 public:
  DtdtOracle(const NetworkConfig& sub, RunDesign design) : model_(sub), design_(design) {
    policy_.id = "calibration";
    policy_.enabled = false;
  }

  // [slot][tag rank]
  const std::vector<std::vector<double>>& means(const std::vector<int>& servers) {
    if (auto it = cache_.find(servers); it != cache_.end()) return it->second;
    const Allocation alloc({servers.size()}, servers);
    const auto n = static_cast<std::size_t>(design_.replications);
    std::vector<ReplicationStats> reps(n);
    parallel_for(n, [&](std::size_t r) { reps[r] = run_replication(model_, alloc, policy_, design_, r); });
    std::vector<std::vector<double>> out(servers.size(), std::vector<double>(model_.tag_count(), 0.0));
    for (const auto& rep : reps)
      for (std::size_t j = 0; j < servers.size(); ++j)
        for (std::size_t k = 0; k < model_.tag_count(); ++k) out[j][k] += rep.cell(0, j, k).mean_dtdt();
    for (auto& row : out)
      for (auto& v : row) v /= static_cast<double>(n);
    return cache_.emplace(servers, std::move(out)).first->second;
  }

  const NetworkModel& model() const { return model_; }
  std::size_t evaluations() const { return cache_.size(); }

 private:
  NetworkModel model_;
  RunDesign design_;
  ADPolicy policy_;
  std::map<std::vector<int>, std::vector<std::vector<double>>> cache_;
};

}  // namespace

std::vector<std::vector<double>> simulate_mean_dtdt(const NetworkConfig& cfg, std::size_t ed_index,
                                                    const std::vector<int>& servers, const RunDesign& design) {
  if (ed_index >= cfg.eds.size()) throw std::out_of_range("simulate_mean_dtdt: ED index out of range");
  DtdtOracle oracle(single_ed(cfg, ed_index, servers, servers), design);
  return oracle.means(servers);
}

CalibrationResult calibrate_ed(const NetworkConfig& cfg, std::size_t ed_index, const DTDTTargets& targets,
                               const RunDesign& design, const CalibrationOptions& options) {
  if (ed_index >= cfg.eds.size()) throw std::out_of_range("calibrate_ed: ED index out of range");
  const EDConfig& ed = cfg.eds[ed_index];
  const std::size_t m = ed.slots.size();
  const std::vector<int> lower = options.lower.value_or(ed.lower);
  const std::vector<int> upper = options.upper.value_or(ed.upper);
  if (lower.size() != m || upper.size() != m) throw std::invalid_argument("calibrate_ed: bounds do not match slots");
  for (std::size_t j = 0; j < m; ++j) {
    if (lower[j] > upper[j]) throw std::invalid_argument("calibrate_ed: empty bound range for slot " + ed.slots[j].label);
    if (lower[j] < 1) throw std::invalid_argument("calibrate_ed: slot " + ed.slots[j].label + " admits zero servers");
  }
  if (options.max_passes < 1) throw std::invalid_argument("calibrate_ed: max_passes must be >= 1");

  DtdtOracle oracle(single_ed(cfg, ed_index, lower, upper), design);
  const std::size_t tags = oracle.model().tag_count();
  std::vector<std::vector<double>> target(m, std::vector<double>(tags));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < tags; ++k) {
      const auto v = targets.get(ed.id, ed.slots[j].label, oracle.model().tag(k).label);
      if (!v) throw ConfigError("no DTDT target for ED " + std::to_string(ed.id) + " slot " + ed.slots[j].label +
                                " tag " + oracle.model().tag(k).label);
      if (!(*v >= 0.0)) throw ConfigError("DTDT targets must be >= 0");
      target[j][k] = *v;
    }
  }
  auto objective = [&](const std::vector<int>& s) {
    const auto& sim = oracle.means(s);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < tags; ++k) total += std::abs(target[j][k] - sim[j][k]);
    return total;
  };

  CalibrationResult result;
  std::vector<int> s = options.start.value_or(ed.as_is);
  if (s.size() != m) throw std::invalid_argument("calibrate_ed: start does not match slots");
  for (std::size_t j = 0; j < m; ++j) s[j] = std::clamp(s[j], lower[j], upper[j]);
  result.objective = objective(s);
  result.objective_trace.push_back(result.objective);

  while (result.passes < options.max_passes) {
    ++result.passes;
    bool changed = false;
    for (std::size_t j = 0; j < m; ++j) {
      int best_value = s[j];
      double best = std::numeric_limits<double>::infinity();
      std::vector<int> trial = s;
      for (int v = lower[j]; v <= upper[j]; ++v) {
        trial[j] = v;
        const double obj = objective(trial);
        if (obj < best) {
          best = obj;
          best_value = v;
        }
      }
      if (best_value != s[j]) changed = true;
      s[j] = best_value;
      result.objective = best;
    }
    // Single-slot moves are stuck: try moving pairs of slots jointly.
    if (!changed && result.objective > 0.0) {
      std::vector<int> best_s = s;
      double best = result.objective;
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) {
          std::vector<int> trial = s;
          for (int va = lower[a]; va <= upper[a]; ++va)
            for (int vb = lower[b]; vb <= upper[b]; ++vb) {
              trial[a] = va;
              trial[b] = vb;
              const double obj = objective(trial);
              if (obj < best) {
                best = obj;
                best_s = trial;
              }
            }
        }
      if (best_s != s) {
        s = best_s;
        result.objective = best;
        changed = true;
      }
    }
    result.objective_trace.push_back(result.objective);
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  result.servers = s;
  result.evaluations = oracle.evaluations();
  return result;
}

}  // namespace ednet
