// ednet: simulate, calibrate, optimize and compare ED network allocations.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "ednet/calibration.hpp"
#include "ednet/config_io.hpp"
#include "ednet/engine.hpp"
#include "ednet/parallel.hpp"
#include "ednet/report.hpp"
#include "ednet/sbo.hpp"

namespace fs = std::filesystem;
using namespace ednet;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  bool timestamps = false;
};

struct Loaded {
  ProjectConfig project;
  std::string sha256;
};

Loaded load(const Common& c) {
  const std::string text = read_file(c.config);
  Loaded l;
  try {
    l.project = parse_project(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(c.config + ": " + e.what());
  }
  if (c.reps) l.project.design.replications = *c.reps;
  if (c.seed) l.project.design.base_seed = *c.seed;
  if (auto v = validate_project(l.project); !v.empty()) {
    std::ostringstream msg;
    msg << "configuration is invalid:";
    for (const auto& x : v) msg << "\n  " << x.code << " at " << x.where << ": " << x.message;
    throw ConfigError(msg.str());
  }
  l.sha256 = sha256_hex(text);
  return l;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest manifest_for(const Common& c, const Loaded& l, const std::string& sub) {
  RunManifest m;
  m.config_path = c.config;
  m.config_sha256 = l.sha256;
  m.subcommand = sub;
  m.seed = l.project.design.base_seed;
  m.replications = l.project.design.replications;
  if (c.timestamps) m.started_at = utc_now();
  return m;
}

void emit(const fs::path& dir, const std::string& name, std::string_view content, RunManifest& m) {
  write_file_atomic(dir / name, content);
  m.artifacts.push_back(name);
}

void finish(const Common& c, RunManifest& m) {
  if (c.timestamps) m.finished_at = utc_now();
  write_file_atomic(fs::path(c.out) / "manifest.json", dump_json(to_json(m)));
}

Allocation parse_alloc(const std::string& text, const NetworkConfig& cfg) {
  if (text.empty() || text == "as_is") return Allocation::as_is(cfg);
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--alloc: '" + item + "' is not an integer");
    }
  }
  const auto shape = Allocation::shape_of(cfg);
  std::size_t total = 0;
  for (auto m : shape) total += m;
  if (values.size() != total)
    throw UsageError("--alloc needs " + std::to_string(total) + " values, got " + std::to_string(values.size()));
  Allocation a(shape, values);
  for (const auto& v : validate_allocation(a, cfg, false))
    if (v.code == violation::kZeroServer) throw UsageError("--alloc: every slot needs at least one server");
  return a;
}

ADPolicy pick_policy(const ProjectConfig& p, const std::string& id) {
  if (!id.empty()) return p.policy(id);
  for (const auto& pol : p.policies)
    if (!pol.enabled) return pol;
  ADPolicy none;
  none.id = "no_ad";
  none.enabled = false;
  return none;
}

int cmd_simulate(const Common& c, const std::string& policy_id, const std::string& alloc_text, bool trace) {
  const Loaded l = load(c);
  const auto& cfg = l.project.network;
  const ADPolicy policy = pick_policy(l.project, policy_id);
  const Allocation alloc = parse_alloc(alloc_text, cfg);
  const RunDesign& design = l.project.design;
  const NetworkModel model(cfg);
  RunManifest m = manifest_for(c, l, "simulate");
  m.policy_ids = {policy.id};

  const auto n = static_cast<std::size_t>(design.replications);
  std::vector<ReplicationStats> reps(n);
  std::string trace_text;
  if (trace) {
    // The event trace covers replication 0 only.
    trace_text = trace_csv_header();
    const TraceSink sink = [&](const TraceEvent& e) { trace_text += trace_csv_row(model, e); };
    reps[0] = run_replication(model, alloc, policy, design, 0, &sink);
  }
  parallel_for(n, [&](std::size_t r) {
    if (trace && r == 0) return;
    reps[r] = run_replication(model, alloc, policy, design, r);
  });
  const fs::path dir(c.out);
  emit(dir, "simulation_report.json", dump_json(simulation_report(model, alloc, policy, design, reps)), m);
  if (trace) emit(dir, "trace.csv", trace_text, m);
  finish(c, m);
  return 0;
}

int cmd_calibrate(const Common& c, const std::string& targets_path, std::optional<int> ed_id) {
  const Loaded l = load(c);
  const auto& cfg = l.project.network;
  const DTDTTargets targets = read_targets_csv(read_file(targets_path));
  RunManifest m = manifest_for(c, l, "calibrate");

  nlohmann::json eds = nlohmann::json::array();
  bool matched = false;
  for (std::size_t i = 0; i < cfg.eds.size(); ++i) {
    if (ed_id && cfg.eds[i].id != *ed_id) continue;
    matched = true;
    const CalibrationResult r = calibrate_ed(cfg, i, targets, l.project.design);
    nlohmann::json trace = nlohmann::json::array();
    for (double v : r.objective_trace) trace.push_back(round2(v));
    eds.push_back({{"id", cfg.eds[i].id},
                   {"as_is", r.servers},
                   {"objective_minutes", round2(r.objective)},
                   {"objective_trace", trace},
                   {"passes", r.passes},
                   {"converged", r.converged}});
  }
  if (!matched) throw UsageError("--ed: no ED with id " + std::to_string(*ed_id));
  emit(fs::path(c.out), "calibration.json", dump_json({{"eds", eds}}), m);
  finish(c, m);
  return 0;
}

SolverOptions solver_options(const ProjectConfig& p, std::optional<int> budget) {
  SolverOptions o;
  o.budget = budget.value_or(p.solver.budget);
  o.initial_step = p.solver.initial_step;
  if (o.budget < 0) throw UsageError("--budget must be >= 0");
  return o;
}

int cmd_optimize(const Common& c, const std::string& policy_id, std::optional<int> budget,
                 const std::string& alloc_text) {
  const Loaded l = load(c);
  const auto& cfg = l.project.network;
  const ADPolicy& policy = l.project.policy(policy_id);
  const SolverOptions options = solver_options(l.project, budget);
  const Allocation start = parse_alloc(alloc_text, cfg);
  RunManifest m = manifest_for(c, l, "optimize");
  m.policy_ids = {policy.id};
  m.budget = options.budget;

  const OptimizationResult r = solve(cfg, policy, l.project.design, start, options);
  const fs::path dir(c.out);
  emit(dir, "front_" + policy.id + ".csv", front_csv(cfg, r.front), m);
  emit(dir, "front_" + policy.id + ".json", dump_json(front_json(cfg, r)), m);
  finish(c, m);
  return 0;
}

int cmd_compare(const Common& c, const std::string& policies_text, std::optional<int> budget,
                const std::string& alloc_text) {
  const Loaded l = load(c);
  const auto& cfg = l.project.network;
  std::vector<ADPolicy> policies;
  if (policies_text.empty()) {
    policies = l.project.policies;
  } else {
    std::set<std::string> ids;
    std::stringstream ss(policies_text);
    std::string id;
    while (std::getline(ss, id, ',')) {
      if (!ids.insert(id).second) throw UsageError("--policies: '" + id + "' listed twice");
      policies.push_back(l.project.policy(id));
    }
  }
  if (policies.size() < 2) throw UsageError("compare needs at least two policies");
  const SolverOptions options = solver_options(l.project, budget);
  const Allocation start = parse_alloc(alloc_text, cfg);
  RunManifest m = manifest_for(c, l, "compare");
  for (const auto& p : policies) m.policy_ids.push_back(p.id);
  m.budget = options.budget;

  const PolicyComparison cmp = compare_policies(cfg, l.project.design, policies, start, options);
  const fs::path dir(c.out);
  for (const auto& f : cmp.fronts) {
    emit(dir, "front_" + f.policy_id + ".csv", front_csv(cfg, f.front), m);
    emit(dir, "series_" + f.policy_id + ".csv", series_csv(f), m);
  }
  emit(dir, "comparison.json", dump_json(comparison_report(cfg, cmp)), m);
  finish(c, m);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "configuration file (JSON)")->required();
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--reps", c.reps, "replications (overrides design.replications)")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "base seed (overrides design.base_seed)");
  sub->add_flag("--timestamps", c.timestamps, "record wall-clock times in the manifest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ED network simulation and allocation optimizer"};
  app.require_subcommand(1);
  Common common;
  std::string policy;
  std::string policies;
  std::string alloc;
  std::string targets;
  std::optional<int> budget;
  std::optional<int> ed;
  bool trace = false;

  auto* sim = app.add_subcommand("simulate", "run the replication design for one allocation");
  add_common(sim, common);
  sim->add_option("--policy", policy, "policy id (default: the first disabled policy)");
  sim->add_option("--alloc", alloc, "comma-separated servers per (ED, slot), or as_is");
  sim->add_flag("--trace", trace, "write the event trace of replication 0");

  auto* cal = app.add_subcommand("calibrate", "fit per-slot servers to observed door-to-doctor times");
  add_common(cal, common);
  cal->add_option("--targets", targets, "CSV with ed,slot,tag,mean_dtdt_minutes")->required();
  cal->add_option("--ed", ed, "calibrate only this ED id");

  auto* opt = app.add_subcommand("optimize", "search the allocation front for one policy");
  add_common(opt, common);
  opt->add_option("--policy", policy, "policy id")->required();
  opt->add_option("--budget", budget, "solver iterations");
  opt->add_option("--alloc", alloc, "start allocation (default as_is)");

  auto* cmp = app.add_subcommand("compare", "search and compare the fronts of several policies");
  add_common(cmp, common);
  cmp->add_option("--policies", policies, "comma-separated policy ids (default: all)");
  cmp->add_option("--budget", budget, "solver iterations per policy");
  cmp->add_option("--alloc", alloc, "start allocation (default as_is)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(common, policy, alloc, trace);
    if (*cal) return cmd_calibrate(common, targets, ed);
    if (*opt) return cmd_optimize(common, policy, budget, alloc);
    if (*cmp) return cmd_compare(common, policies, budget, alloc);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
