#include "ednet/config_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace ednet {

using nlohmann::json;

namespace {

template <typename T>
T get_field(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return node.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& node, const char* key, T fallback, const std::string& where) {
  if (!node.contains(key) || node.at(key).is_null()) return fallback;
  return get_field<T>(node, key, where);
}

const json& require_object(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key) || !node.at(key).is_object())
    throw ConfigError(where + ": '" + key + "' must be an object");
  return node.at(key);
}

const json& require_array(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key) || !node.at(key).is_array())
    throw ConfigError(where + ": '" + key + "' must be an array");
  return node.at(key);
}

std::map<std::string, std::vector<double>> number_table(const json& node, const std::string& where) {
  if (!node.is_object()) throw ConfigError(where + " must be an object keyed by tag label");
  std::map<std::string, std::vector<double>> out;
  for (const auto& [label, values] : node.items()) {
    try {
      out[label] = values.get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ConfigError(where + "." + label + ": " + e.what());
    }
  }
  return out;
}

EDConfig parse_ed(const json& node, std::size_t index) {
  const std::string where = "eds[" + std::to_string(index) + "]";
  if (!node.is_object()) throw ConfigError(where + " must be an object");
  EDConfig ed;
  ed.id = get_field<int>(node, "id", where);
  ed.name = get_or<std::string>(node, "name", "ED" + std::to_string(ed.id), where);
  for (const auto& s : require_array(node, "slots", where)) {
    TimeSlot slot;
    slot.label = get_field<std::string>(s, "label", where + ".slots");
    slot.start_hour = get_field<double>(s, "start_hour", where + ".slots");
    slot.end_hour = get_field<double>(s, "end_hour", where + ".slots");
    ed.slots.push_back(slot);
  }
  ed.arrivals.rates_per_hour =
      number_table(require_object(node, "arrival_rates_per_hour", where), where + ".arrival_rates_per_hour");
  for (const auto& [label, exprs] : require_object(node, "service_minutes", where).items()) {
    if (!exprs.is_array()) throw ConfigError(where + ".service_minutes." + label + " must be an array");
    auto& row = ed.service[label];
    for (const auto& e : exprs) {
      if (!e.is_string()) throw ConfigError(where + ".service_minutes." + label + " entries must be strings");
      row.push_back(parse_distribution(e.get<std::string>()));
    }
  }
  ed.lower = get_field<std::vector<int>>(node, "lower", where);
  ed.upper = get_field<std::vector<int>>(node, "upper", where);
  ed.as_is = get_field<std::vector<int>>(node, "as_is", where);
  if (node.contains("yearly_counts")) ed.yearly_counts = number_table(node.at("yearly_counts"), where + ".yearly_counts");
  return ed;
}

ADPolicy parse_policy(const json& node, std::size_t index) {
  const std::string where = "policies[" + std::to_string(index) + "]";
  if (!node.is_object()) throw ConfigError(where + " must be an object");
  ADPolicy p;
  p.id = get_field<std::string>(node, "id", where);
  p.enabled = get_or<bool>(node, "enabled", true, where);
  p.segment_hours = get_or<double>(node, "segment_hours", 6.0, where);
  if (node.contains("daily_max_hours") && !node.at("daily_max_hours").is_null())
    p.daily_max_hours = get_field<double>(node, "daily_max_hours", where);
  p.blocking = parse_blocking_rule(get_or<std::string>(node, "blocking", "all", where));
  p.destination = parse_destination_rule(get_or<std::string>(node, "destination", "nearest", where));
  p.entry_check = parse_entry_check(get_or<std::string>(node, "entry_check", "on_seize", where));
  return p;
}

json table_to_json(const std::map<std::string, std::vector<double>>& table) {
  json out = json::object();
  for (const auto& [label, values] : table) out[label] = values;
  return out;
}

}  // namespace

const ADPolicy& ProjectConfig::policy(const std::string& id) const {
  for (const auto& p : policies)
    if (p.id == id) return p;
  throw ConfigError("policy '" + id + "' is not defined in the configuration");
}

ProjectConfig parse_project(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration root must be an object");
  ProjectConfig project;
  auto& net = project.network;

  const json& network = require_object(doc, "network", "config");
  net.name = get_or<std::string>(network, "name", "", "network");
  for (const auto& t : require_array(network, "tags", "network")) {
    SeverityTag tag;
    tag.label = get_field<std::string>(t, "label", "network.tags");
    tag.ordinal = get_field<int>(t, "ordinal", "network.tags");
    net.tags.push_back(tag);
  }
  net.thresholds_minutes = get_field<std::map<std::string, double>>(network, "thresholds_minutes", "network");
  net.weights = get_field<std::map<std::string, double>>(network, "weights", "network");
  net.travel_minutes = get_field<std::vector<std::vector<double>>>(network, "travel_minutes", "network");
  net.as_is_exempt_from_bounds = get_or<bool>(network, "as_is_exempt_from_bounds", false, "network");

  const json& eds = require_array(doc, "eds", "config");
  for (std::size_t i = 0; i < eds.size(); ++i) net.eds.push_back(parse_ed(eds[i], i));

  if (doc.contains("policies")) {
    const json& policies = require_array(doc, "policies", "config");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < policies.size(); ++i) {
      ADPolicy p = parse_policy(policies[i], i);
      if (!seen.insert(p.id).second) throw ConfigError("duplicate policy id '" + p.id + "'");
      project.policies.push_back(std::move(p));
    }
  }
  if (doc.contains("solver")) {
    const json& solver = require_object(doc, "solver", "config");
    project.solver.budget = get_or<int>(solver, "budget", project.solver.budget, "solver");
    project.solver.initial_step = get_or<int>(solver, "initial_step", project.solver.initial_step, "solver");
  }
  if (doc.contains("design")) {
    const json& design = require_object(doc, "design", "config");
    auto& d = project.design;
    d.replications = get_or<int>(design, "replications", d.replications, "design");
    d.horizon_days = get_or<double>(design, "horizon_days", d.horizon_days, "design");
    d.warmup_hours = get_or<double>(design, "warmup_hours", d.warmup_hours, "design");
    d.base_seed = get_or<std::uint64_t>(design, "base_seed", d.base_seed, "design");
  }
  return project;
}

json to_json(const ProjectConfig& project) {
  const auto& net = project.network;
  json doc;
  json network;
  network["name"] = net.name;
  network["tags"] = json::array();
  for (const auto& t : net.tags) network["tags"].push_back({{"label", t.label}, {"ordinal", t.ordinal}});
  network["thresholds_minutes"] = net.thresholds_minutes;
  network["weights"] = net.weights;
  network["travel_minutes"] = net.travel_minutes;
  network["as_is_exempt_from_bounds"] = net.as_is_exempt_from_bounds;
  doc["network"] = network;

  doc["eds"] = json::array();
  for (const auto& ed : net.eds) {
    json e;
    e["id"] = ed.id;
    e["name"] = ed.name;
    e["slots"] = json::array();
    for (const auto& s : ed.slots)
      e["slots"].push_back({{"label", s.label}, {"start_hour", s.start_hour}, {"end_hour", s.end_hour}});
    e["arrival_rates_per_hour"] = table_to_json(ed.arrivals.rates_per_hour);
    json service = json::object();
    for (const auto& [label, specs] : ed.service) {
      json row = json::array();
      for (const auto& d : specs) row.push_back(format_distribution(d));
      service[label] = row;
    }
    e["service_minutes"] = service;
    e["lower"] = ed.lower;
    e["upper"] = ed.upper;
    e["as_is"] = ed.as_is;
    if (!ed.yearly_counts.empty()) e["yearly_counts"] = table_to_json(ed.yearly_counts);
    doc["eds"].push_back(e);
  }

  doc["policies"] = json::array();
  for (const auto& p : project.policies) {
    json node;
    node["id"] = p.id;
    node["enabled"] = p.enabled;
    node["segment_hours"] = p.segment_hours;
    node["daily_max_hours"] = p.daily_max_hours ? json(*p.daily_max_hours) : json(nullptr);
    node["blocking"] = to_string(p.blocking);
    node["destination"] = to_string(p.destination);
    node["entry_check"] = to_string(p.entry_check);
    doc["policies"].push_back(node);
  }
  doc["solver"] = {{"budget", project.solver.budget}, {"initial_step", project.solver.initial_step}};
  doc["design"] = {{"replications", project.design.replications},
                   {"horizon_days", project.design.horizon_days},
                   {"warmup_hours", project.design.warmup_hours},
                   {"base_seed", project.design.base_seed}};
  return doc;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ProjectConfig load_project(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_project(doc);
}

std::string dump_project(const ProjectConfig& project) { return to_json(project).dump(2) + "\n"; }

std::vector<Violation> validate_project(const ProjectConfig& project) {
  auto out = validate_config(project.network);
  std::set<std::string> ids;
  for (const auto& p : project.policies) {
    auto v = validate_policy(p);
    out.insert(out.end(), v.begin(), v.end());
    if (!ids.insert(p.id).second)
      out.push_back({violation::kDuplicatePolicy, "policies." + p.id, "policy id repeated"});
  }
  auto d = validate_design(project.design);
  out.insert(out.end(), d.begin(), d.end());
  if (project.solver.budget < 0)
    out.push_back({violation::kInvalidDesign, "solver.budget", "budget must be >= 0"});
  if (project.solver.initial_step < 1)
    out.push_back({violation::kInvalidDesign, "solver.initial_step", "initial step must be >= 1"});
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ednet
