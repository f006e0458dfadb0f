#include "ednet/report.hpp"

#include <openssl/sha.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <system_error>

#include "ednet/distribution.hpp"

namespace ednet {

using nlohmann::json;

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_row(std::span<const std::string> fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_record = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
        if (i < text.size() && text[i] != ',' && text[i] != '\r' && text[i] != '\n')
          throw std::runtime_error("csv: unexpected character after closing quote");
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == '"') {
      if (!field.empty()) throw std::runtime_error("csv: quote inside unquoted field");
      quoted = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_record();
      i += (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ? 2 : 1;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !row.empty()) end_record();
  return rows;
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

std::optional<double> half_width_95(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return std::nullopt;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Fronts

std::vector<std::string> front_header(const NetworkConfig& cfg) {
  std::vector<std::string> header;
  for (const auto& ed : cfg.eds)
    for (const auto& s : ed.slots) header.push_back("s_" + std::to_string(ed.id) + s.label);
  for (const char* c : {"f1_minutes", "f2_minutes", "viol_norm", "feasible"}) header.emplace_back(c);
  return header;
}

FrontRow to_front_row(const Evaluation& e) {
  return {std::vector<int>(e.alloc.values().begin(), e.alloc.values().end()), e.f1, e.f2, e.viol_norm, e.feasible()};
}

std::string front_csv(const NetworkConfig& cfg, const std::vector<Evaluation>& front) {
  const auto header = front_header(cfg);
  std::string out = csv_row(header);
  for (const auto& e : front) {
    const FrontRow row = to_front_row(e);
    std::vector<std::string> fields;
    for (int s : row.servers) fields.push_back(std::to_string(s));
    fields.push_back(format_number(row.f1));
    fields.push_back(std::to_string(static_cast<std::int64_t>(row.f2)));
    fields.push_back(format_number(row.viol_norm));
    fields.emplace_back(row.feasible ? "true" : "false");
    out += csv_row(fields);
  }
  return out;
}

namespace {

double parse_double(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::runtime_error("csv: not a number: '" + text + "'");
  return v;
}

int parse_int(const std::string& text) {
  std::size_t used = 0;
  const int v = std::stoi(text, &used);
  if (used != text.size()) throw std::runtime_error("csv: not an integer: '" + text + "'");
  return v;
}

}  // namespace

std::vector<FrontRow> read_front_csv(const NetworkConfig& cfg, std::string_view text) {
  const auto rows = parse_csv(text);
  const auto header = front_header(cfg);
  if (rows.empty() || rows.front() != header) throw std::runtime_error("front csv: unexpected header");
  const std::size_t slots = header.size() - 4;
  std::vector<FrontRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) throw std::runtime_error("front csv: row " + std::to_string(r) + " has wrong width");
    FrontRow fr;
    for (std::size_t k = 0; k < slots; ++k) fr.servers.push_back(parse_int(row[k]));
    fr.f1 = parse_double(row[slots]);
    fr.f2 = parse_double(row[slots + 1]);
    fr.viol_norm = parse_double(row[slots + 2]);
    if (row[slots + 3] != "true" && row[slots + 3] != "false")
      throw std::runtime_error("front csv: feasible must be true or false");
    fr.feasible = row[slots + 3] == "true";
    out.push_back(std::move(fr));
  }
  return out;
}

std::string series_csv(const OptimizationResult& result) {
  const std::vector<std::string> header{"policy", "f2_minutes", "f1_minutes", "feasible"};
  std::string out = csv_row(header);
  for (const auto& e : result.front) {
    const std::vector<std::string> row{result.policy_id, std::to_string(static_cast<std::int64_t>(e.f2)),
                                       format_number(e.f1), e.feasible() ? "true" : "false"};
    out += csv_row(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json allocation_json(const NetworkConfig& cfg, const Allocation& alloc) {
  json out = json::object();
  for (std::size_t i = 0; i < cfg.eds.size(); ++i) {
    json row = json::object();
    for (std::size_t j = 0; j < cfg.eds[i].slots.size(); ++j) row[cfg.eds[i].slots[j].label] = alloc.at(i, j);
    out[std::to_string(cfg.eds[i].id)] = row;
  }
  return out;
}

json optional_number(std::optional<double> v) { return v ? json(round2(*v)) : json(nullptr); }

json policy_json(const ADPolicy& p) {
  return {{"id", p.id},
          {"enabled", p.enabled},
          {"segment_hours", p.segment_hours},
          {"daily_max_hours", p.daily_max_hours ? json(*p.daily_max_hours) : json(nullptr)},
          {"blocking", to_string(p.blocking)},
          {"destination", to_string(p.destination)},
          {"entry_check", to_string(p.entry_check)}};
}

json evaluation_json(const NetworkConfig& cfg, const Evaluation& e) {
  return {{"allocation", allocation_json(cfg, e.alloc)},
          {"f1_minutes", round2(e.f1)},
          {"f2_minutes", static_cast<std::int64_t>(e.f2)},
          {"viol_norm", round2(e.viol_norm)},
          {"feasible", e.feasible()}};
}

}  // namespace

json simulation_report(const NetworkModel& model, const Allocation& alloc, const ADPolicy& policy,
                       const RunDesign& design, std::span<const ReplicationStats> reps) {
  const NetworkConfig& cfg = model.config();
  const Evaluation ev = summarize(model, alloc, reps);
  json doc;
  doc["network"] = cfg.name;
  doc["policy"] = policy_json(policy);
  doc["design"] = {{"replications", design.replications},
                   {"horizon_days", design.horizon_days},
                   {"warmup_hours", design.warmup_hours},
                   {"base_seed", design.base_seed}};
  doc["allocation"] = allocation_json(cfg, alloc);
  doc["f1_minutes"] = round2(ev.f1);
  doc["f2_minutes"] = static_cast<std::int64_t>(ev.f2);
  doc["viol_norm"] = round2(ev.viol_norm);
  doc["feasible"] = ev.feasible();

  json cells = json::array();
  std::vector<double> nva(reps.size());
  std::vector<double> dtdt(reps.size());
  std::vector<double> transport(reps.size());
  for (std::size_t i = 0; i < model.ed_count(); ++i) {
    for (std::size_t j = 0; j < model.slot_count(i); ++j) {
      for (std::size_t k = 0; k < model.tag_count(); ++k) {
        std::int64_t patients = 0;
        for (std::size_t r = 0; r < reps.size(); ++r) {
          const CellStats& c = reps[r].cell(i, j, k);
          patients += c.count;
          nva[r] = c.mean_nva();
          dtdt[r] = c.mean_dtdt();
          transport[r] = c.count ? c.sum_transport / static_cast<double>(c.count) : 0.0;
        }
        const std::size_t idx = reps.front().cell_index(i, j, k);
        const double n = static_cast<double>(reps.size());
        cells.push_back({{"ed", model.ed_id(i)},
                         {"slot", model.slot_label(i, j)},
                         {"tag", model.tag(k).label},
                         {"patients", patients},
                         {"mean_nva_minutes", round2(ev.cell_means[idx])},
                         {"nva_half_width_95", optional_number(half_width_95(nva))},
                         {"mean_dtdt_minutes", round2(std::accumulate(dtdt.begin(), dtdt.end(), 0.0) / n)},
                         {"dtdt_half_width_95", optional_number(half_width_95(dtdt))},
                         {"mean_transport_minutes", round2(std::accumulate(transport.begin(), transport.end(), 0.0) / n)},
                         {"threshold_minutes", model.threshold(k)},
                         {"violation_minutes", round2(ev.violations[idx])}});
      }
    }
  }
  doc["cells"] = cells;

  json diversion = json::array();
  const double n = static_cast<double>(reps.size());
  for (std::size_t i = 0; i < model.ed_count(); ++i) {
    DiversionStats total;
    for (const auto& r : reps) {
      const auto& d = r.diversion[i];
      total.episodes += d.episodes;
      total.extensions += d.extensions;
      total.diverted_patients += d.diverted_patients;
      total.received_patients += d.received_patients;
      total.diversion_minutes += d.diversion_minutes;
    }
    diversion.push_back({{"ed", model.ed_id(i)},
                         {"episodes_per_replication", round2(static_cast<double>(total.episodes) / n)},
                         {"extensions_per_replication", round2(static_cast<double>(total.extensions) / n)},
                         {"diverted_patients_per_replication", round2(static_cast<double>(total.diverted_patients) / n)},
                         {"received_patients_per_replication", round2(static_cast<double>(total.received_patients) / n)},
                         {"diversion_hours_per_replication", round2(total.diversion_minutes / 60.0 / n)}});
  }
  doc["diversion"] = diversion;

  FlowCounts flow;
  for (const auto& r : reps) {
    flow.arrivals += r.flow.arrivals;
    flow.completed += r.flow.completed;
    flow.in_service += r.flow.in_service;
    flow.in_queue += r.flow.in_queue;
    flow.in_transit += r.flow.in_transit;
  }
  doc["flow_totals"] = {{"arrivals", flow.arrivals},
                        {"completed", flow.completed},
                        {"in_service", flow.in_service},
                        {"in_queue", flow.in_queue},
                        {"in_transit", flow.in_transit}};
  return doc;
}

json front_json(const NetworkConfig& cfg, const OptimizationResult& result) {
  json points = json::array();
  for (const auto& e : result.front) points.push_back(evaluation_json(cfg, e));
  return {{"policy", result.policy_id},
          {"start", allocation_json(cfg, result.start)},
          {"start_projected", result.search.start_projected},
          {"iterations", result.search.iterations},
          {"evaluations", result.search.evaluations},
          {"points", points}};
}

json comparison_report(const NetworkConfig& cfg, const PolicyComparison& comparison) {
  json fronts = json::array();
  for (const auto& f : comparison.fronts) fronts.push_back(front_json(cfg, f));
  json intervals = json::array();
  for (const auto& iv : comparison.intervals)
    intervals.push_back({{"f2_from_minutes", static_cast<std::int64_t>(iv.f2_from)},
                         {"f2_to_minutes", static_cast<std::int64_t>(iv.f2_to)},
                         {"leaders", iv.leaders}});
  return {{"fronts", fronts}, {"dominance_intervals", intervals}};
}

std::string trace_csv_header() {
  const std::vector<std::string> header{"time", "event_type", "ed", "patient_id", "tag"};
  return csv_row(header);
}

std::string trace_csv_row(const NetworkModel& model, const TraceEvent& event) {
  const std::vector<std::string> row{format_number(event.time), to_string(event.kind),
                                     std::to_string(model.ed_id(event.ed)),
                                     event.patient >= 0 ? std::to_string(event.patient) : std::string(),
                                     event.tag >= 0 ? model.tag(static_cast<std::size_t>(event.tag)).label
                                                    : std::string()};
  return csv_row(row);
}

DTDTTargets read_targets_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  const std::vector<std::string> header{"ed", "slot", "tag", "mean_dtdt_minutes"};
  if (rows.empty() || rows.front() != header)
    throw ConfigError("targets csv: header must be ed,slot,tag,mean_dtdt_minutes");
  DTDTTargets targets;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 4) throw ConfigError("targets csv: row " + std::to_string(r) + " needs 4 fields");
    try {
      targets.set(parse_int(row[0]), row[1], row[2], parse_double(row[3]));
    } catch (const std::exception& e) {
      throw ConfigError("targets csv: row " + std::to_string(r) + ": " + e.what());
    }
  }
  return targets;
}

std::string targets_csv(const NetworkConfig& cfg, std::size_t ed_index,
                        const std::vector<std::vector<double>>& means_by_slot_tag) {
  const std::vector<std::string> header{"ed", "slot", "tag", "mean_dtdt_minutes"};
  std::string out = csv_row(header);
  const auto tags = tags_by_priority(cfg);
  const EDConfig& ed = cfg.eds.at(ed_index);
  for (std::size_t j = 0; j < ed.slots.size(); ++j)
    for (std::size_t k = 0; k < tags.size(); ++k) {
      const std::vector<std::string> row{std::to_string(ed.id), ed.slots[j].label, tags[k].label,
                                         format_number(means_by_slot_tag[j][k])};
      out += csv_row(row);
    }
  return out;
}

json to_json(const RunManifest& m) {
  json doc;
  doc["config"] = {{"path", m.config_path}, {"sha256", m.config_sha256}};
  doc["subcommand"] = m.subcommand;
  doc["policies"] = m.policy_ids;
  doc["seed"] = m.seed;
  doc["replications"] = m.replications;
  doc["budget"] = m.budget ? json(*m.budget) : json(nullptr);
  if (m.started_at) doc["started_at"] = *m.started_at;
  if (m.finished_at) doc["finished_at"] = *m.finished_at;
  doc["artifacts"] = m.artifacts;
  return doc;
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace ednet
