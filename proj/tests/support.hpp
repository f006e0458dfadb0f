#pragma once

#include <string>
#include <vector>

#include "ednet/config_io.hpp"
#include "ednet/model.hpp"

namespace testsupport {

inline std::string case_study_path() { return std::string(EDNET_SOURCE_DIR) + "/configs/case_study.json"; }

inline ednet::ProjectConfig case_study() { return ednet::load_project(case_study_path()); }

/// One ED, one 24h slot, exponential service, red/yellow tags.
inline ednet::NetworkConfig single_queue(double red_per_hour, double yellow_per_hour, double mean_service,
                                         int servers) {
  using namespace ednet;
  NetworkConfig cfg;
  cfg.name = "single";
  cfg.tags = {{1, "red"}, {2, "yellow"}};
  cfg.thresholds_minutes = {{"red", 5.0}, {"yellow", 15.0}};
  cfg.weights = {{"red", 1.0}, {"yellow", 1.0}};
  cfg.travel_minutes = {{0.0}};
  EDConfig ed;
  ed.id = 1;
  ed.name = "ED1";
  ed.slots = {{"D", 0.0, 24.0}};
  ed.arrivals.rates_per_hour = {{"red", {red_per_hour}}, {"yellow", {yellow_per_hour}}};
  const DistributionSpec svc{Exponential{mean_service}, 0.0};
  ed.service = {{"red", {svc}}, {"yellow", {svc}}};
  ed.lower = {1};
  ed.upper = {servers};
  ed.as_is = {servers};
  cfg.eds = {ed};
  return cfg;
}

/// n EDs with three 8h slots, exponential service and a symmetric travel matrix.
inline ednet::NetworkConfig small_network(std::size_t n, double red_per_hour, double yellow_per_hour,
                                          double mean_service, int servers) {
  using namespace ednet;
  NetworkConfig cfg;
  cfg.name = "small";
  cfg.tags = {{1, "red"}, {2, "yellow"}};
  cfg.thresholds_minutes = {{"red", 5.0}, {"yellow", 15.0}};
  cfg.weights = {{"red", 1.0}, {"yellow", 1.0}};
  cfg.travel_minutes.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) cfg.travel_minutes[i][j] = 5.0 + 3.0 * static_cast<double>(i + j) + (i > j ? i - j : j - i);
  for (std::size_t i = 0; i < n; ++i) {
    EDConfig ed;
    ed.id = static_cast<int>(i + 1);
    ed.name = "ED" + std::to_string(i + 1);
    ed.slots = {{"A", 0, 8}, {"B", 8, 16}, {"C", 16, 24}};
    ed.arrivals.rates_per_hour = {{"red", {red_per_hour, red_per_hour, red_per_hour}},
                                  {"yellow", {yellow_per_hour, yellow_per_hour, yellow_per_hour}}};
    const DistributionSpec svc{Exponential{mean_service}, 0.0};
    ed.service = {{"red", {svc, svc, svc}}, {"yellow", {svc, svc, svc}}};
    ed.lower = {1, 1, 1};
    ed.upper = {6, 6, 6};
    ed.as_is = {servers, servers, servers};
    cfg.eds.push_back(ed);
  }
  return cfg;
}

}  // namespace testsupport
