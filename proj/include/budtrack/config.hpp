#pragma once

#include <filesystem>
#include <string>

#include "budtrack/core.hpp"
#include "budtrack/scorer.hpp"
#include "budtrack/sim.hpp"
#include "budtrack/tracker.hpp"

namespace budtrack {

// Everything the CLI can tune, loadable from an INI-style file with
// [section] headers, key = value lines and '#' comments.
struct AppConfig {
  SimConfig sim;
  SpatialParams spatial;
  TemporalParams temporal;
  GateParams gate;
  NetConfig net;
  SplitRatios split;
  std::string mode = "fusion-fixed";
  bool use_gravitropism = true;
  bool drop_history = false;
  double match_radius = 0.03;
  double gate_lr = 0.2;
  int gate_epochs = 30;
};

// Unknown sections or keys throw std::invalid_argument.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const AppConfig& cfg);

TrackerOptions tracker_options(const AppConfig& cfg);

}  // namespace budtrack
