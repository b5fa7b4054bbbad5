#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "budtrack/io.hpp"
#include "budtrack/recon.hpp"
#include "budtrack/types.hpp"

namespace budtrack {

struct BranchParams {
  int order = 1;
  double emergence_day = 0.0;
  double attach_x = 0.5;
  double attach_y = 0.85;  // bottom-up order convention: larger order, smaller y
  double theta0 = -1.57;   // initial growth direction, radians
  double elongation_rate = 0.02;  // vertical units/day, > 0
  double target_dx = 0.1;         // horizontal tip offset at full growth
  double lateral_days = 12.0;     // days to reach the horizontal target
  double sway_amp = 0.0;
  double sway_freq = 0.25;  // cycles/day
  double sway_phase = 0.0;
  double bud_w0 = 0.015;
  double bud_h0 = 0.02;
  double bud_growth = 0.02;  // relative size growth per day
  double max_height = 0.6;
};

struct PlantModel {
  int n_branches = 0;
  std::vector<BranchParams> branches;
};

struct SimConfig {
  std::uint64_t seed = 1;
  int n_plants = 10;
  int frames_per_plant = 12;
  double dt_days = 2.0;
  double dt_jitter = 0.0;        // +/- uniform jitter on each interval, days
  double entanglement = 0.5;     // in [0,1]
  double occlusion_prob = 0.0;   // per bud per frame
  double emerge_window_lo = 4.0;  // day window for late branch emergence
  double emerge_window_hi = 14.0;
  int min_branches = 4;
  int max_branches = 6;
  double sway_amp = 0.003;
  double base_up_rate = 0.022;  // units/day
  bool render_masks = false;
  int raster_size = 224;
  int stroke_px = 2;
};

struct RenderedSequence {
  Sequence seq;
  TrackSet gt_tracks;            // branch index -> (frame, bud id)
  io::Polylines final_polylines;  // branch index -> final-frame polyline
};

void validate_config(const SimConfig& config);

// Deterministic in (config, plant_seed).
PlantModel generate_plant(const SimConfig& config, std::uint64_t plant_seed);

// Deterministic rendering of one plant; plant_index names the sequence and
// offsets its per-plant RNG stream.
RenderedSequence render_sequence(const PlantModel& model, const SimConfig& config,
                                 int plant_index);

// Full dataset: n_plants sequences, independently seeded.
std::vector<RenderedSequence> generate_dataset(const SimConfig& config);

// Branch polyline at a given day, from attach point to current tip.
Polyline branch_polyline(const BranchParams& b, double day, int samples = 24);

enum class PerturbMode { SwapAdjacentBuds, DropHistory, FreezeGrowth };
PerturbMode parse_perturb_mode(const std::string& name);

// Controlled corruption for stress tests:
//  - SwapAdjacentBuds: in the later half of the sequence, the closest bud
//    pair per frame swaps centers (labels stay put).
//  - DropHistory: every bud gets a fresh id, so no bud carries an
//    observation history; motion estimated over bud identity is zero.
//  - FreezeGrowth: all positions pinned to their first-seen values.
std::vector<Frame> perturb_for_ablation(const std::vector<Frame>& frames,
                                        PerturbMode mode);

}  // namespace budtrack
