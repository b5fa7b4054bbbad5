#pragma once

#include <string>
#include <vector>

#include "budtrack/fusion.hpp"
#include "budtrack/scorer.hpp"
#include "budtrack/spatial.hpp"
#include "budtrack/temporal.hpp"
#include "budtrack/types.hpp"

namespace budtrack {

enum class TrackMode { Spatial, Temporal, FusionFixed, FusionLearned };

TrackMode parse_track_mode(const std::string& name);
std::string track_mode_name(TrackMode mode);

struct TrackerOptions {
  TrackMode mode = TrackMode::FusionFixed;
  SpatialParams spatial;
  TemporalParams temporal;
  GateParams gate;
  bool use_gravitropism = true;
  // ablation: forget accumulated motion, every branch looks newly observed
  bool drop_history = false;
  // optional learned replacement for the analytic cross-frame scores
  const ScorerNet* scorer = nullptr;
  int threads = 1;
};

// Assigns every bud of every frame a branch identity (or leaves it
// unmatched); identities are the frame branch-point ids.
TrackSet track_sequence(const Sequence& seq, const TrackerOptions& opts);

// One result per sequence, order-preserving and independent of thread count.
std::vector<TrackSet> track_dataset(const std::vector<Sequence>& seqs,
                                    const TrackerOptions& opts);

}  // namespace budtrack
