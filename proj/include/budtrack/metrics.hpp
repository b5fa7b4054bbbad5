#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "budtrack/types.hpp"

namespace budtrack {

// track id -> chronological (frame, x, y) observations
using TrackObs = std::map<int, std::vector<std::tuple<int, double, double>>>;

// Resolves bud ids to centers; entries whose bud id is missing are dropped.
TrackObs track_observations(const TrackSet& tracks,
                            const std::vector<Frame>& frames);

// Fraction of ground-truth observations carried by the pred track with the
// same identity key (both sides keyed by branch identity).
double bma(const TrackSet& gt, const TrackSet& pred);

// Mean Euclidean distance over index-matched bud coordinate pairs.
double ble(const std::vector<std::pair<double, double>>& gt_points,
           const std::vector<std::pair<double, double>>& pred_points);

struct MotResult {
  int gt_total = 0;
  int fp = 0;
  int fn = 0;
  int idsw = 0;
  double mota = 0.0;
  double idf1 = 0.0;
  double mt = 0.0;  // fraction of gt tracks covered >= 80%
  double ml = 0.0;  // fraction of gt tracks covered <= 20%
  int n_gt_tracks = 0;
};

// Distance-gated per-frame correspondence with continuity preference;
// identity measures via a global overlap assignment.
MotResult mot_metrics(const TrackObs& gt, const TrackObs& pred,
                      double radius = 0.03);

// Length agreement: min(a,b)/max(a,b); defined as 1 when both are zero.
double liou(double len_a, double len_b);

// Bidirectional mean nearest-neighbour distance between endpoint sets.
double btc(const std::vector<std::pair<double, double>>& a,
           const std::vector<std::pair<double, double>>& b);

struct MetricRow {
  std::string plant;
  int view = 0;
  std::string phase;
  std::string metric;
  double value = 0.0;
  int count = 1;
};

// Sample-count weighted mean of rows sharing a metric name.
double aggregate(const std::vector<MetricRow>& rows, const std::string& metric);

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_report_csv(const std::filesystem::path& path);

}  // namespace budtrack
