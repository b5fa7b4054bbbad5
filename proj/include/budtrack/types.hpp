#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace budtrack {

// Normalized image coordinates throughout: x,y in [0,1], y grows downward.
// "Upward growth" therefore means decreasing y.
inline constexpr double kDiagonal = 1.4142135623730951;  // sqrt(2)

// Sentinel score for masked / impossible pairs.
inline constexpr double kMaskedScore = -1e9;

struct BranchPoint {
  int id = 0;
  int order = 1;  // botanical rank, counted from the bottom of the stem
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians in (-pi, pi]
  int first_seen = 0;
};

struct Bud {
  int id = 0;
  int gt_order = 0;  // annotation only; never a network input
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  int frame = 0;
};

struct MotionState {
  double px = 0.0, py = 0.0;  // previous position
  double vx = 0.0, vy = 0.0;  // normalized units / day
  double ax = 0.0, ay = 0.0;  // normalized units / day^2
};

// Run-length encoded binary mask, row-major, starting with a run of zeros.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<int> runs;
};

struct Frame {
  int index = 0;
  double timestamp_days = 0.0;
  std::vector<BranchPoint> branch_points;
  std::vector<Bud> buds;
  std::vector<RleMask> masks;  // optional, one per branch point when present
};

struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;  // excludes the unmatched column when present
  bool has_unmatched = false;
  std::vector<double> v;  // row-major, rows x (cols + has_unmatched)

  static ScoreMatrix zeros(std::size_t r, std::size_t c) {
    ScoreMatrix m;
    m.rows = r;
    m.cols = c;
    m.v.assign(r * c, 0.0);
    return m;
  }
  std::size_t stride() const { return cols + (has_unmatched ? 1 : 0); }
  double& at(std::size_t i, std::size_t j) { return v[i * stride() + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * stride() + j]; }
  bool empty() const { return rows == 0 || cols == 0; }
};

inline constexpr int kUnmatched = -1;

struct Assignment {
  // per-bud matched column (branch index) or kUnmatched
  std::vector<int> match;
  double total_score = 0.0;
};

// identity id -> ordered (frame index, bud id)
using TrackSet = std::map<int, std::vector<std::pair<int, int>>>;

struct Sequence {
  std::string plant_id;
  int view_deg = 0;
  std::vector<Frame> frames;
};

struct Dataset {
  std::vector<Sequence> sequences;
};

}  // namespace budtrack
