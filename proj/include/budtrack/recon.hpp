#pragma once

#include <utility>
#include <vector>

#include "budtrack/types.hpp"

namespace budtrack {

using Point = std::pair<double, double>;
using Polyline = std::vector<Point>;

struct BinaryImage {
  int w = 0;
  int h = 0;
  std::vector<std::uint8_t> px;  // row-major

  std::uint8_t at(int x, int y) const {
    return px[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
              static_cast<std::size_t>(x)];
  }
  void set(int x, int y, std::uint8_t v) {
    px[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
       static_cast<std::size_t>(x)] = v;
  }
  bool inside(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }
};

struct BranchSkeleton {
  Polyline polyline;
  double length = 0.0;
  std::vector<Point> endpoints;
};

// Clamped B-spline through the branch point followed by the chronological
// bud positions; degree min(3, points-1). The curve starts exactly at the
// branch point. All points coincident yields a single-point polyline.
Polyline fit_branch_curve(const Point& branch_point,
                          const std::vector<Point>& bud_positions,
                          int samples = 64);

double polyline_length(const Polyline& p);

// Coordinates in [0,1]^2 mapped to a size x size raster; stroke_px-wide
// 8-connected stroke.
BinaryImage rasterize(const Polyline& polyline, int raster_size, int stroke_px);

// Two-subiteration raster thinning to a one-pixel-wide 8-connected skeleton.
BinaryImage skeletonize(const BinaryImage& mask);

// Total 8-connected graph edge weight: 1 per axis step, sqrt(2) per
// diagonal step; diagonal edges whose pixels already share an axis
// neighbor are not counted.
double skeleton_length(const BinaryImage& skeleton);

// Pixels with <= 1 neighbor in the 8-connected skeleton, as (x, y).
std::vector<std::pair<int, int>> skeleton_endpoints(const BinaryImage& skeleton);

}  // namespace budtrack
