#pragma once

#include "budtrack/types.hpp"

namespace budtrack {

struct GeomFeatures {
  double dpx = 0.0, dpy = 0.0;  // bud center minus branch point
  double dist = 0.0;            // Euclidean distance / sqrt(2), in [0,1]
  double align = 0.0;           // angle between dp and branch direction, [0,pi]
  double aspect = 1.0;          // w/h
  double area = 0.0;            // w*h
};

struct SpatialParams {
  double sigma_d = 0.15;
  double sigma_a = 0.7853981633974483;  // pi/4
};

GeomFeatures geometric_features(const Bud& bud, const BranchPoint& bp);

// -0.5*(dist/sigma_d)^2 - 0.5*(align/sigma_a)^2; 0 iff dist = align = 0.
double spatial_score(const GeomFeatures& f, const SpatialParams& p);

// buds x branch_points matrix of raw (pre-temperature) spatial scores.
// Empty buds or branches yield an empty matrix.
ScoreMatrix spatial_score_matrix(const Frame& frame, const SpatialParams& p);

}  // namespace budtrack
