#include "budtrack/spatial.hpp"

#include <cmath>

namespace budtrack {

GeomFeatures geometric_features(const Bud& bud, const BranchPoint& bp) {
  GeomFeatures f;
  f.dpx = bud.cx - bp.x;
  f.dpy = bud.cy - bp.y;
  const double norm = std::hypot(f.dpx, f.dpy);
  f.dist = norm / kDiagonal;
  if (norm == 0.0) {
    f.align = 0.0;  // coincident pair: convention
  } else {
    const double dx = std::cos(bp.theta);
    const double dy = std::sin(bp.theta);
    double c = (f.dpx * dx + f.dpy * dy) / norm;
    c = std::clamp(c, -1.0, 1.0);
    f.align = std::acos(c);
  }
  f.aspect = bud.w / bud.h;
  f.area = bud.w * bud.h;
  return f;
}

double spatial_score(const GeomFeatures& f, const SpatialParams& p) {
  const double rd = f.dist / p.sigma_d;
  const double ra = f.align / p.sigma_a;
  return -0.5 * rd * rd - 0.5 * ra * ra;
}

ScoreMatrix spatial_score_matrix(const Frame& frame, const SpatialParams& p) {
  ScoreMatrix m = ScoreMatrix::zeros(frame.buds.size(), frame.branch_points.size());
  if (m.empty()) return m;
  for (std::size_t i = 0; i < frame.buds.size(); ++i)
    for (std::size_t j = 0; j < frame.branch_points.size(); ++j)
      m.at(i, j) = spatial_score(
          geometric_features(frame.buds[i], frame.branch_points[j]), p);
  return m;
}

}  // namespace budtrack
