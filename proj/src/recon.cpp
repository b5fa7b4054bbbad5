#include "budtrack/recon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace budtrack {

namespace {

// de Boor evaluation of a clamped B-spline at parameter t in [0,1].
Point deboor(const std::vector<Point>& ctrl, int degree,
             const std::vector<double>& knots, double t) {
  const int p = degree;
  // locate knot span k with knots[k] <= t < knots[k+1]
  int k = p;
  const int last = static_cast<int>(ctrl.size()) - 1;
  while (k < last && t >= knots[static_cast<std::size_t>(k + 1)]) ++k;

  std::vector<Point> d(static_cast<std::size_t>(p) + 1);
  for (int j = 0; j <= p; ++j)
    d[static_cast<std::size_t>(j)] = ctrl[static_cast<std::size_t>(j + k - p)];
  for (int r = 1; r <= p; ++r) {
    for (int j = p; j >= r; --j) {
      const double den = knots[static_cast<std::size_t>(j + 1 + k - r)] -
                         knots[static_cast<std::size_t>(j + k - p)];
      const double alpha =
          den == 0.0 ? 0.0 : (t - knots[static_cast<std::size_t>(j + k - p)]) / den;
      auto& dj = d[static_cast<std::size_t>(j)];
      const auto& djm = d[static_cast<std::size_t>(j - 1)];
      dj.first = (1.0 - alpha) * djm.first + alpha * dj.first;
      dj.second = (1.0 - alpha) * djm.second + alpha * dj.second;
    }
  }
  return d[static_cast<std::size_t>(p)];
}

}  // namespace

Polyline fit_branch_curve(const Point& branch_point,
                          const std::vector<Point>& bud_positions, int samples) {
  std::vector<Point> ctrl;
  ctrl.push_back(branch_point);
  ctrl.insert(ctrl.end(), bud_positions.begin(), bud_positions.end());

  bool all_coincident = true;
  for (const Point& p : ctrl)
    if (std::hypot(p.first - ctrl[0].first, p.second - ctrl[0].second) > 1e-12)
      all_coincident = false;
  if (all_coincident) return {ctrl[0]};  // degenerate, flagged by size 1

  const int n = static_cast<int>(ctrl.size());
  const int degree = std::min(3, n - 1);

  // clamped uniform knot vector
  std::vector<double> knots;
  for (int i = 0; i <= degree; ++i) knots.push_back(0.0);
  const int internal = n - degree - 1;
  for (int i = 1; i <= internal; ++i)
    knots.push_back(static_cast<double>(i) / (internal + 1));
  for (int i = 0; i <= degree; ++i) knots.push_back(1.0);

  Polyline out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const double t = static_cast<double>(s) / (samples - 1);
    out.push_back(deboor(ctrl, degree, knots, std::min(t, 1.0 - 1e-12)));
  }
  out.front() = ctrl.front();  // clamped start, exact
  out.back() = ctrl.back();
  return out;
}

double polyline_length(const Polyline& p) {
  double len = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i)
    len += std::hypot(p[i].first - p[i - 1].first, p[i].second - p[i - 1].second);
  return len;
}

BinaryImage rasterize(const Polyline& polyline, int raster_size, int stroke_px) {
  BinaryImage img;
  img.w = img.h = raster_size;
  img.px.assign(static_cast<std::size_t>(raster_size) * raster_size, 0);
  if (polyline.empty()) return img;

  const double scale = raster_size - 1;
  const double r = std::max(0.5, stroke_px / 2.0);
  auto stamp = [&](double fx, double fy) {
    const int x0 = static_cast<int>(std::floor(fx - r));
    const int x1 = static_cast<int>(std::ceil(fx + r));
    const int y0 = static_cast<int>(std::floor(fy - r));
    const int y1 = static_cast<int>(std::ceil(fy + r));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (img.inside(x, y) && std::hypot(x - fx, y - fy) <= r)
          img.set(x, y, 1);
  };

  stamp(polyline[0].first * scale, polyline[0].second * scale);
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const double ax = polyline[i - 1].first * scale;
    const double ay = polyline[i - 1].second * scale;
    const double bx = polyline[i].first * scale;
    const double by = polyline[i].second * scale;
    const double seg = std::hypot(bx - ax, by - ay);
    const int steps = std::max(1, static_cast<int>(std::ceil(seg / 0.3)));
    for (int s = 1; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      stamp(ax + t * (bx - ax), ay + t * (by - ay));
    }
  }
  return img;
}

namespace {

int neighbors8(const BinaryImage& im, int x, int y, std::uint8_t n[8]) {
  // clockwise from north: p2..p9 in thinning notation
  static const int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  static const int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  int count = 0;
  for (int i = 0; i < 8; ++i) {
    const int nx = x + dx[i], ny = y + dy[i];
    n[i] = (im.inside(nx, ny) && im.at(nx, ny)) ? 1 : 0;
    count += n[i];
  }
  return count;
}

int transitions(const std::uint8_t n[8]) {
  int a = 0;
  for (int i = 0; i < 8; ++i)
    if (n[i] == 0 && n[(i + 1) % 8] == 1) ++a;
  return a;
}

// deletable without changing local connectivity: exactly one 8-connected
// foreground component among the neighbours, and not interior
bool simple_point(const BinaryImage& im, int x, int y) {
  static const int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  static const int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  std::uint8_t n[8];
  neighbors8(im, x, y, n);
  if (n[0] && n[2] && n[4] && n[6]) return false;
  int comp = 0;
  bool seen[8] = {};
  for (int i = 0; i < 8; ++i) {
    if (!n[i] || seen[i]) continue;
    ++comp;
    int stack[8];
    int top = 0;
    stack[top++] = i;
    seen[i] = true;
    while (top) {
      const int c = stack[--top];
      for (int j = 0; j < 8; ++j) {
        if (!n[j] || seen[j]) continue;
        if (std::abs(dx[c] - dx[j]) <= 1 && std::abs(dy[c] - dy[j]) <= 1) {
          seen[j] = true;
          stack[top++] = j;
        }
      }
    }
  }
  return comp == 1;
}

}  // namespace

BinaryImage skeletonize(const BinaryImage& mask) {
  BinaryImage im = mask;
  bool changed = true;
  std::vector<std::pair<int, int>> to_clear;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      to_clear.clear();
      for (int y = 0; y < im.h; ++y) {
        for (int x = 0; x < im.w; ++x) {
          if (!im.at(x, y)) continue;
          std::uint8_t n[8];
          const int b = neighbors8(im, x, y, n);
          if (b < 2 || b > 6) continue;
          if (transitions(n) != 1) continue;
          // n: 0=N,1=NE,2=E,3=SE,4=S,5=SW,6=W,7=NW
          if (pass == 0) {
            if (n[0] * n[2] * n[4] != 0) continue;
            if (n[2] * n[4] * n[6] != 0) continue;
          } else {
            if (n[0] * n[2] * n[6] != 0) continue;
            if (n[0] * n[4] * n[6] != 0) continue;
          }
          to_clear.emplace_back(x, y);
        }
      }
      if (!to_clear.empty()) changed = true;
      for (const auto& [x, y] : to_clear) im.set(x, y, 0);
    }
  }
  // the parallel passes leave two-pixel diagonal staircases; shave any
  // remaining simple non-endpoint pixels sequentially (raster order, so
  // the result stays deterministic)
  bool shaved = true;
  while (shaved) {
    shaved = false;
    for (int y = 0; y < im.h; ++y) {
      for (int x = 0; x < im.w; ++x) {
        if (!im.at(x, y)) continue;
        std::uint8_t n[8];
        if (neighbors8(im, x, y, n) < 2) continue;  // keep endpoints
        if (!simple_point(im, x, y)) continue;
        im.set(x, y, 0);
        shaved = true;
      }
    }
  }
  return im;
}

double skeleton_length(const BinaryImage& sk) {
  double len = 0.0;
  for (int y = 0; y < sk.h; ++y) {
    for (int x = 0; x < sk.w; ++x) {
      if (!sk.at(x, y)) continue;
      // axis edges counted once: right and down
      if (sk.inside(x + 1, y) && sk.at(x + 1, y)) len += 1.0;
      if (sk.inside(x, y + 1) && sk.at(x, y + 1)) len += 1.0;
      // diagonal edges (down-right and down-left), skipped when the two
      // pixels already share an axis neighbor in the skeleton
      for (int sx : {1, -1}) {
        const int nx = x + sx, ny = y + 1;
        if (!sk.inside(nx, ny) || !sk.at(nx, ny)) continue;
        const bool shared = (sk.inside(nx, y) && sk.at(nx, y)) ||
                            (sk.inside(x, ny) && sk.at(x, ny));
        if (!shared) len += kDiagonal;
      }
    }
  }
  return len;
}

std::vector<std::pair<int, int>> skeleton_endpoints(const BinaryImage& sk) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < sk.h; ++y) {
    for (int x = 0; x < sk.w; ++x) {
      if (!sk.at(x, y)) continue;
      std::uint8_t n[8];
      if (neighbors8(sk, x, y, n) <= 1) out.emplace_back(x, y);
    }
  }
  return out;
}

}  // namespace budtrack
