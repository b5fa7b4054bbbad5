#include "budtrack/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "budtrack/format.hpp"

namespace budtrack {

std::vector<std::string> validate_sequence(const std::vector<Frame>& frames) {
  std::vector<std::string> diags;
  double prev_ts = -1.0;
  bool first = true;
  const double pi = std::acos(-1.0);
  for (const Frame& f : frames) {
    if (!first && f.timestamp_days <= prev_ts)
      diags.push_back(fmt("frame %d: timestamp %g not greater than previous %g",
                          f.index, f.timestamp_days, prev_ts));
    prev_ts = f.timestamp_days;
    first = false;

    std::set<int> orders;
    for (const BranchPoint& bp : f.branch_points) {
      if (bp.x < 0.0 || bp.x > 1.0 || bp.y < 0.0 || bp.y > 1.0)
        diags.push_back(fmt("frame %d: branch point %d position (%g,%g) out of [0,1]",
                            f.index, bp.id, bp.x, bp.y));
      if (bp.theta <= -pi || bp.theta > pi)
        diags.push_back(fmt("frame %d: branch point %d theta %g out of (-pi,pi]",
                            f.index, bp.id, bp.theta));
      if (bp.order < 1)
        diags.push_back(fmt("frame %d: branch point %d order %d < 1",
                            f.index, bp.id, bp.order));
      if (!orders.insert(bp.order).second)
        diags.push_back(fmt("frame %d: duplicate branch order %d",
                            f.index, bp.order));
    }
    for (const Bud& b : f.buds) {
      if (b.cx < 0.0 || b.cx > 1.0 || b.cy < 0.0 || b.cy > 1.0)
        diags.push_back(fmt("frame %d: bud %d center (%g,%g) out of [0,1]",
                            f.index, b.id, b.cx, b.cy));
      if (b.w <= 0.0 || b.w > 1.0 || b.h <= 0.0 || b.h > 1.0)
        diags.push_back(fmt("frame %d: bud %d box (%g,%g) out of (0,1]",
                            f.index, b.id, b.w, b.h));
    }
  }
  return diags;
}

std::array<std::size_t, 3> split_counts(std::size_t n, SplitRatios r) {
  const double sum = r.train + r.val + r.test;
  if (std::abs(sum - 1.0) > 1e-9 || r.train <= 0 || r.val <= 0 || r.test <= 0)
    throw std::invalid_argument("split ratios must be positive and sum to 1");
  if (n < 3) throw std::invalid_argument("sequence shorter than 3 frames");

  std::array<std::size_t, 3> c{};
  c[0] = static_cast<std::size_t>(std::floor(r.train * static_cast<double>(n)));
  c[1] = static_cast<std::size_t>(std::floor(r.val * static_cast<double>(n)));
  c[2] = n - c[0] - c[1];
  // every split non-empty: take from the largest
  for (std::size_t k = 0; k < 3; ++k) {
    while (c[k] == 0) {
      auto big = std::distance(c.begin(), std::max_element(c.begin(), c.end()));
      --c[static_cast<std::size_t>(big)];
      ++c[k];
    }
  }
  return c;
}

Split chronological_split(const std::vector<Frame>& frames, SplitRatios r) {
  const auto c = split_counts(frames.size(), r);
  Split s;
  s.train.assign(frames.begin(), frames.begin() + static_cast<long>(c[0]));
  s.val.assign(frames.begin() + static_cast<long>(c[0]),
               frames.begin() + static_cast<long>(c[0] + c[1]));
  s.test.assign(frames.begin() + static_cast<long>(c[0] + c[1]), frames.end());
  return s;
}

}  // namespace budtrack
