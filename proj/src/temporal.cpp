#include "budtrack/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "budtrack/kernels.hpp"

namespace budtrack {

MotionState estimate_motion(const std::vector<TimedPoint>& track, int window) {
  MotionState m;
  if (track.empty()) return m;
  const std::size_t n = track.size();
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(window));
  const TimedPoint* p = track.data() + (n - w);
  for (std::size_t i = 1; i < w; ++i)
    if (p[i].t <= p[i - 1].t)
      throw std::invalid_argument("estimate_motion: timestamps not increasing");

  m.px = p[w - 1].x;
  m.py = p[w - 1].y;
  if (w >= 2) {
    const double dt1 = p[w - 1].t - p[w - 2].t;
    m.vx = (p[w - 1].x - p[w - 2].x) / dt1;
    m.vy = (p[w - 1].y - p[w - 2].y) / dt1;
    if (w >= 3) {
      const double dt0 = p[w - 2].t - p[w - 3].t;
      const double vx0 = (p[w - 2].x - p[w - 3].x) / dt0;
      const double vy0 = (p[w - 2].y - p[w - 3].y) / dt0;
      m.ax = (m.vx - vx0) / dt1;
      m.ay = (m.vy - vy0) / dt1;
    }
  }
  return m;
}

std::pair<double, double> predict_position(const MotionState& m, double dt_days) {
  return {m.px + m.vx * dt_days + 0.5 * m.ax * dt_days * dt_days,
          m.py + m.vy * dt_days + 0.5 * m.ay * dt_days * dt_days};
}

double temporal_score(const Bud& current, const Bud& prev,
                      const MotionState& prev_motion, double dt,
                      const TemporalParams& p) {
  const auto [px, py] = predict_position(prev_motion, dt);
  const double d = std::hypot(current.cx - px, current.cy - py);
  const double rd = d / (p.sigma_m * kDiagonal);
  const double area_ratio = (current.w * current.h) / (prev.w * prev.h);
  return -0.5 * rd * rd - std::abs(std::log(area_ratio));
}

ScoreMatrix temporal_score_matrix(const Frame& current, const Frame& previous,
                                  const std::vector<MotionState>& prev_motion,
                                  double dt, const TemporalParams& p) {
  ScoreMatrix m = ScoreMatrix::zeros(current.buds.size(), previous.buds.size());
  if (m.empty()) return m;
  for (std::size_t i = 0; i < current.buds.size(); ++i)
    for (std::size_t k = 0; k < previous.buds.size(); ++k)
      m.at(i, k) = temporal_score(current.buds[i], previous.buds[k],
                                  prev_motion[k], dt, p);
  return m;
}

std::vector<std::vector<std::size_t>> order_groups(
    const std::vector<int>& prev_bud_orders,
    const std::vector<int>& branch_orders) {
  std::vector<std::vector<std::size_t>> groups(branch_orders.size());
  for (std::size_t j = 0; j < branch_orders.size(); ++j)
    for (std::size_t k = 0; k < prev_bud_orders.size(); ++k)
      if (prev_bud_orders[k] == branch_orders[j]) groups[j].push_back(k);
  return groups;
}

ScoreMatrix temporal_to_branch(
    const ScoreMatrix& m_temporal,
    const std::vector<std::vector<std::size_t>>& groups,
    const TemporalParams& p) {
  ScoreMatrix out = ScoreMatrix::zeros(m_temporal.rows, groups.size());
  std::vector<double> buf;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < groups.size(); ++j) {
      const auto& g = groups[j];
      if (g.empty()) {
        out.at(i, j) = p.beta_absent;
        continue;
      }
      buf.clear();
      for (std::size_t k : g) buf.push_back(m_temporal.at(i, k));
      out.at(i, j) =
          kernels::logsumexp(buf) - std::log(static_cast<double>(g.size()));
    }
  }
  return out;
}

double estimate_global_uplift(const Frame& current, const Frame& previous,
                              int topk) {
  auto top_mean = [topk](const std::vector<Bud>& buds) {
    std::vector<double> ys;
    ys.reserve(buds.size());
    for (const Bud& b : buds) ys.push_back(b.cy);
    const std::size_t k =
        std::min<std::size_t>(ys.size(), static_cast<std::size_t>(std::max(topk, 1)));
    std::partial_sort(ys.begin(), ys.begin() + static_cast<long>(k), ys.end());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += ys[i];
    return s / static_cast<double>(k);
  };
  return top_mean(current.buds) - top_mean(previous.buds);
}

ScoreMatrix apply_gravitropism_penalty(
    const ScoreMatrix& m_tb, const ScoreMatrix& m_temporal, double dy_global,
    const Frame& current, const Frame& previous,
    const std::vector<std::vector<std::size_t>>& groups,
    const TemporalParams& p) {
  ScoreMatrix out = m_tb;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      const auto& g = groups[j];
      if (g.empty()) continue;
      std::size_t kstar = g[0];
      for (std::size_t k : g)
        if (m_temporal.at(i, k) > m_temporal.at(i, kstar)) kstar = k;
      const double dy = current.buds[i].cy - previous.buds[kstar].cy;
      const double dev = std::abs(dy - dy_global) - p.eps_tol;
      if (dev > 0.0) out.at(i, j) -= p.lambda_vert * dev;
    }
  }
  return out;
}

}  // namespace budtrack
