#pragma once

#include <vector>

#include "budtrack/types.hpp"

namespace budtrack {

struct TemporalParams {
  double tau_temporal = 1.2;
  double beta_absent = -6.0;
  double lambda_vert = 6.0;
  double eps_tol = 0.0;
  double sigma_m = 0.05;  // motion-distance scale (normalized units)
  int topk_global = 3;    // topmost buds used for the global uplift estimate
};

struct TimedPoint {
  double t = 0.0;  // days
  double x = 0.0;
  double y = 0.0;
};

// Finite differences over the latest observations of a 3-frame window.
// Fewer than 2 points gives zero velocity; fewer than 3 zero acceleration.
MotionState estimate_motion(const std::vector<TimedPoint>& track, int window = 3);

// Constant-acceleration prediction p + v*dt + 0.5*a*dt^2.
std::pair<double, double> predict_position(const MotionState& m, double dt_days);

// Analytic cross-frame affinity: motion-prediction residual plus a
// log-area-ratio term penalizing box size jumps.
double temporal_score(const Bud& current, const Bud& prev,
                      const MotionState& prev_motion, double dt,
                      const TemporalParams& p);

// buds_t x buds_{t-1}; empty previous frame yields an empty matrix
// (downstream forces spatial fallback).
ScoreMatrix temporal_score_matrix(const Frame& current, const Frame& previous,
                                  const std::vector<MotionState>& prev_motion,
                                  double dt, const TemporalParams& p);

// Previous buds sharing each branch column's order.
std::vector<std::vector<std::size_t>> order_groups(
    const std::vector<int>& prev_bud_orders, const std::vector<int>& branch_orders);

// Order-based aggregation: LSE over the group minus log group size;
// beta_absent for branches without history.
ScoreMatrix temporal_to_branch(const ScoreMatrix& m_temporal,
                               const std::vector<std::vector<std::size_t>>& groups,
                               const TemporalParams& p);

// Mean y-shift of the topk topmost (smallest-y) buds between frames.
double estimate_global_uplift(const Frame& current, const Frame& previous,
                              int topk);

// Subtracts lambda_vert * max(0, |dy_ik* - dy_global| - eps_tol) from each
// entry whose branch has history, where k* is the argmax previous bud of
// the LSE aggregate. Never increases a score.
ScoreMatrix apply_gravitropism_penalty(
    const ScoreMatrix& m_tb, const ScoreMatrix& m_temporal, double dy_global,
    const Frame& current, const Frame& previous,
    const std::vector<std::vector<std::size_t>>& groups, const TemporalParams& p);

}  // namespace budtrack
