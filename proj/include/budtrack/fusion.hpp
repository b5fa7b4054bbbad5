#pragma once

#include <filesystem>
#include <vector>

#include "budtrack/types.hpp"

namespace budtrack {

struct GateMlp {
  // 4 -> hidden (tanh) -> 1 (sigmoid)
  int hidden = 8;
  std::vector<double> w1;  // hidden x 4, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
};

struct GateParams {
  double alpha_new = 0.7;
  double alpha_exist = 0.35;
  double alpha_min = 0.05;
  double alpha_max = 0.95;
  double tau_spatial = 1.0;
  double tau_temporal = 1.2;
  double unmatched_logit = -6.0;
  GateMlp mlp;
};

struct GatingFeatures {
  double mu_spatial = 0.0;
  double mu_temporal = 0.0;
  double sigma_vert = 0.0;
  double has_history = 0.0;  // 0 or 1
};

struct GateWeights {
  double w_spatial = 0.0;
  double w_temporal = 0.0;  // always 1 - w_spatial
};

GateWeights fixed_gate(bool has_history, const GateParams& p);

// Evidence statistics for branch column j. vert_devs holds the per-bud
// deviations dy_ik* - dy_global for this branch's order group (empty when
// the branch has no history); sigma_vert is their population std / sqrt(2).
GatingFeatures gating_features(std::size_t j, const ScoreMatrix& m_spatial,
                               const ScoreMatrix& m_tb,
                               const std::vector<double>& vert_devs,
                               bool has_history);

// Per-bud vertical deviations for every branch column, for gating_features.
std::vector<std::vector<double>> vertical_deviations(
    const ScoreMatrix& m_temporal, double dy_global, const Frame& current,
    const Frame& previous, const std::vector<std::vector<std::size_t>>& groups);

// sigmoid(MLP(h)) clamped to [alpha_min, alpha_max].
GateWeights learned_gate(const GatingFeatures& h, const GateParams& p);

// MLP initialized to replicate the fixed gate for existing branches:
// bias = logit(alpha_exist), all weights zero.
GateMlp init_gate_mlp(int hidden, double alpha_exist, unsigned seed = 0);

void save_gate_checkpoint(const std::filesystem::path& path, const GateParams& p);
void load_gate_checkpoint(const std::filesystem::path& path, GateParams& p);

// M_fusion[i][j] = w_s_j * M_spatial[i][j]/tau_spatial
//                + (1-w_s_j) * M_tb[i][j]/tau_temporal,
// with an appended unmatched column of constant unmatched_logit.
ScoreMatrix fuse(const ScoreMatrix& m_spatial, const ScoreMatrix& m_tb,
                 const std::vector<GateWeights>& weights, const GateParams& p);

// Mean row-softmax cross-entropy; labels are branch columns or kUnmatched
// (mapped to the appended column).
double fusion_loss(const ScoreMatrix& m_fusion, const std::vector<int>& labels);

}  // namespace budtrack
