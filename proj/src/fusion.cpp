#include "budtrack/fusion.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "budtrack/kernels.hpp"

namespace budtrack {

GateWeights fixed_gate(bool has_history, const GateParams& p) {
  const double ws = has_history ? p.alpha_exist : p.alpha_new;
  return {ws, 1.0 - ws};
}

GatingFeatures gating_features(std::size_t j, const ScoreMatrix& m_spatial,
                               const ScoreMatrix& m_tb,
                               const std::vector<double>& vert_devs,
                               bool has_history) {
  if (m_spatial.rows != m_tb.rows)
    throw std::invalid_argument("gating_features: row count mismatch");
  if (m_spatial.rows == 0)
    throw std::invalid_argument("gating_features: empty column");
  GatingFeatures h;
  double ss = 0.0, st = 0.0;
  for (std::size_t i = 0; i < m_spatial.rows; ++i) {
    ss += m_spatial.at(i, j);
    st += m_tb.at(i, j);
  }
  h.mu_spatial = ss / static_cast<double>(m_spatial.rows);
  h.mu_temporal = st / static_cast<double>(m_tb.rows);
  h.has_history = has_history ? 1.0 : 0.0;
  if (has_history && !vert_devs.empty()) {
    double mean = 0.0;
    for (double d : vert_devs) mean += d;
    mean /= static_cast<double>(vert_devs.size());
    double var = 0.0;
    for (double d : vert_devs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(vert_devs.size());  // population
    h.sigma_vert = std::sqrt(var) / kDiagonal;
  }
  return h;
}

std::vector<std::vector<double>> vertical_deviations(
    const ScoreMatrix& m_temporal, double dy_global, const Frame& current,
    const Frame& previous, const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<std::vector<double>> out(groups.size());
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const auto& g = groups[j];
    if (g.empty()) continue;
    for (std::size_t i = 0; i < m_temporal.rows; ++i) {
      std::size_t kstar = g[0];
      for (std::size_t k : g)
        if (m_temporal.at(i, k) > m_temporal.at(i, kstar)) kstar = k;
      out[j].push_back(current.buds[i].cy - previous.buds[kstar].cy - dy_global);
    }
  }
  return out;
}

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

GateWeights learned_gate(const GatingFeatures& h, const GateParams& p) {
  const GateMlp& m = p.mlp;
  const double in[4] = {h.mu_spatial, h.mu_temporal, h.sigma_vert, h.has_history};
  double out = m.b2;
  for (int u = 0; u < m.hidden; ++u) {
    double z = m.b1[static_cast<std::size_t>(u)];
    for (int k = 0; k < 4; ++k)
      z += m.w1[static_cast<std::size_t>(u) * 4 + static_cast<std::size_t>(k)] * in[k];
    out += m.w2[static_cast<std::size_t>(u)] * std::tanh(z);
  }
  double ws = sigmoid(out);
  ws = std::clamp(ws, p.alpha_min, p.alpha_max);
  return {ws, 1.0 - ws};
}

GateMlp init_gate_mlp(int hidden, double alpha_exist, unsigned seed) {
  GateMlp m;
  m.hidden = hidden;
  const std::size_t h = static_cast<std::size_t>(hidden);
  m.w1.assign(h * 4, 0.0);
  m.b1.assign(h, 0.0);
  m.w2.assign(h, 0.0);
  m.b2 = std::log(alpha_exist / (1.0 - alpha_exist));
  if (seed != 0) {
    // tiny symmetry-breaking noise on the hidden layer only; the output
    // stays at the fixed-gate value because w2 is zero
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0.0, 1e-2);
    for (double& w : m.w1) w = n(rng);
    for (double& b : m.b1) b = n(rng);
  }
  return m;
}

void save_gate_checkpoint(const std::filesystem::path& path, const GateParams& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "gate-checkpoint v1\n";
  out << "hidden " << p.mlp.hidden << "\n";
  out << "alpha_min " << p.alpha_min << " alpha_max " << p.alpha_max << "\n";
  out << "unmatched_logit " << p.unmatched_logit << "\n";
  out << "w1";
  for (double w : p.mlp.w1) out << " " << w;
  out << "\nb1";
  for (double b : p.mlp.b1) out << " " << b;
  out << "\nw2";
  for (double w : p.mlp.w2) out << " " << w;
  out << "\nb2 " << p.mlp.b2 << "\n";
}

void load_gate_checkpoint(const std::filesystem::path& path, GateParams& p) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string tag, ver, key;
  in >> tag >> ver;
  if (tag != "gate-checkpoint") throw std::runtime_error("bad gate checkpoint");
  in >> key >> p.mlp.hidden;
  in >> key >> p.alpha_min >> key >> p.alpha_max;
  in >> key >> p.unmatched_logit;
  const std::size_t h = static_cast<std::size_t>(p.mlp.hidden);
  p.mlp.w1.resize(h * 4);
  p.mlp.b1.resize(h);
  p.mlp.w2.resize(h);
  in >> key;
  for (double& w : p.mlp.w1) in >> w;
  in >> key;
  for (double& b : p.mlp.b1) in >> b;
  in >> key;
  for (double& w : p.mlp.w2) in >> w;
  in >> key >> p.mlp.b2;
  if (!in) throw std::runtime_error("truncated gate checkpoint");
}

ScoreMatrix fuse(const ScoreMatrix& m_spatial, const ScoreMatrix& m_tb,
                 const std::vector<GateWeights>& weights, const GateParams& p) {
  if (m_spatial.rows != m_tb.rows || m_spatial.cols != m_tb.cols)
    throw std::invalid_argument("fuse: shape mismatch");
  if (weights.size() != m_spatial.cols)
    throw std::invalid_argument("fuse: one weight pair per column required");
  ScoreMatrix out;
  out.rows = m_spatial.rows;
  out.cols = m_spatial.cols;
  out.has_unmatched = true;
  out.v.assign(out.rows * out.stride(), 0.0);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j)
      out.at(i, j) = weights[j].w_spatial * m_spatial.at(i, j) / p.tau_spatial +
                     weights[j].w_temporal * m_tb.at(i, j) / p.tau_temporal;
    out.at(i, out.cols) = p.unmatched_logit;
  }
  return out;
}

double fusion_loss(const ScoreMatrix& m_fusion, const std::vector<int>& labels) {
  if (labels.size() != m_fusion.rows)
    throw std::invalid_argument("fusion_loss: one label per bud required");
  const std::size_t ncol = m_fusion.stride();
  double loss = 0.0;
  for (std::size_t i = 0; i < m_fusion.rows; ++i) {
    int lab = labels[i];
    if (lab == kUnmatched) {
      if (!m_fusion.has_unmatched)
        throw std::invalid_argument("fusion_loss: unmatched label without column");
      lab = static_cast<int>(m_fusion.cols);
    }
    if (lab < 0 || static_cast<std::size_t>(lab) >= ncol)
      throw std::invalid_argument("fusion_loss: label out of range");
    const std::span<const double> row(m_fusion.v.data() + i * ncol, ncol);
    const double lse = kernels::logsumexp(row);
    loss += lse - row[static_cast<std::size_t>(lab)];
  }
  return loss / static_cast<double>(m_fusion.rows);
}

}  // namespace budtrack
