#include "budtrack/scorer.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace budtrack {

using ad::Tape;
using ad::Var;

BudFeature BudFeature::current(const Bud& b) {
  BudFeature f;
  f.x = b.cx;
  f.y = b.cy;
  f.w = b.w;
  f.h = b.h;
  return f;
}

BudFeature BudFeature::previous(const Bud& b, const MotionState& m) {
  BudFeature f;
  f.x = b.cx;
  f.y = b.cy;
  f.w = b.w;
  f.h = b.h;
  f.vx = m.vx;
  f.vy = m.vy;
  f.ax = m.ax;
  f.ay = m.ay;
  const double speed = std::hypot(m.vx, m.vy);
  if (speed > 1e-12) {
    f.cd = m.vx / speed;
    f.sd = m.vy / speed;
  }
  return f;
}

namespace {

// flat parameter layout
struct Layout {
  int E, F;
  std::size_t curr_w1, curr_b1, curr_w2, curr_b2;
  std::size_t prev_w1, prev_b1, prev_w2, prev_b2;
  std::size_t role_curr, role_prev, time_w, time_b;
  std::size_t wq, wk, wv, wo;
  std::size_t ln_g[4], ln_b[4];
  std::size_t ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  std::size_t total;

  explicit Layout(const NetConfig& cfg) : E(cfg.embed_dim), F(cfg.ffn_dim) {
    const std::size_t e = static_cast<std::size_t>(E);
    const std::size_t f = static_cast<std::size_t>(F);
    const std::size_t d = static_cast<std::size_t>(kFeatureDim);
    std::size_t off = 0;
    auto take = [&off](std::size_t n) {
      const std::size_t o = off;
      off += n;
      return o;
    };
    curr_w1 = take(e * d);
    curr_b1 = take(e);
    curr_w2 = take(e * e);
    curr_b2 = take(e);
    prev_w1 = take(e * d);
    prev_b1 = take(e);
    prev_w2 = take(e * e);
    prev_b2 = take(e);
    role_curr = take(e);
    role_prev = take(e);
    time_w = take(e);
    time_b = take(e);
    wq = take(e * e);
    wk = take(e * e);
    wv = take(e * e);
    wo = take(e * e);
    for (int i = 0; i < 4; ++i) {
      ln_g[i] = take(e);
      ln_b[i] = take(e);
    }
    ffn_w1 = take(f * e);
    ffn_b1 = take(f);
    ffn_w2 = take(e * f);
    ffn_b2 = take(e);
    total = off;
  }
};

constexpr double kLnEps = 1e-5;

std::vector<Var> layer_norm(Tape& t, const std::vector<Var>& x,
                            std::size_t gain_off, std::size_t bias_off) {
  const double n = static_cast<double>(x.size());
  Var mean = t.mul_const(t.sum(x), 1.0 / n);
  std::vector<Var> centered(x.size());
  Var var_acc = t.constant(0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    centered[i] = t.sub(x[i], mean);
    var_acc = t.add(var_acc, t.mul(centered[i], centered[i]));
  }
  Var variance = t.add_const(t.mul_const(var_acc, 1.0 / n), kLnEps);
  // 1/sqrt via exp(-0.5 log)
  Var inv_std = t.exp(t.mul_const(t.log(variance), -0.5));
  std::vector<Var> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Var g = static_cast<Var>(gain_off + i);
    const Var b = static_cast<Var>(bias_off + i);
    out[i] = t.add(t.mul(g, t.mul(centered[i], inv_std)), b);
  }
  return out;
}

std::vector<Var> linear(Tape& t, const std::vector<Var>& x, std::size_t w_off,
                        std::size_t b_off, int out_dim) {
  std::vector<Var> out(static_cast<std::size_t>(out_dim));
  const std::size_t in = x.size();
  for (std::size_t r = 0; r < static_cast<std::size_t>(out_dim); ++r) {
    Var acc = static_cast<Var>(b_off + r);
    for (std::size_t c = 0; c < in; ++c)
      acc = t.add(acc, t.mul(static_cast<Var>(w_off + r * in + c), x[c]));
    out[r] = acc;
  }
  return out;
}

std::vector<Var> mlp2(Tape& t, const std::vector<Var>& x, std::size_t w1,
                      std::size_t b1, std::size_t w2, std::size_t b2, int dim) {
  std::vector<Var> h = linear(t, x, w1, b1, dim);
  for (Var& v : h) v = t.tanh(v);
  return linear(t, h, w2, b2, dim);
}

std::vector<Var> feature_vars(Tape& t, const BudFeature& f) {
  return {t.constant(f.x),  t.constant(f.y),  t.constant(f.w),
          t.constant(f.h),  t.constant(f.vx), t.constant(f.vy),
          t.constant(f.ax), t.constant(f.ay), t.constant(f.cd),
          t.constant(f.sd)};
}

}  // namespace

ScorerNet ScorerNet::init(const NetConfig& cfg) {
  if (cfg.embed_dim % cfg.heads != 0)
    throw std::invalid_argument("embed_dim must be divisible by heads");
  ScorerNet net;
  net.cfg = cfg;
  const Layout L(cfg);
  net.values.assign(L.total, 0.0);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> n(0.0, 0.3 / std::sqrt(cfg.embed_dim));
  auto fill = [&](std::size_t off, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) net.values[off + i] = n(rng);
  };
  const std::size_t e = static_cast<std::size_t>(cfg.embed_dim);
  const std::size_t f = static_cast<std::size_t>(cfg.ffn_dim);
  const std::size_t d = static_cast<std::size_t>(kFeatureDim);
  fill(L.curr_w1, e * d);
  fill(L.curr_w2, e * e);
  fill(L.prev_w1, e * d);
  fill(L.prev_w2, e * e);
  fill(L.role_curr, e);
  fill(L.role_prev, e);
  fill(L.time_w, e);
  fill(L.wq, e * e);
  fill(L.wk, e * e);
  fill(L.wv, e * e);
  fill(L.wo, e * e);
  fill(L.ffn_w1, f * e);
  fill(L.ffn_w2, e * f);
  for (int i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < e; ++j) net.values[L.ln_g[i] + j] = 1.0;
  return net;
}

ScorerNet::TapeOutput ScorerNet::forward_tape(Tape& t,
                                              const std::vector<BudFeature>& cur,
                                              const std::vector<BudFeature>& prev,
                                              double dt, double tau) const {
  const Layout L(cfg);
  for (double v : values) t.leaf(v);  // param i == var i

  const int E = cfg.embed_dim;
  const int H = cfg.heads;
  const int hd = E / H;
  const std::size_t e = static_cast<std::size_t>(E);

  // shared time-interval embedding
  std::vector<Var> time_emb(e);
  for (std::size_t i = 0; i < e; ++i)
    time_emb[i] = t.add(t.mul_const(static_cast<Var>(L.time_w + i), dt),
                        static_cast<Var>(L.time_b + i));

  auto embed = [&](const BudFeature& f, bool is_cur) {
    std::vector<Var> x = feature_vars(t, f);
    std::vector<Var> emb =
        is_cur ? mlp2(t, x, L.curr_w1, L.curr_b1, L.curr_w2, L.curr_b2, E)
               : mlp2(t, x, L.prev_w1, L.prev_b1, L.prev_w2, L.prev_b2, E);
    const std::size_t role = is_cur ? L.role_curr : L.role_prev;
    for (std::size_t i = 0; i < e; ++i)
      emb[i] = t.add(emb[i], t.add(static_cast<Var>(role + i), time_emb[i]));
    return emb;
  };

  std::vector<std::vector<Var>> q_in, kv_in;
  for (const BudFeature& f : cur)
    q_in.push_back(layer_norm(t, embed(f, true), L.ln_g[0], L.ln_b[0]));
  for (const BudFeature& f : prev)
    kv_in.push_back(layer_norm(t, embed(f, false), L.ln_g[1], L.ln_b[1]));

  // bias-free q/k/v projections
  const Var zero = t.constant(0.0);
  auto project = [&](const std::vector<Var>& x, std::size_t w_off) {
    std::vector<Var> out(e);
    for (std::size_t r = 0; r < e; ++r) {
      Var acc = zero;
      for (std::size_t c = 0; c < e; ++c)
        acc = t.add(acc, t.mul(static_cast<Var>(w_off + r * e + c), x[c]));
      out[r] = acc;
    }
    return out;
  };
  std::vector<std::vector<Var>> qp, kp, vp;
  for (const auto& q : q_in) qp.push_back(project(q, L.wq));
  for (const auto& k : kv_in) kp.push_back(project(k, L.wk));
  for (const auto& v : kv_in) vp.push_back(project(v, L.wv));

  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  TapeOutput out;
  out.prev_values = kv_in;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    std::vector<Var> heads_cat(e, zero);
    for (int h = 0; h < H; ++h) {
      const std::size_t off = static_cast<std::size_t>(h * hd);
      std::vector<Var> scores(prev.size());
      for (std::size_t k = 0; k < prev.size(); ++k) {
        Var acc = zero;
        for (int dd = 0; dd < hd; ++dd)
          acc = t.add(acc, t.mul(qp[i][off + static_cast<std::size_t>(dd)],
                                 kp[k][off + static_cast<std::size_t>(dd)]));
        scores[k] = t.mul_const(acc, scale);
      }
      const Var lse = t.logsumexp(scores);
      std::vector<Var> weights(prev.size());
      for (std::size_t k = 0; k < prev.size(); ++k)
        weights[k] = t.exp(t.sub(scores[k], lse));
      for (int dd = 0; dd < hd; ++dd) {
        Var acc = zero;
        for (std::size_t k = 0; k < prev.size(); ++k)
          acc = t.add(acc,
                      t.mul(weights[k], vp[k][off + static_cast<std::size_t>(dd)]));
        heads_cat[off + static_cast<std::size_t>(dd)] = acc;
      }
    }
    std::vector<Var> attn = project(heads_cat, L.wo);
    for (std::size_t d2 = 0; d2 < e; ++d2)
      attn[d2] = t.add(attn[d2], q_in[i][d2]);  // residual
    std::vector<Var> z = layer_norm(t, attn, L.ln_g[2], L.ln_b[2]);

    std::vector<Var> fh = linear(t, z, L.ffn_w1, L.ffn_b1, cfg.ffn_dim);
    for (Var& v : fh) v = t.tanh(v);
    std::vector<Var> fo = linear(t, fh, L.ffn_w2, L.ffn_b2, E);
    for (std::size_t d2 = 0; d2 < e; ++d2) fo[d2] = t.add(fo[d2], z[d2]);
    std::vector<Var> refined = layer_norm(t, fo, L.ln_g[3], L.ln_b[3]);

    std::vector<Var> row(prev.size());
    for (std::size_t k = 0; k < prev.size(); ++k)
      row[k] = t.mul_const(t.dot(refined, kv_in[k]), 1.0 / tau);
    out.logits.push_back(std::move(row));
  }
  return out;
}

ScoreMatrix ScorerNet::score(const std::vector<BudFeature>& cur,
                             const std::vector<BudFeature>& prev, double dt,
                             double tau) const {
  ScoreMatrix m = ScoreMatrix::zeros(cur.size(), prev.size());
  if (m.empty()) return m;
  Tape t;
  const TapeOutput out = forward_tape(t, cur, prev, dt, tau);
  for (std::size_t i = 0; i < cur.size(); ++i)
    for (std::size_t k = 0; k < prev.size(); ++k)
      m.at(i, k) = t.val(out.logits[i][k]);
  return m;
}

void save_scorer_checkpoint(const std::filesystem::path& path,
                            const ScorerNet& net) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "scorer-checkpoint v1\n";
  out << "embed_dim " << net.cfg.embed_dim << " heads " << net.cfg.heads
      << " ffn_dim " << net.cfg.ffn_dim << " seed " << net.cfg.seed << "\n";
  out << "params " << net.values.size() << "\n";
  for (double v : net.values) out << v << "\n";
}

ScorerNet load_scorer_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string tag, ver, key;
  in >> tag >> ver;
  if (tag != "scorer-checkpoint")
    throw std::runtime_error("bad scorer checkpoint");
  ScorerNet net;
  in >> key >> net.cfg.embed_dim >> key >> net.cfg.heads >> key >>
      net.cfg.ffn_dim >> key >> net.cfg.seed;
  std::size_t n = 0;
  in >> key >> n;
  net.values.resize(n);
  for (double& v : net.values) in >> v;
  if (!in) throw std::runtime_error("truncated scorer checkpoint");
  const Layout L(net.cfg);
  if (L.total != n) throw std::runtime_error("scorer checkpoint shape mismatch");
  return net;
}

std::vector<TrainPair> build_train_pairs(const std::vector<Sequence>& seqs,
                                         const SpatialParams& sp) {
  std::vector<TrainPair> pairs;
  for (const Sequence& seq : seqs) {
    // gt motion histories keyed by order
    std::map<int, std::vector<TimedPoint>> history;
    for (std::size_t fi = 0; fi < seq.frames.size(); ++fi) {
      const Frame& f = seq.frames[fi];
      if (fi > 0) {
        const Frame& prev_f = seq.frames[fi - 1];
        if (!f.buds.empty() && !prev_f.buds.empty() &&
            !f.branch_points.empty()) {
          TrainPair p;
          p.dt = f.timestamp_days - prev_f.timestamp_days;
          for (const Bud& b : f.buds) p.cur.push_back(BudFeature::current(b));
          std::vector<int> prev_orders;
          for (const Bud& b : prev_f.buds) {
            auto it = history.find(b.gt_order);
            MotionState m;
            if (it != history.end()) m = estimate_motion(it->second);
            p.prev.push_back(BudFeature::previous(b, m));
            prev_orders.push_back(b.gt_order);
          }
          std::vector<int> branch_orders;
          for (const BranchPoint& bp : f.branch_points)
            branch_orders.push_back(bp.order);
          p.groups = order_groups(prev_orders, branch_orders);
          for (const auto& g : p.groups) p.has_history.push_back(!g.empty());
          p.spatial = spatial_score_matrix(f, sp);
          for (const Bud& b : f.buds) {
            int label = kUnmatched;
            for (std::size_t j = 0; j < branch_orders.size(); ++j)
              if (branch_orders[j] == b.gt_order) label = static_cast<int>(j);
            p.labels.push_back(label);
          }
          pairs.push_back(std::move(p));
        }
      }
      for (const Bud& b : f.buds)
        history[b.gt_order].push_back({f.timestamp_days, b.cx, b.cy});
    }
  }
  return pairs;
}

namespace {

// order aggregation + fixed-gate fusion + cross-entropy, on the tape
Var fusion_ce_tape(Tape& t, const std::vector<std::vector<Var>>& tb,
                   const TrainPair& pair, const GateParams& gp,
                   const std::vector<Var>* gate_ws) {
  const std::size_t rows = pair.cur.size();
  const std::size_t cols = pair.groups.size();
  Var loss = t.constant(0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<Var> row(cols + 1);
    for (std::size_t j = 0; j < cols; ++j) {
      Var ws;
      if (gate_ws) {
        ws = (*gate_ws)[j];
      } else {
        ws = t.constant(fixed_gate(pair.has_history[j], gp).w_spatial);
      }
      const Var wt = t.sub(t.constant(1.0), ws);
      const Var sp = t.mul_const(t.constant(pair.spatial.at(i, j)),
                                 1.0 / gp.tau_spatial);
      const Var tbv = t.mul_const(tb[i][j], 1.0 / gp.tau_temporal);
      row[j] = t.add(t.mul(ws, sp), t.mul(wt, tbv));
    }
    row[cols] = t.constant(gp.unmatched_logit);
    const Var lse = t.logsumexp(row);
    int lab = pair.labels[i];
    if (lab == kUnmatched) lab = static_cast<int>(cols);
    loss = t.add(loss, t.sub(lse, row[static_cast<std::size_t>(lab)]));
  }
  return t.mul_const(loss, 1.0 / static_cast<double>(rows));
}

std::vector<std::vector<Var>> aggregate_tape(
    Tape& t, const std::vector<std::vector<Var>>& logits,
    const TrainPair& pair, const TemporalParams& tp) {
  std::vector<std::vector<Var>> tb(pair.cur.size());
  for (std::size_t i = 0; i < pair.cur.size(); ++i) {
    tb[i].resize(pair.groups.size());
    for (std::size_t j = 0; j < pair.groups.size(); ++j) {
      const auto& g = pair.groups[j];
      if (g.empty()) {
        tb[i][j] = t.constant(tp.beta_absent);
        continue;
      }
      std::vector<Var> xs;
      for (std::size_t k : g) xs.push_back(logits[i][k]);
      tb[i][j] = t.add_const(t.logsumexp(xs),
                             -std::log(static_cast<double>(g.size())));
    }
  }
  return tb;
}

}  // namespace

Var pair_loss_tape(Tape& t, const ScorerNet& net, const TrainPair& pair,
                   const TemporalParams& tp, const GateParams& gp) {
  const auto out = net.forward_tape(t, pair.cur, pair.prev, pair.dt, 1.0);
  const auto tb = aggregate_tape(t, out.logits, pair, tp);
  return fusion_ce_tape(t, tb, pair, gp, nullptr);
}

TrainLog train_scorer(ScorerNet& net, const std::vector<TrainPair>& pairs,
                      const TemporalParams& tp, const GateParams& gp) {
  TrainLog log;
  if (pairs.empty()) throw std::invalid_argument("train split is empty");
  for (int epoch = 0; epoch < net.cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const TrainPair& pair : pairs) {
      Tape t;
      const Var loss = pair_loss_tape(t, net, pair, tp, gp);
      const double lv = t.val(loss);
      if (!std::isfinite(lv))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      epoch_loss += lv;
      t.backward(loss);
      for (std::size_t i = 0; i < net.values.size(); ++i)
        net.values[i] -= net.cfg.learning_rate * t.grad(static_cast<Var>(i));
    }
    log.epoch_loss.push_back(epoch_loss / static_cast<double>(pairs.size()));
  }
  return log;
}

namespace {

MotionState feature_motion(const BudFeature& f) {
  MotionState m;
  m.px = f.x;
  m.py = f.y;
  m.vx = f.vx;
  m.vy = f.vy;
  m.ax = f.ax;
  m.ay = f.ay;
  return m;
}

ScoreMatrix analytic_temporal(const TrainPair& pair, const TemporalParams& tp) {
  ScoreMatrix m = ScoreMatrix::zeros(pair.cur.size(), pair.prev.size());
  for (std::size_t i = 0; i < pair.cur.size(); ++i) {
    for (std::size_t k = 0; k < pair.prev.size(); ++k) {
      const BudFeature& c = pair.cur[i];
      const BudFeature& p = pair.prev[k];
      const MotionState ms = feature_motion(p);
      const auto [px, py] = predict_position(ms, pair.dt);
      const double d = std::hypot(c.x - px, c.y - py);
      const double rd = d / (tp.sigma_m * kDiagonal);
      const double ar = (c.w * c.h) / (p.w * p.h);
      m.at(i, k) = -0.5 * rd * rd - std::abs(std::log(ar));
    }
  }
  return m;
}

std::size_t gate_param_count(const GateMlp& m) {
  return static_cast<std::size_t>(m.hidden) * 4 +
         static_cast<std::size_t>(m.hidden) * 2 + 1;
}

// pushes gate params as the first tape leaves; returns per-column w_spatial
std::vector<Var> gate_forward_tape(Tape& t, const GateParams& gp,
                                   const std::vector<GatingFeatures>& feats) {
  const GateMlp& m = gp.mlp;
  const std::size_t h = static_cast<std::size_t>(m.hidden);
  for (double v : m.w1) t.leaf(v);
  for (double v : m.b1) t.leaf(v);
  for (double v : m.w2) t.leaf(v);
  t.leaf(m.b2);
  const std::size_t off_b1 = h * 4, off_w2 = h * 5, off_b2 = h * 6;

  std::vector<Var> out;
  for (const GatingFeatures& hf : feats) {
    const double in[4] = {hf.mu_spatial, hf.mu_temporal, hf.sigma_vert,
                          hf.has_history};
    Var acc = static_cast<Var>(off_b2);
    for (std::size_t u = 0; u < h; ++u) {
      Var z = static_cast<Var>(off_b1 + u);
      for (std::size_t k = 0; k < 4; ++k)
        z = t.add(z, t.mul_const(static_cast<Var>(u * 4 + k), in[k]));
      acc = t.add(acc, t.mul(static_cast<Var>(off_w2 + u), t.tanh(z)));
    }
    out.push_back(t.clamp(t.sigmoid(acc), gp.alpha_min, gp.alpha_max));
  }
  return out;
}

}  // namespace

ad::Var gate_loss_tape(Tape& t, const GateParams& gp, const TrainPair& pair,
                       const TemporalParams& tp, const TemporalParams&) {
  const ScoreMatrix mt = analytic_temporal(pair, tp);
  const auto tb_const = temporal_to_branch(mt, pair.groups, tp);

  std::vector<GatingFeatures> feats;
  for (std::size_t j = 0; j < pair.groups.size(); ++j)
    feats.push_back(gating_features(j, pair.spatial, tb_const, {},
                                    pair.has_history[j]));
  const std::vector<Var> ws = gate_forward_tape(t, gp, feats);

  std::vector<std::vector<Var>> tb(pair.cur.size());
  for (std::size_t i = 0; i < pair.cur.size(); ++i) {
    tb[i].resize(pair.groups.size());
    for (std::size_t j = 0; j < pair.groups.size(); ++j)
      tb[i][j] = t.constant(tb_const.at(i, j));
  }
  return fusion_ce_tape(t, tb, pair, gp, &ws);
}

TrainLog train_gate(GateParams& gp, const std::vector<TrainPair>& pairs,
                    const TemporalParams& tp, double lr, int epochs) {
  TrainLog log;
  if (pairs.empty()) throw std::invalid_argument("train split is empty");
  const std::size_t h = static_cast<std::size_t>(gp.mlp.hidden);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const TrainPair& pair : pairs) {
      Tape t;
      const Var loss = gate_loss_tape(t, gp, pair, tp, tp);
      const double lv = t.val(loss);
      if (!std::isfinite(lv))
        throw std::runtime_error("gate training diverged at epoch " +
                                 std::to_string(epoch));
      epoch_loss += lv;
      t.backward(loss);
      std::size_t idx = 0;
      for (double& w : gp.mlp.w1) w -= lr * t.grad(static_cast<Var>(idx++));
      for (double& b : gp.mlp.b1) b -= lr * t.grad(static_cast<Var>(idx++));
      for (double& w : gp.mlp.w2) w -= lr * t.grad(static_cast<Var>(idx++));
      gp.mlp.b2 -= lr * t.grad(static_cast<Var>(idx));
      (void)h;
    }
    log.epoch_loss.push_back(epoch_loss / static_cast<double>(pairs.size()));
  }
  return log;
}

}  // namespace budtrack
