#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <vector>

#include "budtrack/scorer.hpp"
#include "budtrack/sim.hpp"

using namespace budtrack;

namespace {

NetConfig tiny_config() {
  NetConfig c;
  c.embed_dim = 8;
  c.heads = 2;
  c.ffn_dim = 16;
  c.seed = 3;
  return c;
}

std::size_t expected_params(const NetConfig& c) {
  const std::size_t E = static_cast<std::size_t>(c.embed_dim);
  const std::size_t F = static_cast<std::size_t>(c.ffn_dim);
  const std::size_t D = static_cast<std::size_t>(kFeatureDim);
  return 2 * (E * D + E + E * E + E)  // two embedding mlps
         + 2 * E                     // role vectors
         + 2 * E                     // time embedding
         + 4 * E * E                 // q, k, v, o projections
         + 8 * E                     // four layer norms
         + F * E + F + E * F + E;    // ffn
}

std::vector<BudFeature> some_buds(int n, double shift) {
  std::vector<BudFeature> out;
  for (int i = 0; i < n; ++i) {
    BudFeature f;
    f.x = 0.3 + 0.1 * i + shift;
    f.y = 0.7 - 0.05 * i;
    f.w = 0.02 + 0.002 * i;
    f.h = 0.025;
    f.vx = 0.003 * i;
    f.vy = -0.01;
    f.ax = 0.0002;
    f.ay = -0.0004 * i;
    const double s = std::hypot(f.vx, f.vy);
    if (s > 0) {
      f.cd = f.vx / s;
      f.sd = f.vy / s;
    }
    out.push_back(f);
  }
  return out;
}

// independent long-double forward pass mirroring the documented layout:
// [curr mlp | prev mlp | roles | time | q k v o | ln1..ln4 | ffn]
struct Ref {
  using ld = long double;
  const NetConfig& cfg;
  const std::vector<double>& p;
  std::size_t off = 0;
  std::size_t curr_w1, curr_b1, curr_w2, curr_b2;
  std::size_t prev_w1, prev_b1, prev_w2, prev_b2;
  std::size_t role_c, role_p, time_w, time_b;
  std::size_t wq, wk, wv, wo, ln_g[4], ln_b[4];
  std::size_t fw1, fb1, fw2, fb2;

  Ref(const NetConfig& c, const std::vector<double>& values) : cfg(c), p(values) {
    const std::size_t E = static_cast<std::size_t>(c.embed_dim);
    const std::size_t F = static_cast<std::size_t>(c.ffn_dim);
    const std::size_t D = static_cast<std::size_t>(kFeatureDim);
    auto take = [this](std::size_t n) { auto o = off; off += n; return o; };
    curr_w1 = take(E * D); curr_b1 = take(E); curr_w2 = take(E * E); curr_b2 = take(E);
    prev_w1 = take(E * D); prev_b1 = take(E); prev_w2 = take(E * E); prev_b2 = take(E);
    role_c = take(E); role_p = take(E); time_w = take(E); time_b = take(E);
    wq = take(E * E); wk = take(E * E); wv = take(E * E); wo = take(E * E);
    for (int i = 0; i < 4; ++i) { ln_g[i] = take(E); ln_b[i] = take(E); }
    fw1 = take(F * E); fb1 = take(F); fw2 = take(E * F); fb2 = take(E);
    REQUIRE(off == p.size());
  }

  std::vector<ld> matvec(std::size_t w, std::size_t rows,
                         const std::vector<ld>& x) const {
    std::vector<ld> out(rows, 0.0L);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < x.size(); ++c)
        out[r] += static_cast<ld>(p[w + r * x.size() + c]) * x[c];
    return out;
  }

  std::vector<ld> ln(std::size_t gi, std::size_t bi,
                     const std::vector<ld>& x) const {
    ld mean = 0;
    for (ld v : x) mean += v;
    mean /= static_cast<ld>(x.size());
    ld var = 0;
    for (ld v : x) var += (v - mean) * (v - mean);
    var = var / static_cast<ld>(x.size()) + 1e-5L;
    const ld inv = 1.0L / std::sqrt(static_cast<double>(var));
    std::vector<ld> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = static_cast<ld>(p[gi + i]) * (x[i] - mean) * inv +
               static_cast<ld>(p[bi + i]);
    return out;
  }

  std::vector<ld> embed(const BudFeature& f, bool is_cur, double dt) const {
    const std::vector<ld> x{f.x, f.y, f.w, f.h, f.vx,
                            f.vy, f.ax, f.ay, f.cd, f.sd};
    const std::size_t E = static_cast<std::size_t>(cfg.embed_dim);
    const std::size_t w1 = is_cur ? curr_w1 : prev_w1;
    const std::size_t b1 = is_cur ? curr_b1 : prev_b1;
    const std::size_t w2 = is_cur ? curr_w2 : prev_w2;
    const std::size_t b2 = is_cur ? curr_b2 : prev_b2;
    std::vector<ld> h = matvec(w1, E, x);
    for (std::size_t i = 0; i < E; ++i)
      h[i] = std::tanh(static_cast<double>(h[i] + static_cast<ld>(p[b1 + i])));
    std::vector<ld> e = matvec(w2, E, h);
    const std::size_t role = is_cur ? role_c : role_p;
    for (std::size_t i = 0; i < E; ++i)
      e[i] += static_cast<ld>(p[b2 + i]) + static_cast<ld>(p[role + i]) +
              static_cast<ld>(p[time_w + i]) * static_cast<ld>(dt) +
              static_cast<ld>(p[time_b + i]);
    return e;
  }

  std::vector<std::vector<ld>> forward(const std::vector<BudFeature>& cur,
                                       const std::vector<BudFeature>& prev,
                                       double dt, double tau) const {
    const std::size_t E = static_cast<std::size_t>(cfg.embed_dim);
    const std::size_t F = static_cast<std::size_t>(cfg.ffn_dim);
    const int H = cfg.heads;
    const std::size_t hd = E / static_cast<std::size_t>(H);
    std::vector<std::vector<ld>> q_in, kv_in, qp, kp, vp;
    for (const auto& f : cur) q_in.push_back(ln(ln_g[0], ln_b[0], embed(f, true, dt)));
    for (const auto& f : prev)
      kv_in.push_back(ln(ln_g[1], ln_b[1], embed(f, false, dt)));
    for (const auto& q : q_in) qp.push_back(matvec(wq, E, q));
    for (const auto& k : kv_in) kp.push_back(matvec(wk, E, k));
    for (const auto& v : kv_in) vp.push_back(matvec(wv, E, v));
    const ld scale = 1.0L / std::sqrt(static_cast<double>(hd));

    std::vector<std::vector<ld>> logits;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      std::vector<ld> cat(E, 0.0L);
      for (int h = 0; h < H; ++h) {
        const std::size_t o = static_cast<std::size_t>(h) * hd;
        std::vector<ld> sc(prev.size());
        ld mx = -1e30L;
        for (std::size_t k = 0; k < prev.size(); ++k) {
          ld acc = 0;
          for (std::size_t d = 0; d < hd; ++d) acc += qp[i][o + d] * kp[k][o + d];
          sc[k] = acc * scale;
          mx = std::max(mx, sc[k]);
        }
        ld z = 0;
        for (ld& s : sc) {
          s = std::exp(static_cast<double>(s - mx));
          z += s;
        }
        for (std::size_t k = 0; k < prev.size(); ++k)
          for (std::size_t d = 0; d < hd; ++d)
            cat[o + d] += (sc[k] / z) * vp[k][o + d];
      }
      std::vector<ld> attn = matvec(wo, E, cat);
      for (std::size_t d = 0; d < E; ++d) attn[d] += q_in[i][d];
      std::vector<ld> z3 = ln(ln_g[2], ln_b[2], attn);
      std::vector<ld> fh = matvec(fw1, F, z3);
      for (std::size_t d = 0; d < F; ++d)
        fh[d] = std::tanh(static_cast<double>(fh[d] + static_cast<ld>(p[fb1 + d])));
      std::vector<ld> fo = matvec(fw2, E, fh);
      for (std::size_t d = 0; d < E; ++d)
        fo[d] += static_cast<ld>(p[fb2 + d]) + z3[d];
      std::vector<ld> refined = ln(ln_g[3], ln_b[3], fo);
      std::vector<ld> row(prev.size(), 0.0L);
      for (std::size_t k = 0; k < prev.size(); ++k) {
        ld acc = 0;
        for (std::size_t d = 0; d < E; ++d) acc += refined[d] * kv_in[k][d];
        row[k] = acc / static_cast<ld>(tau);
      }
      logits.push_back(std::move(row));
    }
    return logits;
  }
};

}  // namespace

TEST_CASE("initialization is deterministic and sized as documented") {
  const NetConfig c = tiny_config();
  const ScorerNet a = ScorerNet::init(c);
  const ScorerNet b = ScorerNet::init(c);
  CHECK(a.param_count() == expected_params(c));
  CHECK(a.values == b.values);
  NetConfig c2 = c;
  c2.seed = 4;
  CHECK(ScorerNet::init(c2).values != a.values);
  NetConfig bad = c;
  bad.heads = 3;
  CHECK_THROWS_AS(ScorerNet::init(bad), std::invalid_argument);
}

TEST_CASE("default configuration also matches the size formula") {
  const NetConfig c;
  CHECK(ScorerNet::init(c).param_count() == expected_params(c));
}

TEST_CASE("forward pass matches an extended-precision reference") {
  const ScorerNet net = ScorerNet::init(tiny_config());
  const auto cur = some_buds(3, 0.01);
  const auto prev = some_buds(4, 0.0);
  const ScoreMatrix m = net.score(cur, prev, 2.0, 1.2);
  const Ref ref(net.cfg, net.values);
  const auto r = ref.forward(cur, prev, 2.0, 1.2);
  for (std::size_t i = 0; i < cur.size(); ++i)
    for (std::size_t k = 0; k < prev.size(); ++k)
      CHECK(m.at(i, k) ==
            doctest::Approx(static_cast<double>(r[i][k])).epsilon(1e-10));
}

TEST_CASE("logits are permutation-equivariant") {
  const ScorerNet net = ScorerNet::init(tiny_config());
  const auto cur = some_buds(3, 0.02);
  const auto prev = some_buds(3, 0.0);
  const ScoreMatrix base = net.score(cur, prev, 1.0, 1.0);

  std::vector<BudFeature> prev_r(prev.rbegin(), prev.rend());
  const ScoreMatrix pr = net.score(cur, prev_r, 1.0, 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(pr.at(i, k) == doctest::Approx(base.at(i, 2 - k)).epsilon(1e-12));

  std::vector<BudFeature> cur_r(cur.rbegin(), cur.rend());
  const ScoreMatrix cr = net.score(cur_r, prev, 1.0, 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(cr.at(i, k) == doctest::Approx(base.at(2 - i, k)).epsilon(1e-12));
}

TEST_CASE("checkpoints round-trip exactly") {
  const ScorerNet net = ScorerNet::init(tiny_config());
  const auto path = std::filesystem::temp_directory_path() / "bt_scorer.ckpt";
  save_scorer_checkpoint(path, net);
  const ScorerNet back = load_scorer_checkpoint(path);
  CHECK(back.cfg.embed_dim == net.cfg.embed_dim);
  CHECK(back.cfg.heads == net.cfg.heads);
  CHECK(back.values == net.values);
  std::filesystem::remove(path);
}

TEST_CASE("training pairs carry correct supervision on clean data") {
  SimConfig c;
  c.seed = 5;
  c.n_plants = 2;
  c.frames_per_plant = 6;
  c.occlusion_prob = 0.0;
  std::vector<Sequence> seqs;
  std::vector<RenderedSequence> data = generate_dataset(c);
  for (const auto& r : data) seqs.push_back(r.seq);
  const auto pairs = build_train_pairs(seqs, SpatialParams{});
  REQUIRE(!pairs.empty());
  for (const TrainPair& p : pairs) {
    CHECK(p.cur.size() == p.labels.size());
    CHECK(p.groups.size() == p.spatial.cols);
    CHECK(p.spatial.rows == p.cur.size());
    CHECK(p.dt > 0.0);
    // clean data: every bud has a labeled branch; branches first observed
    // in this frame legitimately have no history yet
    for (const int lab : p.labels) REQUIRE(lab != kUnmatched);
  }
}

TEST_CASE("tape gradients agree with finite differences") {
  NetConfig c = tiny_config();
  const ScorerNet net0 = ScorerNet::init(c);

  SimConfig sc;
  sc.seed = 9;
  sc.n_plants = 1;
  sc.frames_per_plant = 5;
  std::vector<Sequence> seqs{generate_dataset(sc)[0].seq};
  const auto pairs = build_train_pairs(seqs, SpatialParams{});
  REQUIRE(!pairs.empty());
  const TrainPair& pair = pairs.back();
  const TemporalParams tp;
  const GateParams gp;

  ad::Tape tape;
  const ad::Var loss = pair_loss_tape(tape, net0, pair, tp, gp);
  tape.backward(loss);

  const double h = 1e-5;
  for (std::size_t i = 0; i < net0.param_count(); i += 97) {
    ScorerNet plus = net0, minus = net0;
    plus.values[i] += h;
    minus.values[i] -= h;
    ad::Tape tp1, tp2;
    const double fd = (tp1.val(pair_loss_tape(tp1, plus, pair, tp, gp)) -
                       tp2.val(pair_loss_tape(tp2, minus, pair, tp, gp))) /
                      (2 * h);
    const double an = tape.grad(static_cast<ad::Var>(i));
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
    CHECK(std::abs(fd - an) / denom < 1e-4);
  }
}

TEST_CASE("scorer training reduces the loss") {
  SimConfig sc;
  sc.seed = 21;
  sc.n_plants = 2;
  sc.frames_per_plant = 5;
  std::vector<Sequence> seqs;
  for (const auto& r : generate_dataset(sc)) seqs.push_back(r.seq);
  auto pairs = build_train_pairs(seqs, SpatialParams{});
  pairs.resize(std::min<std::size_t>(pairs.size(), 4));

  NetConfig nc = tiny_config();
  nc.epochs = 5;
  nc.learning_rate = 0.02;
  ScorerNet net = ScorerNet::init(nc);
  const TrainLog log = train_scorer(net, pairs, TemporalParams{}, GateParams{});
  REQUIRE(log.epoch_loss.size() == 5);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
  for (const double l : log.epoch_loss) CHECK(std::isfinite(l));
  CHECK_THROWS_AS(train_scorer(net, {}, TemporalParams{}, GateParams{}),
                  std::invalid_argument);
}

TEST_CASE("gate training runs and keeps the loss finite") {
  SimConfig sc;
  sc.seed = 22;
  sc.n_plants = 2;
  sc.frames_per_plant = 6;
  sc.entanglement = 0.6;
  sc.occlusion_prob = 0.1;
  std::vector<Sequence> seqs;
  for (const auto& r : generate_dataset(sc)) seqs.push_back(r.seq);
  const auto pairs = build_train_pairs(seqs, SpatialParams{});
  GateParams gp;
  gp.mlp = init_gate_mlp(8, gp.alpha_exist, 1);
  const TrainLog log = train_gate(gp, pairs, TemporalParams{}, 0.1, 8);
  REQUIRE(log.epoch_loss.size() == 8);
  for (const double l : log.epoch_loss) CHECK(std::isfinite(l));
  CHECK(log.epoch_loss.back() <= log.epoch_loss.front() + 1e-9);
}

TEST_CASE("gate gradients agree with finite differences") {
  SimConfig sc;
  sc.seed = 23;
  sc.n_plants = 1;
  sc.frames_per_plant = 5;
  std::vector<Sequence> seqs{generate_dataset(sc)[0].seq};
  const auto pairs = build_train_pairs(seqs, SpatialParams{});
  REQUIRE(!pairs.empty());
  const TrainPair& pair = pairs.front();
  GateParams gp;
  gp.mlp = init_gate_mlp(4, gp.alpha_exist, 7);
  const TemporalParams tp;

  ad::Tape tape;
  const ad::Var loss = gate_loss_tape(tape, gp, pair, tp, tp);
  tape.backward(loss);

  const std::size_t n_params = 4 * 4 + 4 + 4 + 1;
  auto eval = [&](const GateParams& g) {
    ad::Tape t;
    return t.val(gate_loss_tape(t, g, pair, tp, tp));
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < n_params; ++i) {
    GateParams plus = gp, minus = gp;
    auto bump = [i](GateParams& g, double d) {
      std::size_t idx = i;
      if (idx < g.mlp.w1.size()) { g.mlp.w1[idx] += d; return; }
      idx -= g.mlp.w1.size();
      if (idx < g.mlp.b1.size()) { g.mlp.b1[idx] += d; return; }
      idx -= g.mlp.b1.size();
      if (idx < g.mlp.w2.size()) { g.mlp.w2[idx] += d; return; }
      g.mlp.b2 += d;
    };
    bump(plus, h);
    bump(minus, -h);
    const double fd = (eval(plus) - eval(minus)) / (2 * h);
    const double an = tape.grad(static_cast<ad::Var>(i));
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
    CHECK(std::abs(fd - an) / denom < 1e-4);
  }
}
