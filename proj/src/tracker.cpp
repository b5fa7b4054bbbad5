#include "budtrack/tracker.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "budtrack/assign.hpp"

namespace budtrack {

TrackMode parse_track_mode(const std::string& name) {
  if (name == "spatial") return TrackMode::Spatial;
  if (name == "temporal") return TrackMode::Temporal;
  if (name == "fusion-fixed") return TrackMode::FusionFixed;
  if (name == "fusion-learned") return TrackMode::FusionLearned;
  throw std::invalid_argument("unknown tracking mode: " + name);
}

std::string track_mode_name(TrackMode mode) {
  switch (mode) {
    case TrackMode::Spatial: return "spatial";
    case TrackMode::Temporal: return "temporal";
    case TrackMode::FusionFixed: return "fusion-fixed";
    case TrackMode::FusionLearned: return "fusion-learned";
  }
  return "?";
}

namespace {

struct BranchTrack {
  std::vector<TimedPoint> history;  // assigned bud centers over time
  Bud last_bud;
  int order = 0;
  int last_frame = -1;
  double last_day = 0.0;
};

ScoreMatrix scorer_matrix(const ScorerNet& net, const Frame& cur,
                          const std::vector<Bud>& prev_buds,
                          const std::vector<MotionState>& prev_motion,
                          double dt) {
  std::vector<BudFeature> cf, pf;
  for (const Bud& b : cur.buds) cf.push_back(BudFeature::current(b));
  for (std::size_t k = 0; k < prev_buds.size(); ++k)
    pf.push_back(BudFeature::previous(prev_buds[k], prev_motion[k]));
  return net.score(cf, pf, dt, 1.0);
}

}  // namespace

TrackSet track_sequence(const Sequence& seq, const TrackerOptions& opts) {
  if (opts.mode == TrackMode::FusionLearned && opts.gate.mlp.w1.empty())
    throw std::invalid_argument("fusion-learned mode needs a gate checkpoint");

  TrackSet tracks;
  std::map<int, BranchTrack> branch_state;  // keyed by branch id
  double prev_day = 0.0;
  // a branch may skip this many frames and still be re-acquired from its
  // last observation (the motion window spans three frames)
  constexpr int kStaleFrames = 2;

  for (const Frame& f : seq.frames) {
    if (f.buds.empty() || f.branch_points.empty()) {
      prev_day = f.timestamp_days;
      continue;
    }
    const std::size_t n_buds = f.buds.size();
    const std::size_t n_branches = f.branch_points.size();

    const ScoreMatrix m_spatial = spatial_score_matrix(f, opts.spatial);
    const double dt = f.timestamp_days - prev_day;

    // association candidates: last observation of each recently seen branch
    struct Cand {
      Bud bud;
      int order;
      double day;
      const BranchTrack* st;
    };
    std::vector<Cand> cands;
    if (!opts.drop_history)
      for (const auto& [bid, st] : branch_state)
        if (st.last_frame >= 0 && f.index - st.last_frame <= kStaleFrames)
          cands.push_back({st.last_bud, st.order, st.last_day, &st});
    const bool cold = cands.empty();

    std::vector<int> branch_orders;
    for (const BranchPoint& bp : f.branch_points)
      branch_orders.push_back(bp.order);

    ScoreMatrix m_tb;
    std::vector<std::vector<std::size_t>> groups;
    ScoreMatrix m_temporal;
    Frame prev_frame;  // candidate observations, for uplift / gravitropism
    if (!cold) {
      prev_frame.index = f.index - 1;
      prev_frame.timestamp_days = prev_day;
      for (const Cand& c : cands) prev_frame.buds.push_back(c.bud);

      const double dy_global =
          estimate_global_uplift(f, prev_frame, opts.temporal.topk_global);
      std::vector<MotionState> motions(cands.size());
      for (std::size_t k = 0; k < cands.size(); ++k) {
        MotionState m = estimate_motion(cands[k].st->history);
        if (m.vx == 0.0 && m.vy == 0.0 && dt > 0.0)
          m.vy = dy_global / dt;  // upward-growth prior for cold tracks
        motions[k] = m;
      }
      if (opts.scorer) {
        std::vector<Bud> cand_buds;
        for (const Cand& c : cands) cand_buds.push_back(c.bud);
        m_temporal = scorer_matrix(*opts.scorer, f, cand_buds, motions, dt);
      } else {
        m_temporal = ScoreMatrix::zeros(n_buds, cands.size());
        for (std::size_t i = 0; i < n_buds; ++i)
          for (std::size_t k = 0; k < cands.size(); ++k)
            m_temporal.at(i, k) =
                temporal_score(f.buds[i], cands[k].bud, motions[k],
                               f.timestamp_days - cands[k].day, opts.temporal);
      }
      std::vector<int> cand_orders;
      for (const Cand& c : cands) cand_orders.push_back(c.order);
      groups = order_groups(cand_orders, branch_orders);
      m_tb = temporal_to_branch(m_temporal, groups, opts.temporal);
      if (opts.use_gravitropism) {
        m_tb = apply_gravitropism_penalty(m_tb, m_temporal, dy_global, f,
                                          prev_frame, groups, opts.temporal);
      }
    } else {
      groups.assign(n_branches, {});
      m_tb = ScoreMatrix::zeros(n_buds, n_branches);
      for (std::size_t i = 0; i < n_buds; ++i)
        for (std::size_t j = 0; j < n_branches; ++j)
          m_tb.at(i, j) = opts.temporal.beta_absent;
    }

    std::vector<bool> has_history(n_branches);
    for (std::size_t j = 0; j < n_branches; ++j)
      has_history[j] = !groups[j].empty();

    std::vector<GateWeights> weights(n_branches);
    switch (opts.mode) {
      case TrackMode::Spatial:
        for (auto& w : weights) w = {1.0, 0.0};
        break;
      case TrackMode::Temporal:
        // initialization is spatial for every mode; afterwards this
        // baseline leans on temporal evidence alone
        for (auto& w : weights) w = cold ? GateWeights{1.0, 0.0}
                                         : GateWeights{0.0, 1.0};
        break;
      case TrackMode::FusionFixed:
        for (std::size_t j = 0; j < n_branches; ++j)
          weights[j] = fixed_gate(has_history[j], opts.gate);
        break;
      case TrackMode::FusionLearned: {
        std::vector<std::vector<double>> devs(n_branches);
        if (!cold) {
          const double dy_global =
              estimate_global_uplift(f, prev_frame, opts.temporal.topk_global);
          devs = vertical_deviations(m_temporal, dy_global, f, prev_frame,
                                     groups);
        }
        for (std::size_t j = 0; j < n_branches; ++j) {
          const GatingFeatures h =
              gating_features(j, m_spatial, m_tb, devs[j], has_history[j]);
          weights[j] = learned_gate(h, opts.gate);
        }
        break;
      }
    }

    const ScoreMatrix fused = fuse(m_spatial, m_tb, weights, opts.gate);
    const Assignment as = hungarian_assign(fused);

    for (std::size_t i = 0; i < n_buds; ++i) {
      const int j = as.match[i];
      if (j == kUnmatched) continue;
      const BranchPoint& bp = f.branch_points[static_cast<std::size_t>(j)];
      const Bud& b = f.buds[i];
      tracks[bp.id].emplace_back(f.index, b.id);
      auto& st = branch_state[bp.id];
      st.history.push_back({f.timestamp_days, b.cx, b.cy});
      if (st.history.size() > 3)
        st.history.erase(st.history.begin(), st.history.end() - 3);
      st.last_bud = b;
      st.order = bp.order;
      st.last_frame = f.index;
      st.last_day = f.timestamp_days;
    }
    prev_day = f.timestamp_days;
    if (opts.drop_history) branch_state.clear();
  }
  return tracks;
}

std::vector<TrackSet> track_dataset(const std::vector<Sequence>& seqs,
                                    const TrackerOptions& opts) {
  std::vector<TrackSet> out(seqs.size());
  const int threads = std::max(1, opts.threads);
  if (threads == 1 || seqs.size() <= 1) {
    for (std::size_t i = 0; i < seqs.size(); ++i)
      out[i] = track_sequence(seqs[i], opts);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(
      static_cast<std::size_t>(threads), nullptr);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= seqs.size()) break;
          out[i] = track_sequence(seqs[i], opts);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace budtrack
