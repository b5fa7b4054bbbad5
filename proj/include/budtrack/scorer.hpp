#pragma once

#include <filesystem>
#include <vector>

#include "budtrack/autodiff.hpp"
#include "budtrack/fusion.hpp"
#include "budtrack/spatial.hpp"
#include "budtrack/temporal.hpp"
#include "budtrack/types.hpp"

namespace budtrack {

struct NetConfig {
  int embed_dim = 32;
  int heads = 4;
  int ffn_dim = 64;
  double learning_rate = 0.05;
  int epochs = 50;
  std::uint64_t seed = 1;
};

// 10-dim embedding input; the annotation order index is deliberately absent.
// Direction (cd, sd) is the unit velocity direction, zero for still buds.
struct BudFeature {
  double x = 0, y = 0, w = 0, h = 0;
  double vx = 0, vy = 0, ax = 0, ay = 0;
  double cd = 0, sd = 0;

  static BudFeature current(const Bud& b);
  static BudFeature previous(const Bud& b, const MotionState& m);
};
inline constexpr int kFeatureDim = 10;

class ScorerNet {
 public:
  NetConfig cfg;
  std::vector<double> values;  // flat parameter storage

  static ScorerNet init(const NetConfig& cfg);
  std::size_t param_count() const { return values.size(); }

  // Tape forward; parameters are pushed as the first leaves so that
  // parameter i is tape var i. Returns cur x prev logit vars plus the
  // layer-normalized previous-bud value vectors (for the dot-product head).
  struct TapeOutput {
    std::vector<std::vector<ad::Var>> logits;
    std::vector<std::vector<ad::Var>> prev_values;
  };
  TapeOutput forward_tape(ad::Tape& tape, const std::vector<BudFeature>& cur,
                          const std::vector<BudFeature>& prev, double dt,
                          double tau) const;

  // Plain evaluation (runs the tape forward and reads values).
  ScoreMatrix score(const std::vector<BudFeature>& cur,
                    const std::vector<BudFeature>& prev, double dt,
                    double tau) const;
};

void save_scorer_checkpoint(const std::filesystem::path& path,
                            const ScorerNet& net);
ScorerNet load_scorer_checkpoint(const std::filesystem::path& path);

struct TrainLog {
  std::vector<double> epoch_loss;
};

// One supervised frame pair: features, label column per current bud,
// the analytic spatial matrix and branch metadata needed for fusion.
struct TrainPair {
  std::vector<BudFeature> cur;
  std::vector<BudFeature> prev;
  std::vector<std::vector<std::size_t>> groups;  // per branch column
  std::vector<bool> has_history;
  ScoreMatrix spatial;     // buds x branches (constant during training)
  std::vector<int> labels; // branch column or kUnmatched
  double dt = 1.0;
};

// Builds supervised pairs from ground-truth sequences (gt orders and
// gt motion histories; inference never sees these).
std::vector<TrainPair> build_train_pairs(const std::vector<Sequence>& seqs,
                                         const SpatialParams& sp);

// Tape loss for one pair: scorer logits -> order aggregation -> fixed-gate
// fusion -> cross-entropy. Exposed for the gradient checks.
ad::Var pair_loss_tape(ad::Tape& tape, const ScorerNet& net,
                       const TrainPair& pair, const TemporalParams& tp,
                       const GateParams& gp);

// Plain SGD over pairs; throws on divergence (NaN loss).
TrainLog train_scorer(ScorerNet& net, const std::vector<TrainPair>& pairs,
                      const TemporalParams& tp, const GateParams& gp);

// Gate-MLP training against constant analytic evidence matrices.
// Returns the loss curve; gate parameters updated in place.
ad::Var gate_loss_tape(ad::Tape& tape, const GateParams& gp,
                       const TrainPair& pair, const TemporalParams& tp,
                       const TemporalParams& analytic_tp);
TrainLog train_gate(GateParams& gp, const std::vector<TrainPair>& pairs,
                    const TemporalParams& tp, double lr, int epochs);

}  // namespace budtrack
