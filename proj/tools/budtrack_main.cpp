#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "budtrack/config.hpp"
#include "budtrack/core.hpp"
#include "budtrack/io.hpp"
#include "budtrack/metrics.hpp"
#include "budtrack/recon.hpp"
#include "budtrack/scorer.hpp"
#include "budtrack/sim.hpp"
#include "budtrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace budtrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool strict_schema = false;
};

AppConfig effective_config(const GlobalOpts& g) {
  AppConfig cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path);
  if (g.seed) {
    cfg.sim.seed = *g.seed;
    cfg.net.seed = *g.seed;
  }
  return cfg;
}

std::string plant_stem(int index) { return "seq_" + std::to_string(index); }

std::vector<fs::path> sorted_files(const fs::path& dir,
                                   const std::string& prefix) {
  if (!fs::is_directory(dir))
    throw std::invalid_argument("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && e.path().extension() == ".json")
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw std::invalid_argument("no " + prefix + "*.json files in " +
                                dir.string());
  return out;
}

int seq_index(const fs::path& p, const std::string& prefix) {
  const std::string stem = p.stem().string();
  return std::stoi(stem.substr(prefix.size()));
}

int cmd_generate(const GlobalOpts& g, const std::string& out_dir) {
  const AppConfig cfg = effective_config(g);
  const auto rendered = generate_dataset(cfg.sim);
  fs::create_directories(out_dir);

  nlohmann::ordered_json manifest;
  manifest["seed"] = cfg.sim.seed;
  manifest["n_plants"] = cfg.sim.n_plants;
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  auto emit = [&](const std::string& name, const std::string& text) {
    io::write_file(fs::path(out_dir) / name, text);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(io::fnv1a(text)));
    files[name] = buf;
  };

  for (std::size_t i = 0; i < rendered.size(); ++i) {
    const auto& r = rendered[i];
    const auto diags = validate_sequence(r.seq.frames);
    if (!diags.empty())
      throw std::invalid_argument("generated sequence invalid: " + diags[0]);
    const std::string stem = plant_stem(static_cast<int>(i));
    emit(stem + ".json", io::serialize_sequence(r.seq));
    emit("gt_tracks_" + std::to_string(i) + ".json",
         io::serialize_tracks(r.gt_tracks));
    emit("polylines_" + std::to_string(i) + ".json",
         io::serialize_polylines(r.final_polylines));
  }
  manifest["files"] = files;
  io::write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "generated " << rendered.size() << " sequences in " << out_dir
            << "\n";
  return kExitOk;
}

std::vector<Sequence> load_sequences(const fs::path& dir, bool strict) {
  std::vector<Sequence> seqs;
  for (const fs::path& p : sorted_files(dir, "seq_"))
    seqs.push_back(io::parse_sequence(io::read_file(p), strict));
  return seqs;
}

int cmd_track(const GlobalOpts& g, const std::string& data_dir,
              const std::string& out_dir, const std::string& mode,
              const std::string& gate_ckpt, const std::string& scorer_ckpt) {
  AppConfig cfg = effective_config(g);
  if (!mode.empty()) cfg.mode = mode;
  TrackerOptions opts = tracker_options(cfg);
  opts.threads = g.threads;
  if (!gate_ckpt.empty()) load_gate_checkpoint(gate_ckpt, opts.gate);
  ScorerNet net;
  if (!scorer_ckpt.empty()) {
    net = load_scorer_checkpoint(scorer_ckpt);
    opts.scorer = &net;
  }

  const std::vector<Sequence> seqs = load_sequences(data_dir, g.strict_schema);
  const std::vector<TrackSet> results = track_dataset(seqs, opts);
  fs::create_directories(out_dir);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    io::write_tracks(fs::path(out_dir) / ("tracks_" + std::to_string(i) + ".json"),
                     results[i]);
    for (const auto& [id, entries] : results[i]) assigned += entries.size();
  }
  std::cout << "tracked " << seqs.size() << " sequences (" << assigned
            << " assignments) with mode " << track_mode_name(opts.mode) << "\n";
  return kExitOk;
}

std::vector<Sequence> train_portion(const std::vector<Sequence>& seqs,
                                    SplitRatios ratios) {
  std::vector<Sequence> out;
  for (const Sequence& s : seqs) {
    Sequence t = s;
    t.frames = chronological_split(s.frames, ratios).train;
    out.push_back(std::move(t));
  }
  return out;
}

int cmd_train(const GlobalOpts& g, const std::string& data_dir,
              const std::string& out_dir, const std::string& target) {
  const AppConfig cfg = effective_config(g);
  const std::vector<Sequence> seqs = load_sequences(data_dir, g.strict_schema);
  const std::vector<Sequence> train_seqs = train_portion(seqs, cfg.split);
  const std::vector<TrainPair> pairs = build_train_pairs(train_seqs, cfg.spatial);
  fs::create_directories(out_dir);

  TrainLog log;
  if (target == "gate") {
    GateParams gp = cfg.gate;
    gp.mlp = init_gate_mlp(cfg.gate.mlp.hidden, gp.alpha_exist,
                           static_cast<unsigned>(cfg.net.seed));
    log = train_gate(gp, pairs, cfg.temporal, cfg.gate_lr, cfg.gate_epochs);
    save_gate_checkpoint(fs::path(out_dir) / "gate.ckpt", gp);
  } else if (target == "scorer") {
    ScorerNet net = ScorerNet::init(cfg.net);
    log = train_scorer(net, pairs, cfg.temporal, cfg.gate);
    save_scorer_checkpoint(fs::path(out_dir) / "scorer.ckpt", net);
  } else {
    throw std::invalid_argument("train target must be gate or scorer");
  }

  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
    csv += std::to_string(e) + "," + std::to_string(log.epoch_loss[e]) + "\n";
  io::write_file(fs::path(out_dir) / (target + "_loss.csv"), csv);
  std::cout << "trained " << target << " on " << pairs.size() << " pairs; final loss "
            << (log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()) << "\n";
  return kExitOk;
}

// pred branch curve: attach point followed by the track's bud centers
io::Polylines predicted_polylines(const Sequence& seq, const TrackSet& tracks) {
  std::map<int, Point> attach;
  for (const Frame& f : seq.frames)
    for (const BranchPoint& bp : f.branch_points)
      attach[bp.id] = {bp.x, bp.y};
  std::map<std::pair<int, int>, Point> centers;
  for (const Frame& f : seq.frames)
    for (const Bud& b : f.buds) centers[{f.index, b.id}] = {b.cx, b.cy};

  io::Polylines out;
  for (const auto& [id, entries] : tracks) {
    auto a = attach.find(id);
    if (a == attach.end()) continue;
    std::vector<Point> pts;
    for (const auto& e : entries) {
      auto c = centers.find(e);
      if (c != centers.end()) pts.push_back(c->second);
    }
    if (pts.empty()) continue;
    const Polyline curve = fit_branch_curve(a->second, pts);
    out[id].assign(curve.begin(), curve.end());
  }
  return out;
}

TrackSet filter_tracks(const TrackSet& t, int lo, int hi) {
  TrackSet out;
  for (const auto& [id, entries] : t)
    for (const auto& [frame, bud] : entries)
      if (frame >= lo && frame <= hi) out[id].emplace_back(frame, bud);
  return out;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& data_dir,
                 const std::string& tracks_dir, const std::string& out_csv,
                 const std::string& phase) {
  const AppConfig cfg = effective_config(g);
  const std::vector<fs::path> seq_files = sorted_files(data_dir, "seq_");
  std::vector<MetricRow> rows;

  for (const fs::path& sp : seq_files) {
    const int idx = seq_index(sp, "seq_");
    const Sequence seq = io::parse_sequence(io::read_file(sp), g.strict_schema);
    const TrackSet gt = io::read_tracks(
        fs::path(data_dir) / ("gt_tracks_" + std::to_string(idx) + ".json"));
    const TrackSet pred = io::read_tracks(
        fs::path(tracks_dir) / ("tracks_" + std::to_string(idx) + ".json"));

    int lo = 0, hi = seq.frames.empty() ? 0 : seq.frames.back().index;
    if (phase != "all") {
      const Split split = chronological_split(seq.frames, cfg.split);
      const std::vector<Frame>* sel = nullptr;
      if (phase == "train") sel = &split.train;
      else if (phase == "val") sel = &split.val;
      else if (phase == "test") sel = &split.test;
      else throw std::invalid_argument("phase must be train|val|test|all");
      if (sel->empty()) continue;
      lo = sel->front().index;
      hi = sel->back().index;
    }
    const TrackSet gt_f = filter_tracks(gt, lo, hi);
    const TrackSet pred_f = filter_tracks(pred, lo, hi);

    const TrackObs gt_obs = track_observations(gt_f, seq.frames);
    const TrackObs pred_obs = track_observations(pred_f, seq.frames);
    const MotResult mot = mot_metrics(gt_obs, pred_obs, cfg.match_radius);

    auto push = [&](const std::string& metric, double value, int count) {
      rows.push_back({seq.plant_id, seq.view_deg, phase, metric, value, count});
    };
    push("bma", bma(gt_f, pred_f), std::max(1, mot.gt_total));
    push("mota", mot.mota, std::max(1, mot.gt_total));
    push("idf1", mot.idf1, std::max(1, mot.gt_total));
    push("mt", mot.mt, std::max(1, mot.n_gt_tracks));
    push("ml", mot.ml, std::max(1, mot.n_gt_tracks));
    push("fp", mot.fp, 1);
    push("fn", mot.fn, 1);
    push("idsw", mot.idsw, 1);

    // bud localization error over frames where gt and pred carry the
    // same identity
    std::vector<std::pair<double, double>> ble_gt, ble_pred;
    for (const auto& [tid, gobs] : gt_obs) {
      const auto it = pred_obs.find(tid);
      if (it == pred_obs.end()) continue;
      for (const auto& [f, x, y] : gobs)
        for (const auto& [pf, px, py] : it->second)
          if (pf == f) {
            ble_gt.emplace_back(x, y);
            ble_pred.emplace_back(px, py);
          }
    }
    if (!ble_gt.empty())
      push("ble", ble(ble_gt, ble_pred), static_cast<int>(ble_gt.size()));

    // reconstruction metrics against the ground-truth final polylines
    const fs::path poly_path =
        fs::path(data_dir) / ("polylines_" + std::to_string(idx) + ".json");
    if (fs::exists(poly_path) && phase == "all") {
      const io::Polylines gt_poly = io::parse_polylines(io::read_file(poly_path));
      const io::Polylines pred_poly = predicted_polylines(seq, pred);
      std::map<int, double> gt_len, pred_len;
      std::vector<Point> gt_tips, pred_tips;
      for (const auto& [id, pts] : gt_poly) {
        Polyline pl(pts.begin(), pts.end());
        gt_len[id] = polyline_length(pl);
        if (!pl.empty()) gt_tips.push_back(pl.back());
      }
      for (const auto& [id, pts] : pred_poly) {
        Polyline pl(pts.begin(), pts.end());
        pred_len[id] = polyline_length(pl);
        if (!pl.empty()) pred_tips.push_back(pl.back());
      }
      double liou_acc = 0.0;
      int liou_n = 0;
      for (const auto& [id, gl] : gt_len) {
        auto it = pred_len.find(id);
        if (it == pred_len.end()) continue;
        liou_acc += liou(gl, it->second);
        ++liou_n;
      }
      if (liou_n > 0) push("liou", liou_acc / liou_n, liou_n);
      push("btc", btc(gt_tips, pred_tips), 1);
    }
  }
  write_report_csv(out_csv, rows);
  std::cout << "wrote " << rows.size() << " metric rows to " << out_csv << "\n";
  return kExitOk;
}

int cmd_report(const std::string& in_csv) {
  const std::vector<MetricRow> rows = read_report_csv(in_csv);
  std::vector<std::string> names;
  for (const MetricRow& r : rows)
    if (std::find(names.begin(), names.end(), r.metric) == names.end())
      names.push_back(r.metric);
  for (const std::string& m : names) {
    std::printf("%-8s %10.6f\n", m.c_str(), aggregate(rows, m));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branch identity tracking toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "INI config file");
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "seed override");
  app.add_option("--threads", g.threads, "worker threads");
  app.add_flag("--strict-schema", g.strict_schema,
               "reject unknown keys in dataset files");

  auto* gen = app.add_subcommand("generate", "synthesize a dataset");
  std::string gen_out = "data";
  gen->add_option("--out", gen_out, "output directory");

  auto* trk = app.add_subcommand("track", "run the tracker");
  std::string trk_data, trk_out = "tracks", trk_mode, trk_gate, trk_scorer;
  trk->add_option("--data", trk_data, "dataset directory")->required();
  trk->add_option("--out", trk_out, "output directory");
  trk->add_option("--mode", trk_mode,
                  "spatial | temporal | fusion-fixed | fusion-learned");
  trk->add_option("--gate-checkpoint", trk_gate, "learned gate checkpoint");
  trk->add_option("--scorer-checkpoint", trk_scorer, "scorer checkpoint");

  auto* trn = app.add_subcommand("train", "fit the gate or the scorer");
  std::string trn_data, trn_out = "train_out", trn_target = "gate";
  trn->add_option("--data", trn_data, "dataset directory")->required();
  trn->add_option("--out", trn_out, "output directory");
  trn->add_option("--target", trn_target, "gate | scorer");

  auto* ev = app.add_subcommand("evaluate", "score tracks against ground truth");
  std::string ev_data, ev_tracks, ev_out = "report.csv", ev_phase = "all";
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--tracks", ev_tracks, "tracks directory")->required();
  ev->add_option("--out", ev_out, "report CSV path");
  ev->add_option("--phase", ev_phase, "train | val | test | all");

  auto* rep = app.add_subcommand("report", "aggregate a report CSV");
  std::string rep_in;
  rep->add_option("--in", rep_in, "report CSV path")->required();

  // global flags may also follow the subcommand
  for (CLI::App* sub : {gen, trk, trn, ev, rep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (g.threads < 1) {
    std::cerr << "error: --threads must be >= 1\n";
    return kExitUsage;
  }
  if (*seed_opt) g.seed = seed_val;

  try {
    if (gen->parsed()) return cmd_generate(g, gen_out);
    if (trk->parsed())
      return cmd_track(g, trk_data, trk_out, trk_mode, trk_gate, trk_scorer);
    if (trn->parsed()) return cmd_train(g, trn_data, trn_out, trn_target);
    if (ev->parsed()) return cmd_evaluate(g, ev_data, ev_tracks, ev_out, ev_phase);
    if (rep->parsed()) return cmd_report(rep_in);
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
