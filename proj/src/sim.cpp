#include "budtrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace budtrack {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

const double kPi = std::acos(-1.0);

// logistic elongation, normalized to start at zero length
double branch_height(const BranchParams& b, double u) {
  const double M = b.max_height;
  const double k = 4.0 * b.elongation_rate / M;
  const double u0 = 5.0;
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double s0 = sig(-k * u0);
  return M * (sig(k * (u - u0)) - s0) / (1.0 - s0);
}

double lateral_ramp(const BranchParams& b, double u) {
  return std::min(u / b.lateral_days, 1.0);
}

struct TipState {
  double x, y, w, h;
};

TipState tip_at(const BranchParams& b, double day) {
  const double u = day - b.emergence_day;
  const double hgt = branch_height(b, u);
  const double phase = 2.0 * kPi * b.sway_freq * u + b.sway_phase;
  // sway displacement grows with the branch; a zero-length branch cannot sway
  const double sway = b.sway_amp * (hgt / b.max_height);
  TipState t;
  t.x = b.attach_x + b.target_dx * lateral_ramp(b, u) + sway * std::sin(phase);
  t.y = b.attach_y - hgt + 0.3 * sway * std::cos(phase);
  t.x = std::clamp(t.x, 0.01, 0.99);
  t.y = std::clamp(t.y, 0.01, 0.99);
  const double grow = 1.0 + b.bud_growth * u;
  t.w = std::min(b.bud_w0 * grow, 0.05);
  t.h = std::min(b.bud_h0 * grow, 0.06);
  return t;
}

}  // namespace

void validate_config(const SimConfig& c) {
  if (c.entanglement < 0.0 || c.entanglement > 1.0)
    throw std::invalid_argument("entanglement must be in [0,1]");
  if (c.occlusion_prob < 0.0 || c.occlusion_prob > 1.0)
    throw std::invalid_argument("occlusion_prob must be in [0,1]");
  if (c.n_plants < 1 || c.frames_per_plant < 1)
    throw std::invalid_argument("need at least one plant and one frame");
  if (c.min_branches < 1 || c.max_branches < c.min_branches)
    throw std::invalid_argument("bad branch count range");
  if (c.dt_days <= 0.0) throw std::invalid_argument("dt_days must be > 0");
  if (c.raster_size < 16) throw std::invalid_argument("raster_size must be >= 16");
}

PlantModel generate_plant(const SimConfig& config, std::uint64_t plant_seed) {
  validate_config(config);
  std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64(plant_seed)));
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  PlantModel model;
  model.n_branches =
      config.min_branches +
      static_cast<int>(rng() % static_cast<std::uint64_t>(
                                   config.max_branches - config.min_branches + 1));
  if (model.n_branches == 0) throw std::invalid_argument("n_branches is zero");

  const int n = model.n_branches;
  const int n_initial = std::max(2, (n + 1) / 2);
  const double eps = config.entanglement;

  std::vector<double> lane(static_cast<std::size_t>(n));
  for (int o = 0; o < n; ++o) {
    const double side = (o % 2 == 0) ? -1.0 : 1.0;
    lane[static_cast<std::size_t>(o)] = side * (0.10 + 0.04 * (o / 2));
  }

  for (int o = 0; o < n; ++o) {
    BranchParams b;
    b.order = o + 1;
    b.attach_x = 0.5;
    b.attach_y = 0.86 - 0.035 * o;  // bottom-up: higher order, smaller y
    // pairwise lane exchange drives crossing/entanglement
    const int partner = (o % 2 == 0) ? std::min(o + 1, n - 1) : o - 1;
    b.target_dx = (1.0 - eps) * lane[static_cast<std::size_t>(o)] +
                  eps * lane[static_cast<std::size_t>(partner)];
    b.elongation_rate = config.base_up_rate * (0.9 + 0.2 * u01(rng));
    b.lateral_days = 8.0 + 6.0 * u01(rng);
    b.max_height = b.attach_y - 0.12;
    b.theta0 = std::atan2(-b.elongation_rate, b.target_dx / b.lateral_days);
    b.sway_amp = config.sway_amp * (0.5 + u01(rng));
    b.sway_freq = 0.1 + 0.2 * u01(rng);
    b.sway_phase = 2.0 * kPi * u01(rng);
    b.bud_w0 = 0.012 + 0.006 * u01(rng);
    b.bud_h0 = 0.016 + 0.008 * u01(rng);
    b.emergence_day =
        (o < n_initial)
            ? 0.0
            : config.emerge_window_lo +
                  (config.emerge_window_hi - config.emerge_window_lo) * u01(rng);
    model.branches.push_back(b);
  }
  return model;
}

Polyline branch_polyline(const BranchParams& b, double day, int samples) {
  const double u = day - b.emergence_day;
  if (u < 0.0) return {};
  const TipState tip = tip_at(b, day);
  Polyline out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const double f = static_cast<double>(s) / (samples - 1);
    out.emplace_back(b.attach_x + f * (tip.x - b.attach_x),
                     b.attach_y + f * (tip.y - b.attach_y));
  }
  return out;
}

RenderedSequence render_sequence(const PlantModel& model, const SimConfig& config,
                                 int plant_index) {
  validate_config(config);
  std::mt19937_64 rng(splitmix64(config.seed ^
                                 splitmix64(0x5eedull + static_cast<std::uint64_t>(
                                                            plant_index))));
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  RenderedSequence out;
  out.seq.plant_id = "plant" + std::to_string(plant_index);
  out.seq.view_deg = 0;

  // timestamps first so occlusion draws stay aligned across configs
  std::vector<double> days(static_cast<std::size_t>(config.frames_per_plant));
  double t = 0.0;
  for (int i = 0; i < config.frames_per_plant; ++i) {
    if (i > 0) {
      double dt = config.dt_days;
      if (config.dt_jitter > 0.0) dt += config.dt_jitter * (2.0 * u01(rng) - 1.0);
      t += std::max(dt, 0.1);
    }
    days[static_cast<std::size_t>(i)] = t;
  }

  int next_bud_id = 0;
  std::vector<int> first_seen(model.branches.size(), -1);
  for (int i = 0; i < config.frames_per_plant; ++i) {
    const double day = days[static_cast<std::size_t>(i)];
    Frame f;
    f.index = i;
    f.timestamp_days = day;
    for (std::size_t bi = 0; bi < model.branches.size(); ++bi) {
      const BranchParams& b = model.branches[bi];
      if (day < b.emergence_day) continue;
      if (first_seen[bi] < 0) first_seen[bi] = i;
      BranchPoint bp;
      bp.id = static_cast<int>(bi);
      bp.order = b.order;
      bp.x = b.attach_x;
      bp.y = b.attach_y;
      bp.theta = b.theta0;
      bp.first_seen = first_seen[bi];
      f.branch_points.push_back(bp);

      const bool occluded = u01(rng) < config.occlusion_prob;
      if (!occluded) {
        const TipState tip = tip_at(b, day);
        Bud bud;
        bud.id = next_bud_id++;
        bud.gt_order = b.order;
        bud.cx = tip.x;
        bud.cy = tip.y;
        bud.w = tip.w;
        bud.h = tip.h;
        bud.frame = i;
        f.buds.push_back(bud);
        out.gt_tracks[static_cast<int>(bi)].emplace_back(i, bud.id);
      }
      if (config.render_masks) {
        const Polyline poly = branch_polyline(b, day);
        const BinaryImage img =
            rasterize(poly, config.raster_size, config.stroke_px);
        f.masks.push_back(io::rle_encode(img.px, img.w, img.h));
      }
    }
    out.seq.frames.push_back(std::move(f));
  }

  const double last_day = days.back();
  for (std::size_t bi = 0; bi < model.branches.size(); ++bi)
    if (last_day >= model.branches[bi].emergence_day)
      out.final_polylines[static_cast<int>(bi)] =
          branch_polyline(model.branches[bi], last_day);
  return out;
}

std::vector<RenderedSequence> generate_dataset(const SimConfig& config) {
  validate_config(config);
  std::vector<RenderedSequence> out;
  out.reserve(static_cast<std::size_t>(config.n_plants));
  for (int p = 0; p < config.n_plants; ++p) {
    const PlantModel model =
        generate_plant(config, static_cast<std::uint64_t>(p));
    out.push_back(render_sequence(model, config, p));
  }
  return out;
}

PerturbMode parse_perturb_mode(const std::string& name) {
  if (name == "swap-adjacent-buds") return PerturbMode::SwapAdjacentBuds;
  if (name == "drop-history") return PerturbMode::DropHistory;
  if (name == "freeze-growth") return PerturbMode::FreezeGrowth;
  throw std::invalid_argument("unknown perturbation mode: " + name);
}

std::vector<Frame> perturb_for_ablation(const std::vector<Frame>& frames,
                                        PerturbMode mode) {
  std::vector<Frame> out = frames;
  switch (mode) {
    case PerturbMode::SwapAdjacentBuds: {
      for (std::size_t fi = out.size() / 2; fi < out.size(); ++fi) {
        auto& buds = out[fi].buds;
        if (buds.size() < 2) continue;
        std::size_t bi = 0, bj = 1;
        double best = 1e9;
        for (std::size_t a = 0; a < buds.size(); ++a)
          for (std::size_t b = a + 1; b < buds.size(); ++b) {
            const double d = std::hypot(buds[a].cx - buds[b].cx,
                                        buds[a].cy - buds[b].cy);
            if (d < best) {
              best = d;
              bi = a;
              bj = b;
            }
          }
        std::swap(buds[bi].cx, buds[bj].cx);
        std::swap(buds[bi].cy, buds[bj].cy);
      }
      break;
    }
    case PerturbMode::DropHistory: {
      int fresh = 1000000;
      for (Frame& f : out)
        for (Bud& b : f.buds) b.id = fresh++;
      break;
    }
    case PerturbMode::FreezeGrowth: {
      std::map<int, Bud> first;  // keyed by gt_order
      for (Frame& f : out) {
        for (Bud& b : f.buds) {
          auto it = first.find(b.gt_order);
          if (it == first.end()) {
            first.emplace(b.gt_order, b);
          } else {
            b.cx = it->second.cx;
            b.cy = it->second.cy;
            b.w = it->second.w;
            b.h = it->second.h;
          }
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace budtrack
