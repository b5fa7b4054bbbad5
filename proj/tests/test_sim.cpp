#include "doctest.h"

#include <set>

#include "budtrack/core.hpp"
#include "budtrack/io.hpp"
#include "budtrack/sim.hpp"

using namespace budtrack;

namespace {
SimConfig small_config() {
  SimConfig c;
  c.seed = 7;
  c.n_plants = 3;
  c.frames_per_plant = 8;
  return c;
}
}  // namespace

TEST_CASE("config validation rejects out-of-range values") {
  SimConfig c = small_config();
  c.entanglement = 1.5;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_config();
  c.occlusion_prob = -0.1;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_config();
  c.min_branches = 5;
  c.max_branches = 4;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_config();
  c.dt_days = 0.0;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = small_config();
  c.n_plants = 0;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
}

TEST_CASE("generation is deterministic in the seed") {
  const SimConfig c = small_config();
  const auto a = generate_dataset(c);
  const auto b = generate_dataset(c);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(io::serialize_sequence(a[i].seq) == io::serialize_sequence(b[i].seq));
    CHECK(io::serialize_tracks(a[i].gt_tracks) ==
          io::serialize_tracks(b[i].gt_tracks));
  }
  SimConfig c2 = c;
  c2.seed = 8;
  const auto d = generate_dataset(c2);
  CHECK(io::serialize_sequence(a[0].seq) != io::serialize_sequence(d[0].seq));
}

TEST_CASE("generated sequences satisfy the frame invariants") {
  for (const auto& r : generate_dataset(small_config()))
    CHECK(validate_sequence(r.seq.frames).empty());
}

TEST_CASE("plant structure follows the bottom-up convention") {
  const SimConfig c = small_config();
  const PlantModel m = generate_plant(c, 0);
  REQUIRE(m.n_branches >= c.min_branches);
  REQUIRE(m.n_branches <= c.max_branches);
  for (std::size_t i = 1; i < m.branches.size(); ++i) {
    CHECK(m.branches[i].order == m.branches[i - 1].order + 1);
    CHECK(m.branches[i].attach_y < m.branches[i - 1].attach_y);
  }
  // the initial cohort emerges at day zero, later branches inside the window
  const int n_initial = std::max(2, (m.n_branches + 1) / 2);
  for (int i = 0; i < m.n_branches; ++i) {
    const double e = m.branches[static_cast<std::size_t>(i)].emergence_day;
    if (i < n_initial) {
      CHECK(e == 0.0);
    } else {
      CHECK(e >= c.emerge_window_lo);
      CHECK(e <= c.emerge_window_hi);
    }
  }
}

TEST_CASE("full entanglement swaps lane targets pairwise") {
  SimConfig c = small_config();
  c.entanglement = 0.0;
  const PlantModel straight = generate_plant(c, 1);
  c.entanglement = 1.0;
  const PlantModel crossed = generate_plant(c, 1);
  REQUIRE(straight.n_branches == crossed.n_branches);
  for (int o = 0; o + 1 < straight.n_branches; o += 2) {
    const auto& s0 = straight.branches[static_cast<std::size_t>(o)];
    const auto& s1 = straight.branches[static_cast<std::size_t>(o + 1)];
    const auto& c0 = crossed.branches[static_cast<std::size_t>(o)];
    const auto& c1 = crossed.branches[static_cast<std::size_t>(o + 1)];
    CHECK(c0.target_dx == doctest::Approx(s1.target_dx));
    CHECK(c1.target_dx == doctest::Approx(s0.target_dx));
    CHECK(s0.target_dx * s1.target_dx < 0.0);  // opposite sides
  }
}

TEST_CASE("occlusion probability controls bud dropout") {
  SimConfig c = small_config();
  c.occlusion_prob = 0.0;
  for (const auto& r : generate_dataset(c))
    for (const Frame& f : r.seq.frames)
      CHECK(f.buds.size() == f.branch_points.size());
  c.occlusion_prob = 1.0;
  for (const auto& r : generate_dataset(c))
    for (const Frame& f : r.seq.frames) CHECK(f.buds.empty());
}

TEST_CASE("buds grow and branches elongate upward over time") {
  SimConfig c = small_config();
  c.occlusion_prob = 0.0;
  const auto r = generate_dataset(c)[0];
  const Frame& first = r.seq.frames.front();
  const Frame& last = r.seq.frames.back();
  for (const Bud& b0 : first.buds) {
    for (const Bud& b1 : last.buds) {
      if (b1.gt_order != b0.gt_order) continue;
      CHECK(b1.cy < b0.cy);  // y shrinks as the tip moves up
      CHECK(b1.w >= b0.w);
    }
  }
}

TEST_CASE("gt tracks reference real buds and cover every bud") {
  const auto r = generate_dataset(small_config())[0];
  std::set<std::pair<int, int>> present;
  for (const Frame& f : r.seq.frames)
    for (const Bud& b : f.buds) present.insert({f.index, b.id});
  std::size_t tracked = 0;
  for (const auto& [id, entries] : r.gt_tracks) {
    for (const auto& e : entries) CHECK(present.count(e) == 1);
    tracked += entries.size();
  }
  CHECK(tracked == present.size());
}

TEST_CASE("final polylines exist for every emerged branch") {
  const auto r = generate_dataset(small_config())[0];
  for (const auto& [id, pts] : r.final_polylines) {
    REQUIRE(pts.size() >= 2);
    // starts at the attach point, ends higher up
    CHECK(pts.back().second < pts.front().second);
  }
}

TEST_CASE("perturbations corrupt frames in the documented ways") {
  SimConfig c = small_config();
  c.occlusion_prob = 0.0;
  const auto r = generate_dataset(c)[0];

  SUBCASE("drop-history renames every bud") {
    const auto out = perturb_for_ablation(r.seq.frames, PerturbMode::DropHistory);
    std::set<int> ids;
    for (const Frame& f : out)
      for (const Bud& b : f.buds) {
        CHECK(b.id >= 1000000);
        CHECK(ids.insert(b.id).second);
      }
  }
  SUBCASE("freeze-growth pins positions to first sight") {
    const auto out = perturb_for_ablation(r.seq.frames, PerturbMode::FreezeGrowth);
    std::map<int, std::pair<double, double>> first;
    for (const Frame& f : out)
      for (const Bud& b : f.buds) {
        auto [it, fresh] = first.try_emplace(b.gt_order, b.cx, b.cy);
        if (!fresh) {
          CHECK(b.cx == it->second.first);
          CHECK(b.cy == it->second.second);
        }
      }
  }
  SUBCASE("swap-adjacent-buds keeps labels but moves centers") {
    const auto out =
        perturb_for_ablation(r.seq.frames, PerturbMode::SwapAdjacentBuds);
    bool any_moved = false;
    for (std::size_t fi = 0; fi < out.size(); ++fi) {
      REQUIRE(out[fi].buds.size() == r.seq.frames[fi].buds.size());
      for (std::size_t bi = 0; bi < out[fi].buds.size(); ++bi) {
        CHECK(out[fi].buds[bi].gt_order == r.seq.frames[fi].buds[bi].gt_order);
        if (out[fi].buds[bi].cx != r.seq.frames[fi].buds[bi].cx)
          any_moved = true;
      }
    }
    CHECK(any_moved);
  }
}

TEST_CASE("mask rendering produces one rle mask per branch point") {
  SimConfig c = small_config();
  c.n_plants = 1;
  c.frames_per_plant = 4;
  c.render_masks = true;
  c.raster_size = 64;
  const auto r = generate_dataset(c)[0];
  for (const Frame& f : r.seq.frames) {
    REQUIRE(f.masks.size() == f.branch_points.size());
    for (const RleMask& m : f.masks) {
      CHECK(m.width == 64);
      const auto px = io::rle_decode(m);
      std::size_t on = 0;
      for (auto v : px) on += v;
      CHECK(on > 0);
    }
  }
}
