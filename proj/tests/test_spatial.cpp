#include <doctest.h>

#include <cmath>
#include <random>

#include "budtrack/spatial.hpp"

using namespace budtrack;

namespace {
const double pi = std::acos(-1.0);
}

TEST_CASE("geometric features, hand-derived case") {
  Bud bud{0, 0, 0.5, 0.4, 0.02, 0.04, 0};
  BranchPoint bp{0, 1, 0.5, 0.6, -pi / 2, 0};
  const GeomFeatures f = geometric_features(bud, bp);
  CHECK(f.dpx == doctest::Approx(0.0));
  CHECK(f.dpy == doctest::Approx(-0.2));
  CHECK(f.dist == doctest::Approx(0.2 / kDiagonal).epsilon(1e-12));
  CHECK(f.align == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.aspect == doctest::Approx(0.5));
  CHECK(f.area == doctest::Approx(0.0008));
}

TEST_CASE("coincident pair uses the degenerate convention") {
  Bud bud{0, 0, 0.3, 0.3, 0.01, 0.01, 0};
  BranchPoint bp{0, 1, 0.3, 0.3, 1.0, 0};
  const GeomFeatures f = geometric_features(bud, bp);
  CHECK(f.dist == 0.0);
  CHECK(f.align == 0.0);
}

TEST_CASE("rotating branch orientation by pi flips alignment") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int it = 0; it < 50; ++it) {
    Bud bud{0, 0, u(rng), u(rng), 0.02, 0.02, 0};
    double theta = u(rng) * 2.0 - 1.0;
    BranchPoint bp{0, 1, u(rng), u(rng), theta, 0};
    BranchPoint flipped = bp;
    flipped.theta = theta > 0 ? theta - pi : theta + pi;
    const double a = geometric_features(bud, bp).align;
    const double b = geometric_features(bud, flipped).align;
    CHECK(a + b == doctest::Approx(pi).epsilon(1e-9));
  }
}

TEST_CASE("spatial score, hand-derived values") {
  SpatialParams p;  // sigma_d = 0.15, sigma_a = pi/4
  CHECK(spatial_score({0, 0, 0.0, 0.0, 1, 1e-4}, p) == 0.0);
  CHECK(spatial_score({0, 0, p.sigma_d, 0.0, 1, 1e-4}, p) ==
        doctest::Approx(-0.5));
  const double s = spatial_score({0, 0, 0.2 / kDiagonal, pi / 6, 1, 1e-4}, p);
  CHECK(s == doctest::Approx(-0.66666).epsilon(1e-4));
}

TEST_CASE("score is strictly decreasing in distance") {
  SpatialParams p;
  double prev = spatial_score({0, 0, 0.0, 0.3, 1, 1e-4}, p);
  for (double d = 0.05; d <= 1.0; d += 0.05) {
    const double s = spatial_score({0, 0, d, 0.3, 1, 1e-4}, p);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("translation invariance of dist and align") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.2, 0.6);
  for (int it = 0; it < 50; ++it) {
    Bud bud{0, 0, u(rng), u(rng), 0.02, 0.02, 0};
    BranchPoint bp{0, 1, u(rng), u(rng), u(rng), 0};
    const double tx = 0.1, ty = -0.05;
    Bud bud2 = bud;
    bud2.cx += tx;
    bud2.cy += ty;
    BranchPoint bp2 = bp;
    bp2.x += tx;
    bp2.y += ty;
    const GeomFeatures a = geometric_features(bud, bp);
    const GeomFeatures b = geometric_features(bud2, bp2);
    CHECK(a.dist == doctest::Approx(b.dist).epsilon(1e-12));
    CHECK(a.align == doctest::Approx(b.align).epsilon(1e-9));
  }
}

TEST_CASE("score matrix shape, diagonal dominance and row permutation") {
  Frame f;
  f.branch_points.push_back({0, 1, 0.3, 0.8, -pi / 2, 0});
  f.branch_points.push_back({1, 2, 0.7, 0.8, -pi / 2, 0});
  f.buds.push_back({0, 1, 0.3, 0.5, 0.02, 0.02, 0});  // on branch 0's ray
  f.buds.push_back({1, 2, 0.7, 0.5, 0.02, 0.02, 0});  // on branch 1's ray
  SpatialParams p;
  const ScoreMatrix m = spatial_score_matrix(f, p);
  REQUIRE(m.rows == 2);
  REQUIRE(m.cols == 2);
  CHECK(m.at(0, 0) > m.at(0, 1));
  CHECK(m.at(1, 1) > m.at(1, 0));

  std::swap(f.buds[0], f.buds[1]);
  const ScoreMatrix m2 = spatial_score_matrix(f, p);
  CHECK(m2.at(0, 0) == m.at(1, 0));
  CHECK(m2.at(1, 1) == m.at(0, 1));

  Frame empty;
  empty.branch_points = f.branch_points;
  CHECK(spatial_score_matrix(empty, p).empty());
}
