#include "doctest.h"

#include <filesystem>

#include "budtrack/metrics.hpp"

using namespace budtrack;

namespace {

// two parallel tracks over n frames, vertically separated
TrackObs two_tracks(int n, double gap = 0.2) {
  TrackObs t;
  for (int f = 0; f < n; ++f) {
    t[0].emplace_back(f, 0.3, 0.5 - 0.01 * f);
    t[1].emplace_back(f, 0.3 + gap, 0.5 - 0.01 * f);
  }
  return t;
}

}  // namespace

TEST_CASE("bma counts identity-correct observations") {
  TrackSet gt{{0, {{0, 10}, {1, 11}}}, {1, {{0, 20}, {1, 21}}}};
  CHECK(bma(gt, gt) == 1.0);
  TrackSet half{{0, {{0, 10}, {1, 11}}}, {1, {{0, 21}}}};
  CHECK(bma(gt, half) == doctest::Approx(0.5));
  CHECK(bma(gt, {}) == 0.0);
  CHECK(bma({}, gt) == 1.0);
}

TEST_CASE("ble is the mean matched-pair distance") {
  using P = std::pair<double, double>;
  const std::vector<P> a{{0.0, 0.0}};
  CHECK(ble(a, a) == 0.0);
  CHECK(ble(a, {P{0.3, 0.4}}) == doctest::Approx(0.5));
  const std::vector<P> b{{0.1, 0.0}, {0.0, 0.3}};
  CHECK(ble({P{0.0, 0.0}, P{0.0, 0.0}}, b) == doctest::Approx(0.2));
  CHECK_THROWS_AS(ble({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ble(a, b), std::invalid_argument);
}

TEST_CASE("perfect tracking gives perfect mot scores") {
  const TrackObs t = two_tracks(5);
  const MotResult r = mot_metrics(t, t);
  CHECK(r.gt_total == 10);
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);
  CHECK(r.idsw == 0);
  CHECK(r.mota == 1.0);
  CHECK(r.idf1 == 1.0);
  CHECK(r.mt == 1.0);
  CHECK(r.ml == 0.0);
}

TEST_CASE("one miss and one switch over ten observations give mota 0.8") {
  const TrackObs gt = two_tracks(5);
  TrackObs pred = gt;
  // drop track 1's last frame -> one false negative
  pred[1].pop_back();
  // track 0 switches identity at frame 3 -> one id switch
  TrackObs pred2;
  for (const auto& [f, x, y] : pred[0])
    (f < 3 ? pred2[0] : pred2[7]).emplace_back(f, x, y);
  pred2[1] = pred[1];
  const MotResult r = mot_metrics(gt, pred2);
  CHECK(r.gt_total == 10);
  CHECK(r.fn == 1);
  CHECK(r.fp == 0);
  CHECK(r.idsw == 1);
  CHECK(r.mota == doctest::Approx(0.8));
}

TEST_CASE("spurious detections count as false positives") {
  const TrackObs gt = two_tracks(4);
  TrackObs pred = gt;
  for (int f = 0; f < 4; ++f) pred[9].emplace_back(f, 0.9, 0.9);
  const MotResult r = mot_metrics(gt, pred);
  CHECK(r.fp == 4);
  CHECK(r.fn == 0);
  CHECK(r.mota == doctest::Approx(1.0 - 4.0 / 8.0));
}

TEST_CASE("idf1 penalizes a split track that mota forgives less") {
  const TrackObs gt = two_tracks(10);
  TrackObs pred;
  for (const auto& [f, x, y] : gt.at(0))
    (f < 5 ? pred[0] : pred[5]).emplace_back(f, x, y);
  pred[1] = gt.at(1);
  const MotResult r = mot_metrics(gt, pred);
  CHECK(r.idsw == 1);
  // idtp = 10 (track 1) + 5 (best half of track 0); 20 gt obs, 20 pred obs
  CHECK(r.idf1 == doctest::Approx(2.0 * 15.0 / 40.0));
}

TEST_CASE("mostly-tracked and mostly-lost thresholds") {
  TrackObs gt = two_tracks(10);
  TrackObs pred;
  pred[0] = gt.at(0);  // 100% coverage -> MT
  pred[1].emplace_back(0, std::get<1>(gt.at(1)[0]), std::get<2>(gt.at(1)[0]));
  // track 1 covered 10% -> ML
  const MotResult r = mot_metrics(gt, pred);
  CHECK(r.n_gt_tracks == 2);
  CHECK(r.mt == doctest::Approx(0.5));
  CHECK(r.ml == doctest::Approx(0.5));
}

TEST_CASE("matching respects the gating radius") {
  TrackObs gt, pred;
  gt[0].emplace_back(0, 0.5, 0.5);
  pred[0].emplace_back(0, 0.5, 0.55);  // 0.05 away > default radius 0.03
  const MotResult r = mot_metrics(gt, pred);
  CHECK(r.fn == 1);
  CHECK(r.fp == 1);
  const MotResult r2 = mot_metrics(gt, pred, 0.1);
  CHECK(r2.fn == 0);
  CHECK(r2.fp == 0);
}

TEST_CASE("liou is the symmetric length ratio") {
  CHECK(liou(1.0, 2.0) == doctest::Approx(0.5));
  CHECK(liou(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(liou(3.0, 3.0) == 1.0);
  CHECK(liou(0.0, 0.0) == 1.0);
  CHECK(liou(0.0, 1.0) == 0.0);
}

TEST_CASE("btc is zero for identical endpoint sets") {
  const std::vector<std::pair<double, double>> a{{0.1, 0.2}, {0.4, 0.9}};
  CHECK(btc(a, a) == 0.0);
}

TEST_CASE("btc hand value for a uniform shift") {
  const std::vector<std::pair<double, double>> a{{0.0, 0.0}, {1.0, 0.0}};
  const std::vector<std::pair<double, double>> b{{0.0, 0.1}, {1.0, 0.1}};
  CHECK(btc(a, b) == doctest::Approx(0.1));
}

TEST_CASE("aggregate weights rows by sample count") {
  std::vector<MetricRow> rows{{"p0", 0, "all", "bma", 1.0, 30},
                              {"p1", 0, "all", "bma", 0.5, 10},
                              {"p0", 0, "all", "mota", 0.0, 5}};
  CHECK(aggregate(rows, "bma") == doctest::Approx(0.875));
  CHECK(aggregate(rows, "mota") == 0.0);
  CHECK_THROWS_AS(aggregate(rows, "nope"), std::invalid_argument);
}

TEST_CASE("report csv round-trips") {
  const std::vector<MetricRow> rows{{"p0", 0, "all", "bma", 0.75, 30},
                                    {"p1", 90, "test", "idsw", 3.0, 1}};
  const auto path = std::filesystem::temp_directory_path() / "bt_report.csv";
  write_report_csv(path, rows);
  const auto back = read_report_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].plant == "p0");
  CHECK(back[0].value == 0.75);
  CHECK(back[1].view == 90);
  CHECK(back[1].metric == "idsw");
  CHECK(back[1].count == 1);
  std::filesystem::remove(path);
}
