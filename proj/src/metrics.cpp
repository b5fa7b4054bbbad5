#include "budtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "budtrack/assign.hpp"

namespace budtrack {

TrackObs track_observations(const TrackSet& tracks,
                            const std::vector<Frame>& frames) {
  std::map<std::pair<int, int>, std::pair<double, double>> centers;
  for (const Frame& f : frames)
    for (const Bud& b : f.buds) centers[{f.index, b.id}] = {b.cx, b.cy};
  TrackObs out;
  for (const auto& [tid, entries] : tracks) {
    for (const auto& [frame, bud] : entries) {
      auto it = centers.find({frame, bud});
      if (it == centers.end()) continue;
      out[tid].emplace_back(frame, it->second.first, it->second.second);
    }
  }
  return out;
}

double bma(const TrackSet& gt, const TrackSet& pred) {
  std::size_t total = 0, correct = 0;
  for (const auto& [tid, entries] : gt) {
    total += entries.size();
    auto it = pred.find(tid);
    if (it == pred.end()) continue;
    const std::set<std::pair<int, int>> have(it->second.begin(),
                                            it->second.end());
    for (const auto& e : entries)
      if (have.count(e)) ++correct;
  }
  if (total == 0) return 1.0;
  return static_cast<double>(correct) / static_cast<double>(total);
}

double ble(const std::vector<std::pair<double, double>>& gt_points,
           const std::vector<std::pair<double, double>>& pred_points) {
  if (gt_points.size() != pred_points.size())
    throw std::invalid_argument("ble: point counts differ");
  if (gt_points.empty())
    throw std::invalid_argument("ble: no matched pairs");
  double acc = 0.0;
  for (std::size_t i = 0; i < gt_points.size(); ++i)
    acc += std::hypot(gt_points[i].first - pred_points[i].first,
                      gt_points[i].second - pred_points[i].second);
  return acc / static_cast<double>(gt_points.size());
}

namespace {

struct Obs {
  int track;
  double x, y;
};

std::map<int, std::vector<Obs>> by_frame(const TrackObs& t) {
  std::map<int, std::vector<Obs>> out;
  for (const auto& [tid, entries] : t)
    for (const auto& [frame, x, y] : entries)
      out[frame].push_back({tid, x, y});
  return out;
}

}  // namespace

MotResult mot_metrics(const TrackObs& gt, const TrackObs& pred, double radius) {
  MotResult r;
  const auto gt_frames = by_frame(gt);
  const auto pred_frames = by_frame(pred);

  std::set<int> frame_ids;
  for (const auto& [f, _] : gt_frames) frame_ids.insert(f);
  for (const auto& [f, _] : pred_frames) frame_ids.insert(f);

  std::map<int, int> corr;          // gt track -> pred track carried over
  std::map<int, int> matched_frames;  // per gt track

  // per-pair overlap counts (gated) for identity measures
  std::map<std::pair<int, int>, int> overlap;
  std::size_t gt_obs_total = 0, pred_obs_total = 0;

  for (const int fi : frame_ids) {
    const auto git = gt_frames.find(fi);
    const auto pit = pred_frames.find(fi);
    const std::vector<Obs> empty;
    const std::vector<Obs>& g = git == gt_frames.end() ? empty : git->second;
    const std::vector<Obs>& p = pit == pred_frames.end() ? empty : pit->second;
    r.gt_total += static_cast<int>(g.size());
    gt_obs_total += g.size();
    pred_obs_total += p.size();

    for (const Obs& go : g)
      for (const Obs& po : p)
        if (std::hypot(go.x - po.x, go.y - po.y) <= radius)
          ++overlap[{go.track, po.track}];

    std::vector<bool> g_done(g.size(), false), p_done(p.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> matches;

    // keep last frame's correspondence when still within the gate
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto it = corr.find(g[i].track);
      if (it == corr.end()) continue;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p_done[j] || p[j].track != it->second) continue;
        if (std::hypot(g[i].x - p[j].x, g[i].y - p[j].y) <= radius) {
          g_done[i] = true;
          p_done[j] = true;
          matches.emplace_back(i, j);
        }
        break;
      }
    }

    // optimal gated matching for the rest
    std::vector<std::size_t> gi, pj;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!g_done[i]) gi.push_back(i);
    for (std::size_t j = 0; j < p.size(); ++j)
      if (!p_done[j]) pj.push_back(j);
    if (!gi.empty() && !pj.empty()) {
      ScoreMatrix m = ScoreMatrix::zeros(gi.size(), pj.size());
      for (std::size_t a = 0; a < gi.size(); ++a)
        for (std::size_t b = 0; b < pj.size(); ++b) {
          const double d =
              std::hypot(g[gi[a]].x - p[pj[b]].x, g[gi[a]].y - p[pj[b]].y);
          m.at(a, b) = d <= radius ? -d : kMaskedScore;
        }
      const Assignment as = hungarian_assign(m);
      for (std::size_t a = 0; a < gi.size(); ++a) {
        const int b = as.match[a];
        if (b == kUnmatched) continue;
        if (m.at(a, static_cast<std::size_t>(b)) <= kMaskedScore / 2) continue;
        matches.emplace_back(gi[a], pj[static_cast<std::size_t>(b)]);
        g_done[gi[a]] = true;
        p_done[pj[static_cast<std::size_t>(b)]] = true;
      }
    }

    for (const auto& [i, j] : matches) {
      auto it = corr.find(g[i].track);
      if (it != corr.end() && it->second != p[j].track) ++r.idsw;
      corr[g[i].track] = p[j].track;
      ++matched_frames[g[i].track];
    }
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!g_done[i]) ++r.fn;
    for (std::size_t j = 0; j < p.size(); ++j)
      if (!p_done[j]) ++r.fp;
  }

  r.mota = r.gt_total == 0
               ? 1.0
               : 1.0 - static_cast<double>(r.fn + r.fp + r.idsw) /
                           static_cast<double>(r.gt_total);

  // IDF1: one global gt-track <-> pred-track assignment maximizing overlap
  std::vector<int> gt_ids, pred_ids;
  for (const auto& [tid, _] : gt) gt_ids.push_back(tid);
  for (const auto& [tid, _] : pred) pred_ids.push_back(tid);
  std::size_t idtp = 0;
  if (!gt_ids.empty() && !pred_ids.empty()) {
    ScoreMatrix m = ScoreMatrix::zeros(gt_ids.size(), pred_ids.size());
    for (std::size_t a = 0; a < gt_ids.size(); ++a)
      for (std::size_t b = 0; b < pred_ids.size(); ++b) {
        auto it = overlap.find({gt_ids[a], pred_ids[b]});
        m.at(a, b) = it == overlap.end() ? 0.0 : it->second;
      }
    const Assignment as = hungarian_assign(m);
    for (std::size_t a = 0; a < gt_ids.size(); ++a)
      if (as.match[a] != kUnmatched)
        idtp += static_cast<std::size_t>(
            m.at(a, static_cast<std::size_t>(as.match[a])));
  }
  const std::size_t idfp = pred_obs_total - std::min(idtp, pred_obs_total);
  const std::size_t idfn = gt_obs_total - std::min(idtp, gt_obs_total);
  const double denom = static_cast<double>(2 * idtp + idfp + idfn);
  r.idf1 = denom == 0.0 ? 1.0 : 2.0 * static_cast<double>(idtp) / denom;

  r.n_gt_tracks = static_cast<int>(gt.size());
  int mt = 0, ml = 0;
  for (const auto& [tid, entries] : gt) {
    const double cov =
        entries.empty()
            ? 0.0
            : static_cast<double>(matched_frames[tid]) /
                  static_cast<double>(entries.size());
    if (cov >= 0.8) ++mt;
    if (cov <= 0.2) ++ml;
  }
  if (r.n_gt_tracks > 0) {
    r.mt = static_cast<double>(mt) / r.n_gt_tracks;
    r.ml = static_cast<double>(ml) / r.n_gt_tracks;
  }
  return r;
}

double liou(double len_a, double len_b) {
  const double lo = std::min(len_a, len_b);
  const double hi = std::max(len_a, len_b);
  if (hi <= 0.0) return 1.0;
  return lo / hi;
}

double btc(const std::vector<std::pair<double, double>>& a,
           const std::vector<std::pair<double, double>>& b) {
  if (a.empty() || b.empty()) return 0.0;
  auto dir = [](const std::vector<std::pair<double, double>>& from,
                const std::vector<std::pair<double, double>>& to) {
    double acc = 0.0;
    for (const auto& [x, y] : from) {
      double best = 1e300;
      for (const auto& [u, v] : to)
        best = std::min(best, std::hypot(x - u, y - v));
      acc += best;
    }
    return acc / static_cast<double>(from.size());
  };
  return 0.5 * (dir(a, b) + dir(b, a));
}

double aggregate(const std::vector<MetricRow>& rows, const std::string& metric) {
  double num = 0.0;
  long den = 0;
  for (const MetricRow& r : rows) {
    if (r.metric != metric) continue;
    num += r.value * r.count;
    den += r.count;
  }
  if (den == 0) throw std::invalid_argument("no rows for metric " + metric);
  return num / static_cast<double>(den);
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "plant,view,phase,metric,value,count\n";
  for (const MetricRow& r : rows)
    out << r.plant << ',' << r.view << ',' << r.phase << ',' << r.metric << ','
        << r.value << ',' << r.count << '\n';
}

std::vector<MetricRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "plant,view,phase,metric,value,count")
    throw std::runtime_error("bad report header in " + path.string());
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    MetricRow r;
    std::string field;
    std::getline(ss, r.plant, ',');
    std::getline(ss, field, ',');
    r.view = std::stoi(field);
    std::getline(ss, r.phase, ',');
    std::getline(ss, r.metric, ',');
    std::getline(ss, field, ',');
    r.value = std::stod(field);
    std::getline(ss, field, ',');
    r.count = std::stoi(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace budtrack
