#include "budtrack/io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "budtrack/format.hpp"

namespace budtrack::io {

using json = nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                bool strict, const char* ctx) {
  if (!strict) return;
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::runtime_error(fmt("unknown key '%s' in %s (strict mode)",
                                   it.key().c_str(), ctx));
}

json bp_to_json(const BranchPoint& bp) {
  return json{{"id", bp.id},       {"order", bp.order},
              {"x", bp.x},         {"y", bp.y},
              {"theta", bp.theta}, {"first_seen", bp.first_seen}};
}

json bud_to_json(const Bud& b) {
  return json{{"id", b.id}, {"gt_order", b.gt_order}, {"cx", b.cx},
              {"cy", b.cy}, {"w", b.w},               {"h", b.h},
              {"frame", b.frame}};
}

json mask_to_json(const RleMask& m) {
  return json{{"width", m.width}, {"height", m.height}, {"runs", m.runs}};
}

}  // namespace

std::string serialize_sequence(const Sequence& seq) {
  json doc;
  doc["plant_id"] = seq.plant_id;
  doc["view_deg"] = seq.view_deg;
  json frames = json::array();
  for (const Frame& f : seq.frames) {
    json jf;
    jf["index"] = f.index;
    jf["timestamp_days"] = f.timestamp_days;
    json bps = json::array();
    for (const BranchPoint& bp : f.branch_points) bps.push_back(bp_to_json(bp));
    jf["branch_points"] = std::move(bps);
    json buds = json::array();
    for (const Bud& b : f.buds) buds.push_back(bud_to_json(b));
    jf["buds"] = std::move(buds);
    if (!f.masks.empty()) {
      json masks = json::array();
      for (const RleMask& m : f.masks) masks.push_back(mask_to_json(m));
      jf["masks"] = std::move(masks);
    }
    frames.push_back(std::move(jf));
  }
  doc["frames"] = std::move(frames);
  return doc.dump(2) + "\n";
}

Sequence parse_sequence(const std::string& text, bool strict) {
  const json doc = json::parse(text);
  check_keys(doc, {"plant_id", "view_deg", "frames"}, strict, "sequence");
  Sequence seq;
  seq.plant_id = doc.at("plant_id").get<std::string>();
  seq.view_deg = doc.at("view_deg").get<int>();
  for (const json& jf : doc.at("frames")) {
    check_keys(jf, {"index", "timestamp_days", "branch_points", "buds", "masks"},
               strict, "frame");
    Frame f;
    f.index = jf.at("index").get<int>();
    f.timestamp_days = jf.at("timestamp_days").get<double>();
    for (const json& jb : jf.at("branch_points")) {
      check_keys(jb, {"id", "order", "x", "y", "theta", "first_seen"}, strict,
                 "branch_point");
      BranchPoint bp;
      bp.id = jb.at("id").get<int>();
      bp.order = jb.at("order").get<int>();
      bp.x = jb.at("x").get<double>();
      bp.y = jb.at("y").get<double>();
      bp.theta = jb.at("theta").get<double>();
      bp.first_seen = jb.at("first_seen").get<int>();
      f.branch_points.push_back(bp);
    }
    for (const json& jb : jf.at("buds")) {
      check_keys(jb, {"id", "gt_order", "cx", "cy", "w", "h", "frame"}, strict,
                 "bud");
      Bud b;
      b.id = jb.at("id").get<int>();
      b.gt_order = jb.at("gt_order").get<int>();
      b.cx = jb.at("cx").get<double>();
      b.cy = jb.at("cy").get<double>();
      b.w = jb.at("w").get<double>();
      b.h = jb.at("h").get<double>();
      b.frame = jb.at("frame").get<int>();
      f.buds.push_back(b);
    }
    if (jf.contains("masks")) {
      for (const json& jm : jf.at("masks")) {
        check_keys(jm, {"width", "height", "runs"}, strict, "mask");
        RleMask m;
        m.width = jm.at("width").get<int>();
        m.height = jm.at("height").get<int>();
        m.runs = jm.at("runs").get<std::vector<int>>();
        f.masks.push_back(std::move(m));
      }
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

void write_sequence(const std::filesystem::path& path, const Sequence& seq) {
  write_file(path, serialize_sequence(seq));
}

Sequence read_sequence(const std::filesystem::path& path, bool strict) {
  return parse_sequence(read_file(path), strict);
}

std::string serialize_tracks(const TrackSet& tracks) {
  json doc;
  json jt = json::object();
  for (const auto& [id, entries] : tracks) {
    json arr = json::array();
    for (const auto& [frame, bud] : entries) arr.push_back(json::array({frame, bud}));
    jt[std::to_string(id)] = std::move(arr);
  }
  doc["tracks"] = std::move(jt);
  return doc.dump(2) + "\n";
}

TrackSet parse_tracks(const std::string& text) {
  const json doc = json::parse(text);
  TrackSet out;
  for (auto it = doc.at("tracks").begin(); it != doc.at("tracks").end(); ++it) {
    const int id = std::stoi(it.key());
    for (const json& e : it.value())
      out[id].emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  return out;
}

void write_tracks(const std::filesystem::path& path, const TrackSet& tracks) {
  write_file(path, serialize_tracks(tracks));
}

TrackSet read_tracks(const std::filesystem::path& path) {
  return parse_tracks(read_file(path));
}

std::string serialize_polylines(const Polylines& p) {
  json doc = json::object();
  for (const auto& [id, pts] : p) {
    json arr = json::array();
    for (const auto& [x, y] : pts) arr.push_back(json::array({x, y}));
    doc[std::to_string(id)] = std::move(arr);
  }
  return doc.dump(2) + "\n";
}

Polylines parse_polylines(const std::string& text) {
  const json doc = json::parse(text);
  Polylines out;
  for (auto it = doc.begin(); it != doc.end(); ++it)
    for (const json& e : it.value())
      out[std::stoi(it.key())].emplace_back(e.at(0).get<double>(),
                                            e.at(1).get<double>());
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

RleMask rle_encode(const std::vector<std::uint8_t>& mask, int width, int height) {
  RleMask m;
  m.width = width;
  m.height = height;
  std::uint8_t cur = 0;
  int run = 0;
  for (std::uint8_t px : mask) {
    const std::uint8_t bit = px ? 1 : 0;
    if (bit == cur) {
      ++run;
    } else {
      m.runs.push_back(run);
      cur = bit;
      run = 1;
    }
  }
  m.runs.push_back(run);
  return m;
}

std::vector<std::uint8_t> rle_decode(const RleMask& m) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(m.width) * m.height);
  std::uint8_t cur = 0;
  for (int run : m.runs) {
    out.insert(out.end(), static_cast<std::size_t>(run), cur);
    cur = cur ? 0 : 1;
  }
  if (out.size() != static_cast<std::size_t>(m.width) * m.height)
    throw std::runtime_error("RLE size mismatch");
  return out;
}

}  // namespace budtrack::io
