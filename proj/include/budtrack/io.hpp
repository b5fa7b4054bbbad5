#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "budtrack/types.hpp"

namespace budtrack::io {

// Dataset files: one JSON document per plant-view sequence. Canonical key
// order is fixed so that serialize(deserialize(x)) round-trips
// byte-identically. Unknown keys are an error in strict mode and are
// ignored otherwise.
std::string serialize_sequence(const Sequence& seq);
Sequence parse_sequence(const std::string& text, bool strict = true);

void write_sequence(const std::filesystem::path& path, const Sequence& seq);
Sequence read_sequence(const std::filesystem::path& path, bool strict = true);

// Identity tracks: {"tracks": {"<id>": [[frame, bud_id], ...]}}
std::string serialize_tracks(const TrackSet& tracks);
TrackSet parse_tracks(const std::string& text);
void write_tracks(const std::filesystem::path& path, const TrackSet& tracks);
TrackSet read_tracks(const std::filesystem::path& path);

// Per-branch ground-truth polylines, one list of (x, y) points per branch id.
using Polylines = std::map<int, std::vector<std::pair<double, double>>>;
std::string serialize_polylines(const Polylines& p);
Polylines parse_polylines(const std::string& text);

// FNV-1a over raw bytes; used for dataset/config manifests.
std::uint64_t fnv1a(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// RLE helpers (runs alternate zero/one, starting with zeros).
RleMask rle_encode(const std::vector<std::uint8_t>& mask, int width, int height);
std::vector<std::uint8_t> rle_decode(const RleMask& m);

}  // namespace budtrack::io
