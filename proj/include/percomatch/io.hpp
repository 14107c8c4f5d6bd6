#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "percomatch/estimation.hpp"
#include "percomatch/geo_model.hpp"
#include "percomatch/graph.hpp"
#include "percomatch/pgm.hpp"
#include "percomatch/sampling.hpp"

namespace percomatch::io {

/// "u v" per line, 0-based ids; undirected graphs write each edge once.
void write_edge_list(std::ostream& out, const Graph& g);
void write_edge_list(const std::filesystem::path& path, const Graph& g);

/// Reads "u v" lines ('#' comments allowed). Node count is max id + 1 unless
/// `n` is larger.
Graph read_edge_list(const std::filesystem::path& path, bool directed = false, std::size_t n = 0);

/// "id,x0,...,x{k-1}" with a header row.
void write_positions(const std::filesystem::path& path, const Positions& positions);
Positions read_positions(const std::filesystem::path& path);

/// Writes <stem>.edges, <stem>.json and, when present, <stem>.positions.csv.
void write_ground_truth(const std::filesystem::path& stem, const GroundTruthGraph& truth);
GroundTruthGraph read_ground_truth(const std::filesystem::path& stem);

/// Writes <stem>.g1.edges, <stem>.g2.edges, <stem>.alignment.csv ("g2_id,g1_id")
/// and the manifest <stem>.pair.json.
void write_pair(const std::filesystem::path& stem, const GraphPair& pair);
GraphPair read_pair(const std::filesystem::path& stem);

/// "d,expected_count" rows.
void write_calibration(const std::filesystem::path& path, const DistanceCalibration& cal);

struct SnapGraph {
  GroundTruthGraph truth;           ///< directed, dense ids
  std::vector<std::uint64_t> original_ids;  ///< original id of each dense id
};

/// Whitespace-separated integer pairs; '#' lines skipped. Ids are remapped to
/// [0, n) in order of first appearance.
SnapGraph load_snap_edgelist(const std::filesystem::path& path);
SnapGraph load_snap_edgelist(std::istream& in);

/// Matched pairs as JSON (also used by the `match` command).
std::string match_result_json(const MatchResult& result, std::size_t n);

}  // namespace percomatch::io
