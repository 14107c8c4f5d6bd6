#include "percomatch/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include <absl/container/flat_hash_map.h>
#include <json.hpp>

#include "percomatch/errors.hpp"

namespace percomatch::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

bool skippable(std::string_view line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string_view::npos || line[pos] == '#' || line[pos] == '%';
}

// next unsigned integer token of `line` starting at `pos`
template <class T>
bool next_uint(std::string_view line, std::size_t& pos, T& value) {
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == ',' || line[pos] == '\r'))
    ++pos;
  if (pos >= line.size()) return false;
  const auto [p, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), value);
  if (ec != std::errc()) return false;
  pos = static_cast<std::size_t>(p - line.data());
  return true;
}

bool next_double(std::string_view line, std::size_t& pos, double& value) {
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == ',' || line[pos] == '\t')) ++pos;
  if (pos >= line.size()) return false;
  const auto [p, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), value);
  if (ec != std::errc()) return false;
  pos = static_cast<std::size_t>(p - line.data());
  return true;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) {
  return fs::path(stem.string() + suffix);
}

}  // namespace

void write_edge_list(std::ostream& out, const Graph& g) {
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

void write_edge_list(const fs::path& path, const Graph& g) {
  auto out = open_out(path);
  write_edge_list(out, g);
  if (!out) throw IoError("write failed: " + path.string());
}

Graph read_edge_list(const fs::path& path, bool directed, std::size_t n) {
  auto in = open_in(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_id = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::size_t pos = 0;
    Node u = 0, v = 0;
    if (!next_uint(line, pos, u) || !next_uint(line, pos, v))
      throw ParseError("expected two node ids in " + path.string(), lineno);
    edges.push_back({u, v});
    max_id = std::max<std::size_t>({max_id, u, v});
    any = true;
  }
  return Graph::from_edges(std::max(n, any ? max_id + 1 : 0), edges, directed);
}

void write_positions(const fs::path& path, const Positions& pos) {
  auto out = open_out(path);
  out << "id";
  for (int c = 0; c < pos.dim(); ++c) out << ",x" << c;
  out << '\n';
  for (std::size_t i = 0; i < pos.size(); ++i) {
    out << i;
    for (double x : pos[i]) out << ',' << x;
    out << '\n';
  }
}

Positions read_positions(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty positions file " + path.string(), 1);
  const int k = static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (k < 1) throw ParseError("positions header needs id,x0,...", 1);
  std::vector<double> coords;
  std::size_t lineno = 1, expected_id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::size_t pos = 0, id = 0;
    if (!next_uint(line, pos, id) || id != expected_id)
      throw ParseError("positions must list ids 0..n-1 in order", lineno);
    ++expected_id;
    for (int c = 0; c < k; ++c) {
      double x = 0.0;
      if (!next_double(line, pos, x)) throw ParseError("missing coordinate", lineno);
      coords.push_back(x);
    }
  }
  return Positions(k, std::move(coords));
}

void write_ground_truth(const fs::path& stem, const GroundTruthGraph& truth) {
  write_edge_list(with_suffix(stem, ".edges"), truth.graph);
  const auto& m = truth.meta;
  json j = {{"n", truth.size()},     {"k", m.k},         {"beta", m.beta},
            {"C", m.C},              {"K", m.K},         {"seed", m.seed},
            {"er_p", m.er_p},        {"kind", m.kind},   {"directed", truth.graph.directed()},
            {"near_radius", m.near_radius}, {"expected_missed_edges", m.expected_missed_edges},
            {"edges_path", with_suffix(stem, ".edges").filename().string()}};
  if (std::isinf(m.beta)) j["beta"] = "inf";
  if (truth.positions) {
    const auto pp = with_suffix(stem, ".positions.csv");
    write_positions(pp, *truth.positions);
    j["positions_path"] = pp.filename().string();
  } else {
    j["positions_path"] = nullptr;
  }
  auto out = open_out(with_suffix(stem, ".json"));
  out << j.dump(2) << '\n';
}

GroundTruthGraph read_ground_truth(const fs::path& stem) {
  const json j = read_json(with_suffix(stem, ".json"));
  GroundTruthGraph t;
  try {
    const auto n = j.at("n").get<std::size_t>();
    const bool directed = j.value("directed", false);
    t.graph = read_edge_list(with_suffix(stem, ".edges"), directed, n);
    auto& m = t.meta;
    m.n = n;
    m.k = j.value("k", 0);
    m.beta = j.at("beta").is_string() ? std::numeric_limits<double>::infinity() : j.value("beta", 0.0);
    m.C = j.value("C", 0.0);
    m.K = j.value("K", 0.0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.er_p = j.value("er_p", 0.0);
    m.kind = j.value("kind", std::string("loaded"));
    m.near_radius = j.value("near_radius", 0.0);
    m.expected_missed_edges = j.value("expected_missed_edges", 0.0);
    if (j.contains("positions_path") && j["positions_path"].is_string())
      t.positions = read_positions(stem.parent_path() / j["positions_path"].get<std::string>());
  } catch (const json::exception& e) {
    throw IoError("bad graph manifest: " + std::string(e.what()));
  }
  if (t.positions && t.positions->size() != t.size())
    throw IoError("positions do not match node count");
  return t;
}

void write_pair(const fs::path& stem, const GraphPair& pair) {
  write_edge_list(with_suffix(stem, ".g1.edges"), pair.g1);
  write_edge_list(with_suffix(stem, ".g2.edges"), pair.g2);
  {
    auto out = open_out(with_suffix(stem, ".alignment.csv"));
    out << "g2_id,g1_id\n";
    for (std::size_t j = 0; j < pair.alignment.size(); ++j) out << j << ',' << pair.alignment[j] << '\n';
  }
  json j = {{"n", pair.size()},
            {"s", pair.meta.s},
            {"seed", pair.meta.seed},
            {"directed", pair.g1.directed()},
            {"g1_path", with_suffix(stem, ".g1.edges").filename().string()},
            {"g2_path", with_suffix(stem, ".g2.edges").filename().string()},
            {"alignment_path", with_suffix(stem, ".alignment.csv").filename().string()}};
  auto out = open_out(with_suffix(stem, ".pair.json"));
  out << j.dump(2) << '\n';
}

GraphPair read_pair(const fs::path& stem) {
  const json j = read_json(with_suffix(stem, ".pair.json"));
  GraphPair p;
  try {
    const auto n = j.at("n").get<std::size_t>();
    const bool directed = j.value("directed", false);
    const auto dir = stem.parent_path();
    p.g1 = read_edge_list(dir / j.at("g1_path").get<std::string>(), directed, n);
    p.g2 = read_edge_list(dir / j.at("g2_path").get<std::string>(), directed, n);
    p.meta.s = j.value("s", 0.0);
    p.meta.seed = j.value("seed", std::uint64_t{0});
    const auto apath = dir / j.at("alignment_path").get<std::string>();
    auto in = open_in(apath);
    std::string line;
    std::size_t lineno = 0;
    p.alignment.assign(n, 0);
    std::vector<char> seen(n, 0);
    while (std::getline(in, line)) {
      ++lineno;
      if (lineno == 1 || skippable(line)) continue;
      std::size_t pos = 0, g2 = 0, g1 = 0;
      if (!next_uint(line, pos, g2) || !next_uint(line, pos, g1) || g2 >= n || g1 >= n)
        throw ParseError("bad alignment row in " + apath.string(), lineno);
      p.alignment[g2] = static_cast<Node>(g1);
      seen[g2] = 1;
    }
    if (std::count(seen.begin(), seen.end(), 1) != static_cast<std::ptrdiff_t>(n))
      throw IoError("alignment does not cover every node");
  } catch (const json::exception& e) {
    throw IoError("bad pair manifest: " + std::string(e.what()));
  }
  return p;
}

void write_calibration(const fs::path& path, const DistanceCalibration& cal) {
  auto out = open_out(path);
  out << "d,expected_count\n";
  for (std::size_t i = 0; i < cal.distances.size(); ++i)
    out << cal.distances[i] << ',' << cal.expected[i] << '\n';
}

SnapGraph load_snap_edgelist(std::istream& in) {
  SnapGraph out;
  absl::flat_hash_map<std::uint64_t, Node> dense;
  std::vector<Edge> edges;
  auto id_of = [&](std::uint64_t raw) {
    auto [it, inserted] = dense.try_emplace(raw, static_cast<Node>(out.original_ids.size()));
    if (inserted) out.original_ids.push_back(raw);
    return it->second;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::size_t pos = 0;
    std::uint64_t a = 0, b = 0;
    if (!next_uint(line, pos, a) || !next_uint(line, pos, b))
      throw ParseError("expected two integer ids", lineno);
    const Node u = id_of(a);
    const Node v = id_of(b);
    edges.push_back({u, v});
  }
  const std::size_t n = out.original_ids.size();
  out.truth.graph = Graph::from_edges(n, edges, true);
  out.truth.meta.n = n;
  out.truth.meta.kind = "loaded";
  return out;
}

SnapGraph load_snap_edgelist(const fs::path& path) {
  auto in = open_in(path);
  return load_snap_edgelist(in);
}

std::string match_result_json(const MatchResult& r, std::size_t n) {
  json pairs = json::array();
  for (const auto& p : r.matched_pairs) pairs.push_back({p.first, p.second});
  json j = {{"n", n},
            {"seed_count", r.seed_count},
            {"good", r.good_count},
            {"bad", r.bad_count},
            {"error_ratio", r.error_ratio},
            {"steps", r.steps},
            {"rng_seed", r.rng_seed},
            {"matched_pairs", std::move(pairs)}};
  return j.dump();
}

}  // namespace percomatch::io
