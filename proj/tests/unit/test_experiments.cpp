#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "percomatch/errors.hpp"
#include "percomatch/experiments.hpp"
#include "support.hpp"

using namespace percomatch;
namespace fs = std::filesystem;

namespace {

std::string small_spec(const fs::path& out, std::size_t runs) {
  std::ostringstream s;
  s << R"({"scenario": "custom",
          "model": {"kind": "geometric", "n": 1500, "K": 0.4, "D": 20, "beta": 3},
          "algorithm": {"kind": "pgm", "r": 4},
          "seed_strategy": "compact",
          "seed_counts": [5, 20],
          "variants": [{"label": "plain"}, {"label": "geo", "algorithm": "pgm_filtered_geometric", "x": 1.0}],
          "threads": 1, "master_seed": 17, "runs": )"
    << runs << R"(, "out": ")" << out.string() << R"("})";
  return s.str();
}

std::vector<std::string> data_rows_without_time(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    // drop the wall_ms column (13th)
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    if (f.size() == 14) f.erase(f.begin() + 12);
    std::string joined;
    for (auto& c : f) joined += c + ",";
    rows.push_back(joined);
  }
  return rows;
}

}  // namespace

TEST_CASE("uniform seeds are distinct good pairs") {
  Rng rng(1);
  const auto truth = testsupport::wrap(testsupport::random_gnp(100, 0.1, rng));
  const auto pair = sample_pair(truth, 0.8, rng);
  const auto seeds = seeds_uniform(pair, 30, rng);
  CHECK(seeds.size() == 30);
  std::set<Node> firsts;
  for (auto s : seeds) {
    CHECK(is_good_pair(pair, s.first, s.second));
    firsts.insert(s.first);
  }
  CHECK(firsts.size() == 30);
  CHECK_THROWS(seeds_uniform(pair, 101, rng));
}

TEST_CASE("compact seeds are the nearest nodes to the center") {
  ModelParams p;
  p.n = 2000;
  p.cluster_density = 0.3;
  p.target_degree = 20;
  Rng rng(2);
  const auto truth = generate_ground_truth(resolve(p), rng);
  const auto pair = sample_pair(truth, 0.8, rng);
  const auto seeds = seeds_compact(pair, truth, 25, rng);
  REQUIRE(seeds.size() == 25);
  const auto& pos = *truth.positions;
  const Node c = seeds.front().first;
  double radius = 0;
  std::set<Node> in;
  for (auto s : seeds) {
    CHECK(is_good_pair(pair, s.first, s.second));
    radius = std::max(radius, torus_distance(pos[c], pos[s.first]));
    in.insert(s.first);
  }
  for (Node v = 0; v < truth.size(); ++v)
    if (!in.count(v)) CHECK(torus_distance(pos[c], pos[v]) >= radius);

  // without positions: ranked by common neighbors with the center
  GroundTruthGraph bare = truth;
  bare.positions.reset();
  const auto by_cn = seeds_compact(pair, bare, 10, rng);
  CHECK(by_cn.size() == 10);
  for (auto s : by_cn) CHECK(is_good_pair(pair, s.first, s.second));
}

TEST_CASE("degree filter is a single pass") {
  // 0 -> 1, 2 -> 1, 3 -> 1, 1 -> 0; min_in 1 keeps only node 1 (in-degree 3)
  const std::vector<Edge> e{{0, 1}, {2, 1}, {3, 1}, {1, 0}};
  auto g = testsupport::wrap(Graph::from_edges(4, e, true));
  std::vector<Node> old;
  const auto f = degree_filter(g, 1, 100, &old);
  CHECK(old == std::vector<Node>{1});
  CHECK(f.graph.directed());
  // max_out bound is strict
  const auto none = degree_filter(g, 0, 1, &old);
  CHECK(old == std::vector<Node>{});
}

TEST_CASE("spec parsing") {
  CHECK_THROWS_AS(parse_experiment_spec("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(R"({"scenario": "nope"})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(R"({"scenario": "custom"})"), ConfigError);  // no seed counts
  CHECK_THROWS_AS(parse_experiment_spec(R"({"scenario": "fig1_sweep", "seed_counts": [10, 5]})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec(R"({"scenario": "fig1_sweep", "runs": "many"})"), ConfigError);

  const auto fig2 = parse_experiment_spec(R"({"scenario": "fig2_error_vs_K", "runs": 3})");
  CHECK(fig2.runs == 3);
  const auto pts = expand_points(fig2);
  CHECK(pts.size() == 4 * fig2.seed_counts.size());
  for (const auto& p : pts) {
    REQUIRE(p.model.params.cluster_scale.has_value());
    CHECK_FALSE(p.model.params.target_degree.has_value());
  }
  CHECK(*pts.back().model.params.cluster_density == doctest::Approx(0.8));

  // user lists replace preset lists
  const auto custom = parse_experiment_spec(
      R"({"scenario": "fig2_error_vs_K", "seed_counts": [50], "variants": [{"K": 0.3}]})");
  CHECK(expand_points(custom).size() == 1);

  // infeasible degree is reported, not silently clamped
  const auto bad = parse_experiment_spec(
      R"({"scenario": "custom", "seed_counts": [5], "model": {"kind": "geometric", "C": 0.001, "D": 500}})");
  CHECK_THROWS_AS(expand_points(bad), InfeasibleDegree);
}

TEST_CASE("aggregation and percolation point") {
  std::vector<RunRecord> recs;
  auto add = [&](std::size_t point, std::size_t a0, std::size_t good, std::size_t bad, bool perc) {
    RunRecord r;
    r.point = point;
    r.a0 = a0;
    r.label = "x";
    r.good = good;
    r.bad = bad;
    r.error_ratio = good + bad ? double(bad) / double(good + bad) : 0.0;
    r.percolated = perc;
    recs.push_back(r);
  };
  add(0, 10, 0, 0, false);
  add(0, 10, 90, 10, false);
  add(1, 20, 900, 100, true);
  add(1, 20, 10, 0, false);
  add(2, 40, 1000, 0, true);
  add(2, 40, 1000, 0, true);
  const auto a = aggregate(recs);
  REQUIRE(a.size() == 3);
  CHECK(a[0].mean_good == doctest::Approx(45));
  CHECK(a[0].mean_error_ratio == doctest::Approx(0.05));
  CHECK(a[0].pooled_error_ratio == doctest::Approx(0.1));
  CHECK(a[1].percolation_probability == doctest::Approx(0.5));
  CHECK(*percolation_point(a, 0.5) == doctest::Approx(20));
  CHECK(*percolation_point(a, 0.75) == doctest::Approx(30));
  CHECK_FALSE(percolation_point(std::span(a).first(1), 0.5).has_value());
}

TEST_CASE("run_single is a pure function of (master seed, point, run)") {
  const auto spec = parse_experiment_spec(small_spec("", 1));
  const auto pts = expand_points(spec);
  RunOptions opt{17, 0.5, false};
  const auto a = run_single(pts[1], 3, opt);
  const auto b = run_single(pts[1], 3, opt);
  CHECK(a.good == b.good);
  CHECK(a.bad == b.bad);
  CHECK(a.steps == b.steps);
  CHECK(a.run_seed == b.run_seed);
  CHECK(a.run_seed != run_single(pts[1], 4, opt).run_seed);
}

TEST_CASE("sweep output is reproducible and resumable") {
  const auto base = fs::temp_directory_path() / "percomatch_unit";
  const auto d1 = base / "sweep1", d2 = base / "sweep2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  run_experiment(parse_experiment_spec(small_spec(d1, 3)));

  // threads do not change the output
  auto spec2 = parse_experiment_spec(small_spec(d2, 3));
  spec2.threads = 3;
  run_experiment(spec2);
  const auto rows1 = data_rows_without_time(d1 / "runs.csv");
  CHECK(rows1 == data_rows_without_time(d2 / "runs.csv"));
  CHECK(rows1.size() == 1 + 4 * 3);

  // interrupted file: keep 5 complete rows plus half a row, then resume
  {
    std::ifstream in(d2 / "runs.csv");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    in.close();
    std::ofstream out(d2 / "runs.csv", std::ios::trunc);
    for (std::size_t i = 0; i < 7; ++i) out << lines[i] << '\n';
    out << lines[7].substr(0, lines[7].size() / 2);
  }
  run_experiment(parse_experiment_spec(small_spec(d2, 3)));
  CHECK(rows1 == data_rows_without_time(d2 / "runs.csv"));

  std::ifstream agg(d1 / "aggregate.csv");
  std::string tag;
  std::getline(agg, tag);
  CHECK(tag == "# percomatch-csv v1");
  CHECK(fs::exists(d1 / "summary.json"));
}
