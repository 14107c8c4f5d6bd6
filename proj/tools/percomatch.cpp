// Command-line front end: generate, calibrate, match, sweep, pokec.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "percomatch/errors.hpp"
#include "percomatch/estimation.hpp"
#include "percomatch/experiments.hpp"
#include "percomatch/io.hpp"

namespace pm = percomatch;
using nlohmann::json;

namespace {

constexpr int kConfigError = 2;
constexpr int kIoError = 3;

struct ModelFlags {
  std::size_t n = 10000;
  int k = 2;
  double beta = 3.0;
  std::optional<double> C, K, D;
  double s = 0.8;
  std::optional<double> er_p;

  void add(CLI::App* app) {
    app->add_option("-n,--nodes", n, "node count");
    app->add_option("--dim", k, "torus dimension");
    app->add_option("--beta", beta, "decay exponent (use 'inf' for a hard disk)");
    app->add_option("-C,--cluster-scale", C, "plateau radius C");
    app->add_option("-K,--cluster-density", K, "short-range edge probability K");
    app->add_option("-D,--degree", D, "target mean degree");
    app->add_option("-s,--sample", s, "edge sampling probability");
    app->add_option("--er-p", er_p, "generate an Erdos-Renyi graph with this p instead");
  }

  pm::ModelParams params() const {
    pm::ModelParams p;
    p.n = n;
    p.k = k;
    p.beta = beta;
    p.cluster_scale = C;
    p.cluster_density = K;
    p.target_degree = D;
    p.sample_prob = s;
    return p;
  }

  pm::GroundTruthGraph generate(pm::Rng& rng) const {
    if (er_p) return pm::generate_er(n, *er_p, rng);
    return pm::generate_ground_truth(pm::resolve(params()), rng);
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pm::IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json summary_of(const pm::GroundTruthGraph& t) {
  const auto in = t.graph.in_degrees();
  double mean_in = 0.0;
  for (auto d : in) mean_in += static_cast<double>(d);
  const double n = static_cast<double>(std::max<std::size_t>(1, t.size()));
  json j = {{"n", t.size()},
            {"edges", t.graph.edge_count()},
            {"directed", t.graph.directed()},
            {"mean_out_degree", t.graph.mean_degree()},
            {"mean_in_degree", mean_in / n},
            {"clustering", pm::average_clustering(t.graph)}};
  if (t.graph.directed()) j["mean_symmetrized_degree"] = t.graph.symmetrized().mean_degree();
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seed-based graph matching experiments on clustered geometric graphs"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a ground-truth graph (and optionally a sampled pair)");
  ModelFlags gen_model;
  gen_model.add(gen);
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  bool gen_pair = false;
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("-o,--out", gen_out, "output stem")->required();
  gen->add_flag("--pair", gen_pair, "also write a sampled, relabeled pair");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "resolve C/K/D and optionally tabulate the distance curve");
  ModelFlags cal_model;
  cal_model.add(cal);
  std::string cal_table;
  cal->add_option("--table", cal_table, "write d,expected_count CSV here");

  // match
  auto* match = app.add_subcommand("match", "single PGM run; prints the result as JSON");
  ModelFlags match_model;
  match_model.add(match);
  std::string match_truth, match_pair;
  std::size_t match_a0 = 100, match_knn = 0;
  int match_r = 5;
  double match_x = 0.0;
  std::string match_strategy = "compact";
  std::uint64_t match_seed = 1;
  bool match_directed = false;
  std::string match_admission = "strict";
  match->add_option("--truth", match_truth, "ground-truth stem (generated from model flags if absent)");
  match->add_option("--pair", match_pair, "pair stem (sampled from the truth if absent)");
  match->add_option("-a,--seeds", match_a0, "seed count");
  match->add_option("--strategy", match_strategy, "uniform or compact")->check(CLI::IsMember({"uniform", "compact"}));
  match->add_option("-r", match_r, "mark threshold");
  match->add_option("--filter-geometric", match_x, "drop edges shorter than x C (needs positions)");
  match->add_option("--filter-nearest-k", match_knn, "drop each node's k nearest edges");
  match->add_option("--seed", match_seed, "rng seed");
  match->add_flag("--directed", match_directed, "read edge lists as directed");
  match->add_option("--admission", match_admission, "strict, or matched_only (ignore frontier conflicts)")
      ->check(CLI::IsMember({"strict", "matched_only"}));

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an experiment spec (JSON) and write CSV outputs");
  std::string sweep_spec, sweep_out;
  std::optional<std::size_t> sweep_runs, sweep_threads;
  std::optional<std::uint64_t> sweep_seed;
  sweep->add_option("spec", sweep_spec, "experiment spec JSON file")->required();
  sweep->add_option("-o,--out", sweep_out, "output directory (overrides the spec)");
  sweep->add_option("--runs", sweep_runs, "runs per point");
  sweep->add_option("--threads", sweep_threads, "worker threads");
  sweep->add_option("--master-seed", sweep_seed, "root rng seed");

  // pokec
  auto* pokec = app.add_subcommand("pokec", "ingest a SNAP edge list, filter by degree, optionally sweep");
  std::string pokec_in, pokec_out;
  std::size_t pokec_min_in = 20, pokec_max_out = 200, pokec_runs = 100;
  std::vector<std::size_t> pokec_seeds;
  bool pokec_ingest_only = false;
  pokec->add_option("-i,--input", pokec_in, "SNAP edge list")->required();
  pokec->add_option("--min-in", pokec_min_in, "keep nodes with in-degree above this");
  pokec->add_option("--max-out", pokec_max_out, "keep nodes with out-degree below this");
  pokec->add_option("-o,--out", pokec_out, "sweep output directory");
  pokec->add_option("--runs", pokec_runs, "runs per point");
  pokec->add_option("--seed-counts", pokec_seeds, "seed counts to sweep");
  pokec->add_flag("--ingest-only", pokec_ingest_only, "print graph statistics and stop");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*gen) {
      pm::Rng rng(gen_seed);
      auto truth = gen_model.generate(rng);
      truth.meta.seed = gen_seed;
      pm::io::write_ground_truth(gen_out, truth);
      if (gen_pair) {
        auto pair = pm::sample_pair(truth, gen_model.s, rng);
        pair.meta.seed = gen_seed;
        pm::io::write_pair(gen_out, pair);
      }
      std::cout << summary_of(truth).dump(2) << '\n';
    } else if (*cal) {
      const auto m = pm::resolve(cal_model.params());
      json j = {{"n", m.n}, {"k", m.k}, {"beta", m.beta}, {"C", m.C}, {"K", m.K}, {"s", m.s},
                {"expected_degree", m.expected_degree()}};
      if (!cal_table.empty()) {
        const auto table = pm::build_distance_calibration(m);
        pm::io::write_calibration(cal_table, table);
        j["d_max"] = table.d_max;
        j["expected_at_0"] = table.expected.front();
      }
      std::cout << j.dump(2) << '\n';
    } else if (*match) {
      pm::Rng rng(match_seed);
      pm::GroundTruthGraph truth =
          match_truth.empty() ? match_model.generate(rng) : pm::io::read_ground_truth(match_truth);
      const pm::GraphPair pair =
          match_pair.empty() ? pm::sample_pair(truth, match_model.s, rng) : pm::io::read_pair(match_pair);
      if (pair.size() != truth.size()) throw pm::ConfigError("pair and truth sizes differ");
      const auto seeds = match_strategy == "uniform" ? pm::seeds_uniform(pair, match_a0, rng)
                                                     : pm::seeds_compact(pair, truth, match_a0, rng);
      pm::Graph g1 = pair.g1, g2 = pair.g2;
      pm::PgmConfig cfg;
      cfg.r = match_r;
      cfg.admission = match_admission == "strict" ? pm::Admission::strict : pm::Admission::matched_only;
      cfg.directed = g1.directed() || match_directed;
      if (match_x > 0.0) {
        if (!truth.positions) throw pm::MissingPositions("--filter-geometric needs positions");
        double C = truth.meta.C;
        if (C <= 0.0) C = pm::resolve(match_model.params()).C;
        g1 = pm::filter_edges_geometric(g1, *truth.positions, match_x, C);
        g2 = pm::filter_edges_geometric(g2, truth.positions->permuted(pair.alignment), match_x, C);
      }
      if (match_knn > 0) {
        g1 = pm::filter_edges_nearest_k(g1, match_knn);
        g2 = pm::filter_edges_nearest_k(g2, match_knn);
      }
      auto res = pm::score(pair, seeds, pm::percolate(g1, g2, seeds, cfg, rng));
      res.rng_seed = match_seed;
      std::cout << pm::io::match_result_json(res, pair.size()) << '\n';
    } else if (*sweep) {
      auto spec = pm::parse_experiment_spec(read_file(sweep_spec));
      if (!sweep_out.empty()) spec.out_path = sweep_out;
      if (sweep_runs) spec.runs = *sweep_runs;
      if (sweep_threads) spec.threads = *sweep_threads;
      if (sweep_seed) spec.master_seed = *sweep_seed;
      if (spec.out_path.empty()) throw pm::ConfigError("no output directory (use --out)");
      const auto aggs = pm::run_experiment(spec);
      pm::write_aggregate_csv(std::cout, aggs);
    } else if (*pokec) {
      auto snap = pm::io::load_snap_edgelist(std::filesystem::path(pokec_in));
      const auto filtered = pm::degree_filter(snap.truth, pokec_min_in, pokec_max_out);
      json j = {{"raw", {{"n", snap.truth.size()}, {"edges", snap.truth.graph.edge_count()}}},
                {"filtered", summary_of(filtered)},
                {"min_in", pokec_min_in},
                {"max_out", pokec_max_out}};
      std::cout << j.dump(2) << '\n';
      if (!pokec_ingest_only) {
        if (pokec_out.empty()) throw pm::ConfigError("pokec sweep needs --out");
        json spec = {{"scenario", "pokec"},
                     {"model", {{"kind", "file"}, {"path", pokec_in}, {"min_in", pokec_min_in}, {"max_out", pokec_max_out}}},
                     {"runs", pokec_runs},
                     {"out", pokec_out}};
        if (!pokec_seeds.empty()) spec["seed_counts"] = pokec_seeds;
        const auto aggs = pm::run_experiment(pm::parse_experiment_spec(spec.dump()));
        pm::write_aggregate_csv(std::cout, aggs);
      }
    }
  } catch (const pm::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const pm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return 0;
}
