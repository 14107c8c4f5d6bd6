#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "percomatch/geo_model.hpp"
#include "percomatch/pgm.hpp"
#include "percomatch/sampling.hpp"
#include "percomatch/staged.hpp"

namespace percomatch {

enum class Scenario {
  fig1_sweep,
  fig2_error_vs_K,
  fig3_algorithms,
  fig4_filter_sweep,
  table2_inverse,
  er_baseline,
  pokec,
  custom
};

enum class AlgorithmKind {
  pgm,
  pgm_filtered_geometric,
  pgm_filtered_nearest_k,
  sparse_pipeline,
  dense_pipeline
};

enum class SeedStrategy { uniform, compact };

struct Algorithm {
  AlgorithmKind kind = AlgorithmKind::pgm;
  int r = 5;
  double x_factor = 1.0;       ///< geometric filter: drop edges shorter than x C
  std::size_t k_nearest = 10;  ///< nearest-k filter
  Admission admission = Admission::strict;
};

/// Where ground-truth graphs come from.
struct ModelSource {
  enum class Kind { geometric, erdos_renyi, file };
  Kind kind = Kind::geometric;
  ModelParams params;              ///< geometric; also n and D for Erdos-Renyi
  std::optional<double> er_p;      ///< defaults to D / (n - 1)
  std::string graph_path;          ///< SNAP edge list for Kind::file
  std::shared_ptr<const GroundTruthGraph> loaded;  ///< filled once for Kind::file
};

/// One grid point of an experiment.
struct PointSpec {
  std::size_t index = 0;
  std::string label;
  ModelSource model;
  Algorithm algorithm;
  SeedStrategy seeds = SeedStrategy::compact;
  std::size_t a0 = 0;
  double s = 0.8;
  StagedConfig staged;
};

struct ExperimentSpec {
  Scenario scenario = Scenario::custom;
  ModelSource model;
  Algorithm algorithm;
  SeedStrategy seed_strategy = SeedStrategy::compact;
  std::vector<std::size_t> seed_counts;
  std::size_t runs = 100;
  std::uint64_t master_seed = 1;
  std::filesystem::path out_path;
  double percolation_fraction = 0.5;
  bool count_seeds = false;  ///< add seeds to the good count
  std::size_t threads = 0;   ///< 0: hardware concurrency
  StagedConfig staged;
  /// Partial overrides, one sweep line each: {"label", "K", "C", "D", "beta",
  /// "n", "er_p", "r", "x", "k_nearest", "algorithm", "seeds"}.
  std::vector<std::string> variant_json;

  void validate() const;
};

/// Parses an ExperimentSpec JSON document. Scenario presets fill defaults
/// that explicit fields override. Throws ConfigError.
ExperimentSpec parse_experiment_spec(const std::string& json_text);

std::vector<PointSpec> expand_points(const ExperimentSpec& spec);

struct RunRecord {
  std::size_t point = 0;
  std::string label;
  std::size_t a0 = 0;
  std::size_t run = 0;
  std::size_t n = 0;
  std::size_t good = 0;
  std::size_t bad = 0;
  double error_ratio = 0.0;
  bool percolated = false;
  std::size_t steps = 0;
  double wall_ms = 0.0;
  std::uint64_t run_seed = 0;
};

struct PointAggregate {
  std::size_t point = 0;
  std::string label;
  std::size_t a0 = 0;
  std::size_t runs = 0;
  double mean_good = 0.0;
  double mean_bad = 0.0;
  double mean_error_ratio = 0.0;    ///< mean of per-run ratios
  double pooled_error_ratio = 0.0;  ///< mean bad / (mean good + mean bad)
  double percolation_probability = 0.0;
};

/// a0 distinct good pairs chosen uniformly.
std::vector<NodePair> seeds_uniform(const GraphPair& pair, std::size_t a0, Rng& rng);

/// Uniform center plus its a0 - 1 closest nodes: by torus distance when the
/// ground truth has positions, else by common neighbors with the center in
/// the ground truth (descending, ties by id).
std::vector<NodePair> seeds_compact(const GraphPair& pair, const GroundTruthGraph& truth,
                                    std::size_t a0, Rng& rng);

/// Keeps nodes with in-degree > min_in and out-degree < max_out, degrees
/// measured once on the input; returns the induced subgraph.
GroundTruthGraph degree_filter(const GroundTruthGraph& g, std::size_t min_in, std::size_t max_out,
                               std::vector<Node>* old_ids = nullptr);

struct RunOptions {
  std::uint64_t master_seed = 1;
  double percolation_fraction = 0.5;
  bool count_seeds = false;
};

/// One (graph, sampling, seeds, match) realization of a grid point.
RunRecord run_single(const PointSpec& point, std::size_t run, const RunOptions& options);

using RunKey = std::pair<std::size_t, std::size_t>;  ///< (point, run)

/// Executes every (point, run) not in `skip` on a pool of `threads` workers.
/// Records come back sorted by (point, run).
std::vector<RunRecord> run_points(std::span<const PointSpec> points, std::size_t runs,
                                  const RunOptions& options, std::size_t threads = 0,
                                  const std::set<RunKey>& skip = {},
                                  const std::function<void(const RunRecord&)>& on_record = {});

std::vector<PointAggregate> aggregate(std::span<const RunRecord> records);

/// Smallest a0 at which the percolation probability reaches `level`,
/// linearly interpolated between grid points; nullopt if never reached.
/// `aggregates` must belong to one sweep line, ascending in a0.
std::optional<double> percolation_point(std::span<const PointAggregate> aggregates,
                                        double level = 0.5);

/// Runs the spec and writes <out>/runs.csv, <out>/aggregate.csv and
/// <out>/summary.json. Completed (point, run) rows already in runs.csv are kept.
std::vector<PointAggregate> run_experiment(const ExperimentSpec& spec);

void write_runs_csv(std::ostream& out, std::span<const RunRecord> records,
                    std::span<const PointSpec> points);
std::vector<RunRecord> read_runs_csv(const std::filesystem::path& path);
void write_aggregate_csv(std::ostream& out, std::span<const PointAggregate> aggregates);

std::string to_string(Scenario s);
std::string to_string(AlgorithmKind a);
std::string to_string(SeedStrategy s);

}  // namespace percomatch
