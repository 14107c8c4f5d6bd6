#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percomatch/graph.hpp"
#include "percomatch/rng.hpp"
#include "percomatch/sampling.hpp"

namespace percomatch {

/// Candidate match [i1, j2]: node i1 of g1 and node j2 of g2.
struct NodePair {
  Node first = 0;
  Node second = 0;
  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

/// Restricts which pairs may ever enter the frontier. Empty means all pairs.
using PairPredicate = std::function<bool(Node, Node)>;

/// When a pair reaching r marks is turned away.
///   strict:       if it shares a node with any matched or frontier pair
///   matched_only: if it shares a node with a matched pair or a seed; frontier
///                 pairs may overlap, and a drawn pair whose node was matched
///                 in the meantime is dropped without counting as a step
enum class Admission { strict, matched_only };

struct PgmConfig {
  int r = 5;               ///< mark threshold
  Admission admission = Admission::strict;
  bool directed = false;   ///< must match the graphs; marks then follow out-edges
  PairPredicate admissible;
  std::string edge_filter;  ///< label of the filter applied to the inputs, if any
  std::optional<std::size_t> max_steps;
  bool record_trace = false;

  void validate(std::size_t n) const;
};

/// What the matcher itself produces; contains nothing about the alignment.
struct MatchOutcome {
  std::vector<NodePair> matched;  ///< in match order, seeds included
  std::vector<std::size_t> frontier_trace;
  std::size_t steps = 0;
  std::size_t marks = 0;  ///< counter increments performed
};

struct MatchResult {
  std::vector<NodePair> matched_pairs;
  std::size_t seed_count = 0;
  std::size_t good_count = 0;  ///< non-seed good pairs
  std::size_t bad_count = 0;
  double error_ratio = 0.0;
  std::vector<std::size_t> frontier_trace;
  std::size_t steps = 0;
  std::uint64_t rng_seed = 0;
};

/// Percolation graph matching over the lazily explored pairs graph.
///
/// At every step one frontier pair is drawn uniformly (one engine value),
/// matched, and every pair in N1(z1) x N2(z2) receives a mark. Pairs reaching
/// exactly r marks in that step are examined in ascending (i1, j2) order and
/// enter the frontier unless they share a node with a matched or frontier
/// pair; otherwise they are discarded for good.
MatchOutcome percolate(const ObservedGraph& g1, const ObservedGraph& g2,
                       std::span<const NodePair> seeds, const PgmConfig& config, Rng& rng);

/// Same process with the full n x n counter matrix; for n <= 200 only.
MatchOutcome percolate_bruteforce(const ObservedGraph& g1, const ObservedGraph& g2,
                                  std::span<const NodePair> seeds, const PgmConfig& config,
                                  Rng& rng);

/// Counts good and bad pairs against the secret alignment. Seeds are
/// reported separately and excluded from both counts.
MatchResult score(const GraphPair& pair, std::span<const NodePair> seeds, MatchOutcome outcome);

MatchResult run_pgm(const GraphPair& pair, std::span<const NodePair> seeds, const PgmConfig& config,
                    Rng& rng);
MatchResult run_pgm_bruteforce(const GraphPair& pair, std::span<const NodePair> seeds,
                               const PgmConfig& config, Rng& rng);

/// Seed-set size above which PGM percolates on G(m, p) with sampling s,
/// evaluated in log space.
double critical_seed_size(double m, double p, double s, int r);

/// Throws ConflictingSeeds / InvalidNode when `seeds` is not a valid seed set.
void check_seeds(std::span<const NodePair> seeds, std::size_t n1, std::size_t n2);

}  // namespace percomatch
