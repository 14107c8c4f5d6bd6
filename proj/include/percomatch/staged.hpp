#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percomatch/estimation.hpp"
#include "percomatch/geo_model.hpp"
#include "percomatch/graph.hpp"
#include "percomatch/pgm.hpp"
#include "percomatch/rng.hpp"

namespace percomatch {

/// A ball or cube of the torus.
struct RegionSpec {
  enum class Shape { ball, cube };
  enum class Role { inner, intermediate, outer, left, right };

  std::vector<double> center;
  Shape shape = Shape::ball;
  double extent = 0.0;  ///< radius for balls, side for cubes
  Role role = Role::inner;

  void validate() const;
  bool contains(std::span<const double> point) const;
};

struct StagedConfig {
  double alpha1 = 0.5;     ///< strict classification threshold
  double alpha2 = 0.25;    ///< loose classification threshold
  double delta = 0.5;      ///< classification slack
  int r = 4;               ///< PGM threshold
  double alpha_exp = 3.75; ///< bipartite density exponent: p_max = m^(-alpha_exp / r)
  double lambda = 2.0;     ///< d_H / d_L
  std::optional<double> ring_step;  ///< default C / 2
  double ring_multiplier = 1.0;     ///< scales the ring-expansion threshold
  double stall_fraction = 0.005;    ///< dense loop stops after two rounds below this growth
  std::size_t max_rounds = 400;
  std::size_t anchors_per_round = 64;  ///< dense loop: compact groups examined per round

  void validate() const;
};

/// Number of seeds adjacent to each node.
std::vector<std::size_t> seed_neighbor_counts(const Graph& g, std::span<const Node> seeds);

/// Nodes with more than alpha * s * K * |seeds| seed neighbors, ascending.
std::vector<Node> classify_by_seed_count(const Graph& g, std::span<const Node> seeds, double alpha,
                                         double s, double K);

/// Pair space admitting [i1, j2] iff (i1 strict and j2 loose) or (j2 strict
/// and i1 loose), where strict/loose are the acceptances at alpha1/alpha2.
/// A bad pair can then only be admitted alongside one of its good pairs.
class RestrictedPairs {
 public:
  RestrictedPairs() = default;
  RestrictedPairs(std::size_t n1, std::size_t n2, std::span<const Node> strict1,
                  std::span<const Node> loose1, std::span<const Node> strict2,
                  std::span<const Node> loose2);

  bool operator()(Node i1, Node j2) const noexcept {
    return (strict1_[i1] && loose2_[j2]) || (strict2_[j2] && loose1_[i1]);
  }
  bool loose1(Node i) const noexcept { return loose1_[i]; }
  bool loose2(Node j) const noexcept { return loose2_[j]; }
  std::size_t loose1_count() const noexcept;
  std::size_t loose2_count() const noexcept;

  PairPredicate as_predicate() const;

 private:
  std::vector<bool> strict1_, loose1_, strict2_, loose2_;
};

/// Throws MonotonicityViolation unless strict ⊆ loose on both sides.
RestrictedPairs build_restricted_pairs(std::size_t n1, std::size_t n2, std::span<const Node> strict1,
                                       std::span<const Node> loose1, std::span<const Node> strict2,
                                       std::span<const Node> loose2);

/// Volume of the intersection of the ball of radius rho at the origin with
/// the ball of radius c at distance `center_distance`.
double lens_volume(int k, double rho, double c, double center_distance);

/// Support threshold for growing a matched disk of radius rho by C/2:
/// multiplier * n * |lens| * K / 4, lens taken at distance rho + C/2.
double ring_threshold(const ResolvedModel& model, double rho, double multiplier = 1.0);

/// Tracks which nodes of each graph are already taken.
class MatchedSet {
 public:
  MatchedSet(std::size_t n1, std::size_t n2) : used1_(n1, false), used2_(n2, false) {}
  explicit MatchedSet(const std::vector<NodePair>& pairs, std::size_t n1, std::size_t n2);

  bool free(Node i1, Node j2) const noexcept { return !used1_[i1] && !used2_[j2]; }
  bool used1(Node i) const noexcept { return used1_[i]; }
  bool used2(Node j) const noexcept { return used2_[j]; }
  void add(NodePair p);
  const std::vector<NodePair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }

 private:
  std::vector<bool> used1_, used2_;
  std::vector<NodePair> pairs_;
};

struct ThresholdMatch {
  std::vector<NodePair> added;
  double threshold = 0.0;
  std::size_t candidates = 0;  ///< pairs with nonzero support
};

/// Support of [u, v] = number of pairs [a, b] in `support_pairs` with a ~ u in
/// g1 and b ~ v in g2. Pairs with support >= max(1, threshold) that are free
/// in `taken` and satisfy `admissible` are matched greedily by descending
/// support, ties by (u, v). `taken` is updated.
ThresholdMatch greedy_threshold_match(const Graph& g1, const Graph& g2,
                                      std::span<const NodePair> support_pairs, double threshold,
                                      MatchedSet& taken, const PairPredicate& admissible = {});

/// One ring-expansion round around a matched bulk of radius rho.
/// Throws EmptyBulk when rho < C (no bulk disk to expand from).
ThresholdMatch ring_expand(const Graph& g1, const Graph& g2, MatchedSet& matched, double rho,
                           const ResolvedModel& model, double multiplier = 1.0);

/// Per-graph side membership for the bipartite matcher.
struct BipartiteSides {
  std::vector<bool> left1, right1;  ///< nodes of g1
  std::vector<bool> left2, right2;  ///< nodes of g2

  void validate(std::size_t n1, std::size_t n2) const;
  bool left_pair(Node i1, Node j2) const noexcept { return left1[i1] && left2[j2]; }
  bool right_pair(Node i1, Node j2) const noexcept { return right1[i1] && right2[j2]; }
};

struct BipartiteOutcome {
  MatchOutcome outcome;
  std::size_t left_matched = 0;   ///< non-seed pairs matched on the left
  std::size_t right_matched = 0;
  std::size_t cross_marks = 0;    ///< marks carried by left-right edge pairs
  std::size_t same_side_marks = 0;  ///< marks that landed on the drawing side; always 0
};

/// PGM where a matched left pair marks only right pairs and vice versa. Each
/// step draws one frontier pair per side while both are non-empty, then keeps
/// drawing from whichever side still has candidates.
BipartiteOutcome bipartite_pgm(const Graph& g1, const Graph& g2, const BipartiteSides& sides,
                               std::span<const NodePair> seeds_left,
                               std::span<const NodePair> seeds_right, const PgmConfig& config,
                               Rng& rng);

/// Matches right-hand pairs with at least |matched_left| * p_min / 2 adjacent
/// matched left pairs. `p_min` is the smallest probability that a good
/// cross pair is adjacent in both graphs.
ThresholdMatch threshold_match_rhs(const Graph& g1, const Graph& g2,
                                   std::span<const NodePair> matched_left,
                                   const std::vector<bool>& candidates1,
                                   const std::vector<bool>& candidates2, double p_min,
                                   MatchedSet& taken);

struct RoundRecord {
  std::size_t round = 0;
  std::string region;
  std::size_t candidates = 0;
  std::vector<NodePair> added;
};

struct PipelineOutcome {
  MatchOutcome outcome;  ///< matched pairs (seeds first) and step count
  std::vector<RoundRecord> rounds;
  std::vector<std::string> warnings;
};

/// Sparse-cluster procedure: two-threshold extraction around compact seeds,
/// PGM on the restricted pair space, then ring expansion until the matched set
/// stops growing for two consecutive rounds.
PipelineOutcome sparse_deanonymize(const Graph& g1, const Graph& g2,
                                   std::span<const NodePair> compact_seeds,
                                   const ResolvedModel& model, const StagedConfig& config,
                                   Rng& rng);

/// Side h, separation g and the cross-edge probability range of the two
/// seed regions used by the dense procedure.
struct RegionGeometry {
  double h = 0.0;
  double g = 0.0;
  double m = 0.0;      ///< expected nodes per region, n h^k
  double p_max = 0.0;  ///< K f(g)
  double p_min = 0.0;  ///< K f(g + sqrt(k) h)
  double target_p_max = 0.0;  ///< m^(-alpha_exp / r)
};

RegionGeometry choose_region_geometry(const ResolvedModel& model, const StagedConfig& config);

struct DenseSeeds {
  std::vector<NodePair> left;
  std::vector<NodePair> right;
};

/// Dense-cluster procedure: region extraction, bipartite PGM between the two
/// seed regions, threshold matching of the larger side, then repeated
/// band-edge expansion from compact groups of matched nodes.
PipelineOutcome dense_deanonymize(const Graph& g1, const Graph& g2, const DenseSeeds& seeds,
                                  const ResolvedModel& model, const StagedConfig& config,
                                  Rng& rng);

}  // namespace percomatch
