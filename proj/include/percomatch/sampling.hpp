#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "percomatch/geo_model.hpp"
#include "percomatch/graph.hpp"
#include "percomatch/rng.hpp"

namespace percomatch {

/// A view available to the attacker. Same representation as any graph.
using ObservedGraph = Graph;

struct SourceMeta {
  GraphMeta truth;
  double s = 0.0;
  std::uint64_t seed = 0;
};

/// Two observed graphs plus the secret alignment.
///
/// `alignment[j2]` is the g1 label of g2's node j2. Only scoring code reads it;
/// matchers take the two graphs and never see the pair.
struct GraphPair {
  ObservedGraph g1;
  ObservedGraph g2;
  std::vector<Node> alignment;
  SourceMeta meta;

  std::size_t size() const noexcept { return g1.size(); }

  /// g2 label of g1's node i (inverse of the alignment).
  std::vector<Node> inverse_alignment() const;
};

/// Samples each ground-truth edge into g1 and, independently, into g2 with
/// probability s, then relabels g2 by a uniform permutation.
GraphPair sample_pair(const GroundTruthGraph& truth, double s, Rng& rng);

/// True iff the secret alignment maps j2 onto i1.
bool is_good_pair(const GraphPair& pair, Node i1, Node j2);

}  // namespace percomatch
