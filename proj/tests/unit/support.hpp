#pragma once

#include <numeric>
#include <vector>

#include "percomatch/geo_model.hpp"
#include "percomatch/graph.hpp"
#include "percomatch/rng.hpp"
#include "percomatch/sampling.hpp"

namespace testsupport {

using namespace percomatch;

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> e;
  for (Node i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return Graph::from_edges(n, e);
}

inline Graph random_tree(std::size_t n, Rng& rng) {
  std::vector<Edge> e;
  for (Node i = 1; i < n; ++i) e.push_back({static_cast<Node>(uniform_index(rng, i)), i});
  return Graph::from_edges(n, e);
}

inline Graph random_gnp(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> e;
  for (Node i = 0; i < n; ++i)
    for (Node j = i + 1; j < n; ++j)
      if (bernoulli(rng, p)) e.push_back({i, j});
  return Graph::from_edges(n, e);
}

/// Both observed graphs equal the truth, g2 keeps the truth's labels.
inline GraphPair identity_pair(const Graph& g) {
  GraphPair p;
  p.g1 = g;
  p.g2 = g;
  p.alignment.resize(g.size());
  std::iota(p.alignment.begin(), p.alignment.end(), Node{0});
  return p;
}

inline GroundTruthGraph wrap(Graph g) {
  GroundTruthGraph t;
  t.meta.n = g.size();
  t.graph = std::move(g);
  return t;
}

}  // namespace testsupport
