#include "percomatch/sampling.hpp"

#include <numeric>

#include "percomatch/errors.hpp"

namespace percomatch {

std::vector<Node> GraphPair::inverse_alignment() const {
  std::vector<Node> inv(alignment.size());
  for (std::size_t j = 0; j < alignment.size(); ++j) inv[alignment[j]] = static_cast<Node>(j);
  return inv;
}

GraphPair sample_pair(const GroundTruthGraph& truth, double s, Rng& rng) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("sample_pair: s must lie in [0,1]");
  const Graph& t = truth.graph;
  const std::size_t n = t.size();
  const bool directed = t.directed();

  std::vector<Edge> e1, e2;
  const auto all = t.edges();
  e1.reserve(static_cast<std::size_t>(s * static_cast<double>(all.size())) + 16);
  e2.reserve(e1.capacity());
  for (const Edge& e : all) {
    if (bernoulli(rng, s)) e1.push_back(e);
    if (bernoulli(rng, s)) e2.push_back(e);
  }

  // Fisher-Yates: old_of_new[j2] = original label.
  std::vector<Node> old_of_new(n);
  std::iota(old_of_new.begin(), old_of_new.end(), Node{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::swap(old_of_new[i - 1], old_of_new[j]);
  }
  std::vector<Node> new_of_old(n);
  for (std::size_t j = 0; j < n; ++j) new_of_old[old_of_new[j]] = static_cast<Node>(j);
  for (Edge& e : e2) e = {new_of_old[e.u], new_of_old[e.v]};

  GraphPair out;
  out.g1 = Graph::from_edges(n, e1, directed);
  out.g2 = Graph::from_edges(n, e2, directed);
  out.alignment = std::move(old_of_new);
  out.meta = SourceMeta{truth.meta, s, 0};
  return out;
}

bool is_good_pair(const GraphPair& pair, Node i1, Node j2) {
  if (i1 >= pair.g1.size() || j2 >= pair.alignment.size())
    throw InvalidNode("is_good_pair: node id out of range");
  return pair.alignment[j2] == i1;
}

}  // namespace percomatch
