#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace percomatch {

using Node = std::uint32_t;

/// An edge (u, v). For undirected graphs edges are reported with u < v.
struct Edge {
  Node u = 0;
  Node v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable simple graph in compressed sparse row form.
///
/// Neighbor lists are sorted ascending, free of duplicates and self-loops.
/// For directed graphs the stored lists are out-neighborhoods.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an arbitrary edge list. Self-loops and repeated
  /// edges are dropped; undirected input is symmetrized.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges, bool directed = false);

  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  bool directed() const noexcept { return directed_; }

  /// Number of edges (arcs when directed).
  std::size_t edge_count() const noexcept {
    return directed_ ? targets_.size() : targets_.size() / 2;
  }

  std::span<const Node> neighbors(Node v) const noexcept {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Node v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const noexcept;
  double mean_degree() const noexcept;

  bool has_edge(Node u, Node v) const noexcept;

  /// Edge list; u < v for undirected graphs, every arc for directed ones.
  std::vector<Edge> edges() const;

  std::vector<std::size_t> in_degrees() const;

  /// Undirected view (identity for undirected graphs).
  Graph symmetrized() const;

  /// Subgraph induced by `keep`; `old_ids[new] = old` is written when non-null.
  Graph induced(const std::vector<bool>& keep, std::vector<Node>* old_ids = nullptr) const;

  /// Same node set, keeping only edges for which `keep_edge(u, v)` holds.
  /// For undirected graphs the predicate is evaluated once per edge with u < v.
  template <class Pred>
  Graph filtered(Pred&& keep_edge) const {
    std::vector<Edge> kept;
    kept.reserve(directed_ ? targets_.size() : targets_.size() / 2);
    for (Node u = 0; u < size(); ++u)
      for (Node v : neighbors(u))
        if ((directed_ || u < v) && keep_edge(u, v)) kept.push_back({u, v});
    return from_edges(size(), kept, directed_);
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Node> targets_;
  bool directed_ = false;
};

/// |N(i) ∩ N(j)| of two sorted lists.
std::size_t sorted_intersection_size(std::span<const Node> a, std::span<const Node> b) noexcept;

/// Mean of the local clustering coefficients; nodes of degree < 2 contribute 0.
/// Directed graphs are measured on their undirected view.
double average_clustering(const Graph& g);

/// 3 x triangles / connected triples.
double transitivity(const Graph& g);

}  // namespace percomatch
