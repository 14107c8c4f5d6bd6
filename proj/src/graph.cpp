#include "percomatch/graph.hpp"

#include <algorithm>
#include <numeric>

namespace percomatch {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges, bool directed) {
  Graph g;
  g.directed_ = directed;
  std::vector<std::size_t> deg(n + 1, 0);
  for (const auto& e : edges) {
    if (e.u == e.v) continue;
    ++deg[e.u];
    if (!directed) ++deg[e.v];
  }
  g.offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
  std::vector<Node> targets(g.offsets_[n]);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& e : edges) {
    if (e.u == e.v) continue;
    targets[fill[e.u]++] = e.v;
    if (!directed) targets[fill[e.v]++] = e.u;
  }
  // sort and dedupe each list, then compact
  std::vector<std::size_t> offsets(n + 1, 0);
  std::size_t out = 0;
  for (std::size_t v = 0; v < n; ++v) {
    auto first = targets.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]);
    auto last = targets.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]);
    std::sort(first, last);
    auto uend = std::unique(first, last);
    offsets[v] = out;
    for (auto it = first; it != uend; ++it) targets[out++] = *it;
  }
  offsets[n] = out;
  targets.resize(out);
  g.offsets_ = std::move(offsets);
  g.targets_ = std::move(targets);
  return g;
}

std::size_t Graph::max_degree() const noexcept {
  std::size_t best = 0;
  for (Node v = 0; v < size(); ++v) best = std::max(best, degree(v));
  return best;
}

double Graph::mean_degree() const noexcept {
  return size() == 0 ? 0.0 : static_cast<double>(targets_.size()) / static_cast<double>(size());
}

bool Graph::has_edge(Node u, Node v) const noexcept {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (Node u = 0; u < size(); ++u)
    for (Node v : neighbors(u))
      if (directed_ || u < v) out.push_back({u, v});
  return out;
}

std::vector<std::size_t> Graph::in_degrees() const {
  std::vector<std::size_t> in(size(), 0);
  for (Node t : targets_) ++in[t];
  return in;
}

Graph Graph::symmetrized() const {
  if (!directed_) return *this;
  auto e = edges();
  return from_edges(size(), e, false);
}

Graph Graph::induced(const std::vector<bool>& keep, std::vector<Node>* old_ids) const {
  constexpr Node none = ~Node{0};
  std::vector<Node> new_id(size(), none);
  std::vector<Node> olds;
  for (Node v = 0; v < size(); ++v)
    if (keep[v]) {
      new_id[v] = static_cast<Node>(olds.size());
      olds.push_back(v);
    }
  std::vector<Edge> kept;
  for (Node u = 0; u < size(); ++u) {
    if (new_id[u] == none) continue;
    for (Node v : neighbors(u))
      if (new_id[v] != none && (directed_ || u < v)) kept.push_back({new_id[u], new_id[v]});
  }
  if (old_ids) *old_ids = olds;
  return from_edges(olds.size(), kept, directed_);
}

std::size_t sorted_intersection_size(std::span<const Node> a, std::span<const Node> b) noexcept {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

namespace {

// triangles through each node, counted on an undirected graph
std::vector<std::size_t> triangles_per_node(const Graph& g) {
  std::vector<std::size_t> tri(g.size(), 0);
  for (Node u = 0; u < g.size(); ++u) {
    auto nu = g.neighbors(u);
    for (Node v : nu) {
      if (v <= u) continue;
      auto nv = g.neighbors(v);
      // common neighbors w > v close triangles u < v < w exactly once
      auto i = std::upper_bound(nu.begin(), nu.end(), v);
      auto j = std::upper_bound(nv.begin(), nv.end(), v);
      while (i != nu.end() && j != nv.end()) {
        if (*i < *j) {
          ++i;
        } else if (*j < *i) {
          ++j;
        } else {
          ++tri[u];
          ++tri[v];
          ++tri[*i];
          ++i;
          ++j;
        }
      }
    }
  }
  return tri;
}

}  // namespace

double average_clustering(const Graph& graph) {
  const Graph g = graph.symmetrized();
  if (g.size() == 0) return 0.0;
  auto tri = triangles_per_node(g);
  double sum = 0.0;
  for (Node v = 0; v < g.size(); ++v) {
    const double d = static_cast<double>(g.degree(v));
    if (d >= 2) sum += 2.0 * static_cast<double>(tri[v]) / (d * (d - 1));
  }
  return sum / static_cast<double>(g.size());
}

double transitivity(const Graph& graph) {
  const Graph g = graph.symmetrized();
  auto tri = triangles_per_node(g);
  double closed = 0.0, triples = 0.0;
  for (Node v = 0; v < g.size(); ++v) {
    const double d = static_cast<double>(g.degree(v));
    closed += static_cast<double>(tri[v]);
    triples += d * (d - 1) / 2.0;
  }
  return triples == 0.0 ? 0.0 : closed / triples;
}

}  // namespace percomatch
