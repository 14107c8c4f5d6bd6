#include <doctest.h>

#include <cmath>

#include "percomatch/errors.hpp"
#include "percomatch/sampling.hpp"
#include "support.hpp"

using namespace percomatch;

namespace {

std::vector<Edge> relabeled_g2(const GraphPair& p) {
  std::vector<Edge> out;
  for (auto e : p.g2.edges()) {
    Node u = p.alignment[e.u], v = p.alignment[e.v];
    if (u > v) std::swap(u, v);
    out.push_back({u, v});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("s = 1 and s = 0") {
  Rng rng(1);
  const auto truth = testsupport::wrap(testsupport::random_gnp(80, 0.1, rng));
  const auto full = sample_pair(truth, 1.0, rng);
  CHECK(full.g1 == truth.graph);
  CHECK(relabeled_g2(full) == truth.graph.edges());
  const auto none = sample_pair(truth, 0.0, rng);
  CHECK(none.g1.edge_count() == 0);
  CHECK(none.g2.edge_count() == 0);
  CHECK(none.size() == 80);
}

TEST_CASE("alignment is a bijection and g2 edges are truth edges") {
  Rng rng(2);
  const auto truth = testsupport::wrap(testsupport::random_gnp(200, 0.05, rng));
  const auto p = sample_pair(truth, 0.7, rng);
  auto sorted = p.alignment;
  std::sort(sorted.begin(), sorted.end());
  for (Node i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  for (auto e : relabeled_g2(p)) CHECK(truth.graph.has_edge(e.u, e.v));
  for (auto e : p.g1.edges()) CHECK(truth.graph.has_edge(e.u, e.v));
  const auto inv = p.inverse_alignment();
  for (Node i = 0; i < 200; ++i) CHECK(p.alignment[inv[i]] == i);
}

TEST_CASE("edge count moments at s = 0.8") {
  ModelParams mp;
  mp.cluster_density = 0.2;
  mp.target_degree = 30;
  Rng rng(3);
  const auto truth = generate_ground_truth(resolve(mp), rng);
  const double E = static_cast<double>(truth.graph.edge_count());
  const double sigma = std::sqrt(E * 0.8 * 0.2);
  const auto p = sample_pair(truth, 0.8, rng);
  CHECK(std::abs(static_cast<double>(p.g1.edge_count()) - 0.8 * E) < 3 * sigma);
  CHECK(std::abs(static_cast<double>(p.g2.edge_count()) - 0.8 * E) < 3 * sigma);
}

TEST_CASE("an edge lands in both graphs with probability s^2") {
  const std::vector<Edge> e{{0, 1}};
  const auto truth = testsupport::wrap(Graph::from_edges(2, e));
  Rng rng(4);
  const int reps = 20'000;
  const double s = 0.6;
  int both = 0;
  for (int i = 0; i < reps; ++i) {
    const auto p = sample_pair(truth, s, rng);
    both += p.g1.edge_count() == 1 && p.g2.edge_count() == 1;
  }
  const double q = s * s, sigma = std::sqrt(reps * q * (1 - q));
  CHECK(std::abs(both - reps * q) < 3 * sigma);
}

TEST_CASE("is_good_pair") {
  auto p = testsupport::identity_pair(testsupport::path_graph(5));
  CHECK(is_good_pair(p, 3, 3));
  CHECK_FALSE(is_good_pair(p, 3, 4));
  std::swap(p.alignment[0], p.alignment[1]);
  CHECK(is_good_pair(p, 0, 1));
  CHECK_THROWS_AS(is_good_pair(p, 9, 0), InvalidNode);
}

TEST_CASE("directed edges are sampled per arc") {
  const std::vector<Edge> e{{0, 1}, {1, 0}, {1, 2}};
  auto truth = testsupport::wrap(Graph::from_edges(3, e, true));
  Rng rng(5);
  const auto p = sample_pair(truth, 1.0, rng);
  CHECK(p.g1.directed());
  CHECK(p.g2.directed());
  CHECK(p.g2.edge_count() == 3);
}
