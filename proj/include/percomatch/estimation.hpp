#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "percomatch/geo_model.hpp"
#include "percomatch/graph.hpp"

namespace percomatch {

/// Number of common neighbors of i and j (common out-neighbors when directed).
std::size_t common_neighbors(const Graph& g, Node i, Node j);

/// Tabulated, strictly decreasing map from distance to the expected number of
/// common neighbors of two nodes at that distance in one observed graph.
struct DistanceCalibration {
  ResolvedModel model;
  std::vector<double> distances;  ///< ascending, distances.front() == 0
  std::vector<double> expected;   ///< strictly decreasing
  double d_max = 0.0;
  double max_abs_error = 0.0;     ///< quadrature error bound over the table

  /// Piecewise-linear expected count at distance d (clamped to the table).
  double expected_at(double d) const;
};

struct CalibrationOptions {
  std::size_t grid_points = 256;
  double safety_factor = 4.0;  ///< multiplies C (n K^2 C^k)^(1/beta)
  double max_distance = 0.45;  ///< hard cap below the torus half-width
};

/// Throws NonMonotone when the integrated table is not strictly decreasing.
DistanceCalibration build_distance_calibration(const ResolvedModel& model,
                                               const CalibrationOptions& options = {});

/// ∫ f(|x|) f(|x - d e1|) dx over the torus.
double overlap_integral(int k, double beta, double C, double d);

struct DistanceEstimate {
  double distance = 0.0;
  bool saturated = false;  ///< count below the table; distance clamped to d_max
};

DistanceEstimate estimate_distance(double count, const DistanceCalibration& cal);

/// Removes every edge shorter than x_factor * C. `positions` are indexed by
/// the graph's own labels.
Graph filter_edges_geometric(const Graph& g, const Positions& positions, double x_factor, double C);
Graph filter_edges_geometric(const Graph& g, const std::optional<Positions>& positions,
                             double x_factor, double C);

/// Every node marks its k_nearest incident edges with the most common
/// neighbors (ties by lower neighbor id); marked edges are removed.
/// Counts come from the input graph only.
Graph filter_edges_nearest_k(const Graph& g, std::size_t k_nearest);

struct EdgePartition {
  std::vector<Edge> short_edges;  ///< estimate < d_L
  std::vector<Edge> band_edges;   ///< d_L <= estimate <= d_H
  std::vector<Edge> long_edges;   ///< estimate > d_H, or saturated
};

EdgePartition classify_edge_lengths(const Graph& g, const DistanceCalibration& cal, double d_L,
                                    double d_H);

/// Same, restricted to edges with at least one endpoint in `sources`.
EdgePartition classify_edge_lengths(const Graph& g, const DistanceCalibration& cal, double d_L,
                                    double d_H, std::span<const Node> sources);

/// Nodes whose estimated distance from `center` is below d_T, center included,
/// in ascending id order.
std::vector<Node> select_nodes_within(const Graph& g, Node center, double d_T,
                                      const DistanceCalibration& cal);

/// Band thresholds for edge classification: d_L = C ln(n^(1/k) C) clamped to [C, d_max / lambda],
/// d_H = lambda d_L.
std::pair<double, double> default_band(const DistanceCalibration& cal, double lambda);

}  // namespace percomatch
