#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percomatch/graph.hpp"
#include "percomatch/rng.hpp"

namespace percomatch {

/// User-facing parameterization of the clustered geometric model.
///
/// Exactly two of {cluster_scale, cluster_density, target_degree} determine
/// the model; the third is derived by `resolve`. Giving all three is accepted
/// only when they agree.
struct ModelParams {
  std::size_t n = 10'000;
  int k = 2;
  double beta = 3.0;  ///< power-law decay exponent; +inf gives a hard disk model
  std::optional<double> cluster_scale;    ///< C, plateau radius
  std::optional<double> cluster_density;  ///< K, short-range edge probability
  std::optional<double> target_degree;    ///< D, desired mean degree
  double sample_prob = 0.8;               ///< s

  void validate() const;
};

/// Model with concrete C and K.
struct ResolvedModel {
  std::size_t n = 0;
  int k = 2;
  double beta = 3.0;
  double C = 0.0;
  double K = 0.0;
  double s = 0.8;

  double expected_degree() const;
};

ResolvedModel resolve(const ModelParams& params);

/// Points of the k-torus, stored row-major (node, coordinate).
class Positions {
 public:
  Positions() = default;
  Positions(int k, std::vector<double> coords);

  int dim() const noexcept { return k_; }
  std::size_t size() const noexcept { return k_ == 0 ? 0 : coords_.size() / static_cast<std::size_t>(k_); }
  std::span<const double> operator[](std::size_t i) const noexcept {
    return {coords_.data() + i * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }
  const std::vector<double>& raw() const noexcept { return coords_; }

  /// positions of a relabeled copy: result[new_id] = (*this)[old_of_new[new_id]].
  Positions permuted(std::span<const Node> old_of_new) const;

  friend bool operator==(const Positions&, const Positions&) = default;

 private:
  int k_ = 0;
  std::vector<double> coords_;
};

struct GraphMeta {
  std::size_t n = 0;
  int k = 0;
  double beta = 0.0;
  double C = 0.0;
  double K = 0.0;
  std::uint64_t seed = 0;
  double er_p = 0.0;  ///< set for Erdos-Renyi graphs
  /// Distance beyond which pairs are drawn by thinning instead of enumerated.
  double near_radius = 0.0;
  /// Expected number of edges the generator can miss. Thinning is exact, so 0.
  double expected_missed_edges = 0.0;
  std::string kind;  ///< "geometric", "erdos_renyi" or "loaded"
};

struct GroundTruthGraph {
  Graph graph;
  std::optional<Positions> positions;
  GraphMeta meta;
  std::size_t size() const noexcept { return graph.size(); }
};

/// Minimum-image Euclidean distance on the unit torus.
double torus_distance(std::span<const double> a, std::span<const double> b);

/// Distance profile f(d) = min{1, (C/d)^beta}.
double decay(double d, double C, double beta) noexcept;

/// Smallest d with f(d) <= y, for y in (0, 1].
double decay_inverse(double y, double C, double beta);

/// K f(d).
double edge_probability(double d, const ResolvedModel& model);

double unit_ball_volume(int k);

struct IntegralEstimate {
  double value = 0.0;
  double error = 0.0;  ///< absolute error estimate
  std::string method;
};

/// Integral of f(|x|) over the torus.
IntegralEstimate kernel_integral(int k, double beta, double C);

/// K such that (n-1) K ∫f = target_degree. Throws InfeasibleDegree if K > 1.
double calibrate_density(std::size_t n, int k, double beta, double C, double target_degree);

/// C such that (n-1) K ∫f = target_degree for a fixed K.
double calibrate_scale(std::size_t n, int k, double beta, double K, double target_degree);

GroundTruthGraph generate_ground_truth(const ResolvedModel& model, Rng& rng);

GroundTruthGraph generate_er(std::size_t n, double p, Rng& rng);

}  // namespace percomatch
