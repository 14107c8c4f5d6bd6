#include "percomatch/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include "percomatch/errors.hpp"
#include "quadrature.hpp"

namespace percomatch {

namespace {

void check_node(const Graph& g, Node v) {
  if (v >= g.size()) throw InvalidNode("node id " + std::to_string(v) + " out of range");
}

double wrap(double x) { return x - std::round(x); }

std::vector<double> clip_kinks(std::initializer_list<double> xs, double lo, double hi) {
  std::vector<double> out;
  for (double x : xs)
    if (x > lo && x < hi && std::isfinite(x)) out.push_back(x);
  return out;
}

detail::Quad overlap_k1(double beta, double C, double d) {
  auto g = [&](double x) { return decay(std::abs(x), C, beta) * decay(std::abs(wrap(x - d)), C, beta); };
  return detail::integrate(g, -0.5, 0.5,
                           clip_kinks({-C, C, 0.0, d - C, d, d + C, d - 0.5, d - 1.0 + C, d + 1.0 - C},
                                      -0.5, 0.5),
                           1e-11);
}

// Polar coordinates around the first node; the second sits at (d, 0).
detail::Quad overlap_k2(double beta, double C, double d) {
  const double rho_max = std::numbers::sqrt2 / 2;
  double inner_err = 0.0;
  std::size_t inner_calls = 0;
  auto radial = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    auto h = [&](double th) {
      const double dx = wrap(rho * std::cos(th) - d);
      const double dy = rho * std::sin(th);
      return decay(std::hypot(dx, dy), C, beta);
    };
    std::vector<double> kinks;
    auto add_cos = [&](double c) {
      if (c > -1.0 && c < 1.0) kinks.push_back(std::acos(c));
    };
    if (d > 0.0) {
      add_cos((rho * rho + d * d - C * C) / (2.0 * rho * d));
      add_cos((C * C - rho * rho - (1.0 - d) * (1.0 - d)) / (2.0 * rho * (1.0 - d)));
      add_cos((d - 0.5) / rho);
    }
    detail::Quad q;
    auto piece = [&](double a, double b) {
      auto r = detail::integrate<decltype(h)&, 61>(h, a, b, kinks, 1e-10, 0);
      q.value += r.value;
      q.error += r.error;
    };
    if (rho <= 0.5) {
      piece(0.0, std::numbers::pi);
    } else {
      const double a = std::acos(0.5 / rho), b = std::asin(0.5 / rho);
      piece(a, b);
      piece(std::numbers::pi - b, std::numbers::pi - a);
    }
    ++inner_calls;
    inner_err += 2.0 * rho * decay(rho, C, beta) * q.error;
    return 2.0 * rho * decay(rho, C, beta) * q.value;
  };
  auto kinks = clip_kinks({C, 0.5, d, std::abs(d - C), d + C, 0.5 - d, 1.0 - d - C, 1.0 - d + C,
                           std::sqrt(0.25 + (0.5 - d) * (0.5 - d))},
                          0.0, rho_max);
  auto q = detail::integrate<decltype(radial)&, 61>(radial, 0.0, rho_max, kinks, 1e-10, 1);
  // mean inner error times the radial range
  if (inner_calls > 0) q.error += rho_max * inner_err / static_cast<double>(inner_calls);
  return q;
}

// Both distances depend on x1 and x2^2 + x3^2 only, so integrate x1 against the
// radius in the (x2, x3) unit square, weighted by the arc length inside it.
detail::Quad overlap_k3(double beta, double C, double d) {
  const double rho_max = std::numbers::sqrt2 / 2;
  auto arc = [](double rho) {
    const double full = 2.0 * std::numbers::pi * rho;
    return rho <= 0.5 ? full : full - 8.0 * rho * std::acos(0.5 / rho);
  };
  double inner_err = 0.0;
  std::size_t inner_calls = 0;
  auto slab = [&](double x1) {
    const double x2 = wrap(x1 - d);
    auto h = [&](double rho) {
      const double r2 = rho * rho;
      return arc(rho) * decay(std::sqrt(x1 * x1 + r2), C, beta) * decay(std::sqrt(x2 * x2 + r2), C, beta);
    };
    const double k1 = C * C - x1 * x1, k2 = C * C - x2 * x2;
    auto q = detail::integrate<decltype(h)&, 31>(
        h, 0.0, rho_max,
        clip_kinks({0.5, k1 > 0 ? std::sqrt(k1) : -1.0, k2 > 0 ? std::sqrt(k2) : -1.0}, 0.0, rho_max),
        1e-8, 6);
    ++inner_calls;
    inner_err += q.error;
    return q.value;
  };
  auto q = detail::integrate<decltype(slab)&, 31>(
      slab, -0.5, 0.5,
      clip_kinks({-C, C, 0.0, d - C, d, d + C, d - 0.5, d - 1.0 + C, d + 1.0 - C}, -0.5, 0.5), 1e-8,
      6);
  if (inner_calls > 0) q.error += inner_err / static_cast<double>(inner_calls);
  return q;
}

detail::Quad overlap_qmc(int k, double beta, double C, double d) {
  constexpr std::size_t points = 1u << 16;
  constexpr int shifts = 8;
  Rng rng(0x0e71a9c0ffeeULL);
  std::vector<double> x(static_cast<std::size_t>(k)), shift(static_cast<std::size_t>(k));
  double sum = 0.0, sum_sq = 0.0;
  for (int sh = 0; sh < shifts; ++sh) {
    for (auto& v : shift) v = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 1; i <= points; ++i) {
      double r1 = 0.0, r2 = 0.0;
      for (int c = 0; c < k; ++c) {
        double u = detail::radical_inverse(i, detail::nth_prime(c)) + shift[static_cast<std::size_t>(c)];
        u = u - std::floor(u) - 0.5;
        r1 += u * u;
        const double w = c == 0 ? wrap(u - d) : u;
        r2 += w * w;
      }
      acc += decay(std::sqrt(r1), C, beta) * decay(std::sqrt(r2), C, beta);
    }
    acc /= static_cast<double>(points);
    sum += acc;
    sum_sq += acc * acc;
  }
  const double mean = sum / shifts;
  const double var = std::max(0.0, sum_sq / shifts - mean * mean);
  return {mean, 3.0 * std::sqrt(var / (shifts - 1))};
}

detail::Quad overlap_quad(int k, double beta, double C, double d) {
  if (k < 1) throw DomainError("overlap_integral: k must be >= 1");
  if (!(C > 0.0)) throw DomainError("overlap_integral: C must be positive");
  if (!(d >= 0.0)) throw DomainError("overlap_integral: d must be >= 0");
  if (k == 1) return overlap_k1(beta, C, d);
  if (k == 2) return overlap_k2(beta, C, d);
  if (k == 3) return overlap_k3(beta, C, d);
  return overlap_qmc(k, beta, C, d);
}

}  // namespace

std::size_t common_neighbors(const Graph& g, Node i, Node j) {
  check_node(g, i);
  check_node(g, j);
  return sorted_intersection_size(g.neighbors(i), g.neighbors(j));
}

double overlap_integral(int k, double beta, double C, double d) {
  return overlap_quad(k, beta, C, d).value;
}

double DistanceCalibration::expected_at(double d) const {
  if (d <= distances.front()) return expected.front();
  if (d >= distances.back()) return expected.back();
  const auto it = std::upper_bound(distances.begin(), distances.end(), d);
  const auto i = static_cast<std::size_t>(it - distances.begin()) - 1;
  const double t = (d - distances[i]) / (distances[i + 1] - distances[i]);
  return expected[i] + t * (expected[i + 1] - expected[i]);
}

DistanceCalibration build_distance_calibration(const ResolvedModel& model,
                                               const CalibrationOptions& opt) {
  if (!(model.beta > model.k)) throw DomainError("calibration: beta must exceed k");
  if (!(model.K > 0.0 && model.C > 0.0)) throw DomainError("calibration: C and K must be positive");
  if (opt.grid_points < 3) throw DomainError("calibration: need at least 3 grid points");

  DistanceCalibration cal;
  cal.model = model;
  const double spread =
      std::isinf(model.beta)
          ? 1.0
          : std::pow(static_cast<double>(model.n) * model.K * model.K * std::pow(model.C, model.k),
                     1.0 / model.beta);
  cal.d_max = std::min(opt.safety_factor * model.C * spread, opt.max_distance);
  if (std::isinf(model.beta)) cal.d_max = std::min(cal.d_max, 1.99 * model.C);

  const std::size_t m = opt.grid_points;
  cal.distances.resize(m);
  cal.distances[0] = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    const double t = static_cast<double>(m - 1 - i) / static_cast<double>(m - 2);
    cal.distances[i] = cal.d_max * std::pow(1e-3, t);
  }
  const double scale = static_cast<double>(model.n - 2) * model.s * model.s * model.K * model.K;
  cal.expected.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto q = overlap_quad(model.k, model.beta, model.C, cal.distances[i]);
    cal.expected[i] = scale * q.value;
    cal.max_abs_error = std::max(cal.max_abs_error, scale * q.error);
  }
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (!(cal.expected[i + 1] < cal.expected[i]))
      throw NonMonotone("calibration table not strictly decreasing at d = " +
                        std::to_string(cal.distances[i + 1]));
  return cal;
}

DistanceEstimate estimate_distance(double count, const DistanceCalibration& cal) {
  if (!(count >= 0.0)) throw DomainError("estimate_distance: negative count");
  const auto& e = cal.expected;
  if (count >= e.front()) return {0.0, false};
  if (count <= e.back()) return {cal.d_max, count < e.back()};
  // first index whose expected value drops below count
  const auto it = std::partition_point(e.begin(), e.end(), [&](double v) { return v >= count; });
  const auto i = static_cast<std::size_t>(it - e.begin());
  const double t = (e[i - 1] - count) / (e[i - 1] - e[i]);
  return {cal.distances[i - 1] + t * (cal.distances[i] - cal.distances[i - 1]), false};
}

Graph filter_edges_geometric(const Graph& g, const Positions& pos, double x_factor, double C) {
  if (pos.size() != g.size()) throw DimensionMismatch("filter_edges_geometric: positions do not match graph");
  if (!(x_factor >= 0.0)) throw DomainError("filter_edges_geometric: x_factor must be >= 0");
  const double cut = x_factor * C;
  if (cut <= 0.0) return g;
  return g.filtered([&](Node u, Node v) { return torus_distance(pos[u], pos[v]) >= cut; });
}

Graph filter_edges_geometric(const Graph& g, const std::optional<Positions>& pos, double x_factor,
                             double C) {
  if (!pos) throw MissingPositions("geometric filter needs node positions");
  return filter_edges_geometric(g, *pos, x_factor, C);
}

Graph filter_edges_nearest_k(const Graph& g, std::size_t k_nearest) {
  if (k_nearest == 0) return g;
  const Graph view = g.symmetrized();
  absl::flat_hash_set<std::uint64_t> marked;
  auto key = [](Node a, Node b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t{a} << 32) | b;
  };
  std::vector<std::pair<std::size_t, Node>> ranked;
  for (Node u = 0; u < view.size(); ++u) {
    auto nu = view.neighbors(u);
    ranked.clear();
    for (Node v : nu) ranked.emplace_back(sorted_intersection_size(nu, view.neighbors(v)), v);
    const std::size_t take = std::min(k_nearest, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    for (std::size_t t = 0; t < take; ++t) marked.insert(key(u, ranked[t].second));
  }
  return g.filtered([&](Node u, Node v) { return !marked.contains(key(u, v)); });
}

namespace {

void check_band(const DistanceCalibration& cal, double d_L, double d_H) {
  if (!(d_L >= 0.0 && d_L < d_H && d_H <= cal.d_max))
    throw RangeError("edge classification needs 0 <= d_L < d_H <= d_max");
}

void classify_one(const Graph& g, const DistanceCalibration& cal, double d_L, double d_H, Edge e,
                  EdgePartition& out) {
  const auto est = estimate_distance(static_cast<double>(common_neighbors(g, e.u, e.v)), cal);
  if (est.saturated || est.distance > d_H)
    out.long_edges.push_back(e);
  else if (est.distance < d_L)
    out.short_edges.push_back(e);
  else
    out.band_edges.push_back(e);
}

}  // namespace

EdgePartition classify_edge_lengths(const Graph& g, const DistanceCalibration& cal, double d_L,
                                    double d_H) {
  check_band(cal, d_L, d_H);
  EdgePartition out;
  for (const Edge& e : g.edges()) classify_one(g, cal, d_L, d_H, e, out);
  return out;
}

EdgePartition classify_edge_lengths(const Graph& g, const DistanceCalibration& cal, double d_L,
                                    double d_H, std::span<const Node> sources) {
  check_band(cal, d_L, d_H);
  std::vector<char> src(g.size(), 0);
  for (Node v : sources) {
    check_node(g, v);
    src[v] = 1;
  }
  EdgePartition out;
  for (const Edge& e : g.edges())
    if (src[e.u] || src[e.v]) classify_one(g, cal, d_L, d_H, e, out);
  return out;
}

std::vector<Node> select_nodes_within(const Graph& g, Node center, double d_T,
                                      const DistanceCalibration& cal) {
  check_node(g, center);
  if (estimate_distance(0.0, cal).distance < d_T) {
    std::vector<Node> all(g.size());
    for (Node v = 0; v < g.size(); ++v) all[v] = v;
    return all;
  }
  absl::flat_hash_map<Node, std::uint32_t> counts;
  if (g.directed()) {
    // out-neighborhoods cannot be walked backwards; count directly
    for (Node v = 0; v < g.size(); ++v)
      if (v != center)
        if (auto c = common_neighbors(g, center, v); c > 0) counts[v] = static_cast<std::uint32_t>(c);
  } else {
    for (Node w : g.neighbors(center))
      for (Node v : g.neighbors(w))
        if (v != center) ++counts[v];
  }
  std::vector<Node> out{center};
  for (const auto& [v, c] : counts)
    if (estimate_distance(static_cast<double>(c), cal).distance < d_T) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<double, double> default_band(const DistanceCalibration& cal, double lambda) {
  if (!(lambda > 1.0)) throw DomainError("default_band: lambda must exceed 1");
  const auto& m = cal.model;
  const double raw = m.C * std::log(std::pow(static_cast<double>(m.n), 1.0 / m.k) * m.C);
  const double d_L = std::min(std::max(raw, m.C), cal.d_max / lambda);
  return {d_L, lambda * d_L};
}

}  // namespace percomatch
