#include "percomatch/geo_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "percomatch/errors.hpp"
#include "quadrature.hpp"

namespace percomatch {

namespace {

constexpr double kTinyRel = 1e-9;

double torus_max_distance(int k) { return 0.5 * std::sqrt(static_cast<double>(k)); }

// length (k=2) of the circle of radius rho centred in the unit square cell
double circle_length_in_cell(double rho) {
  if (rho <= 0.5) return 2.0 * std::numbers::pi * rho;
  if (rho >= std::numbers::sqrt2 / 2) return 0.0;
  return rho * (2.0 * std::numbers::pi - 8.0 * std::acos(0.5 / rho));
}

// Randomly shifted Halton estimate of the torus integral of g over [-1/2, 1/2)^k.
template <class G>
IntegralEstimate qmc_torus(int k, G&& g) {
  constexpr std::size_t points = 1u << 16;
  constexpr int shifts = 8;
  Rng rng(0x5eed0fca1b7a7e5ULL);
  std::vector<double> x(static_cast<std::size_t>(k));
  std::vector<double> shift(static_cast<std::size_t>(k));
  double sum = 0.0, sum_sq = 0.0;
  for (int sh = 0; sh < shifts; ++sh) {
    for (auto& v : shift) v = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 1; i <= points; ++i) {
      for (int c = 0; c < k; ++c) {
        double u = detail::radical_inverse(i, detail::nth_prime(c)) + shift[static_cast<std::size_t>(c)];
        u -= std::floor(u);
        x[static_cast<std::size_t>(c)] = u - 0.5;
      }
      acc += g(std::span<const double>(x));
    }
    acc /= static_cast<double>(points);
    sum += acc;
    sum_sq += acc * acc;
  }
  const double mean = sum / shifts;
  const double var = std::max(0.0, sum_sq / shifts - mean * mean);
  return {mean, std::sqrt(var / (shifts - 1)) * 3.0, "qmc-halton"};
}

}  // namespace

void ModelParams::validate() const {
  if (n < 2) throw DomainError("model: n must be >= 2");
  if (k < 1) throw DomainError("model: k must be >= 1");
  if (!(beta > k)) throw DomainError("model: beta must exceed k (clustered regime)");
  if (!(sample_prob >= 0.0 && sample_prob <= 1.0)) throw DomainError("model: s must lie in [0,1]");
  if (cluster_scale && !(*cluster_scale > 0.0 && *cluster_scale <= torus_max_distance(k)))
    throw DomainError("model: C must lie in (0, sqrt(k)/2]");
  if (cluster_density && !(*cluster_density > 0.0 && *cluster_density <= 1.0))
    throw DomainError("model: K must lie in (0, 1]");
  if (target_degree && !(*target_degree > 0.0)) throw DomainError("model: D must be positive");
  const int given = int(cluster_scale.has_value()) + int(cluster_density.has_value()) +
                    int(target_degree.has_value());
  if (given < 2) throw ConfigError("model: two of C, K, D are required");
}

double ResolvedModel::expected_degree() const {
  return static_cast<double>(n - 1) * K * kernel_integral(k, beta, C).value;
}

ResolvedModel resolve(const ModelParams& p) {
  p.validate();
  ResolvedModel m{p.n, p.k, p.beta, 0.0, 0.0, p.sample_prob};
  if (p.cluster_scale && p.cluster_density) {
    m.C = *p.cluster_scale;
    m.K = *p.cluster_density;
    if (p.target_degree) {
      const double got = m.expected_degree();
      if (std::abs(got - *p.target_degree) > 1e-6 * *p.target_degree)
        throw ConfigError("model: C, K and D were all given and disagree (C and K imply D = " +
                          std::to_string(got) + ")");
    }
  } else if (p.cluster_scale) {
    m.C = *p.cluster_scale;
    m.K = calibrate_density(p.n, p.k, p.beta, m.C, *p.target_degree);
  } else {
    m.K = *p.cluster_density;
    m.C = calibrate_scale(p.n, p.k, p.beta, m.K, *p.target_degree);
  }
  return m;
}

Positions::Positions(int k, std::vector<double> coords) : k_(k), coords_(std::move(coords)) {
  if (k <= 0 || coords_.size() % static_cast<std::size_t>(k) != 0)
    throw DimensionMismatch("positions: coordinate count is not a multiple of k");
}

Positions Positions::permuted(std::span<const Node> old_of_new) const {
  std::vector<double> out(old_of_new.size() * static_cast<std::size_t>(k_));
  for (std::size_t i = 0; i < old_of_new.size(); ++i) {
    auto src = (*this)[old_of_new[i]];
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(k_)));
  }
  return Positions(k_, std::move(out));
}

double torus_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("torus_distance: dimension mismatch");
  double sum = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    double d = std::abs(a[c] - b[c]);
    d -= std::floor(d);
    if (d > 0.5) d = 1.0 - d;
    sum += d * d;
  }
  return std::sqrt(sum);
}

double decay(double d, double C, double beta) noexcept {
  if (d <= C) return 1.0;
  if (std::isinf(beta)) return 0.0;
  return std::pow(C / d, beta);
}

double decay_inverse(double y, double C, double beta) {
  if (!(y > 0.0 && y <= 1.0)) throw DomainError("decay_inverse: y must lie in (0, 1]");
  if (std::isinf(beta)) return C;
  return C * std::pow(y, -1.0 / beta);
}

double edge_probability(double d, const ResolvedModel& model) {
  if (d < 0.0) throw DomainError("edge_probability: negative distance");
  return model.K * decay(d, model.C, model.beta);
}

double unit_ball_volume(int k) {
  const double half = 0.5 * k;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

IntegralEstimate kernel_integral(int k, double beta, double C) {
  if (k < 1) throw DomainError("kernel_integral: k must be >= 1");
  if (!(C > 0.0)) throw DomainError("kernel_integral: C must be positive");
  auto f = [&](double r) { return decay(r, C, beta); };
  if (std::isinf(beta) && C <= 0.5)
    return {unit_ball_volume(k) * std::pow(C, k), 0.0, "analytic-ball"};
  if (k == 1) {
    auto q = detail::integrate(f, 0.0, 0.5, {C});
    return {2.0 * q.value, 2.0 * q.error, "gauss-kronrod"};
  }
  if (k == 2) {
    auto q = detail::integrate([&](double r) { return f(r) * circle_length_in_cell(r); }, 0.0,
                               std::numbers::sqrt2 / 2, {C, 0.5});
    return {q.value, q.error, "radial-gauss-kronrod"};
  }
  return qmc_torus(k, [&](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return f(std::sqrt(s));
  });
}

double calibrate_density(std::size_t n, int k, double beta, double C, double target_degree) {
  if (!(beta > k)) throw DomainError("calibrate_density: beta must exceed k");
  if (!(target_degree > 0.0)) throw DomainError("calibrate_density: target degree must be positive");
  const double capacity = static_cast<double>(n - 1) * kernel_integral(k, beta, C).value;
  const double K = target_degree / capacity;
  if (K > 1.0 + kTinyRel)
    throw InfeasibleDegree("calibrate_density: target degree " + std::to_string(target_degree) +
                           " needs K = " + std::to_string(K) + " > 1");
  return std::min(K, 1.0);
}

double calibrate_scale(std::size_t n, int k, double beta, double K, double target_degree) {
  if (!(beta > k)) throw DomainError("calibrate_scale: beta must exceed k");
  if (!(K > 0.0 && K <= 1.0)) throw DomainError("calibrate_scale: K must lie in (0, 1]");
  if (!(target_degree > 0.0)) throw DomainError("calibrate_scale: target degree must be positive");
  const double nm1 = static_cast<double>(n - 1);
  auto degree = [&](double C) { return nm1 * K * kernel_integral(k, beta, C).value; };
  double hi = torus_max_distance(k);
  if (degree(hi) < target_degree * (1.0 - kTinyRel))
    throw InfeasibleDegree("calibrate_scale: target degree unreachable with K = " + std::to_string(K));
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (degree(mid) < target_degree ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

double geometric_skip(Rng& rng, double log1mq) {
  const double u = 1.0 - uniform01(rng);  // (0, 1]
  const double s = std::floor(std::log(u) / log1mq);
  return s;
}

struct CellGrid {
  int k = 0;
  std::size_t m = 0;  // cells per axis
  std::vector<std::size_t> cell_of;
  std::vector<std::size_t> start;  // CSR over cells
  std::vector<Node> members;

  std::size_t coord(std::size_t cell, int axis) const {
    for (int a = 0; a < axis; ++a) cell /= m;
    return cell % m;
  }

  bool adjacent(std::size_t a, std::size_t b) const {
    for (int axis = 0; axis < k; ++axis) {
      const std::size_t ca = a % m, cb = b % m;
      const std::size_t d = (ca + m - cb) % m;
      if (d != 0 && d != 1 && d != m - 1) return false;
      a /= m;
      b /= m;
    }
    return true;
  }
};

CellGrid build_grid(const Positions& pos, std::size_t m) {
  CellGrid grid;
  grid.k = pos.dim();
  grid.m = m;
  std::size_t cells = 1;
  for (int a = 0; a < grid.k; ++a) cells *= m;
  grid.cell_of.resize(pos.size());
  std::vector<std::size_t> count(cells + 1, 0);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    std::size_t id = 0;
    auto x = pos[i];
    for (int a = grid.k - 1; a >= 0; --a) {
      auto c = static_cast<std::size_t>(x[static_cast<std::size_t>(a)] * static_cast<double>(m));
      id = id * m + std::min(c, m - 1);
    }
    grid.cell_of[i] = id;
    ++count[id + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) count[c + 1] += count[c];
  grid.start = count;
  grid.members.resize(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) grid.members[count[grid.cell_of[i]]++] = static_cast<Node>(i);
  return grid;
}

// decay() with small integer exponents done by multiplication
class FastDecay {
 public:
  FastDecay(double C, double beta) : C_(C), beta_(beta) {
    if (beta == std::floor(beta) && beta >= 1.0 && beta <= 16.0) int_beta_ = static_cast<int>(beta);
  }
  double operator()(double d) const noexcept {
    if (d <= C_) return 1.0;
    if (int_beta_ == 0) return decay(d, C_, beta_);
    const double x = C_ / d;
    double y = x;
    for (int i = 1; i < int_beta_; ++i) y *= x;
    return y;
  }

 private:
  double C_;
  double beta_;
  int int_beta_ = 0;
};

// cells per axis minimizing enumerated near pairs plus thinning candidates
std::size_t choose_cells_per_axis(const ResolvedModel& m) {
  const double n2 = 0.5 * static_cast<double>(m.n) * static_cast<double>(m.n);
  std::size_t best = 0;
  double best_cost = n2 * 1.5;  // all-pairs fallback cost
  for (double t : {1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 16.0}) {
    const double side_target = t * m.C;
    if (side_target <= 0.0) continue;
    const auto cells = static_cast<std::size_t>(std::floor(1.0 / side_target));
    if (cells < 3) continue;
    const double total_cells = std::pow(static_cast<double>(cells), m.k);
    if (total_cells > 8.0 * static_cast<double>(m.n) + 1024.0) continue;
    const double side = 1.0 / static_cast<double>(cells);
    const double near = n2 * std::pow(3.0 / static_cast<double>(cells), m.k);
    const double far = n2 * m.K * decay(side, m.C, m.beta) * 2.0 + static_cast<double>(m.n);
    if (near + far < best_cost) {
      best_cost = near + far;
      best = cells;
    }
  }
  return best;
}

}  // namespace

GroundTruthGraph generate_ground_truth(const ResolvedModel& model, Rng& rng) {
  if (model.n < 1 || model.k < 1) throw DomainError("generate_ground_truth: invalid size");
  if (!(model.K >= 0.0 && model.K <= 1.0)) throw DomainError("generate_ground_truth: K outside [0,1]");
  if (!(model.C > 0.0)) throw DomainError("generate_ground_truth: C must be positive");
  const std::size_t n = model.n;
  const int k = model.k;

  std::vector<double> coords(n * static_cast<std::size_t>(k));
  for (auto& c : coords) c = uniform01(rng);
  Positions pos(k, std::move(coords));

  GroundTruthGraph out;
  out.meta = GraphMeta{n, k, model.beta, model.C, model.K, 0, 0.0, 0.0, 0.0, "geometric"};

  std::vector<Edge> edges;
  if (model.K > 0.0) {
    const FastDecay f(model.C, model.beta);
    auto try_pair = [&](Node i, Node j) {
      const double p = model.K * f(torus_distance(pos[i], pos[j]));
      if (p >= 1.0 || bernoulli(rng, p)) edges.push_back({i, j});
    };
    const std::size_t m = choose_cells_per_axis(model);
    if (m == 0) {
      out.meta.near_radius = torus_max_distance(k);
      for (Node i = 0; i < n; ++i)
        for (Node j = i + 1; j < n; ++j) try_pair(i, j);
    } else {
      const CellGrid grid = build_grid(pos, m);
      const double side = 1.0 / static_cast<double>(m);
      out.meta.near_radius = side;
      const std::size_t cells = grid.start.size() - 1;
      std::vector<std::size_t> offsets_cells;
      // enumerate pairs in the same or adjacent cells
      for (std::size_t a = 0; a < cells; ++a) {
        offsets_cells.clear();
        std::size_t combos = 1;
        for (int ax = 0; ax < k; ++ax) combos *= 3;
        for (std::size_t code = 0; code < combos; ++code) {
          std::size_t rest = code, b = 0, mult = 1;
          for (int ax = 0; ax < k; ++ax) {
            const std::size_t off = rest % 3;  // 0 -> -1, 1 -> 0, 2 -> +1
            rest /= 3;
            const std::size_t ca = grid.coord(a, ax);
            const std::size_t cb = (ca + m + off - 1) % m;
            b += cb * mult;
            mult *= m;
          }
          offsets_cells.push_back(b);
        }
        for (std::size_t b : offsets_cells) {
          if (b < a) continue;
          for (std::size_t x = grid.start[a]; x < grid.start[a + 1]; ++x) {
            const Node i = grid.members[x];
            const std::size_t y0 = (b == a) ? x + 1 : grid.start[b];
            for (std::size_t y = y0; y < grid.start[b + 1]; ++y) try_pair(i, grid.members[y]);
          }
        }
      }
      // long-range pairs by thinning: every non-adjacent pair is farther than `side`
      const double q = model.K * decay(side, model.C, model.beta);
      if (q > 0.0) {
        const double f_side = decay(side, model.C, model.beta);
        const double log1mq = std::log1p(-std::min(q, 1.0 - 1e-16));
        for (Node i = 0; i + 1 < n; ++i) {
          std::size_t j = i;
          for (;;) {
            const double skip = geometric_skip(rng, log1mq);
            if (skip >= static_cast<double>(n)) break;
            j += 1 + static_cast<std::size_t>(skip);
            if (j >= n) break;
            if (grid.adjacent(grid.cell_of[i], grid.cell_of[j])) continue;
            const double ratio = f(torus_distance(pos[i], pos[j])) / f_side;
            if (bernoulli(rng, ratio)) edges.push_back({i, static_cast<Node>(j)});
          }
        }
      }
    }
  }
  out.graph = Graph::from_edges(n, edges, false);
  out.positions = std::move(pos);
  return out;
}

GroundTruthGraph generate_er(std::size_t n, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("generate_er: p must lie in [0,1]");
  std::vector<Edge> edges;
  if (p >= 1.0) {
    for (Node i = 0; i < n; ++i)
      for (Node j = i + 1; j < n; ++j) edges.push_back({i, j});
  } else if (p > 0.0) {
    const double log1mq = std::log1p(-p);
    for (Node i = 0; i + 1 < n; ++i) {
      std::size_t j = i;
      for (;;) {
        const double skip = geometric_skip(rng, log1mq);
        if (skip >= static_cast<double>(n)) break;
        j += 1 + static_cast<std::size_t>(skip);
        if (j >= n) break;
        edges.push_back({i, static_cast<Node>(j)});
      }
    }
  }
  GroundTruthGraph out;
  out.graph = Graph::from_edges(n, edges, false);
  out.meta.n = n;
  out.meta.er_p = p;
  out.meta.kind = "erdos_renyi";
  return out;
}

}  // namespace percomatch
