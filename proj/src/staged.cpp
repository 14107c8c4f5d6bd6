#include "percomatch/staged.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <absl/container/flat_hash_map.h>
#include <boost/math/special_functions/beta.hpp>

#include "percomatch/errors.hpp"
#include "percomatch/sampling.hpp"

namespace percomatch {

void RegionSpec::validate() const {
  if (center.empty()) throw DomainError("region: empty center");
  for (double c : center)
    if (!(c >= 0.0 && c < 1.0)) throw DomainError("region: center outside [0,1)");
  if (!(extent > 0.0)) throw DomainError("region: extent must be positive");
}

bool RegionSpec::contains(std::span<const double> p) const {
  if (p.size() != center.size()) throw DimensionMismatch("region: dimension mismatch");
  if (shape == Shape::ball) return torus_distance(p, center) <= extent;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double d = p[c] - center[c];
    if (std::abs(d - std::round(d)) > 0.5 * extent) return false;
  }
  return true;
}

void StagedConfig::validate() const {
  if (!(alpha1 > alpha2 && alpha2 > 0.0)) throw ConfigError("staged: need alpha1 > alpha2 > 0");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("staged: delta must lie in (0, 1]");
  if (alpha1 * (1.0 + delta) > 1.0) throw ConfigError("staged: alpha1 (1 + delta) must be <= 1");
  if (r < 1) throw ConfigError("staged: r must be >= 1");
  if (!(alpha_exp > 3.5 && alpha_exp < 4.0)) throw ConfigError("staged: alpha_exp must lie in (3.5, 4)");
  if (!(lambda > 1.0)) throw ConfigError("staged: lambda must exceed 1");
  if (ring_step && !(*ring_step > 0.0)) throw ConfigError("staged: ring_step must be positive");
  if (!(ring_multiplier > 0.0)) throw ConfigError("staged: ring_multiplier must be positive");
  if (!(stall_fraction >= 0.0 && stall_fraction < 1.0)) throw ConfigError("staged: stall_fraction must lie in [0,1)");
  if (max_rounds < 1 || anchors_per_round < 1) throw ConfigError("staged: round limits must be >= 1");
}

std::vector<std::size_t> seed_neighbor_counts(const Graph& g, std::span<const Node> seeds) {
  std::vector<std::size_t> count(g.size(), 0);
  for (Node s : seeds) {
    if (s >= g.size()) throw InvalidNode("seed node out of range");
    for (Node v : g.neighbors(s)) ++count[v];
  }
  return count;
}

std::vector<Node> classify_by_seed_count(const Graph& g, std::span<const Node> seeds, double alpha,
                                         double s, double K) {
  const double thr = alpha * s * K * static_cast<double>(seeds.size());
  const auto count = seed_neighbor_counts(g, seeds);
  std::vector<Node> out;
  for (Node v = 0; v < g.size(); ++v)
    if (static_cast<double>(count[v]) > thr) out.push_back(v);
  return out;
}

namespace {

std::vector<bool> membership(std::size_t n, std::span<const Node> nodes) {
  std::vector<bool> m(n, false);
  for (Node v : nodes) {
    if (v >= n) throw InvalidNode("node id out of range");
    m[v] = true;
  }
  return m;
}

}  // namespace

RestrictedPairs::RestrictedPairs(std::size_t n1, std::size_t n2, std::span<const Node> strict1,
                                 std::span<const Node> loose1, std::span<const Node> strict2,
                                 std::span<const Node> loose2)
    : strict1_(membership(n1, strict1)),
      loose1_(membership(n1, loose1)),
      strict2_(membership(n2, strict2)),
      loose2_(membership(n2, loose2)) {
  for (std::size_t i = 0; i < n1; ++i)
    if (strict1_[i] && !loose1_[i]) throw MonotonicityViolation("strict set of g1 is not inside the loose set");
  for (std::size_t j = 0; j < n2; ++j)
    if (strict2_[j] && !loose2_[j]) throw MonotonicityViolation("strict set of g2 is not inside the loose set");
}

std::size_t RestrictedPairs::loose1_count() const noexcept {
  return static_cast<std::size_t>(std::count(loose1_.begin(), loose1_.end(), true));
}
std::size_t RestrictedPairs::loose2_count() const noexcept {
  return static_cast<std::size_t>(std::count(loose2_.begin(), loose2_.end(), true));
}

PairPredicate RestrictedPairs::as_predicate() const {
  auto self = std::make_shared<const RestrictedPairs>(*this);
  return [self](Node i1, Node j2) { return (*self)(i1, j2); };
}

RestrictedPairs build_restricted_pairs(std::size_t n1, std::size_t n2, std::span<const Node> strict1,
                                       std::span<const Node> loose1, std::span<const Node> strict2,
                                       std::span<const Node> loose2) {
  return RestrictedPairs(n1, n2, strict1, loose1, strict2, loose2);
}

namespace {

// volume of the cap of height h cut from a k-ball of radius R
double cap_volume(int k, double R, double h) {
  if (h <= 0.0) return 0.0;
  const double full = unit_ball_volume(k) * std::pow(R, k);
  if (h >= 2.0 * R) return full;
  if (h > R) return full - cap_volume(k, R, 2.0 * R - h);
  const double x = (2.0 * R * h - h * h) / (R * R);
  return 0.5 * full * boost::math::ibeta(0.5 * (k + 1), 0.5, std::min(1.0, x));
}

}  // namespace

double lens_volume(int k, double rho, double c, double d) {
  if (k < 1) throw DomainError("lens_volume: k must be >= 1");
  if (!(rho >= 0.0 && c >= 0.0 && d >= 0.0)) throw DomainError("lens_volume: negative argument");
  if (d >= rho + c) return 0.0;
  const double small = std::min(rho, c);
  if (d <= std::abs(rho - c)) return unit_ball_volume(k) * std::pow(small, k);
  if (k == 1) return std::min(rho, d + c) - std::max(-rho, d - c);
  // radical hyperplane at distance x from the first center
  const double x = (d * d + rho * rho - c * c) / (2.0 * d);
  return cap_volume(k, rho, rho - x) + cap_volume(k, c, c - (d - x));
}

double ring_threshold(const ResolvedModel& m, double rho, double multiplier) {
  if (rho < m.C) throw EmptyBulk("ring expansion needs a matched bulk of radius >= C");
  const double lens = lens_volume(m.k, rho, m.C, rho + 0.5 * m.C);
  return multiplier * static_cast<double>(m.n) * lens * m.K / 4.0;
}

MatchedSet::MatchedSet(const std::vector<NodePair>& pairs, std::size_t n1, std::size_t n2)
    : MatchedSet(n1, n2) {
  for (const auto& p : pairs) add(p);
}

void MatchedSet::add(NodePair p) {
  if (p.first >= used1_.size() || p.second >= used2_.size()) throw InvalidNode("matched pair out of range");
  if (!free(p.first, p.second)) throw ConflictingSeeds("pair conflicts with the matched set");
  used1_[p.first] = used2_[p.second] = true;
  pairs_.push_back(p);
}

ThresholdMatch greedy_threshold_match(const Graph& g1, const Graph& g2,
                                      std::span<const NodePair> support_pairs, double threshold,
                                      MatchedSet& taken, const PairPredicate& admissible) {
  ThresholdMatch res;
  res.threshold = threshold;
  const std::uint64_t n2 = g2.size();
  absl::flat_hash_map<std::uint64_t, std::uint32_t> support;
  for (const auto& [a, b] : support_pairs) {
    auto nb = g2.neighbors(b);
    for (Node u : g1.neighbors(a)) {
      if (taken.used1(u)) continue;
      for (Node v : nb) {
        if (taken.used2(v)) continue;
        if (admissible && !admissible(u, v)) continue;
        ++support[std::uint64_t{u} * n2 + v];
      }
    }
  }
  res.candidates = support.size();
  const double need = std::max(1.0, threshold);
  struct Cand {
    std::uint32_t s;
    Node u, v;
  };
  std::vector<Cand> cands;
  for (const auto& [key, s] : support)
    if (static_cast<double>(s) >= need)
      cands.push_back({s, static_cast<Node>(key / n2), static_cast<Node>(key % n2)});
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.s != y.s) return x.s > y.s;
    return x.u != y.u ? x.u < y.u : x.v < y.v;
  });
  for (const auto& c : cands)
    if (taken.free(c.u, c.v)) {
      taken.add({c.u, c.v});
      res.added.push_back({c.u, c.v});
    }
  return res;
}

ThresholdMatch ring_expand(const Graph& g1, const Graph& g2, MatchedSet& matched, double rho,
                           const ResolvedModel& model, double multiplier) {
  if (matched.size() == 0) return {};
  const double thr = ring_threshold(model, rho, multiplier);
  const std::vector<NodePair> support = matched.pairs();
  return greedy_threshold_match(g1, g2, support, thr, matched);
}

void BipartiteSides::validate(std::size_t n1, std::size_t n2) const {
  if (left1.size() != n1 || right1.size() != n1 || left2.size() != n2 || right2.size() != n2)
    throw DimensionMismatch("bipartite sides do not match the graph sizes");
  for (std::size_t i = 0; i < n1; ++i)
    if (left1[i] && right1[i]) throw ConfigError("bipartite sides overlap in g1");
  for (std::size_t j = 0; j < n2; ++j)
    if (left2[j] && right2[j]) throw ConfigError("bipartite sides overlap in g2");
}

BipartiteOutcome bipartite_pgm(const Graph& g1, const Graph& g2, const BipartiteSides& sides,
                               std::span<const NodePair> seeds_left,
                               std::span<const NodePair> seeds_right, const PgmConfig& cfg,
                               Rng& rng) {
  cfg.validate(std::max(g1.size(), g2.size()));
  if (g1.directed() != cfg.directed || g2.directed() != cfg.directed)
    throw ConfigError("pgm: directed flag does not match the input graphs");
  sides.validate(g1.size(), g2.size());
  std::vector<NodePair> all_seeds(seeds_left.begin(), seeds_left.end());
  all_seeds.insert(all_seeds.end(), seeds_right.begin(), seeds_right.end());
  check_seeds(all_seeds, g1.size(), g2.size());
  for (const auto& p : seeds_left)
    if (!sides.left_pair(p.first, p.second)) throw ConfigError("left seed outside the left side");
  for (const auto& p : seeds_right)
    if (!sides.right_pair(p.first, p.second)) throw ConfigError("right seed outside the right side");

  BipartiteOutcome res;
  const std::uint64_t n2 = g2.size();
  const auto r = static_cast<std::uint32_t>(cfg.r);
  std::vector<char> used1(g1.size(), 0), used2(g2.size(), 0);
  for (const auto& p : all_seeds) used1[p.first] = used2[p.second] = 1;
  std::vector<NodePair> frontier[2] = {{seeds_left.begin(), seeds_left.end()},
                                       {seeds_right.begin(), seeds_right.end()}};
  absl::flat_hash_map<std::uint64_t, std::uint32_t> marks;
  std::vector<NodePair> reached[2];
  const std::size_t limit = cfg.max_steps.value_or(SIZE_MAX);
  auto& out = res.outcome;

  auto on_side = [&](int side, Node u, Node v) {
    return side == 0 ? sides.left_pair(u, v) : sides.right_pair(u, v);
  };
  auto spread = [&](NodePair z, int from) {
    const int to = 1 - from;
    const auto& to1 = to == 0 ? sides.left1 : sides.right1;
    const auto& to2 = to == 0 ? sides.left2 : sides.right2;
    auto nb2 = g2.neighbors(z.second);
    for (Node u : g1.neighbors(z.first)) {
      if (used1[u] || !to1[u]) continue;
      for (Node v : nb2) {
        if (used2[v] || !to2[v]) continue;
        if (cfg.admissible && !cfg.admissible(u, v)) continue;
        if (on_side(from, u, v)) ++res.same_side_marks;
        ++res.cross_marks;
        ++out.marks;
        if (++marks[std::uint64_t{u} * n2 + v] == r) reached[to].push_back({u, v});
      }
    }
  };

  while ((!frontier[0].empty() || !frontier[1].empty()) && out.steps < limit) {
    NodePair drawn[2];
    bool has[2] = {false, false};
    for (int side = 0; side < 2 && out.steps < limit; ++side) {
      if (frontier[side].empty()) continue;
      const auto idx = uniform_index(rng, frontier[side].size());
      drawn[side] = frontier[side][idx];
      frontier[side][idx] = frontier[side].back();
      frontier[side].pop_back();
      has[side] = true;
      out.matched.push_back(drawn[side]);
      ++out.steps;
      (side == 0 ? res.left_matched : res.right_matched)++;
    }
    reached[0].clear();
    reached[1].clear();
    for (int side = 0; side < 2; ++side)
      if (has[side]) spread(drawn[side], side);
    for (int side = 0; side < 2; ++side) {
      std::sort(reached[side].begin(), reached[side].end());
      for (const auto& p : reached[side]) {
        if (used1[p.first] || used2[p.second]) continue;
        used1[p.first] = used2[p.second] = 1;
        frontier[side].push_back(p);
      }
    }
    if (cfg.record_trace) out.frontier_trace.push_back(frontier[0].size() + frontier[1].size());
  }
  res.left_matched -= std::min(res.left_matched, seeds_left.size());
  res.right_matched -= std::min(res.right_matched, seeds_right.size());
  return res;
}

ThresholdMatch threshold_match_rhs(const Graph& g1, const Graph& g2,
                                   std::span<const NodePair> matched_left,
                                   const std::vector<bool>& candidates1,
                                   const std::vector<bool>& candidates2, double p_min,
                                   MatchedSet& taken) {
  if (!(p_min > 0.0 && p_min < 1.0)) throw DomainError("threshold_match_rhs: p_min must lie in (0,1)");
  if (candidates1.size() != g1.size() || candidates2.size() != g2.size())
    throw DimensionMismatch("threshold_match_rhs: candidate masks do not match the graphs");
  if (matched_left.empty()) return {};
  const double thr = static_cast<double>(matched_left.size()) * p_min / 2.0;
  return greedy_threshold_match(g1, g2, matched_left, thr, taken,
                                [&](Node u, Node v) { return candidates1[u] && candidates2[v]; });
}

PipelineOutcome sparse_deanonymize(const Graph& g1, const Graph& g2,
                                   std::span<const NodePair> seeds, const ResolvedModel& model,
                                   const StagedConfig& cfg, Rng& rng) {
  cfg.validate();
  check_seeds(seeds, g1.size(), g2.size());
  PipelineOutcome res;
  std::vector<Node> s1, s2;
  for (const auto& p : seeds) {
    s1.push_back(p.first);
    s2.push_back(p.second);
  }
  const auto strict1 = classify_by_seed_count(g1, s1, cfg.alpha1, model.s, model.K);
  const auto loose1 = classify_by_seed_count(g1, s1, cfg.alpha2, model.s, model.K);
  const auto strict2 = classify_by_seed_count(g2, s2, cfg.alpha1, model.s, model.K);
  const auto loose2 = classify_by_seed_count(g2, s2, cfg.alpha2, model.s, model.K);
  const auto pairs = build_restricted_pairs(g1.size(), g2.size(), strict1, loose1, strict2, loose2);

  PgmConfig pc;
  pc.r = cfg.r;
  pc.directed = g1.directed();
  pc.admissible = pairs.as_predicate();
  auto first = percolate(g1, g2, seeds, pc, rng);
  res.rounds.push_back({0, "restricted-pgm", pairs.loose1_count(),
                        {first.matched.begin(), first.matched.end()}});
  res.outcome = first;

  MatchedSet matched(first.matched, g1.size(), g2.size());
  // bulk: nodes whose expected seed-neighbor share exceeds alpha1
  double rho = std::max(model.C, std::isinf(model.beta) ? model.C
                                                         : decay_inverse(std::min(1.0, cfg.alpha1), model.C, model.beta));
  const double bulk_population =
      static_cast<double>(model.n) * unit_ball_volume(model.k) * std::pow(rho, model.k);
  if (static_cast<double>(matched.size()) < 0.5 * bulk_population) {
    res.warnings.push_back("restricted PGM did not cover the seed bulk; ring expansion skipped");
    return res;
  }
  const double step = cfg.ring_step.value_or(0.5 * model.C);
  int stalled = 0;
  for (std::size_t round = 1; round <= cfg.max_rounds && stalled < 2; ++round) {
    auto grown = ring_expand(g1, g2, matched, rho, model, cfg.ring_multiplier);
    stalled = grown.added.empty() ? stalled + 1 : 0;
    res.outcome.matched.insert(res.outcome.matched.end(), grown.added.begin(), grown.added.end());
    res.outcome.steps += grown.added.size();
    res.rounds.push_back({round, "ring rho=" + std::to_string(rho), grown.candidates, std::move(grown.added)});
    rho += step;
  }
  return res;
}

RegionGeometry choose_region_geometry(const ResolvedModel& model, const StagedConfig& cfg) {
  cfg.validate();
  RegionGeometry geo;
  geo.h = model.C;
  geo.m = static_cast<double>(model.n) * std::pow(geo.h, model.k);
  geo.target_p_max = std::pow(geo.m, -cfg.alpha_exp / cfg.r);
  if (geo.target_p_max >= model.K || std::isinf(model.beta))
    geo.g = model.C;  // target not reachable beyond the plateau
  else
    geo.g = decay_inverse(geo.target_p_max / model.K, model.C, model.beta);
  geo.p_max = model.K * decay(geo.g, model.C, model.beta);
  geo.p_min = model.K * decay(geo.g + std::sqrt(static_cast<double>(model.k)) * geo.h, model.C, model.beta);
  return geo;
}

namespace {

// 90th percentile of |estimate - truth| over pairs at true distance <= d_max / 2,
// measured on a fresh graph drawn from the same model.
double estimation_spread(const ResolvedModel& model, const DistanceCalibration& cal, Rng& rng) {
  Rng local(rng());
  const auto truth = generate_ground_truth(model, local);
  const auto pair = sample_pair(truth, model.s, local);
  const Graph& g = pair.g1;
  const Positions& pos = *truth.positions;
  std::vector<double> err;
  for (int attempt = 0; attempt < 20000 && err.size() < 500; ++attempt) {
    const auto u = static_cast<Node>(uniform_index(local, g.size()));
    const auto v = static_cast<Node>(uniform_index(local, g.size()));
    if (u == v) continue;
    const double d = torus_distance(pos[u], pos[v]);
    if (d > 0.5 * cal.d_max) {
      // bias toward near pairs: try a neighbor of u instead
      auto nb = g.neighbors(u);
      if (nb.empty()) continue;
      const Node w = nb[uniform_index(local, nb.size())];
      const double dw = torus_distance(pos[u], pos[w]);
      if (dw > 0.5 * cal.d_max) continue;
      err.push_back(std::abs(estimate_distance(double(common_neighbors(g, u, w)), cal).distance - dw));
      continue;
    }
    err.push_back(std::abs(estimate_distance(double(common_neighbors(g, u, v)), cal).distance - d));
  }
  if (err.empty()) return model.C;
  const auto k = static_cast<std::size_t>(0.9 * static_cast<double>(err.size() - 1));
  std::nth_element(err.begin(), err.begin() + static_cast<std::ptrdiff_t>(k), err.end());
  return err[k];
}

std::vector<bool> within_any(const Graph& g, std::span<const Node> centers, double d_T,
                             const DistanceCalibration& cal) {
  std::vector<bool> in(g.size(), false);
  for (Node c : centers)
    for (Node v : select_nodes_within(g, c, d_T, cal)) in[v] = true;
  return in;
}

std::vector<Node> members(const std::vector<bool>& m) {
  std::vector<Node> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) out.push_back(static_cast<Node>(i));
  return out;
}

}  // namespace

PipelineOutcome dense_deanonymize(const Graph& g1, const Graph& g2, const DenseSeeds& seeds,
                                  const ResolvedModel& model, const StagedConfig& cfg, Rng& rng) {
  cfg.validate();
  PipelineOutcome res;
  if (model.K < 0.5)
    res.warnings.push_back("RegimeWarning: K = " + std::to_string(model.K) +
                           " is below the dense-cluster heuristic (0.5)");
  const auto geo = choose_region_geometry(model, cfg);
  const auto cal = build_distance_calibration(model);
  const double spread = std::max(estimation_spread(model, cal, rng), model.C / 3.0);

  // three nested regions per seed side: 3, 5 and 7 times the estimation spread
  auto side_sets = [&](const Graph& g, bool first) {
    std::vector<Node> left, right;
    for (const auto& p : seeds.left) left.push_back(first ? p.first : p.second);
    for (const auto& p : seeds.right) right.push_back(first ? p.first : p.second);
    struct Sets {
      std::vector<bool> inner_l, inter_l, inner_r, inter_r;
    } s;
    const auto outer_l = within_any(g, left, 7.0 * spread, cal);
    const auto outer_r = within_any(g, right, 7.0 * spread, cal);
    s.inner_l = within_any(g, left, 3.0 * spread, cal);
    s.inter_l = within_any(g, left, 5.0 * spread, cal);
    s.inner_r = within_any(g, right, 3.0 * spread, cal);
    s.inter_r = within_any(g, right, 5.0 * spread, cal);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (outer_r[i]) s.inner_l[i] = s.inter_l[i] = false;
      if (outer_l[i]) s.inner_r[i] = s.inter_r[i] = false;
    }
    for (Node v : left) s.inner_l[v] = s.inter_l[v] = true;
    for (Node v : right) s.inner_r[v] = s.inter_r[v] = true;
    return s;
  };
  const auto a = side_sets(g1, true);
  const auto b = side_sets(g2, false);

  BipartiteSides sides{a.inter_l, a.inter_r, b.inter_l, b.inter_r};
  std::vector<bool> strict1(g1.size()), loose1(g1.size()), strict2(g2.size()), loose2(g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    strict1[i] = a.inner_l[i] || a.inner_r[i];
    loose1[i] = a.inter_l[i] || a.inter_r[i];
  }
  for (std::size_t j = 0; j < g2.size(); ++j) {
    strict2[j] = b.inner_l[j] || b.inner_r[j];
    loose2[j] = b.inter_l[j] || b.inter_r[j];
  }
  const auto pairs = build_restricted_pairs(g1.size(), g2.size(), members(strict1), members(loose1),
                                            members(strict2), members(loose2));
  PgmConfig pc;
  pc.r = cfg.r;
  pc.directed = g1.directed();
  pc.admissible = pairs.as_predicate();
  auto bi = bipartite_pgm(g1, g2, sides, seeds.left, seeds.right, pc, rng);
  res.outcome = bi.outcome;
  res.rounds.push_back({0, "bipartite", pairs.loose1_count(), bi.outcome.matched});

  MatchedSet taken(bi.outcome.matched, g1.size(), g2.size());
  const double ps2 = model.s * model.s;

  // threshold-match the larger side from the matched pairs of the other one
  {
    std::vector<NodePair> left_m, right_m;
    for (const auto& p : taken.pairs()) (sides.left_pair(p.first, p.second) ? left_m : right_m).push_back(p);
    const bool right_larger = std::count(a.inter_r.begin(), a.inter_r.end(), true) >=
                              std::count(a.inter_l.begin(), a.inter_l.end(), true);
    const auto& from = right_larger ? left_m : right_m;
    const auto& c1 = right_larger ? a.inter_r : a.inter_l;
    const auto& c2 = right_larger ? b.inter_r : b.inter_l;
    const double p_min = std::clamp(geo.p_min * ps2, 1e-12, 1.0 - 1e-12);
    auto tm = threshold_match_rhs(g1, g2, from, c1, c2, p_min, taken);
    res.outcome.matched.insert(res.outcome.matched.end(), tm.added.begin(), tm.added.end());
    res.rounds.push_back({1, right_larger ? "threshold-right" : "threshold-left", tm.candidates, tm.added});
  }

  // band-edge expansion from compact groups of matched nodes
  const auto [d_L, d_H] = default_band(cal, cfg.lambda);
  const double group_radius = std::min(3.0 * spread, 0.5 * cal.d_max);
  const double p_band = std::clamp(ps2 * model.K * decay(d_H + 2.0 * group_radius, model.C, model.beta),
                                   1e-12, 1.0 - 1e-12);
  std::vector<NodePair> recent = taken.pairs();
  int stalled = 0;
  for (std::size_t round = 2; round <= cfg.max_rounds && stalled < 2 && !recent.empty(); ++round) {
    std::vector<NodePair> added_round;
    std::size_t cand_total = 0;
    for (std::size_t t = 0; t < cfg.anchors_per_round && !recent.empty(); ++t) {
      const auto idx = uniform_index(rng, recent.size());
      const NodePair anchor = recent[idx];
      recent[idx] = recent.back();
      recent.pop_back();
      const auto near1 = select_nodes_within(g1, anchor.first, group_radius, cal);
      const auto near2 = select_nodes_within(g2, anchor.second, group_radius, cal);
      std::vector<bool> in1(g1.size(), false), in2(g2.size(), false);
      for (Node v : near1) in1[v] = true;
      for (Node v : near2) in2[v] = true;
      std::vector<NodePair> group;
      std::vector<Node> group1, group2;
      for (const auto& p : taken.pairs())
        if (in1[p.first] && in2[p.second]) {
          group.push_back(p);
          group1.push_back(p.first);
          group2.push_back(p.second);
        }
      if (group.empty()) continue;
      const auto band1 = classify_edge_lengths(g1, cal, d_L, d_H, group1).band_edges;
      const auto band2 = classify_edge_lengths(g2, cal, d_L, d_H, group2).band_edges;
      std::vector<bool> c1(g1.size(), false), c2(g2.size(), false);
      for (const Edge& e : band1) {
        if (!taken.used1(e.u)) c1[e.u] = true;
        if (!taken.used1(e.v)) c1[e.v] = true;
      }
      for (const Edge& e : band2) {
        if (!taken.used2(e.u)) c2[e.u] = true;
        if (!taken.used2(e.v)) c2[e.v] = true;
      }
      auto tm = threshold_match_rhs(g1, g2, group, c1, c2, p_band, taken);
      cand_total += tm.candidates;
      added_round.insert(added_round.end(), tm.added.begin(), tm.added.end());
    }
    const double growth = static_cast<double>(added_round.size()) /
                          std::max<double>(1.0, static_cast<double>(taken.size()));
    stalled = growth < cfg.stall_fraction ? stalled + 1 : 0;
    recent.insert(recent.end(), added_round.begin(), added_round.end());
    res.outcome.matched.insert(res.outcome.matched.end(), added_round.begin(), added_round.end());
    res.rounds.push_back({round, "band", cand_total, std::move(added_round)});
  }
  res.outcome.steps = res.outcome.matched.size();
  return res;
}

}  // namespace percomatch
