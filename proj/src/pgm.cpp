#include "percomatch/pgm.hpp"

#include <algorithm>
#include <cmath>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include "percomatch/errors.hpp"

namespace percomatch {

void PgmConfig::validate(std::size_t n) const {
  if (r < 1) throw ConfigError("pgm: r must be >= 1");
  if (max_steps && *max_steps < n) throw ConfigError("pgm: max_steps must be >= n");
}

void check_seeds(std::span<const NodePair> seeds, std::size_t n1, std::size_t n2) {
  std::vector<char> seen1(n1, 0), seen2(n2, 0);
  for (const auto& p : seeds) {
    if (p.first >= n1 || p.second >= n2) throw InvalidNode("seed refers to a node outside the graph");
    if (seen1[p.first] || seen2[p.second])
      throw ConflictingSeeds("seed pairs share a node");
    seen1[p.first] = seen2[p.second] = 1;
  }
}

namespace {

void check_inputs(const ObservedGraph& g1, const ObservedGraph& g2, std::span<const NodePair> seeds,
                  const PgmConfig& cfg) {
  cfg.validate(std::max(g1.size(), g2.size()));
  if (g1.directed() != cfg.directed || g2.directed() != cfg.directed)
    throw ConfigError("pgm: directed flag does not match the input graphs");
  check_seeds(seeds, g1.size(), g2.size());
}

NodePair draw(std::vector<NodePair>& frontier, Rng& rng) {
  const auto idx = uniform_index(rng, frontier.size());
  const NodePair z = frontier[idx];
  frontier[idx] = frontier.back();
  frontier.pop_back();
  return z;
}

}  // namespace

MatchOutcome percolate(const ObservedGraph& g1, const ObservedGraph& g2,
                       std::span<const NodePair> seeds, const PgmConfig& cfg, Rng& rng) {
  check_inputs(g1, g2, seeds, cfg);
  const std::uint64_t n2 = g2.size();
  const auto r = static_cast<std::uint32_t>(cfg.r);
  const bool strict = cfg.admission == Admission::strict;

  MatchOutcome out;
  std::vector<NodePair> frontier(seeds.begin(), seeds.end());
  // strict: a node is used once it sits in a matched or frontier pair.
  // matched_only: once it is matched or belongs to a seed; owner records the partner.
  std::vector<char> used1(g1.size(), 0), used2(g2.size(), 0);
  constexpr Node kNone = ~Node{0};
  std::vector<Node> owner1(strict ? 0 : g1.size(), kNone), owner2(strict ? 0 : g2.size(), kNone);
  for (const auto& p : seeds) {
    used1[p.first] = used2[p.second] = 1;
    if (!strict) owner1[p.first] = p.second, owner2[p.second] = p.first;
  }

  // Pairs touching a used node can never be admitted, so they are not counted.
  absl::flat_hash_map<std::uint64_t, std::uint32_t> marks;
  std::vector<NodePair> reached;
  const std::size_t limit = cfg.max_steps.value_or(SIZE_MAX);

  while (!frontier.empty() && out.steps < limit) {
    const NodePair z = draw(frontier, rng);
    if (!strict) {
      const bool own1 = owner1[z.first] == kNone || owner1[z.first] == z.second;
      const bool own2 = owner2[z.second] == kNone || owner2[z.second] == z.first;
      if (!own1 || !own2) continue;
      owner1[z.first] = z.second, owner2[z.second] = z.first;
      used1[z.first] = used2[z.second] = 1;
    }
    out.matched.push_back(z);
    ++out.steps;
    reached.clear();
    auto nb2 = g2.neighbors(z.second);
    for (Node u : g1.neighbors(z.first)) {
      if (used1[u]) continue;
      for (Node v : nb2) {
        if (used2[v]) continue;
        if (cfg.admissible && !cfg.admissible(u, v)) continue;
        ++out.marks;
        if (++marks[std::uint64_t{u} * n2 + v] == r) reached.push_back({u, v});
      }
    }
    std::sort(reached.begin(), reached.end());
    for (const auto& p : reached) {
      if (used1[p.first] || used2[p.second]) continue;
      if (strict) used1[p.first] = used2[p.second] = 1;
      frontier.push_back(p);
    }
    if (cfg.record_trace) out.frontier_trace.push_back(frontier.size());
  }
  return out;
}

MatchOutcome percolate_bruteforce(const ObservedGraph& g1, const ObservedGraph& g2,
                                  std::span<const NodePair> seeds, const PgmConfig& cfg, Rng& rng) {
  constexpr std::size_t kMax = 200;
  if (g1.size() > kMax || g2.size() > kMax) throw TooLarge("percolate_bruteforce: n > 200");
  check_inputs(g1, g2, seeds, cfg);
  const std::size_t n1 = g1.size(), n2 = g2.size();

  MatchOutcome out;
  std::vector<NodePair> frontier(seeds.begin(), seeds.end());
  std::vector<std::vector<int>> counter(n1, std::vector<int>(n2, 0));
  std::vector<std::vector<char>> is_matched(n1, std::vector<char>(n2, 0));
  const std::size_t limit = cfg.max_steps.value_or(SIZE_MAX);

  const bool strict = cfg.admission == Admission::strict;
  auto clash = [](std::span<const NodePair> set, NodePair p) {
    for (const auto& q : set)
      if (q.first == p.first || q.second == p.second) return true;
    return false;
  };
  auto conflicts = [&](NodePair p) {
    return clash(out.matched, p) || (strict ? clash(frontier, p) : clash(seeds, p));
  };

  while (!frontier.empty() && out.steps < limit) {
    const NodePair z = draw(frontier, rng);
    if (!strict && std::ranges::find(seeds, z) == seeds.end() && conflicts(z)) continue;
    out.matched.push_back(z);
    is_matched[z.first][z.second] = 1;
    ++out.steps;
    std::vector<NodePair> reached;
    // sweep the whole pair space; a pair is a neighbor of z iff both edges exist
    for (Node u = 0; u < n1; ++u) {
      if (!g1.has_edge(z.first, u)) continue;
      for (Node v = 0; v < n2; ++v) {
        if (!g2.has_edge(z.second, v) || is_matched[u][v]) continue;
        if (cfg.admissible && !cfg.admissible(u, v)) continue;
        ++out.marks;
        if (++counter[u][v] == cfg.r) reached.push_back({u, v});
      }
    }
    std::sort(reached.begin(), reached.end());
    for (const auto& p : reached)
      if (!conflicts(p)) frontier.push_back(p);
    if (cfg.record_trace) out.frontier_trace.push_back(frontier.size());
  }
  return out;
}

MatchResult score(const GraphPair& pair, std::span<const NodePair> seeds, MatchOutcome outcome) {
  MatchResult res;
  absl::flat_hash_set<std::uint64_t> seed_keys;
  for (const auto& p : seeds) seed_keys.insert((std::uint64_t{p.first} << 32) | p.second);
  res.seed_count = seeds.size();
  for (const auto& p : outcome.matched) {
    if (seed_keys.contains((std::uint64_t{p.first} << 32) | p.second)) continue;
    (is_good_pair(pair, p.first, p.second) ? res.good_count : res.bad_count)++;
  }
  const std::size_t total = res.good_count + res.bad_count;
  res.error_ratio = total == 0 ? 0.0 : static_cast<double>(res.bad_count) / static_cast<double>(total);
  res.matched_pairs = std::move(outcome.matched);
  res.frontier_trace = std::move(outcome.frontier_trace);
  res.steps = outcome.steps;
  return res;
}

MatchResult run_pgm(const GraphPair& pair, std::span<const NodePair> seeds, const PgmConfig& cfg,
                    Rng& rng) {
  return score(pair, seeds, percolate(pair.g1, pair.g2, seeds, cfg, rng));
}

MatchResult run_pgm_bruteforce(const GraphPair& pair, std::span<const NodePair> seeds,
                               const PgmConfig& cfg, Rng& rng) {
  return score(pair, seeds, percolate_bruteforce(pair.g1, pair.g2, seeds, cfg, rng));
}

double critical_seed_size(double m, double p, double s, int r) {
  if (!(m >= 1.0)) throw DomainError("critical_seed_size: m must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("critical_seed_size: p must lie in (0,1]");
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("critical_seed_size: s must lie in (0,1]");
  if (r < 2) throw DomainError("critical_seed_size: r must be >= 2");
  const double rd = r;
  const double log_radicand = std::lgamma(rd) - std::log(m) - rd * std::log(p * s * s);
  return (1.0 - 1.0 / rd) * std::exp(log_radicand / (rd - 1.0));
}

}  // namespace percomatch
