#include "percomatch/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "percomatch/errors.hpp"
#include "percomatch/estimation.hpp"
#include "percomatch/io.hpp"

namespace percomatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<Scenario> kScenarios[] = {
    {Scenario::fig1_sweep, "fig1_sweep"},           {Scenario::fig2_error_vs_K, "fig2_error_vs_K"},
    {Scenario::fig3_algorithms, "fig3_algorithms"}, {Scenario::fig4_filter_sweep, "fig4_filter_sweep"},
    {Scenario::table2_inverse, "table2_inverse"},   {Scenario::er_baseline, "er_baseline"},
    {Scenario::pokec, "pokec"},                     {Scenario::custom, "custom"}};

constexpr EnumName<AlgorithmKind> kAlgorithms[] = {
    {AlgorithmKind::pgm, "pgm"},
    {AlgorithmKind::pgm_filtered_geometric, "pgm_filtered_geometric"},
    {AlgorithmKind::pgm_filtered_nearest_k, "pgm_filtered_nearest_k"},
    {AlgorithmKind::sparse_pipeline, "sparse_pipeline"},
    {AlgorithmKind::dense_pipeline, "dense_pipeline"}};

constexpr EnumName<SeedStrategy> kStrategies[] = {{SeedStrategy::uniform, "uniform"},
                                                  {SeedStrategy::compact, "compact"}};

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

template <class E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

std::string fmt(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

json preset(Scenario s) {
  const json geometric_dense = {{"kind", "geometric"}, {"n", 10000}, {"k", 2}, {"beta", 3.0},
                                {"K", 0.8},            {"D", 30.0},  {"s", 0.8}};
  switch (s) {
    case Scenario::fig1_sweep:
      return {{"model", {{"kind", "geometric"}, {"n", 10000}, {"k", 2}, {"beta", 3.0}, {"K", 0.2}, {"D", 30.0}, {"s", 0.8}}},
              {"algorithm", {{"kind", "pgm"}, {"r", 5}}},
              {"seed_strategy", "compact"},
              {"seed_counts", {10, 20, 30, 40, 60, 80, 100, 150, 200, 300, 400, 600, 800, 1200}}};
    case Scenario::er_baseline:
      return {{"model", {{"kind", "erdos_renyi"}, {"n", 10000}, {"er_p", 0.003}, {"s", 0.8}}},
              {"algorithm", {{"kind", "pgm"}, {"r", 5}}},
              {"seed_strategy", "uniform"},
              {"seed_counts", {100, 200, 300, 400, 500, 600, 700, 800, 1000, 1200, 1500}}};
    case Scenario::fig2_error_vs_K:
      return {{"model", {{"kind", "geometric"}, {"n", 10000}, {"k", 2}, {"beta", 3.0}, {"D", 30.0}, {"s", 0.8}}},
              {"algorithm", {{"kind", "pgm"}, {"r", 5}}},
              {"seed_strategy", "compact"},
              {"seed_counts", {100, 200}},
              {"variants", json::array({{{"K", 0.05}}, {{"K", 0.2}}, {{"K", 0.4}}, {{"K", 0.8}}})}};
    case Scenario::fig3_algorithms:
      return {{"model", geometric_dense},
              {"algorithm", {{"kind", "pgm"}, {"r", 5}}},
              {"seed_strategy", "compact"},
              {"seed_counts", {20, 40, 60, 100, 150, 200}},
              {"variants", json::array({{{"label", "pgm r=5"}, {"algorithm", "pgm"}, {"r", 5}},
                                        {{"label", "geo x=1 r=4"}, {"algorithm", "pgm_filtered_geometric"}, {"x", 1.0}, {"r", 4}},
                                        {{"label", "geo x=1 r=5"}, {"algorithm", "pgm_filtered_geometric"}, {"x", 1.0}, {"r", 5}}})}};
    case Scenario::fig4_filter_sweep:
      return {{"model", geometric_dense},
              {"algorithm", {{"kind", "pgm_filtered_geometric"}, {"r", 4}}},
              {"seed_strategy", "compact"},
              {"seed_counts", {60}},
              {"variants", json::array({{{"x", 1.0}}, {{"x", 1.1}}, {{"x", 1.2}}, {{"x", 1.3}}})}};
    case Scenario::table2_inverse: {
      json variants = json::array();
      for (double d : {36.0, 45.0, 53.0, 64.0})
        for (double x : {1.0, 1.1, 1.2, 1.3, 1.4})
          variants.push_back({{"D", d}, {"x", x}, {"group", "D=" + fmt(d)}});
      return {{"model", geometric_dense},
              {"algorithm", {{"kind", "pgm_filtered_geometric"}, {"r", 4}}},
              {"seed_strategy", "compact"},
              {"seed_counts", {10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 34, 38, 44, 50, 60, 80}},
              {"variants", variants}};
    }
    case Scenario::pokec:
      return {{"model", {{"kind", "file"}, {"s", 0.8}, {"min_in", 20}, {"max_out", 200}}},
              {"algorithm", {{"kind", "pgm_filtered_nearest_k"}, {"r", 6}, {"k_nearest", 10}}},
              {"seed_strategy", "compact"},
              {"seed_counts", {50, 100, 150, 200, 300, 500}}};
    case Scenario::custom:
      break;
  }
  return json::object();
}

std::optional<double> opt_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (j[key].is_string() && j[key].get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return j[key].get<double>();
}

void apply_model(const json& j, ModelSource& m) {
  if (j.contains("kind"))
    m.kind = [&] {
      const auto k = j["kind"].get<std::string>();
      if (k == "geometric") return ModelSource::Kind::geometric;
      if (k == "erdos_renyi") return ModelSource::Kind::erdos_renyi;
      if (k == "file") return ModelSource::Kind::file;
      throw ConfigError("unknown model kind '" + k + "'");
    }();
  auto& p = m.params;
  if (j.contains("n")) p.n = j["n"].get<std::size_t>();
  if (j.contains("k")) p.k = j["k"].get<int>();
  if (auto b = opt_number(j, "beta")) p.beta = *b;
  if (auto v = opt_number(j, "C")) p.cluster_scale = v;
  if (auto v = opt_number(j, "K")) p.cluster_density = v;
  if (auto v = opt_number(j, "D")) p.target_degree = v;
  if (auto v = opt_number(j, "s")) p.sample_prob = *v;
  if (auto v = opt_number(j, "er_p")) m.er_p = v;
  if (j.contains("path")) m.graph_path = j["path"].get<std::string>();
}

void apply_algorithm(const json& j, Algorithm& a) {
  if (j.contains("kind")) a.kind = parse_enum(kAlgorithms, j["kind"].get<std::string>(), "algorithm");
  if (j.contains("algorithm")) a.kind = parse_enum(kAlgorithms, j["algorithm"].get<std::string>(), "algorithm");
  if (j.contains("r")) a.r = j["r"].get<int>();
  if (j.contains("x")) a.x_factor = j["x"].get<double>();
  if (j.contains("k_nearest")) a.k_nearest = j["k_nearest"].get<std::size_t>();
  if (j.contains("admission")) {
    const auto w = j["admission"].get<std::string>();
    if (w == "strict") a.admission = Admission::strict;
    else if (w == "matched_only") a.admission = Admission::matched_only;
    else throw ConfigError("unknown admission: " + w);
  }
}

void apply_staged(const json& j, StagedConfig& c) {
  c.alpha1 = j.value("alpha1", c.alpha1);
  c.alpha2 = j.value("alpha2", c.alpha2);
  c.delta = j.value("delta", c.delta);
  c.r = j.value("r", c.r);
  c.alpha_exp = j.value("alpha_exp", c.alpha_exp);
  c.lambda = j.value("lambda", c.lambda);
  if (auto v = opt_number(j, "ring_step")) c.ring_step = v;
  c.ring_multiplier = j.value("ring_multiplier", c.ring_multiplier);
  c.stall_fraction = j.value("stall_fraction", c.stall_fraction);
  c.max_rounds = j.value("max_rounds", c.max_rounds);
  c.anchors_per_round = j.value("anchors_per_round", c.anchors_per_round);
}

// File-backed ground truth, loaded once per path and filter setting.
std::shared_ptr<const GroundTruthGraph> load_file_model(const std::string& path, std::size_t min_in,
                                                        std::size_t max_out, bool filter) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const GroundTruthGraph>> cache;
  const std::string key = path + "|" + std::to_string(min_in) + "|" + std::to_string(max_out) + "|" +
                          std::to_string(filter);
  std::lock_guard lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto snap = io::load_snap_edgelist(fs::path(path));
  auto g = std::make_shared<GroundTruthGraph>(filter ? degree_filter(snap.truth, min_in, max_out)
                                                     : std::move(snap.truth));
  cache[key] = g;
  return g;
}

}  // namespace

std::string to_string(Scenario s) { return enum_name(kScenarios, s); }
std::string to_string(AlgorithmKind a) { return enum_name(kAlgorithms, a); }
std::string to_string(SeedStrategy s) { return enum_name(kStrategies, s); }

void ExperimentSpec::validate() const {
  if (runs < 1) throw ConfigError("spec: runs must be >= 1");
  if (seed_counts.empty()) throw ConfigError("spec: seed_counts must not be empty");
  for (std::size_t i = 1; i < seed_counts.size(); ++i)
    if (seed_counts[i] <= seed_counts[i - 1]) throw ConfigError("spec: seed_counts must be strictly increasing");
  if (!(percolation_fraction > 0.0 && percolation_fraction <= 1.0))
    throw ConfigError("spec: percolation_fraction must lie in (0, 1]");
  if (model.kind == ModelSource::Kind::file && model.graph_path.empty() && !model.loaded)
    throw ConfigError("spec: file model needs a path");
  staged.validate();
}

ExperimentSpec parse_experiment_spec(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw ConfigError("spec must be a JSON object");
  ExperimentSpec spec;
  try {
    spec.scenario = parse_enum(kScenarios, user.value("scenario", std::string("custom")), "scenario");
    json j = preset(spec.scenario);
    j.merge_patch(user);
    if (user.contains("variants")) j["variants"] = user["variants"];  // lists replace, not merge
    if (user.contains("seed_counts")) j["seed_counts"] = user["seed_counts"];

    if (j.contains("model")) apply_model(j["model"], spec.model);
    if (spec.model.kind == ModelSource::Kind::file) {
      const auto& m = j["model"];
      const bool filter = m.contains("min_in") || m.contains("max_out");
      if (!spec.model.graph_path.empty())
        spec.model.loaded = load_file_model(spec.model.graph_path, m.value("min_in", std::size_t{0}),
                                            m.value("max_out", SIZE_MAX), filter);
    }
    if (j.contains("algorithm")) apply_algorithm(j["algorithm"], spec.algorithm);
    if (j.contains("seed_strategy"))
      spec.seed_strategy = parse_enum(kStrategies, j["seed_strategy"].get<std::string>(), "seed strategy");
    if (j.contains("seed_counts")) spec.seed_counts = j["seed_counts"].get<std::vector<std::size_t>>();
    spec.runs = j.value("runs", spec.runs);
    spec.master_seed = j.value("master_seed", spec.master_seed);
    if (j.contains("out")) spec.out_path = j["out"].get<std::string>();
    spec.percolation_fraction = j.value("percolation_fraction", spec.percolation_fraction);
    spec.count_seeds = j.value("count_seeds", spec.count_seeds);
    spec.threads = j.value("threads", spec.threads);
    if (j.contains("staged")) apply_staged(j["staged"], spec.staged);
    if (j.contains("variants"))
      for (const auto& v : j["variants"]) {
        if (!v.is_object()) throw ConfigError("each variant must be an object");
        spec.variant_json.push_back(v.dump());
      }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec field has the wrong type: ") + e.what());
  }
  spec.validate();
  return spec;
}

namespace {

std::string default_label(const json& v, const PointSpec& p) {
  if (v.contains("label")) return v["label"].get<std::string>();
  std::string s = to_string(p.algorithm.kind) + " r=" + std::to_string(p.algorithm.r);
  for (const char* key : {"K", "C", "D", "beta", "n", "er_p", "x", "k_nearest", "s", "admission"})
    if (v.contains(key)) s += std::string(" ") + key + "=" + (v[key].is_number() ? fmt(v[key].get<double>()) : v[key].dump());
  if (v.contains("seeds")) s += " seeds=" + v["seeds"].get<std::string>();
  return s;
}

void resolve_into(ModelSource& m) {
  if (m.kind != ModelSource::Kind::geometric) return;
  const auto r = resolve(m.params);
  m.params.cluster_scale = r.C;
  m.params.cluster_density = r.K;
  m.params.target_degree.reset();
}

}  // namespace

std::vector<PointSpec> expand_points(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<std::string> variants = spec.variant_json;
  if (variants.empty()) variants.push_back("{}");
  std::vector<PointSpec> points;
  for (const auto& vtext : variants) {
    const json v = json::parse(vtext);
    PointSpec base;
    base.model = spec.model;
    base.algorithm = spec.algorithm;
    base.seeds = spec.seed_strategy;
    base.staged = spec.staged;
    try {
      apply_model(v, base.model);
      apply_algorithm(v, base.algorithm);
      if (v.contains("seeds")) base.seeds = parse_enum(kStrategies, v["seeds"].get<std::string>(), "seed strategy");
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad variant: ") + e.what());
    }
    base.s = base.model.params.sample_prob;
    if (base.algorithm.r < 1) throw ConfigError("variant: r must be >= 1");
    try {
      resolve_into(base.model);
    } catch (const InfeasibleDegree&) {
      throw;
    } catch (const DomainError& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
    if (base.model.kind == ModelSource::Kind::erdos_renyi && !base.model.er_p) {
      if (!base.model.params.target_degree) throw ConfigError("Erdos-Renyi model needs er_p or D");
      base.model.er_p = *base.model.params.target_degree / static_cast<double>(base.model.params.n - 1);
    }
    if (base.model.kind == ModelSource::Kind::file && !base.model.loaded)
      throw ConfigError("file model was not loaded");
    base.label = default_label(v, base);
    for (auto& ch : base.label)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
    for (std::size_t a0 : spec.seed_counts) {
      PointSpec p = base;
      p.index = points.size();
      p.a0 = a0;
      points.push_back(std::move(p));
    }
  }
  return points;
}

std::vector<NodePair> seeds_uniform(const GraphPair& pair, std::size_t a0, Rng& rng) {
  const std::size_t n = pair.size();
  if (a0 > n) throw DomainError("seeds_uniform: a0 exceeds n");
  const auto inv = pair.inverse_alignment();
  std::vector<Node> ids(n);
  std::iota(ids.begin(), ids.end(), Node{0});
  std::vector<NodePair> out;
  out.reserve(a0);
  for (std::size_t i = 0; i < a0; ++i) {
    const auto j = i + uniform_index(rng, n - i);
    std::swap(ids[i], ids[j]);
    out.push_back({ids[i], inv[ids[i]]});
  }
  return out;
}

std::vector<NodePair> seeds_compact(const GraphPair& pair, const GroundTruthGraph& truth,
                                    std::size_t a0, Rng& rng) {
  const std::size_t n = pair.size();
  if (a0 > n) throw DomainError("seeds_compact: a0 exceeds n");
  if (truth.size() != n) throw DimensionMismatch("seeds_compact: truth and pair sizes differ");
  if (a0 == 0) return {};
  const auto center = static_cast<Node>(uniform_index(rng, n));
  std::vector<Node> order;
  if (truth.positions) {
    const auto& pos = *truth.positions;
    std::vector<std::pair<double, Node>> d(n);
    for (Node v = 0; v < n; ++v) d[v] = {v == center ? -1.0 : torus_distance(pos[center], pos[v]), v};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(a0), d.end());
    for (std::size_t i = 0; i < a0; ++i) order.push_back(d[i].second);
  } else {
    const Graph view = truth.graph.symmetrized();
    std::vector<std::uint32_t> cn(n, 0);
    for (Node w : view.neighbors(center))
      for (Node v : view.neighbors(w)) ++cn[v];
    std::vector<Node> ids(n);
    std::iota(ids.begin(), ids.end(), Node{0});
    auto key_less = [&](Node a, Node b) {
      if ((a == center) != (b == center)) return a == center;
      return cn[a] != cn[b] ? cn[a] > cn[b] : a < b;
    };
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(a0), ids.end(), key_less);
    order.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(a0));
  }
  const auto inv = pair.inverse_alignment();
  std::vector<NodePair> out;
  for (Node v : order) out.push_back({v, inv[v]});
  return out;
}

GroundTruthGraph degree_filter(const GroundTruthGraph& g, std::size_t min_in, std::size_t max_out,
                               std::vector<Node>* old_ids) {
  const auto in = g.graph.in_degrees();
  std::vector<bool> keep(g.size());
  for (Node v = 0; v < g.size(); ++v) keep[v] = in[v] > min_in && g.graph.degree(v) < max_out;
  std::vector<Node> ids;
  GroundTruthGraph out;
  out.graph = g.graph.induced(keep, &ids);
  if (g.positions) out.positions = g.positions->permuted(ids);
  out.meta = g.meta;
  out.meta.n = out.size();
  out.meta.kind = "loaded";
  if (old_ids) *old_ids = std::move(ids);
  return out;
}

namespace {

GroundTruthGraph make_truth(const PointSpec& p, Rng& rng, std::optional<ResolvedModel>& model) {
  switch (p.model.kind) {
    case ModelSource::Kind::geometric: {
      model = resolve(p.model.params);
      return generate_ground_truth(*model, rng);
    }
    case ModelSource::Kind::erdos_renyi:
      return generate_er(p.model.params.n, *p.model.er_p, rng);
    case ModelSource::Kind::file:
      break;
  }
  return *p.model.loaded;
}

DenseSeeds dense_seeds(const GraphPair& pair, const GroundTruthGraph& truth, const ResolvedModel& model,
                       const StagedConfig& cfg, std::size_t a0, Rng& rng) {
  if (!truth.positions) throw MissingPositions("dense pipeline seeding needs positions");
  const auto geo = choose_region_geometry(model, cfg);
  DenseSeeds s;
  const std::size_t half = std::max<std::size_t>(1, a0 / 2);
  s.left = seeds_compact(pair, truth, half, rng);
  const auto& pos = *truth.positions;
  std::vector<double> target(pos[s.left.front().first].begin(), pos[s.left.front().first].end());
  target[0] += geo.g + geo.h;
  target[0] -= std::floor(target[0]);
  std::vector<std::pair<double, Node>> d(truth.size());
  for (Node v = 0; v < truth.size(); ++v) d[v] = {torus_distance(pos[v], target), v};
  std::vector<bool> taken(truth.size(), false);
  for (const auto& p : s.left) taken[p.first] = true;
  std::sort(d.begin(), d.end());
  const auto inv = pair.inverse_alignment();
  for (const auto& [dist, v] : d) {
    if (s.right.size() >= a0 - std::min(a0, half)) break;
    if (!taken[v]) s.right.push_back({v, inv[v]});
  }
  return s;
}

}  // namespace

RunRecord run_single(const PointSpec& p, std::size_t run, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.point = p.index;
  rec.label = p.label;
  rec.a0 = p.a0;
  rec.run = run;
  rec.run_seed = derive_seed(opt.master_seed, {p.index, run});
  Rng rng(rec.run_seed);

  std::optional<ResolvedModel> model;
  const GroundTruthGraph truth = make_truth(p, rng, model);
  const GraphPair pair = sample_pair(truth, p.s, rng);
  rec.n = pair.size();

  std::vector<NodePair> seeds;
  std::optional<DenseSeeds> dense;
  if (p.algorithm.kind == AlgorithmKind::dense_pipeline) {
    if (!model) throw ConfigError("dense pipeline needs a geometric model");
    dense = dense_seeds(pair, truth, *model, p.staged, p.a0, rng);
    seeds = dense->left;
    seeds.insert(seeds.end(), dense->right.begin(), dense->right.end());
  } else {
    seeds = p.seeds == SeedStrategy::uniform ? seeds_uniform(pair, p.a0, rng)
                                             : seeds_compact(pair, truth, p.a0, rng);
  }

  PgmConfig cfg;
  cfg.r = p.algorithm.r;
  cfg.admission = p.algorithm.admission;
  cfg.directed = truth.graph.directed();
  MatchOutcome outcome;
  switch (p.algorithm.kind) {
    case AlgorithmKind::pgm:
      outcome = percolate(pair.g1, pair.g2, seeds, cfg, rng);
      break;
    case AlgorithmKind::pgm_filtered_geometric: {
      if (!truth.positions) throw MissingPositions("geometric filter needs positions");
      const double C = model ? model->C : 0.0;
      const Positions pos2 = truth.positions->permuted(pair.alignment);
      const Graph f1 = filter_edges_geometric(pair.g1, *truth.positions, p.algorithm.x_factor, C);
      const Graph f2 = filter_edges_geometric(pair.g2, pos2, p.algorithm.x_factor, C);
      cfg.edge_filter = "geometric x=" + fmt(p.algorithm.x_factor);
      outcome = percolate(f1, f2, seeds, cfg, rng);
      break;
    }
    case AlgorithmKind::pgm_filtered_nearest_k: {
      const Graph f1 = filter_edges_nearest_k(pair.g1, p.algorithm.k_nearest);
      const Graph f2 = filter_edges_nearest_k(pair.g2, p.algorithm.k_nearest);
      cfg.edge_filter = "nearest k=" + std::to_string(p.algorithm.k_nearest);
      outcome = percolate(f1, f2, seeds, cfg, rng);
      break;
    }
    case AlgorithmKind::sparse_pipeline: {
      if (!model) throw ConfigError("sparse pipeline needs a geometric model");
      StagedConfig sc = p.staged;
      sc.r = p.algorithm.r;
      outcome = sparse_deanonymize(pair.g1, pair.g2, seeds, *model, sc, rng).outcome;
      break;
    }
    case AlgorithmKind::dense_pipeline: {
      StagedConfig sc = p.staged;
      sc.r = p.algorithm.r;
      outcome = dense_deanonymize(pair.g1, pair.g2, *dense, *model, sc, rng).outcome;
      break;
    }
  }
  const MatchResult res = score(pair, seeds, std::move(outcome));
  rec.good = res.good_count + (opt.count_seeds ? res.seed_count : 0);
  rec.bad = res.bad_count;
  rec.error_ratio = res.error_ratio;
  rec.steps = res.steps;
  rec.percolated = static_cast<double>(rec.good) >= opt.percolation_fraction * static_cast<double>(rec.n);
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<RunRecord> run_points(std::span<const PointSpec> points, std::size_t runs,
                                  const RunOptions& opt, std::size_t threads,
                                  const std::set<RunKey>& skip,
                                  const std::function<void(const RunRecord&)>& on_record) {
  std::vector<std::pair<const PointSpec*, std::size_t>> work;
  for (const auto& p : points)
    for (std::size_t r = 0; r < runs; ++r)
      if (!skip.contains({p.index, r})) work.emplace_back(&p, r);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, work.size()));

  std::vector<RunRecord> out(work.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      try {
        out[i] = run_single(*work[i].first, work[i].second, opt);
        if (on_record) {
          std::lock_guard lock(mu);
          on_record(out[i]);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = work.size();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.point, a.run) < std::tie(b.point, b.run);
  });
  return out;
}

std::vector<PointAggregate> aggregate(std::span<const RunRecord> records) {
  std::map<std::size_t, PointAggregate> by_point;
  for (const auto& r : records) {
    auto& a = by_point[r.point];
    a.point = r.point;
    a.label = r.label;
    a.a0 = r.a0;
    ++a.runs;
    a.mean_good += static_cast<double>(r.good);
    a.mean_bad += static_cast<double>(r.bad);
    a.mean_error_ratio += r.error_ratio;
    a.percolation_probability += r.percolated ? 1.0 : 0.0;
  }
  std::vector<PointAggregate> out;
  for (auto& [_, a] : by_point) {
    const double n = static_cast<double>(a.runs);
    a.mean_good /= n;
    a.mean_bad /= n;
    a.mean_error_ratio /= n;
    a.percolation_probability /= n;
    const double total = a.mean_good + a.mean_bad;
    a.pooled_error_ratio = total > 0.0 ? a.mean_bad / total : 0.0;
    out.push_back(a);
  }
  return out;
}

std::optional<double> percolation_point(std::span<const PointAggregate> aggs, double level) {
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    if (aggs[i].percolation_probability < level) continue;
    if (i == 0) return static_cast<double>(aggs[0].a0);
    const auto& lo = aggs[i - 1];
    const auto& hi = aggs[i];
    const double t = (level - lo.percolation_probability) /
                     (hi.percolation_probability - lo.percolation_probability);
    return static_cast<double>(lo.a0) + t * (static_cast<double>(hi.a0) - static_cast<double>(lo.a0));
  }
  return std::nullopt;
}

namespace {

constexpr const char* kCsvTag = "# percomatch-csv v1";
constexpr const char* kRunsHeader =
    "point,label,algorithm,strategy,a0,run,n,good,bad,error_ratio,percolated,steps,wall_ms,run_seed";

void write_run_row(std::ostream& out, const RunRecord& r, const PointSpec* p) {
  out << r.point << ',' << r.label << ',' << (p ? to_string(p->algorithm.kind) : "") << ','
      << (p ? to_string(p->seeds) : "") << ',' << r.a0 << ',' << r.run << ',' << r.n << ',' << r.good
      << ',' << r.bad << ',' << fmt(r.error_ratio) << ',' << (r.percolated ? 1 : 0) << ',' << r.steps
      << ',' << fmt(std::round(r.wall_ms * 1000.0) / 1000.0) << ',' << r.run_seed << '\n';
}

const PointSpec* find_point(std::span<const PointSpec> points, std::size_t index) {
  for (const auto& p : points)
    if (p.index == index) return &p;
  return nullptr;
}

}  // namespace

void write_runs_csv(std::ostream& out, std::span<const RunRecord> records,
                    std::span<const PointSpec> points) {
  out << kCsvTag << '\n' << kRunsHeader << '\n';
  for (const auto& r : records) write_run_row(out, r, find_point(points, r.point));
}

std::vector<RunRecord> read_runs_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::vector<RunRecord> out;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kRunsHeader) throw ParseError("unexpected runs.csv header", lineno);
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 14) {
      // an interrupted writer can leave a truncated last row; drop it
      if (in.peek() == EOF) break;
      throw ParseError("runs.csv row has " + std::to_string(f.size()) + " fields", lineno);
    }
    try {
      RunRecord r;
      r.point = std::stoull(f[0]);
      r.label = f[1];
      r.a0 = std::stoull(f[4]);
      r.run = std::stoull(f[5]);
      r.n = std::stoull(f[6]);
      r.good = std::stoull(f[7]);
      r.bad = std::stoull(f[8]);
      r.error_ratio = std::stod(f[9]);
      r.percolated = f[10] == "1";
      r.steps = std::stoull(f[11]);
      r.wall_ms = std::stod(f[12]);
      r.run_seed = std::stoull(f[13]);
      out.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError("malformed number in runs.csv", lineno);
    }
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, std::span<const PointAggregate> aggs) {
  out << kCsvTag << '\n'
      << "point,label,a0,runs,mean_good,mean_bad,mean_error_ratio,pooled_error_ratio,percolation_probability\n";
  for (const auto& a : aggs)
    out << a.point << ',' << a.label << ',' << a.a0 << ',' << a.runs << ',' << fmt(a.mean_good) << ','
        << fmt(a.mean_bad) << ',' << fmt(a.mean_error_ratio) << ',' << fmt(a.pooled_error_ratio) << ','
        << fmt(a.percolation_probability) << '\n';
}

std::vector<PointAggregate> run_experiment(const ExperimentSpec& spec) {
  const auto points = expand_points(spec);
  RunOptions opt{spec.master_seed, spec.percolation_fraction, spec.count_seeds};

  std::vector<RunRecord> done;
  std::set<RunKey> skip;
  const bool write = !spec.out_path.empty();
  const fs::path runs_path = spec.out_path / "runs.csv";
  if (write) {
    std::error_code ec;
    fs::create_directories(spec.out_path, ec);
    if (ec) throw IoError("cannot create " + spec.out_path.string());
    if (fs::exists(runs_path)) {
      for (auto& r : read_runs_csv(runs_path)) {
        if (r.point >= points.size() || r.run >= spec.runs || points[r.point].a0 != r.a0) continue;
        if (skip.insert({r.point, r.run}).second) done.push_back(std::move(r));
      }
    }
  }

  std::ofstream live;
  if (write) {
    live.open(runs_path, std::ios::trunc);
    if (!live) throw IoError("cannot write " + runs_path.string());
    write_runs_csv(live, done, points);
    live.flush();
  }
  auto fresh = run_points(points, spec.runs, opt, spec.threads, skip, [&](const RunRecord& r) {
    if (live.is_open()) {
      write_run_row(live, r, find_point(points, r.point));
      live.flush();
    }
  });
  done.insert(done.end(), fresh.begin(), fresh.end());
  std::sort(done.begin(), done.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.point, a.run) < std::tie(b.point, b.run);
  });
  const auto aggs = aggregate(done);
  if (!write) return aggs;

  live.close();
  {
    std::ofstream out(runs_path, std::ios::trunc);
    write_runs_csv(out, done, points);
    if (!out) throw IoError("write failed: " + runs_path.string());
  }
  {
    std::ofstream out(spec.out_path / "aggregate.csv");
    write_aggregate_csv(out, aggs);
    if (!out) throw IoError("cannot write aggregate.csv");
  }

  // sweep lines: consecutive points sharing a label
  json lines = json::array();
  std::map<std::string, std::pair<double, std::string>> groups;  // group -> (min a0, label)
  for (std::size_t i = 0; i < aggs.size();) {
    std::size_t j = i;
    while (j < aggs.size() && aggs[j].label == aggs[i].label) ++j;
    std::span<const PointAggregate> line(aggs.data() + i, j - i);
    json entry = {{"label", aggs[i].label}};
    const auto pp = percolation_point(line, 0.5);
    entry["percolation_point"] = pp ? json(*pp) : json(nullptr);
    std::optional<std::size_t> inverse;
    for (const auto& a : line)
      if (a.pooled_error_ratio <= 0.03 && a.percolation_probability >= 0.5) {
        inverse = a.a0;
        break;
      }
    entry["min_seeds_error3_perc50"] = inverse ? json(*inverse) : json(nullptr);
    lines.push_back(entry);
    const auto vtext = spec.variant_json.empty() ? std::string("{}") : spec.variant_json[std::min(
                                                       spec.variant_json.size() - 1, i / spec.seed_counts.size())];
    const json v = json::parse(vtext);
    if (v.contains("group") && inverse) {
      const auto g = v["group"].get<std::string>();
      auto it = groups.find(g);
      if (it == groups.end() || static_cast<double>(*inverse) < it->second.first)
        groups[g] = {static_cast<double>(*inverse), aggs[i].label};
    }
    i = j;
  }
  json summary = {{"scenario", to_string(spec.scenario)},
                  {"runs", spec.runs},
                  {"master_seed", spec.master_seed},
                  {"points", aggs.size()},
                  {"lines", lines}};
  if (!groups.empty()) {
    json g = json::object();
    for (const auto& [name, v] : groups) g[name] = {{"min_seeds", v.first}, {"label", v.second}};
    summary["inverse_search"] = g;
  }
  std::ofstream out(spec.out_path / "summary.json");
  out << summary.dump(2) << '\n';
  if (!out) throw IoError("cannot write summary.json");
  return aggs;
}

}  // namespace percomatch
