// Copyright 2026 The sgdiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "sgdiff/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "sgdiff/errors.hpp"
#include "sgdiff/parallel.hpp"
#include "sgdiff/random.hpp"

namespace sgdiff {
namespace {

// Seed streams of one pipeline run.
enum Stream : std::uint64_t {
  kSplit = 10,
  kExtract = 11,
  kStructTrain = 12,
  kFeatTrain = 13,
  kFusionNeg = 14,
  kScore = 15,
  kSubsample = 16,
  kChoose = 17,
  kRandom = 18,
  kAttack = 19,
  kFusionScore = 20,
};

// Re-throws library errors with the failing stage prefixed, keeping the type
// so callers can still map it to an exit code.
template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const ParseError&) {
    throw;
  } catch (const ArgumentError& e) {
    throw ArgumentError(stage + ": " + e.what());
  } catch (const IndexError& e) {
    throw IndexError(stage + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(stage + ": " + e.what());
  } catch (const StateError& e) {
    throw StateError(stage + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(stage + ": " + e.what());
  } catch (const SamplingExhausted& e) {
    throw SamplingExhausted(stage + ": " + e.what());
  } catch (const ContractError& e) {
    throw ContractError(stage + ": " + e.what());
  } catch (const CompatibilityError& e) {
    throw CompatibilityError(stage + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(stage + ": " + e.what());
  }
}

void say(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

std::string hits_name(int k) { return "hits" + std::to_string(k); }

std::string format_value(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::vector<LabeledPair> capped_test_pairs(const EdgeSplit& split, int cap) {
  const auto n_pos = std::min(split.test_pos.size(), static_cast<std::size_t>(cap));
  const auto n_neg = std::min(split.test_neg.size(), static_cast<std::size_t>(cap));
  return label_pairs(std::span(split.test_pos).first(n_pos), std::span(split.test_neg).first(n_neg));
}

struct Aggregate {
  std::map<std::string, std::vector<double>> values;

  void add(const std::string& metric, double v) { values[metric].push_back(v); }

  void finish(ExperimentReport& report) const {
    for (const auto& [metric, v] : values) {
      double mean = 0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
      report.metrics[metric] = mean;
      report.metrics[metric + "_std"] = sd;
      report.records.push_back({report.experiment, report.dataset, "mean", metric, mean});
      report.records.push_back({report.experiment, report.dataset, "std", metric, sd});
    }
  }
};

void add_summary(Aggregate& agg, ExperimentReport& report, std::uint64_t seed, const std::string& prefix,
                 const MetricSummary& m, int hits_k) {
  const std::string s = std::to_string(seed);
  for (auto [name, v] : {std::pair{prefix + "auc", m.auc}, {prefix + "ap", m.ap}, {prefix + hits_name(hits_k), m.hits}}) {
    agg.add(name, v);
    report.records.push_back({report.experiment, report.dataset, s, name, v});
  }
}

ExperimentReport new_report(const std::string& experiment, const std::string& dataset, const RunConfig& config) {
  ExperimentReport r;
  r.experiment = experiment;
  r.dataset = dataset;
  r.fingerprint = config_fingerprint(config);
  r.seed = config.seed;
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Data.

Dataset load_dataset(const std::filesystem::path& root, const std::string& name) {
  if (name.rfind("surrogate:", 0) == 0) {
    // surrogate:<kind>:<nodes>[:<seed>]
    std::vector<std::string> parts;
    std::stringstream ss(name);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() < 3 || parts.size() > 4) {
      throw ArgumentError("surrogate dataset names look like surrogate:<kind>:<nodes>[:<seed>]");
    }
    try {
      const int nodes = std::stoi(parts[2]);
      const std::uint64_t seed = parts.size() == 4 ? std::stoull(parts[3]) : 1;
      return {name, make_surrogate(parts[1], nodes, seed)};
    } catch (const std::logic_error&) {
      throw ArgumentError("bad surrogate dataset name '" + name + "'");
    }
  }
  std::filesystem::path dir = root / name;
  if (!std::filesystem::exists(dir / "edges.txt")) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::filesystem::exists(root / lower / "edges.txt")) dir = root / lower;
  }
  const auto edges = dir / "edges.txt";
  if (!std::filesystem::exists(edges)) throw IoError("dataset '" + name + "': missing edge file " + edges.string());
  const auto features = dir / "features.txt";
  std::optional<std::filesystem::path> fpath;
  if (std::filesystem::exists(features)) fpath = features;
  return {name, load_graph(edges, fpath)};
}

Graph make_surrogate(const std::string& kind, int num_nodes, std::uint64_t seed) {
  if (num_nodes < 8) throw ArgumentError("surrogate graphs need at least 8 nodes");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<NodePair> edges;
  const auto n = static_cast<NodeId>(num_nodes);
  if (kind == "geometric" || kind == "latent") {
    std::vector<std::pair<double, double>> pts(num_nodes);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const double radius = std::sqrt(10.0 / (3.14159265358979 * num_nodes));
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        const double dx = pts[a].first - pts[b].first;
        const double dy = pts[a].second - pts[b].second;
        if (dx * dx + dy * dy < radius * radius) edges.push_back({a, b});
      }
    }
    if (kind == "latent") {
      // Smooth random features of the latent position plus noise.
      std::normal_distribution<double> noise(0, 0.3);
      Eigen::MatrixXd x(num_nodes, 8);
      for (NodeId a = 0; a < n; ++a) {
        for (int j = 0; j < 8; ++j) {
          x(a, j) = std::sin(3.0 * (j + 1) * pts[a].first + 2.0 * j * pts[a].second + j) + noise(rng);
        }
      }
      return Graph(num_nodes, std::move(edges), std::move(x));
    }
    return Graph(num_nodes, std::move(edges));
  }
  if (kind == "blocks") {
    const double half = num_nodes / 2.0;
    const double p_in = std::min(1.0, 8.0 / half);
    const double p_out = std::min(1.0, 0.5 / half);
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = a + 1; b < n; ++b) {
        if (u(rng) < ((a % 2) == (b % 2) ? p_in : p_out)) edges.push_back({a, b});
      }
    }
    std::normal_distribution<double> noise(0, 0.5);
    Eigen::MatrixXd x(num_nodes, 8);
    for (NodeId a = 0; a < n; ++a) {
      for (int j = 0; j < 8; ++j) x(a, j) = noise(rng);
      x(a, a % 2) += 1.0;
    }
    return Graph(num_nodes, std::move(edges), std::move(x));
  }
  throw ArgumentError("unknown surrogate kind '" + kind + "' (geometric, latent, blocks)");
}

// ---------------------------------------------------------------------------
// Pipeline pieces.

ObservedGraph make_observed(const Graph& full, std::vector<NodePair> visible_edges,
                            std::span<const NodePair> stat_pairs, bool use_features) {
  ObservedGraph out;
  Graph g = full.with_edges(std::move(visible_edges));
  if (!use_features) {
    out.graph = g.with_features(std::nullopt);
    return out;
  }
  const auto& x = full.features();
  std::set<NodeId> touched;
  for (const auto& p : stat_pairs) {
    touched.insert(p.u);
    touched.insert(p.v);
  }
  Eigen::MatrixXd rows;
  if (touched.empty()) {
    rows = x;
  } else {
    rows.resize(static_cast<Eigen::Index>(touched.size()), x.cols());
    Eigen::Index r = 0;
    for (NodeId id : touched) rows.row(r++) = x.row(id);
  }
  out.stats = fit_feature_stats(rows);
  out.graph = g.with_features(out.stats->apply(x));
  return out;
}

bool features_enabled(const RunConfig& config, const Graph& g) {
  if (config.features == "off") return false;
  if (config.features == "on" && !g.has_features()) {
    throw StateError("features=on but the graph has no node features; use features=auto or off");
  }
  return g.has_features();
}

TrainingPairs choose_training_pairs(const Graph& full, const EdgeSplit& split, std::vector<NodePair> available_pos,
                                    std::vector<NodePair> available_neg, const RunConfig& config,
                                    std::uint64_t seed) {
  if (available_pos.empty() || available_neg.empty()) throw ArgumentError("no training pairs available");
  Rng rng(derive_seed(seed, kChoose));
  std::shuffle(available_pos.begin(), available_pos.end(), rng);
  std::shuffle(available_neg.begin(), available_neg.end(), rng);
  const std::size_t cap = std::max<std::size_t>(1, static_cast<std::size_t>(config.max_train / 2));
  const std::size_t n_pos = std::min(cap, available_pos.size());
  const std::size_t n_neg = std::min(cap, available_neg.size());
  TrainingPairs t;
  t.pos.assign(available_pos.begin(), available_pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
  t.neg.assign(available_neg.begin(), available_neg.begin() + static_cast<std::ptrdiff_t>(n_neg));

  const std::size_t f_cap = std::max<std::size_t>(1, static_cast<std::size_t>(config.max_fusion / 2));
  if (config.fusion_split == "valid") {
    t.fusion_pos.assign(split.valid_pos.begin(),
                        split.valid_pos.begin() + static_cast<std::ptrdiff_t>(std::min(f_cap, split.valid_pos.size())));
    t.fusion_neg.assign(split.valid_neg.begin(),
                        split.valid_neg.begin() + static_cast<std::ptrdiff_t>(std::min(f_cap, split.valid_neg.size())));
    if (t.fusion_pos.empty() || t.fusion_neg.empty()) throw ArgumentError("fusion_split=valid but the validation split is empty");
    return t;
  }
  // Unused positives first (rotate the training block to the back), then
  // reused ones.
  std::rotate(available_pos.begin(), available_pos.begin() + static_cast<std::ptrdiff_t>(n_pos), available_pos.end());
  const std::size_t n_fusion = std::min(f_cap, available_pos.size());
  t.fusion_pos.assign(available_pos.begin(), available_pos.begin() + static_cast<std::ptrdiff_t>(n_fusion));
  std::vector<NodePair> exclude = split.train_neg;
  exclude.insert(exclude.end(), split.valid_neg.begin(), split.valid_neg.end());
  exclude.insert(exclude.end(), split.test_neg.begin(), split.test_neg.end());
  t.fusion_neg = sample_non_edges(full, n_fusion, derive_seed(seed, kFusionNeg), exclude);
  return t;
}

std::vector<LikelihoodBundle> score_pairs(const Graph& g, std::span<const LabeledPair> pairs,
                                          const PipelineModels& models, const RunConfig& config,
                                          std::uint64_t seed) {
  std::vector<LikelihoodBundle> out(pairs.size());
  const bool with_features = models.feature.has_value();
  if (with_features) {
    if (!g.has_features()) throw StateError("feature model given but the graph has no features");
    if (static_cast<int>(g.features().cols()) != models.feature->denoiser.config().feat_dim) {
      throw CompatibilityError("graph feature width " + std::to_string(g.features().cols()) +
                               " does not match the feature model (" +
                               std::to_string(models.feature->denoiser.config().feat_dim) + ")");
    }
  }
  parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
    const auto& p = pairs[i];
    const std::uint64_t key = derive_seed(seed, static_cast<std::uint64_t>(p.u), static_cast<std::uint64_t>(p.v));
    const auto sub = extract(g, p.u, p.v, p.y, config.extraction(derive_seed(key, 0)));
    LikelihoodBundle b;
    b.logA = structure_loglik_pair(sub, models.structure.denoiser, models.structure.sched, config.n_mc,
                                   derive_seed(key, 1));
    if (with_features) {
      b.logX = feature_loglik_pair(sub, models.feature->denoiser, models.feature->sched, config.n_mc,
                                   derive_seed(key, 2), config.feat_steps);
    }
    b.n_s = sub.size();
    b.truth = p.y;
    out[i] = b;
  });
  return out;
}

PipelineModels train_models(const ObservedGraph& observed, const TrainingPairs& pairs, const RunConfig& config,
                            std::uint64_t seed, const LogFn& log) {
  config.validate();
  PipelineModels models;
  const auto labeled = label_pairs(pairs.pos, pairs.neg);
  const auto samples =
      staged("extract", [&] { return build_sample_set(observed.graph, labeled, config.extraction(derive_seed(seed, kExtract))); });
  say(log, "extracted " + std::to_string(samples.size()) + " training subgraphs");

  staged("structure diffusion", [&] {
    const auto m = empirical_marginals(samples, config.drnl_classes);
    models.structure.sched = build_schedule(config.ds_t, config.drnl_classes, m.edge, m.node);
    auto opts = config.structure_training(derive_seed(seed, kStructTrain));
    opts.on_epoch = [&](int epoch, double loss) {
      say(log, "structure epoch " + std::to_string(epoch) + " loss " + format_value(loss));
    };
    auto r = train_denoiser(samples, models.structure.sched, config.structure_denoiser(), opts);
    models.structure.denoiser = std::move(r.model);
    models.structure_trace = std::move(r.loss_trace);
  });

  if (observed.stats) {
    staged("feature diffusion", [&] {
      FeatureModel fm;
      fm.sched = linear_noise_schedule(config.ds_g);
      fm.stats = *observed.stats;
      auto opts = config.feature_training(derive_seed(seed, kFeatTrain));
      opts.on_epoch = [&](int epoch, double loss) {
        say(log, "feature epoch " + std::to_string(epoch) + " loss " + format_value(loss));
      };
      auto r = train_feat_denoiser(samples, fm.sched,
                                   config.feature_denoiser(static_cast<int>(observed.graph.features().cols())), opts);
      fm.denoiser = std::move(r.model);
      models.feature = std::move(fm);
      models.feature_trace = std::move(r.loss_trace);
    });
  }

  staged("fusion", [&] {
    std::vector<std::pair<int, int>> sizes;
    sizes.reserve(samples.size());
    for (const auto& s : samples) sizes.push_back({s.size(), s.y});
    const auto prior = fit_size_prior(sizes, config.max_nodes);
    const auto fusion_pairs = label_pairs(pairs.fusion_pos, pairs.fusion_neg);
    const auto bundles = score_pairs(observed.graph, fusion_pairs, models, config, derive_seed(seed, kFusionScore));
    auto fit = fit_fusion(bundles, prior, config.fusion());
    models.fusion = fit.params;
    models.fusion_trace = std::move(fit.loss_trace);
    say(log, "fusion eta1 " + format_value(models.fusion.eta1) + " eta2 " + format_value(models.fusion.eta2) +
                 " loss " + format_value(models.fusion_trace.empty() ? fusion_loss(bundles, models.fusion)
                                                                     : models.fusion_trace.back()));
  });
  return models;
}

MetricSummary evaluate_scores(const ScoredSet& s, int hits_k) {
  return {auc(s), average_precision(s), hits_at_k(s, hits_k)};
}

MetricSummary evaluate_bundles(std::span<const LikelihoodBundle> bundles, const FusionParams& p, int hits_k) {
  ScoredSet s;
  for (const auto& b : bundles) {
    if (!b.truth) throw ArgumentError("evaluation needs labeled bundles");
    (*b.truth == 1 ? s.pos : s.neg).push_back(fused_logit(b, p));
  }
  return evaluate_scores(s, hits_k);
}

// ---------------------------------------------------------------------------
// Heuristic comparator.

Eigen::Vector2d heuristic_features(const Graph& g, NodePair p) {
  const auto a = g.neighbors(p.u);
  const auto b = g.neighbors(p.v);
  double cn = 0;
  double aa = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      cn += 1;
      aa += 1.0 / std::log(static_cast<double>(std::max<std::size_t>(2, g.degree(a[i]))));
      ++i;
      ++j;
    }
  }
  return {cn, aa};
}

double HeuristicBaseline::score(const Graph& g, NodePair p) const {
  const Eigen::Vector2d f = (heuristic_features(g, p) - mean).cwiseQuotient(scale);
  return w[0] + w[1] * f[0] + w[2] * f[1];
}

HeuristicBaseline fit_heuristic_baseline(const Graph& g, std::span<const NodePair> pos,
                                         std::span<const NodePair> neg) {
  if (pos.empty() || neg.empty()) throw ArgumentError("heuristic baseline needs both classes");
  const auto m = static_cast<Eigen::Index>(pos.size() + neg.size());
  Eigen::MatrixXd raw(m, 2);
  Eigen::VectorXd y(m);
  Eigen::Index r = 0;
  for (const auto& p : pos) {
    raw.row(r) = heuristic_features(g, p).transpose();
    y[r++] = 1;
  }
  for (const auto& p : neg) {
    raw.row(r) = heuristic_features(g, p).transpose();
    y[r++] = 0;
  }
  HeuristicBaseline model;
  model.mean = raw.colwise().mean().transpose();
  model.scale = ((raw.rowwise() - model.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (int k = 0; k < 2; ++k) {
    if (!(model.scale[k] > 1e-12)) model.scale[k] = 1;
  }
  Eigen::MatrixXd x(m, 3);
  x.col(0).setOnes();
  x.rightCols(2) = (raw.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
  // Newton iterations on the ridge-penalized log-likelihood.
  const double ridge = 1e-3;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd z = x * model.w;
    const Eigen::VectorXd p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    const Eigen::VectorXd wts = (p.array() * (1 - p.array())).matrix();
    const Eigen::Vector3d grad = x.transpose() * (p - y) + ridge * model.w;
    Eigen::Matrix3d hess = x.transpose() * wts.asDiagonal() * x;
    hess.diagonal().array() += ridge;
    const Eigen::Vector3d step = hess.ldlt().solve(grad);
    model.w -= step;
    if (step.norm() < 1e-10) break;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Reports.

void ExperimentReport::write_records(std::ostream& os) const {
  for (const auto& r : records) {
    os << r.experiment << ' ' << r.dataset << ' ' << r.seed << ' ' << r.metric << ' ' << format_value(r.value)
       << '\n';
  }
}

void ExperimentReport::write_table(std::ostream& os) const {
  os << "experiment: " << experiment << "   dataset: " << dataset << "   config: " << fingerprint
     << "   seed: " << seed << "   wall: " << std::fixed << std::setprecision(1) << wall_seconds << "s\n";
  os.unsetf(std::ios::floatfield);
  os << "  " << std::left << std::setw(20) << "metric" << std::right << std::setw(10) << "mean" << std::setw(10)
     << "std" << '\n';
  for (const auto& [name, value] : metrics) {
    if (name.size() > 4 && name.compare(name.size() - 4, 4, "_std") == 0) continue;
    const auto sd = metrics.find(name + "_std");
    os << "  " << std::left << std::setw(20) << name << std::right << std::fixed << std::setprecision(4)
       << std::setw(10) << value << std::setw(10) << (sd == metrics.end() ? 0.0 : sd->second) << '\n';
    os.unsetf(std::ios::floatfield);
  }
}

// ---------------------------------------------------------------------------
// Experiments.

std::vector<std::uint64_t> experiment_seeds(const RunConfig& config) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < config.seeds; ++i) out.push_back(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
  return out;
}

SeedRun train_seed(const Dataset& data, const RunConfig& config, std::uint64_t seed, double train_fraction,
                   const ExperimentOptions& options) {
  config.validate();
  if (!(train_fraction > 0.0) || train_fraction > 1.0) throw ArgumentError("train fraction must lie in (0, 1]");
  const bool use_features = features_enabled(config, data.graph);
  SeedRun run;
  run.seed = seed;
  const std::string tag = "[" + data.name + " seed " + std::to_string(seed) + "] ";
  const LogFn log = options.log ? LogFn([&](const std::string& s) { options.log(tag + s); }) : LogFn{};

  run.split = staged("split", [&] { return split_edges(data.graph, options.fractions, derive_seed(seed, kSplit)); });
  std::vector<NodePair> pos = run.split.train_pos;
  std::vector<NodePair> neg = run.split.train_neg;
  if (train_fraction < 1.0) {
    Rng rng(derive_seed(seed, kSubsample));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    const auto keep = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(pos.size()) + 1e-9));
    if (keep == 0) {
      throw ArgumentError("train fraction " + format_value(train_fraction) + " of " + std::to_string(pos.size()) +
                          " training edges leaves zero samples");
    }
    pos.resize(keep);
    neg.resize(std::min(keep, neg.size()));
  }
  run.training = staged("sample", [&] {
    return choose_training_pairs(data.graph, run.split, std::move(pos), std::move(neg), config, seed);
  });
  std::vector<NodePair> stat_pairs = run.training.pos;
  stat_pairs.insert(stat_pairs.end(), run.training.neg.begin(), run.training.neg.end());
  run.observed = make_observed(data.graph, run.split.train_pos, stat_pairs, use_features);
  run.models = train_models(run.observed, run.training, config, seed, log);
  run.test_pairs = capped_test_pairs(run.split, config.max_eval);
  return run;
}

SeedRun run_seed(const Dataset& data, const RunConfig& config, std::uint64_t seed, double train_fraction,
                 const ExperimentOptions& options) {
  SeedRun run = train_seed(data, config, seed, train_fraction, options);
  run.test_bundles = staged("score", [&] {
    return score_pairs(run.observed.graph, run.test_pairs, run.models, config, derive_seed(seed, kScore));
  });
  run.metrics = evaluate_bundles(run.test_bundles, run.models.fusion, config.hits_k);
  say(options.log, "[" + data.name + " seed " + std::to_string(seed) + "] test auc " + format_value(run.metrics.auc) +
                       " ap " + format_value(run.metrics.ap));
  return run;
}

ExperimentReport run_standard(const Dataset& data, const RunConfig& config, const ExperimentOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report = new_report("standard", data.name, config);
  Aggregate agg;
  for (auto seed : experiment_seeds(config)) {
    const SeedRun run = run_seed(data, config, seed, 1.0, options);
    add_summary(agg, report, seed, "", run.metrics, config.hits_k);
    // Null model on the same test pairs.
    Rng rng(derive_seed(seed, kRandom));
    std::uniform_real_distribution<double> u(0, 1);
    ScoredSet random;
    for (const auto& p : run.test_pairs) (p.y == 1 ? random.pos : random.neg).push_back(u(rng));
    const double random_auc = auc(random);
    agg.add("random_auc", random_auc);
    report.records.push_back({report.experiment, report.dataset, std::to_string(seed), "random_auc", random_auc});
  }
  agg.finish(report);
  report.wall_seconds = seconds_since(start);
  return report;
}

std::vector<ExperimentReport> run_transfer(const Dataset& source, std::span<const Dataset> targets,
                                           const RunConfig& config, const ExperimentOptions& options) {
  if (config.features == "on") {
    throw ContractError("transfer runs are structure-only: features differ across datasets (set features=off)");
  }
  const auto start = std::chrono::steady_clock::now();
  RunConfig structural = config;
  structural.features = "off";
  std::vector<ExperimentReport> reports;
  std::vector<Aggregate> aggs(targets.size());
  for (const auto& t : targets) reports.push_back(new_report("transfer", source.name + "->" + t.name, config));
  for (auto seed : experiment_seeds(config)) {
    const SeedRun run = run_seed(source, structural, seed, 1.0, options);
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const auto& target = targets[k];
      const auto split = staged("split " + target.name, [&] {
        return split_edges(target.graph, options.fractions, derive_seed(seed, kSplit));
      });
      const auto observed = make_observed(target.graph, split.train_pos, {}, false);
      const auto pairs = capped_test_pairs(split, config.max_eval);
      const auto bundles = staged("score " + target.name, [&] {
        return score_pairs(observed.graph, pairs, run.models, structural, derive_seed(seed, kScore));
      });
      const auto m = evaluate_bundles(bundles, run.models.fusion, config.hits_k);
      add_summary(aggs[k], reports[k], seed, "", m, config.hits_k);
      say(options.log, "[" + reports[k].dataset + " seed " + std::to_string(seed) + "] auc " + format_value(m.auc));
    }
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    aggs[k].finish(reports[k]);
    reports[k].wall_seconds = seconds_since(start);
  }
  return reports;
}

ExperimentReport run_limited(const Dataset& data, double train_fraction, const RunConfig& config,
                             const ExperimentOptions& options) {
  if (!(train_fraction > 0.0) || train_fraction > 1.0) throw ArgumentError("train fraction must lie in (0, 1]");
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report = new_report("limited@" + format_value(train_fraction), data.name, config);
  Aggregate agg;
  for (auto seed : experiment_seeds(config)) {
    const SeedRun run = run_seed(data, config, seed, train_fraction, options);
    add_summary(agg, report, seed, "", run.metrics, config.hits_k);
    const auto& g = run.observed.graph;
    const auto baseline = fit_heuristic_baseline(g, run.training.pos, run.training.neg);
    ScoredSet s;
    for (const auto& p : run.test_pairs) (p.y == 1 ? s.pos : s.neg).push_back(baseline.score(g, {p.u, p.v}));
    add_summary(agg, report, seed, "baseline_", evaluate_scores(s, config.hits_k), config.hits_k);
  }
  agg.finish(report);
  report.wall_seconds = seconds_since(start);
  return report;
}

std::vector<ExperimentReport> run_robustness(const Dataset& data, std::span<const double> budgets,
                                             const RunConfig& config, const ExperimentOptions& options) {
  for (double b : budgets) {
    if (!(b >= 0.0) || b > 1.0) throw ArgumentError("flip budgets must lie in [0, 1]");
  }
  const auto start = std::chrono::steady_clock::now();
  std::vector<ExperimentReport> reports;
  std::vector<Aggregate> aggs(budgets.size());
  for (double b : budgets) reports.push_back(new_report("robust@" + format_value(b), data.name, config));
  for (auto seed : experiment_seeds(config)) {
    const SeedRun run = run_seed(data, config, seed, 1.0, options);
    for (std::size_t k = 0; k < budgets.size(); ++k) {
      const Graph attacked = budgets[k] == 0.0 ? run.observed.graph : staged("attack", [&] {
        return random_flip_attack(run.observed.graph, budgets[k], derive_seed(seed, kAttack));
      });
      const auto bundles = staged("score", [&] {
        return score_pairs(attacked, run.test_pairs, run.models, config, derive_seed(seed, kScore));
      });
      const auto m = evaluate_bundles(bundles, run.models.fusion, config.hits_k);
      add_summary(aggs[k], reports[k], seed, "", m, config.hits_k);
      add_summary(aggs[k], reports[k], seed, "clean_", run.metrics, config.hits_k);
      const double delta = m.auc - run.metrics.auc;
      reports[k].records.push_back({reports[k].experiment, data.name, std::to_string(seed), "delta_auc", delta});
      say(options.log, "[" + data.name + " seed " + std::to_string(seed) + " budget " + format_value(budgets[k]) +
                           "] auc " + format_value(m.auc) + " (clean " + format_value(run.metrics.auc) + ")");
    }
  }
  for (std::size_t k = 0; k < budgets.size(); ++k) {
    aggs[k].finish(reports[k]);
    reports[k].wall_seconds = seconds_since(start);
  }
  return reports;
}

}  // namespace sgdiff
