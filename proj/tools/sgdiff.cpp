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


// sgdiff: train, score, run experiments, attack graphs, inspect checkpoints.
//
// Exit codes: 0 ok, 2 configuration/usage, 3 data, 4 numeric, 5 checkpoint or
// dataset compatibility, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgdiff/checkpoint.hpp"
#include "sgdiff/config.hpp"
#include "sgdiff/errors.hpp"
#include "sgdiff/experiments.hpp"
#include "sgdiff/feature_diffusion.hpp"
#include "sgdiff/fusion.hpp"
#include "sgdiff/structure_diffusion.hpp"

namespace fs = std::filesystem;
using namespace sgdiff;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4, kCompat = 5 };

struct Globals {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string dataset_dir = "data";
  std::string out = "sgdiff_out";
  bool verbose = false;
};

LogFn make_log(const Globals& g) {
  if (!g.verbose) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

// Config precedence: base < --config file < SGDIFF_* environment < --set <
// --seed. Every failure here is a configuration error.
RunConfig resolve_config(const Globals& g, RunConfig base) {
  try {
    if (!g.config_path.empty()) base = load_config(g.config_path, base);
    apply_env_overrides(base);
    for (const auto& kv : g.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
      set_config_value(base, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed) base.seed = *g.seed;
    base.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("config", e.what());
  }
  return base;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<LabeledPair> read_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pair file " + path.string());
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    NodeId u = 0;
    NodeId v = 0;
    std::string extra;
    try {
      std::size_t used = 0;
      u = std::stoll(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
    } catch (const std::logic_error&) {
      throw ParseError("expected 'u v' in " + path.string(), lineno);
    }
    if (!(ss >> v) || (ss >> extra)) throw ParseError("expected 'u v' in " + path.string(), lineno);
    pairs.push_back({u, v, 0});
  }
  return pairs;
}

// Train ---------------------------------------------------------------------

int cmd_train(const Globals& g, const std::string& dataset_name) {
  const Dataset data = load_dataset(g.dataset_dir, dataset_name);
  const RunConfig config = resolve_config(g, dataset_defaults(dataset_name));
  const fs::path out = g.out;
  fs::create_directories(out);
  ExperimentOptions options;
  options.log = make_log(g);
  const SeedRun run = train_seed(data, config, config.seed, 1.0, options);

  save_structure_model(run.models.structure, out / "structure.sgdf");
  std::vector<std::string> written{(out / "structure.sgdf").string()};
  if (run.models.feature) {
    save_feature_model(*run.models.feature, out / "feature.sgdf");
    written.push_back((out / "feature.sgdf").string());
  } else {
    fs::remove(out / "feature.sgdf");
  }
  {
    std::ostringstream os;
    write_fusion(os, run.models.fusion);
    write_text(out / "fusion.txt", os.str());
  }
  write_text(out / "config.txt", config_string(config));
  write_split_manifest(run.split, out / "split.txt");

  for (std::size_t e = 0; e < run.models.structure_trace.size(); ++e) {
    std::cout << "loss structure " << e << ' ' << fmt(run.models.structure_trace[e]) << '\n';
  }
  for (std::size_t e = 0; e < run.models.feature_trace.size(); ++e) {
    std::cout << "loss feature " << e << ' ' << fmt(run.models.feature_trace[e]) << '\n';
  }
  if (!run.models.fusion_trace.empty()) std::cout << "loss fusion " << fmt(run.models.fusion_trace.back()) << '\n';
  std::cout << "fusion eta1 " << fmt(run.models.fusion.eta1) << " eta2 " << fmt(run.models.fusion.eta2) << '\n';
  for (const auto& w : written) std::cout << "wrote " << w << '\n';
  return kOk;
}

// Score ---------------------------------------------------------------------

PipelineModels load_models(const fs::path& dir, const RunConfig& config) {
  PipelineModels m;
  m.structure = load_structure_model(dir / "structure.sgdf");
  const auto& sc = m.structure.denoiser.config();
  if (sc.node_classes != config.drnl_classes || sc.T != config.ds_t) {
    throw CompatibilityError("structure checkpoint (drnl_classes " + std::to_string(sc.node_classes) + ", ds_t " +
                             std::to_string(sc.T) + ") does not match the config");
  }
  if (fs::exists(dir / "feature.sgdf")) m.feature = load_feature_model(dir / "feature.sgdf");
  std::ifstream in(dir / "fusion.txt");
  if (!in) throw IoError("cannot open " + (dir / "fusion.txt").string());
  m.fusion = read_fusion(in);
  return m;
}

int cmd_score(const Globals& g, const std::string& dataset_name, const std::string& pairs_path,
              const std::string& models_dir) {
  const fs::path dir = models_dir.empty() ? fs::path(g.out) : fs::path(models_dir);
  RunConfig base;
  try {
    base = load_config(dir / "config.txt");
  } catch (const IoError&) {
    throw IoError("model directory " + dir.string() + " has no config.txt (run train first)");
  }
  const RunConfig config = resolve_config(g, base);
  const PipelineModels models = load_models(dir, config);
  const Dataset data = load_dataset(g.dataset_dir, dataset_name);
  Graph graph = data.graph;
  if (models.feature) {
    const int width = models.feature->denoiser.config().feat_dim;
    if (!graph.has_features()) {
      throw CompatibilityError("feature checkpoint expects " + std::to_string(width) +
                               " features but dataset '" + dataset_name + "' has none");
    }
    if (graph.features().cols() != width) {
      throw CompatibilityError("feature checkpoint expects " + std::to_string(width) + " features, dataset has " +
                               std::to_string(graph.features().cols()));
    }
    graph = graph.with_features(models.feature->stats.apply(graph.features()));
  } else {
    graph = graph.with_features(std::nullopt);
  }
  const auto pairs = read_pairs(pairs_path);
  const auto bundles = score_pairs(graph, pairs, models, config, config.seed);
  std::cout << "# u v logA0 logA1 logX0 logX1 p1 label\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& b = bundles[i];
    const auto pred = predict(b, models.fusion);
    std::cout << pairs[i].u << ' ' << pairs[i].v << ' ' << fmt(b.logA[0]) << ' ' << fmt(b.logA[1]) << ' '
              << (b.logX ? fmt((*b.logX)[0]) : "NA") << ' ' << (b.logX ? fmt((*b.logX)[1]) : "NA") << ' '
              << fmt(pred.p1) << ' ' << pred.label << '\n';
  }
  return kOk;
}

// Experiments ----------------------------------------------------------------

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw ConfigError(what, "bad number '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError(what, "empty list");
  return out;
}

int cmd_experiment(const Globals& g, const std::string& name, const std::string& dataset_name,
                   const std::string& targets, double fraction, const std::string& budgets) {
  static const std::vector<std::string> kNames{"standard", "transfer", "limited", "robust"};
  if (std::find(kNames.begin(), kNames.end(), name) == kNames.end()) {
    throw ConfigError("experiment", "unknown experiment '" + name + "' (valid: standard, transfer, limited, robust)");
  }
  const RunConfig config = resolve_config(g, dataset_defaults(dataset_name));
  ExperimentOptions options;
  options.log = make_log(g);
  const Dataset data = load_dataset(g.dataset_dir, dataset_name);
  std::vector<ExperimentReport> reports;
  if (name == "standard") {
    reports.push_back(run_standard(data, config, options));
  } else if (name == "transfer") {
    if (targets.empty()) throw ConfigError("targets", "transfer needs --targets");
    std::vector<Dataset> target_data;
    std::stringstream ss(targets);
    for (std::string t; std::getline(ss, t, ',');) target_data.push_back(load_dataset(g.dataset_dir, t));
    reports = run_transfer(data, target_data, config, options);
  } else if (name == "limited") {
    reports.push_back(run_limited(data, fraction, config, options));
  } else {
    const auto b = parse_list(budgets, "budgets");
    reports = run_robustness(data, b, config, options);
  }
  fs::create_directories(g.out);
  std::string stem = name + "_" + dataset_name;
  std::replace(stem.begin(), stem.end(), ':', '_');
  const fs::path records = fs::path(g.out) / (stem + ".records");
  std::ofstream rec(records);
  if (!rec) throw IoError("cannot write " + records.string());
  for (const auto& r : reports) {
    r.write_table(std::cout);
    std::cout << '\n';
    r.write_records(rec);
  }
  std::cout << "wrote " << records.string() << '\n';
  return kOk;
}

// Attack / inspect -----------------------------------------------------------

int cmd_attack(const Globals& g, const std::string& dataset_name, double budget) {
  const RunConfig config = resolve_config(g, dataset_defaults(dataset_name));
  const Dataset data = load_dataset(g.dataset_dir, dataset_name);
  const Graph attacked = random_flip_attack(data.graph, budget, config.seed);
  fs::create_directories(g.out);
  std::string stem = dataset_name + "_rf" + fmt(budget);
  std::replace(stem.begin(), stem.end(), ':', '_');
  const fs::path path = fs::path(g.out) / (stem + ".edges");
  save_edges(attacked, path);
  std::cout << "edges " << attacked.num_edges() << " flipped "
            << static_cast<std::size_t>(std::floor(budget * static_cast<double>(data.graph.num_edges()) + 1e-9))
            << '\n'
            << "wrote " << path.string() << '\n';
  return kOk;
}

int cmd_inspect(const std::string& path) {
  const Checkpoint c = read_checkpoint(path);
  std::cout << "SGDF version 1, " << c.arrays().size() << " arrays\n";
  for (const auto& [name, a] : c.arrays()) {
    std::cout << name << " [";
    for (std::size_t i = 0; i < a.dims.size(); ++i) std::cout << (i ? "x" : "") << a.dims[i];
    std::cout << ']';
    if (a.dims.empty()) std::cout << " = " << fmt(a.data.at(0));
    std::cout << '\n';
  }
  return kOk;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const CompatibilityError*>(&e)) return kCompat;
  if (dynamic_cast<const NumericError*>(&e)) return kNumeric;
  if (dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const ContractError*>(&e) ||
      dynamic_cast<const StateError*>(&e)) {
    return kConfig;
  }
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const IndexError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const SamplingExhausted*>(&e)) {
    return kData;
  }
  return kOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgdiff: sub-graph diffusion link prediction"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--set", g.sets, "config override key=value (repeatable)");
  app.add_option("--seed", g.seed, "global seed");
  app.add_option("--dataset-dir", g.dataset_dir, "directory holding <name>/edges.txt[, features.txt]");
  app.add_option("--out", g.out, "output / model directory");
  app.add_flag("-v,--verbose", g.verbose, "log progress to stderr");

  std::string dataset;
  std::string pairs;
  std::string models;
  std::string experiment;
  std::string targets;
  std::string budgets = "0.25,0.5";
  std::string checkpoint;
  double fraction = 0.01;
  double budget = 0.25;

  auto* train = app.add_subcommand("train", "train structure/feature diffusion and the fusion");
  train->add_option("--dataset", dataset, "dataset name or surrogate:<kind>:<nodes>")->required();

  auto* score = app.add_subcommand("score", "score node pairs with trained models");
  score->add_option("--dataset", dataset, "dataset name")->required();
  score->add_option("--pairs", pairs, "file of 'u v' lines")->required();
  score->add_option("--models", models, "model directory (default: --out)");

  auto* exp = app.add_subcommand("experiment", "run an evaluation regime");
  exp->add_option("name", experiment, "standard | transfer | limited | robust")->required();
  exp->add_option("--dataset", dataset, "(source) dataset")->required();
  exp->add_option("--targets", targets, "comma-separated transfer targets");
  exp->add_option("--fraction", fraction, "training fraction for 'limited'");
  exp->add_option("--budgets", budgets, "comma-separated flip budgets for 'robust'");

  auto* attack = app.add_subcommand("attack", "write a randomly flipped copy of a graph");
  attack->add_option("--dataset", dataset, "dataset name")->required();
  attack->add_option("--budget", budget, "fraction of edges to flip");

  auto* inspect = app.add_subcommand("inspect", "dump a checkpoint header");
  inspect->add_option("checkpoint", checkpoint, "SGDF file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*train) return cmd_train(g, dataset);
    if (*score) return cmd_score(g, dataset, pairs, models);
    if (*exp) return cmd_experiment(g, experiment, dataset, targets, fraction, budgets);
    if (*attack) return cmd_attack(g, dataset, budget);
    if (*inspect) return cmd_inspect(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return kOther;
}
