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


// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance --group core       oracle, numeric, limit and fusion suites
//   acceptance --group datasets   scaled runs on real graphs under
//                                 $SGDIFF_DATA_DIR (or --data-dir)
//
// Exit status: 0 all passed, 1 any failure, 77 nothing failed but at least one
// criterion was skipped because its data files are absent.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "sgdiff/config.hpp"
#include "sgdiff/errors.hpp"
#include "sgdiff/experiments.hpp"
#include "sgdiff/feature_diffusion.hpp"
#include "sgdiff/fusion.hpp"
#include "sgdiff/metrics.hpp"
#include "sgdiff/structure_diffusion.hpp"
#include "sgdiff/subgraph.hpp"
#include "sgdiff/tensor.hpp"

using namespace sgdiff;
using M = RowMatrix<double>;

namespace {

// Tolerances and budgets.
constexpr int kDrnlMaxNodes = 8;
constexpr double kPosteriorTol = 1e-12;
constexpr double kMetricTol = 1e-12;
constexpr int kMetricTrials = 2000;
constexpr double kOracleSeconds = 60;

constexpr double kGradTol = 1e-4;
constexpr double kRowSumTol = 1e-12;
constexpr double kClosedFormTol = 1e-10;
constexpr double kAlphaBarTol = 1e-14;
constexpr double kNumericSeconds = 120;

constexpr int kLimitDraws = 10000;
constexpr double kLimitSigmas = 3;
constexpr double kLimitSeconds = 60;

constexpr int kFusionTrials = 30;
constexpr double kFusionTol = 0.01;
constexpr double kFusionSeconds = 60;

constexpr double kStandardAuc = 0.85;
constexpr double kTransferAuc = 0.70;
constexpr double kTransferFloor = 0.5;
constexpr double kRobustDrop = 0.10;
constexpr double kMonotoneSlack = 0.0;
constexpr double kLimitedFraction = 0.01;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

struct Criterion {
  std::string id;
  std::function<Outcome()> run;
};

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Oracle suites

// Every graph on n <= kDrnlMaxNodes nodes (the target slot excluded), visited
// in Gray-code order so each step toggles one edge.
long drnl_mismatches() {
  oracle::DrnlRankTable table(kDrnlMaxNodes);
  long mismatches = 0;
  for (int n = 2; n <= kDrnlMaxNodes; ++n) {
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (!(i == 0 && j == 1)) slots.emplace_back(i, j);
      }
    }
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, 0, kDrnlMaxNodes, kDrnlMaxNodes> adj =
        Eigen::MatrixXi::Zero(n, n);
    std::uint32_t nbr[32] = {};
    int got[kDrnlMaxNodes];
    int want[32];
    const std::uint64_t count = std::uint64_t{1} << slots.size();
    for (std::uint64_t code = 0; code < count; ++code) {
      if (code > 0) {
        const auto [i, j] = slots[__builtin_ctzll(code)];
        adj(i, j) = adj(j, i) = 1 - adj(i, j);
        nbr[i] ^= 1u << j;
        nbr[j] ^= 1u << i;
      }
      drnl_labels(adj, std::span<int>(got, n));
      oracle::drnl_oracle(nbr, n, table, want);
      for (int k = 0; k < n; ++k) mismatches += got[k] != want[k];
    }
  }
  return mismatches;
}

Eigen::VectorXd random_simplex(int k, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd m(k);
  for (int i = 0; i < k; ++i) m[i] = u(rng);
  return m / m.sum();
}

double posterior_worst() {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int K = 2; K <= 4; ++K) {
    for (int T = 1; T <= 3; ++T) {
      for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd alpha(T + 1);
        alpha[0] = 1;
        for (int t = 1; t <= T; ++t) alpha[t] = u(rng);
        auto s = build_schedule_with_alphas(alpha, random_simplex(2, rng), random_simplex(K, rng));
        for (int t = 1; t <= T; ++t) {
          for (int xt = 0; xt < K; ++xt) {
            for (int x0 = 0; x0 < K; ++x0) {
              // q(x_t | x_0) > 0 always holds here since every alpha < 1 and m > 0.
              const auto got = posterior_q(xt, x0, t, s, Channel::node);
              const auto want = oracle::posterior_by_paths(s.q_node, t, xt, x0);
              worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
            }
          }
        }
      }
    }
  }
  return worst;
}

double metric_worst() {
  Rng rng(17);
  double worst = 0;
  for (int trial = 0; trial < kMetricTrials; ++trial) {
    const int np = 1 + static_cast<int>(rng() % 25);
    const int nn = 1 + static_cast<int>(rng() % 25);
    // Coarse grid so ties are common.
    const int levels = 2 + static_cast<int>(rng() % 10);
    ScoredSet s;
    for (int i = 0; i < np; ++i) s.pos.push_back(static_cast<double>(rng() % levels));
    for (int i = 0; i < nn; ++i) s.neg.push_back(static_cast<double>(rng() % levels));
    worst = std::max(worst, std::abs(auc(s) - oracle::auc_by_pairs(s.pos, s.neg)));
    worst = std::max(worst, std::abs(average_precision(s) - oracle::ap_by_counting(s.pos, s.neg)));
  }
  return worst;
}

Outcome oracle_suites() {
  const auto start = std::chrono::steady_clock::now();
  const long drnl = drnl_mismatches();
  const double post = posterior_worst();
  const double metric = metric_worst();
  const double secs = seconds_since(start);
  const bool ok = drnl == 0 && post <= kPosteriorTol && metric <= kMetricTol && secs < kOracleSeconds;
  return verdict(ok, "drnl mismatches " + std::to_string(drnl) + " (n<=" + std::to_string(kDrnlMaxNodes) +
                         "), posterior max err " + num(post) + ", auc/ap max err " + num(metric) + ", " +
                         num(secs, 3) + "s");
}

// ---------------------------------------------------------------------------
// Numeric suites

M random_matrix(Index r, Index c, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  M m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

M away_from_zero(Index r, Index c, std::uint64_t seed) {
  M m = random_matrix(r, c, seed, 0.2, 1.0);
  Rng rng(seed + 1);
  for (Index i = 0; i < m.size(); ++i) {
    if (rng() & 1) m.data()[i] = -m.data()[i];
  }
  return m;
}

Tensor probe(const Tensor& t, std::uint64_t seed) {
  return sum(mul(t, Tensor::constant(random_matrix(t.rows(), t.cols(), seed))));
}

// Largest relative gradient error over every op; `worst_name` gets the op.
double op_gradients(std::string& worst_name) {
  auto a = Tensor::parameter(away_from_zero(4, 3, 10));
  auto b = Tensor::parameter(away_from_zero(4, 3, 11));
  auto c = Tensor::parameter(random_matrix(3, 5, 12));
  auto row = Tensor::parameter(random_matrix(1, 3, 13));
  auto col = Tensor::parameter(random_matrix(4, 1, 14));
  auto s = Tensor::parameter(random_matrix(1, 1, 15));
  auto gamma = Tensor::parameter(random_matrix(1, 3, 16, 0.5, 1.5));
  auto beta = Tensor::parameter(random_matrix(1, 3, 17));
  M onehot = M::Zero(4, 3);
  for (Index i = 0; i < 4; ++i) onehot(i, i % 3) = 1;

  double worst = 0;
  auto check = [&](const char* name, auto fn, std::vector<Tensor> params) {
    const double err = oracle::max_grad_rel_error(fn, params);
    if (err >= worst) {
      worst = err;
      worst_name = name;
    }
  };
  check("add", [&] { return probe(add(a, b), 1); }, {a, b});
  check("add_row", [&] { return probe(add(a, row), 2); }, {a, row});
  check("add_col", [&] { return probe(add(col, a), 3); }, {a, col});
  check("add_scalar", [&] { return probe(add(a, s), 4); }, {a, s});
  check("sub", [&] { return probe(sub(a, row), 5); }, {a, row});
  check("mul", [&] { return probe(mul(a, b), 6); }, {a, b});
  check("mul_row", [&] { return probe(mul(a, row), 7); }, {a, row});
  check("scale", [&] { return probe(scale(a, 2.5), 8); }, {a});
  check("matmul", [&] { return probe(matmul(a, c), 9); }, {a, c});
  check("transpose", [&] { return probe(transpose(a), 10); }, {a});
  check("reshape", [&] { return probe(reshape(a, 2, 6), 11); }, {a});
  check("slice_cols", [&] { return probe(slice_cols(c, 1, 3), 12); }, {c});
  check("concat0", [&] { return probe(concat<double>({a, b}, 0), 13); }, {a, b});
  check("concat1", [&] { return probe(concat<double>({a, col}, 1), 14); }, {a, col});
  check("gather_rows", [&] { return probe(gather_rows(a, std::vector<Index>{3, 0, 0, 2, 1}), 15); }, {a});
  check("relu", [&] { return probe(relu(a), 16); }, {a});
  check("softmax1", [&] { return probe(softmax(a, 1), 17); }, {a});
  check("softmax0", [&] { return probe(softmax(a, 0), 18); }, {a});
  check("log_softmax", [&] { return probe(log_softmax(a), 19); }, {a});
  check("layer_norm", [&] { return probe(layer_norm(a, gamma, beta), 20); }, {a, gamma, beta});
  check("sum", [&] { return scale(sum(mul(a, b)), 0.5); }, {a, b});
  check("mean", [&] { return mean(mul(a, a)); }, {a});
  check("mean0", [&] { return probe(mean(a, 0), 21); }, {a});
  check("mean1", [&] { return probe(mean(a, 1), 22); }, {a});
  check("cross_entropy", [&] { return cross_entropy(a, onehot); }, {a});
  check("mse", [&] { return mse(a, b); }, {a, b});
  check("linear", [&] { return probe(linear(a, c, Tensor::constant(M::Ones(1, 5))), 23); }, {a, c});
  return worst;
}

StructState random_state(int n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  StructState s;
  s.adj = Adjacency::Zero(n, n);
  s.nodes.resize(n);
  for (int i = 0; i < n; ++i) {
    s.nodes[i] = static_cast<int>(rng() % classes);
    for (int j = i + 1; j < n; ++j) {
      if (rng() % 3 == 0) s.adj(i, j) = s.adj(j, i) = 1;
    }
  }
  return s;
}

double struct_denoiser_gradient() {
  StructDenoiserConfig c;
  c.node_classes = 4;
  c.T = 5;
  c.ha_x = 4;
  c.ha_e = 2;
  c.ha_y = 2;
  c.hm_x = 4;
  c.hm_e = 3;
  c.hm_y = 3;
  c.heads = 2;
  c.layers = 2;
  StructDenoiser d(c, 11);
  const auto noisy = random_state(5, 4, 12);
  const auto clean = random_state(5, 4, 13);
  return oracle::max_grad_rel_error([&] { return d.loss(noisy, clean, 1, 3); }, d.parameters());
}

double feat_denoiser_gradient() {
  FeatDenoiserConfig c;
  c.feat_dim = 3;
  c.hidden = 5;
  c.layers = 2;
  c.T = 50;
  FeatDenoiser d(c, 3);
  const auto state = random_state(6, 2, 21);
  const Eigen::MatrixXd a_hat = normalize_adjacency(state.adj);
  const Eigen::MatrixXd x0 = random_matrix(6, 3, 22);
  const auto sched = linear_noise_schedule(50);
  const auto n = forward_noise_feat(x0, 12, sched, 4);
  return oracle::max_grad_rel_error([&] { return d.loss(a_hat, n.x_t, n.eps, 1, 12); }, d.parameters());
}

struct ScheduleErrors {
  double row_sum = 0;
  double closed_form = 0;
  double alpha_bar = 0;
};

ScheduleErrors schedule_errors() {
  ScheduleErrors e;
  Rng rng(3);
  for (int T : {1, 5, 20, 50, 100}) {
    const int K = 2 + T % 7;
    const auto s = build_schedule(T, K, random_simplex(2, rng), random_simplex(K, rng));
    for (auto ch : {Channel::edge, Channel::node}) {
      Eigen::MatrixXd product = Eigen::MatrixXd::Identity(s.classes(ch), s.classes(ch));
      for (int t = 1; t <= T; ++t) {
        product = product * s.q(ch, t);
        for (const Eigen::MatrixXd* m : {&s.q(ch, t), &s.qbar(ch, t)}) {
          e.row_sum = std::max(e.row_sum, (m->rowwise().sum().array() - 1.0).abs().maxCoeff());
        }
        e.closed_form = std::max(e.closed_form, (product - s.qbar(ch, t)).cwiseAbs().maxCoeff());
        e.closed_form = std::max(
            e.closed_form, (product - marginal_kernel(s.alpha_bar[t], s.marginal(ch))).cwiseAbs().maxCoeff());
      }
    }
    double running = 1;
    for (int t = 1; t <= T; ++t) {
      running *= s.alpha[t];
      e.alpha_bar = std::max(e.alpha_bar, std::abs(running - s.alpha_bar[t]));
    }
    const auto f = linear_noise_schedule(std::max(T, 30));
    running = 1;
    for (int t = 1; t <= f.T; ++t) {
      running *= f.alpha[t];
      e.alpha_bar = std::max(e.alpha_bar, std::abs(running - f.alpha_bar[t]));
    }
  }
  return e;
}

Outcome numeric_suites() {
  const auto start = std::chrono::steady_clock::now();
  std::string worst_op;
  const double ops = op_gradients(worst_op);
  const double sd = struct_denoiser_gradient();
  const double fd = feat_denoiser_gradient();
  const auto sch = schedule_errors();
  const double secs = seconds_since(start);
  const bool ok = ops < kGradTol && sd < kGradTol && fd < kGradTol && sch.row_sum <= kRowSumTol &&
                  sch.closed_form <= kClosedFormTol && sch.alpha_bar <= kAlphaBarTol && secs < kNumericSeconds;
  return verdict(ok, "op grad " + num(ops) + " (" + worst_op + "), structure denoiser " + num(sd) +
                         ", feature denoiser " + num(fd) + ", row-sum drift " + num(sch.row_sum) +
                         ", closed-form Qbar " + num(sch.closed_form) + ", alpha_bar product " +
                         num(sch.alpha_bar) + ", " + num(secs, 3) + "s");
}

// ---------------------------------------------------------------------------
// Diffusion limit

Outcome diffusion_limit() {
  const auto start = std::chrono::steady_clock::now();
  constexpr int T = 10;
  constexpr int n = 6;
  Eigen::VectorXd m_edge(2);
  m_edge << 0.85, 0.15;
  Eigen::VectorXd m_node(4);
  m_node << 0.4, 0.3, 0.2, 0.1;
  const auto s = build_schedule(T, 4, m_edge, m_node);
  const auto clean = random_state(n, 4, 2);
  long present = 0;
  long edge_slots = 0;
  Eigen::VectorXd node_counts = Eigen::VectorXd::Zero(4);
  for (int draw = 0; draw < kLimitDraws; ++draw) {
    Rng rng(derive_seed(77, draw));
    const auto noisy = forward_noise(clean, T, s, rng);
    for (int i = 0; i < n; ++i) {
      node_counts[noisy.nodes[i]] += 1;
      for (int j = i + 1; j < n; ++j) {
        present += noisy.adj(i, j);
        ++edge_slots;
      }
    }
  }
  // z-scores of the edge rate and of each node-class rate.
  double worst_z = 0;
  {
    const double p = m_edge[1];
    const double rate = static_cast<double>(present) / static_cast<double>(edge_slots);
    worst_z = std::abs(rate - p) / std::sqrt(p * (1 - p) / static_cast<double>(edge_slots));
  }
  const double node_total = node_counts.sum();
  for (int k = 0; k < 4; ++k) {
    const double p = m_node[k];
    const double z = std::abs(node_counts[k] / node_total - p) / std::sqrt(p * (1 - p) / node_total);
    worst_z = std::max(worst_z, z);
  }
  const double secs = seconds_since(start);
  return verdict(worst_z <= kLimitSigmas && secs < kLimitSeconds,
                 "max |z| " + num(worst_z, 3) + " over edge and 4 node classes, " + std::to_string(kLimitDraws) +
                     " draws at t=T, " + num(secs, 3) + "s");
}

// ---------------------------------------------------------------------------
// Fusion oracle

Outcome fusion_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(9);
  std::normal_distribution<double> gauss(0, 1);
  double worst_gap = -INFINITY;
  for (int trial = 0; trial < kFusionTrials; ++trial) {
    std::vector<oracle::ToyBundle> toy;
    std::vector<LikelihoodBundle> bundles;
    for (int i = 0; i < 3; ++i) {
      const int y = i == 0 ? 1 : (i == 1 ? 0 : static_cast<int>(rng() % 2));
      LikelihoodBundle b;
      b.logA = {0, gauss(rng)};
      b.logX = std::array<double, 2>{0, gauss(rng)};
      b.n_s = 5;
      b.truth = y;
      bundles.push_back(b);
      toy.push_back({(*b.logX)[1], b.logA[1], y});
    }
    FusionOptions o;
    o.fit_class_prior = false;
    o.epochs = 3000;
    const auto fit = fit_fusion(bundles, {}, o);
    worst_gap = std::max(worst_gap, fusion_loss(bundles, fit.params) - oracle::grid_min_loss(toy, 0.0));
  }
  const double secs = seconds_since(start);
  return verdict(worst_gap <= kFusionTol && secs < kFusionSeconds,
                 "worst fitted - grid cross-entropy " + num(worst_gap) + " nats over " +
                     std::to_string(kFusionTrials) + " toys, " + num(secs, 3) + "s");
}

// ---------------------------------------------------------------------------
// Dataset runs

struct DataContext {
  std::filesystem::path root;
  LogFn log;
  std::map<std::string, Dataset> cache;

  // nullopt when the files are missing.
  const Dataset* get(const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return &it->second;
    try {
      return &cache.emplace(name, load_dataset(root, name)).first->second;
    } catch (const IoError&) {
      return nullptr;
    }
  }
};

Outcome missing(const std::vector<std::string>& names, const DataContext& ctx) {
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  return {Status::skip, "dataset(s) " + list + " not found under " + ctx.root.string()};
}

RunConfig desk_config(const std::string& name, bool features) {
  RunConfig c = dataset_defaults(name);
  c.features = features ? "auto" : "off";
  return c;
}

Outcome standard_usair(DataContext& ctx) {
  const Dataset* d = ctx.get("usair");
  if (!d) return missing({"usair"}, ctx);
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_standard(*d, desk_config("usair", false), {{}, ctx.log});
  const double a = report.metrics.at("auc");
  return verdict(a >= kStandardAuc, "structure-only test AUC " + num(a) + " +- " + num(report.metrics.at("auc_std")) +
                                        " (" + std::to_string(desk_config("usair", false).seeds) + " seeds), " +
                                        num(seconds_since(start), 4) + "s");
}

Outcome transfer(DataContext& ctx) {
  const std::vector<std::string> names{"ns", "usair", "router"};
  std::vector<std::string> absent;
  for (const auto& n : names) {
    if (!ctx.get(n)) absent.push_back(n);
  }
  if (!absent.empty()) return missing(absent, ctx);
  const auto start = std::chrono::steady_clock::now();
  double ns_usair = NAN;
  double worst = INFINITY;
  std::string cells;
  for (const auto& src : names) {
    std::vector<Dataset> targets;
    for (const auto& tgt : names) {
      if (tgt != src) targets.push_back(*ctx.get(tgt));
    }
    const auto reports = run_transfer(*ctx.get(src), targets, desk_config(src, false), {{}, ctx.log});
    for (std::size_t k = 0; k < reports.size(); ++k) {
      const double a = reports[k].metrics.at("auc");
      worst = std::min(worst, a);
      if (src == "ns" && targets[k].name == "usair") ns_usair = a;
      cells += " " + src + "->" + targets[k].name + "=" + num(a, 3);
    }
  }
  return verdict(ns_usair >= kTransferAuc && worst > kTransferFloor,
                 "ns->usair AUC " + num(ns_usair) + "; cells" + cells + "; " + num(seconds_since(start), 4) + "s");
}

Outcome robustness_cora(DataContext& ctx) {
  const Dataset* d = ctx.get("cora");
  if (!d) return missing({"cora"}, ctx);
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> budgets{0.25, 0.5};
  const auto reports = run_robustness(*d, budgets, desk_config("cora", true), {{}, ctx.log});
  std::vector<double> drop;
  for (const auto& r : reports) drop.push_back(r.metrics.at("clean_auc") - r.metrics.at("auc"));
  const bool monotone = drop[0] >= -kMonotoneSlack && drop[1] >= drop[0] - kMonotoneSlack;
  return verdict(drop[1] <= kRobustDrop && monotone,
                 "clean AUC " + num(reports[0].metrics.at("clean_auc")) + ", drop@0.25 " + num(drop[0]) +
                     ", drop@0.50 " + num(drop[1]) + (monotone ? " (monotone)" : " (not monotone)") + ", " +
                     num(seconds_since(start), 4) + "s");
}

Outcome limited_usair(DataContext& ctx) {
  const Dataset* d = ctx.get("usair");
  if (!d) return missing({"usair"}, ctx);
  const auto start = std::chrono::steady_clock::now();
  const auto config = desk_config("usair", false);
  const auto full = run_limited(*d, 1.0, config, {{}, ctx.log});
  const auto low = run_limited(*d, kLimitedFraction, config, {{}, ctx.log});
  const double ours = full.metrics.at("auc") - low.metrics.at("auc");
  const double base = full.metrics.at("baseline_auc") - low.metrics.at("baseline_auc");
  return verdict(ours < base, "AUC drop at 1%: model " + num(ours) + " (" + num(full.metrics.at("auc")) + " -> " +
                                  num(low.metrics.at("auc")) + "), heuristic baseline " + num(base) + " (" +
                                  num(full.metrics.at("baseline_auc")) + " -> " +
                                  num(low.metrics.at("baseline_auc")) + "), " + num(seconds_since(start), 4) + "s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgdiff acceptance criteria"};
  std::string group = "core";
  std::string data_dir;
  bool verbose = false;
  app.add_option("--group", group, "core | datasets | all")->check(CLI::IsMember({"core", "datasets", "all"}));
  app.add_option("--data-dir", data_dir, "dataset root (default $SGDIFF_DATA_DIR, then ./data)");
  app.add_flag("-v,--verbose", verbose, "log dataset runs to stderr");
  CLI11_PARSE(app, argc, argv);

  if (data_dir.empty()) {
    const char* env = std::getenv("SGDIFF_DATA_DIR");
    data_dir = env && *env ? env : "data";
  }
  DataContext ctx{data_dir, {}, {}};
  if (verbose) ctx.log = [](const std::string& line) { std::cerr << line << '\n'; };

  std::vector<Criterion> criteria;
  if (group == "core" || group == "all") {
    criteria.push_back({"oracle-suites", oracle_suites});
    criteria.push_back({"numeric-suites", numeric_suites});
    criteria.push_back({"diffusion-limit", diffusion_limit});
    criteria.push_back({"fusion-oracle", fusion_oracle});
  }
  if (group == "datasets" || group == "all") {
    criteria.push_back({"standard-usair", [&] { return standard_usair(ctx); }});
    criteria.push_back({"transfer-ns-usair", [&] { return transfer(ctx); }});
    criteria.push_back({"robustness-cora", [&] { return robustness_cora(ctx); }});
    criteria.push_back({"limited-usair", [&] { return limited_usair(ctx); }});
  }

  int failed = 0;
  int skipped = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("error: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : (o.status == Status::skip ? "SKIP" : "FAIL");
    failed += o.status == Status::fail;
    skipped += o.status == Status::skip;
    std::cout << tag << ' ' << c.id << ": " << o.detail << std::endl;
  }
  if (failed) return 1;
  return skipped ? 77 : 0;
}
