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


#ifndef SGDIFF_STRUCTURE_DIFFUSION_HPP
#define SGDIFF_STRUCTURE_DIFFUSION_HPP

// Class-conditional discrete diffusion over enclosing subgraphs. Node slots
// carry clamped DRNL labels, upper-triangular edge slots carry present/absent;
// both are noised with marginal transitions
//
//   Q_t = a_t I + (1 - a_t) 1 m^T,   Qbar_t = abar_t I + (1 - abar_t) 1 m^T
//
// and a graph transformer predicts the clean classes from a noisy sample and
// the condition bit y. The negated variational bound of a sample under y is
// its structure log-likelihood score.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgdiff/checkpoint.hpp"
#include "sgdiff/random.hpp"
#include "sgdiff/subgraph.hpp"
#include "sgdiff/tensor.hpp"

namespace sgdiff {

enum class Channel { edge, node };

struct TransitionSchedule {
  static constexpr int edge_classes = 2;

  int T = 0;
  int node_classes = 0;
  Eigen::VectorXd alpha;      // [0..T]; alpha[0] = 1
  Eigen::VectorXd alpha_bar;  // [0..T]; alpha_bar[0] = 1
  Eigen::VectorXd m_edge;
  Eigen::VectorXd m_node;
  std::vector<Eigen::MatrixXd> q_edge, q_node;        // [0..T]; [0] = I
  std::vector<Eigen::MatrixXd> qbar_edge, qbar_node;  // iterated products

  const Eigen::MatrixXd& q(Channel c, int t) const { return c == Channel::edge ? q_edge.at(t) : q_node.at(t); }
  const Eigen::MatrixXd& qbar(Channel c, int t) const {
    return c == Channel::edge ? qbar_edge.at(t) : qbar_node.at(t);
  }
  const Eigen::VectorXd& marginal(Channel c) const { return c == Channel::edge ? m_edge : m_node; }
  int classes(Channel c) const { return c == Channel::edge ? edge_classes : node_classes; }
};

/// a I + (1 - a) 1 m^T.
Eigen::MatrixXd marginal_kernel(double a, const Eigen::VectorXd& m);

/// Cosine schedule: abar_t = f(t) / f(0), f(t) = cos^2(((t/T + s) / (1 + s)) pi/2).
Eigen::VectorXd cosine_alpha_bar(int T, double s = 0.008);

/// Marginal-transition schedule with the cosine alphas.
TransitionSchedule build_schedule(int T, int node_classes, const Eigen::VectorXd& m_edge,
                                  const Eigen::VectorXd& m_node);

/// Same, with explicit per-step alphas (alpha[0] is ignored, alpha[1..T] in
/// [0, 1]).
TransitionSchedule build_schedule_with_alphas(const Eigen::VectorXd& alpha, const Eigen::VectorXd& m_edge,
                                              const Eigen::VectorXd& m_node);

struct StructMarginals {
  Eigen::VectorXd edge;
  Eigen::VectorXd node;
};

/// Class frequencies over upper-triangular edge slots and clamped node labels,
/// mixed with `smoothing` of the uniform distribution so that every class has
/// positive mass.
StructMarginals empirical_marginals(std::span<const EnclosingSubgraph> samples, int node_classes,
                                    double smoothing = 1e-3);

/// Categorical state of a subgraph: symmetric 0/1 adjacency with zero
/// diagonal and one class per node.
struct StructState {
  Adjacency adj;
  std::vector<int> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
};

StructState clean_state(const EnclosingSubgraph& sub, int node_classes);

/// Samples S^(t) ~ q(S^(t) | S^(0)) slot by slot from rows of Qbar_t.
StructState forward_noise(const StructState& clean, int t, const TransitionSchedule& sched, Rng& rng);
StructState forward_noise(const EnclosingSubgraph& sub, int t, const TransitionSchedule& sched,
                          std::uint64_t seed);

/// q(x_{t-1} | x_t, x_0). At t = 1 this is the point mass on x_0. `slot` only
/// labels the error raised for an impossible transition.
Eigen::VectorXd posterior_q(int x_t, int x_0, int t, const TransitionSchedule& sched, Channel channel,
                            long slot = -1);

/// p(x_{t-1} | x_t) = sum_{x_0} p_hat(x_0) q(x_{t-1} | x_t, x_0), skipping
/// clean classes that cannot reach x_t.
Eigen::VectorXd model_posterior(int x_t, const Eigen::Ref<const Eigen::VectorXd>& p_clean, int t,
                                const TransitionSchedule& sched, Channel channel);

/// KL(p || q) with 0 log 0 = 0.
double categorical_kl(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q);

struct StructDenoiserConfig {
  int node_classes = 16;
  int T = 10;      // ds_t
  int ha_x = 32;
  int ha_e = 16;
  int ha_y = 16;
  int hm_x = 64;
  int hm_e = 32;
  int hm_y = 32;
  int heads = 4;
  int layers = 2;  // l_t

  void validate() const;
};

/// Clean-class distributions predicted for every node (n x C) and every edge
/// slot (n^2 x 2, row i*n + j).
struct CleanPrediction {
  Eigen::MatrixXd node_probs;
  Eigen::MatrixXd edge_probs;
};

/// Graph transformer phi_theta(S^(t), y, t).
class StructDenoiser {
 public:
  struct Output {
    Tensor node_logits;  // n x C
    Tensor edge_logits;  // n^2 x 2, symmetric in (i, j)
  };

  StructDenoiser() = default;
  StructDenoiser(const StructDenoiserConfig& config, std::uint64_t seed);

  Output forward(const StructState& noisy, int y, int t) const;
  CleanPrediction predict(const StructState& noisy, int y, int t) const;

  /// Node plus upper-triangular edge cross-entropy against the clean state.
  Tensor loss(const StructState& noisy, const StructState& clean, int y, int t) const;

  const StructDenoiserConfig& config() const { return config_; }
  std::vector<Tensor> parameters() const;
  const std::vector<std::pair<std::string, Tensor>>& named_parameters() const { return params_; }

  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  void save(Checkpoint& ckpt, const std::string& prefix) const;
  static StructDenoiser load(const Checkpoint& ckpt, const std::string& prefix);

 private:
  const Tensor& param(const std::string& name) const;
  Tensor& add_param(const std::string& name, Index rows, Index cols, Rng& rng, int init);

  StructDenoiserConfig config_;
  std::vector<std::pair<std::string, Tensor>> params_;
  bool trained_ = false;
};

struct TrainOptions {
  int epochs = 20;
  double lr = 1e-3;
  int batch_size = 16;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct StructTrainResult {
  StructDenoiser model;
  std::vector<double> loss_trace;  // mean loss per epoch
};

StructTrainResult train_denoiser(std::span<const EnclosingSubgraph> samples, const TransitionSchedule& sched,
                                 const StructDenoiserConfig& config, const TrainOptions& options);

using CleanPredictor = std::function<CleanPrediction(const StructState& noisy, int y, int t)>;

struct StepDivergence {
  double node = 0;
  double edge = 0;
  double total() const { return node + edge; }
};

/// Summed per-slot KL[q(x_{t-1} | x_t, x_0) || p(x_{t-1} | x_t)] over node
/// slots and upper-triangular edge slots. At t = 1 each term is the
/// reconstruction loss -log p_hat(x_0).
StepDivergence step_divergence(const StructState& clean, const StructState& noisy, const CleanPrediction& pred,
                               int t, const TransitionSchedule& sched);

/// -(mean over repeats and t = T..1 of step_divergence). The size prior is not
/// included; callers add log p(n_S | y). Noise depends only on `seed`, so
/// calls that differ only in y see identical noisy samples.
double structure_loglik_with(const EnclosingSubgraph& sub, int y, const CleanPredictor& predictor,
                             const TransitionSchedule& sched, int n_mc, std::uint64_t seed);
double structure_loglik(const EnclosingSubgraph& sub, int y, const StructDenoiser& model,
                        const TransitionSchedule& sched, int n_mc, std::uint64_t seed);
/// Scores under y = 0 and y = 1 with shared noise.
std::array<double, 2> structure_loglik_pair(const EnclosingSubgraph& sub, const StructDenoiser& model,
                                            const TransitionSchedule& sched, int n_mc, std::uint64_t seed);

/// A trained structure model together with its schedule.
struct StructureModel {
  TransitionSchedule sched;
  StructDenoiser denoiser;
};

void save_structure_model(const StructureModel& model, const std::filesystem::path& path);
StructureModel load_structure_model(const std::filesystem::path& path);

}  // namespace sgdiff

#endif  // SGDIFF_STRUCTURE_DIFFUSION_HPP
