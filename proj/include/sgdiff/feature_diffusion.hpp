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


#ifndef SGDIFF_FEATURE_DIFFUSION_HPP
#define SGDIFF_FEATURE_DIFFUSION_HPP

// Class-conditional Gaussian diffusion over the node features of an enclosing
// subgraph, denoised by a GCN that sees the subgraph's normalized adjacency.
//
//   x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps
//   eps_theta = A_hat relu(A_hat [x_t | y | t/T] W_0) W_1
//
// The feature score of a sample under y is the negated per-element mean of
// ||eps - eps_theta||^2 over a fixed grid of steps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgdiff/checkpoint.hpp"
#include "sgdiff/structure_diffusion.hpp"
#include "sgdiff/subgraph.hpp"
#include "sgdiff/tensor.hpp"

namespace sgdiff {

struct NoiseSchedule {
  int T = 0;
  Eigen::VectorXd beta;       // [0..T]; beta[0] = 0
  Eigen::VectorXd alpha;      // 1 - beta
  Eigen::VectorXd alpha_bar;  // running product; alpha_bar[0] = 1
};

/// Betas for t = 1..T, each in (0, 1).
NoiseSchedule noise_schedule_from_betas(const Eigen::VectorXd& betas);

/// Linear betas from `beta_start` to `beta_end`. Throws ArgumentError when
/// the chain does not reach abar_T < 0.05.
NoiseSchedule linear_noise_schedule(int T, double beta_start = 1e-4, double beta_end = 0.2);

/// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
template <typename Derived>
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixBase<Derived>& adj) {
  Eigen::MatrixXd a = adj.template cast<double>();
  a.diagonal().array() += 1.0;
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

struct NoisedFeatures {
  Eigen::MatrixXd x_t;
  Eigen::MatrixXd eps;
};

NoisedFeatures forward_noise_feat(const Eigen::MatrixXd& x0, int t, const NoiseSchedule& sched, Rng& rng);
NoisedFeatures forward_noise_feat(const Eigen::MatrixXd& x0, int t, const NoiseSchedule& sched,
                                  std::uint64_t seed);

/// Gaussian posterior q(x_{t-1} | x_t, x_0) = N(mu_tilde, beta_tilde I).
Eigen::MatrixXd posterior_mean(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x_t, int t,
                               const NoiseSchedule& sched);
double posterior_variance(int t, const NoiseSchedule& sched);
/// Model mean implied by a noise prediction.
Eigen::MatrixXd eps_model_mean(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_hat, int t,
                               const NoiseSchedule& sched);
/// KL between the true posterior and the eps-parameterized model step, both
/// with variance beta_tilde (t >= 2).
double gaussian_step_kl(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_hat,
                        int t, const NoiseSchedule& sched);

/// Per-column standardization statistics.
struct FeatureStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // std, with zero-variance columns mapped to 1

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

FeatureStats fit_feature_stats(const Eigen::MatrixXd& rows);

struct FeatDenoiserConfig {
  int feat_dim = 0;
  int hidden = 64;  // h_g
  int layers = 2;   // l_g
  int T = 50;       // ds_g

  void validate() const;
};

class FeatDenoiser {
 public:
  FeatDenoiser() = default;
  FeatDenoiser(const FeatDenoiserConfig& config, std::uint64_t seed);

  /// eps_theta for every node: n x feat_dim.
  Tensor forward(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x_t, int y, int t) const;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x_t, int y, int t) const;
  Tensor loss(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps, int y,
              int t) const;

  const FeatDenoiserConfig& config() const { return config_; }
  std::vector<Tensor> parameters() const { return weights_; }
  /// Weight k maps layer k's input to its output; weight 0's last two input
  /// rows read y and t/T.
  std::vector<Tensor>& weights() { return weights_; }

  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  void save(Checkpoint& ckpt, const std::string& prefix) const;
  static FeatDenoiser load(const Checkpoint& ckpt, const std::string& prefix);

 private:
  FeatDenoiserConfig config_;
  std::vector<Tensor> weights_;
  bool trained_ = false;
};

struct FeatTrainResult {
  FeatDenoiser model;
  std::vector<double> loss_trace;
};

/// Samples must carry (already standardized) features.
FeatTrainResult train_feat_denoiser(std::span<const EnclosingSubgraph> samples, const NoiseSchedule& sched,
                                    const FeatDenoiserConfig& config, const TrainOptions& options);

/// Evenly spaced steps in [1, T]; all steps when count >= T.
std::vector<int> score_steps(int T, int count);

/// -(per-element mean of ||eps - eps_theta||^2) over `n_mc` repeats of the
/// step grid. Noise depends only on (seed, repeat, t).
double feature_loglik(const EnclosingSubgraph& sub, int y, const FeatDenoiser& model, const NoiseSchedule& sched,
                      int n_mc, std::uint64_t seed, int steps = 10);
std::array<double, 2> feature_loglik_pair(const EnclosingSubgraph& sub, const FeatDenoiser& model,
                                          const NoiseSchedule& sched, int n_mc, std::uint64_t seed,
                                          int steps = 10);

struct FeatureModel {
  NoiseSchedule sched;
  FeatDenoiser denoiser;
  FeatureStats stats;
};

void save_feature_model(const FeatureModel& model, const std::filesystem::path& path);
FeatureModel load_feature_model(const std::filesystem::path& path);

}  // namespace sgdiff

#endif  // SGDIFF_FEATURE_DIFFUSION_HPP
