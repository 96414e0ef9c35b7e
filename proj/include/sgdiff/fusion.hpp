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


#ifndef SGDIFF_FUSION_HPP
#define SGDIFF_FUSION_HPP

// Bayes fusion of the structure and feature scores:
//
//   s(y) = eta1 * logX(y) + eta2 * (logA(y) + log p(n_S | y)) + delta + log p(y)
//   p1   = softmax_y s(y) evaluated at y = 1
//
// delta is shared by both classes and therefore cancels; it is kept for
// parity with the usual presentation and is never moved by fitting.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sgdiff {

struct LikelihoodBundle {
  std::array<double, 2> logA{};                // structure score per y
  std::optional<std::array<double, 2>> logX;   // feature score per y
  int n_s = 0;                                 // subgraph size
  std::optional<int> truth;
};

/// Class-conditional log p(n_S | y) over [min_size, max_size].
struct SizePrior {
  int min_size = 2;
  int max_size = 0;
  std::array<Eigen::VectorXd, 2> log_prob;

  bool empty() const { return max_size == 0; }
  double log_p(int n_s, int y) const;
};

/// Add-one smoothed histogram of (n_S, y) over [2, max_nodes].
SizePrior fit_size_prior(std::span<const std::pair<int, int>> sizes_and_labels, int max_nodes);

struct FusionParams {
  double eta1 = 1.0;
  double eta2 = 1.0;
  double delta = 0.0;
  std::array<double, 2> class_logprior{-0.6931471805599453, -0.6931471805599453};
  SizePrior size_prior;  // empty: no size term
};

/// s(1) - s(0): the log-odds of y = 1. Monotone in the posterior and free of
/// its saturation, so it is the score used for ranking metrics.
double fused_logit(const LikelihoodBundle& b, const FusionParams& p);

/// Probability of y = 1. Throws NumericError naming a non-finite component.
double posterior(const LikelihoodBundle& b, const FusionParams& p);

struct Prediction {
  int label = 0;
  double p1 = 0.5;
};

/// label = 1 iff p1 >= 0.5.
Prediction predict(const LikelihoodBundle& b, const FusionParams& p);

struct FusionOptions {
  int epochs = 500;
  double lr = 0.5;
  double grow = 1.05;  // step growth after an accepted step
  bool fit_class_prior = true;  // empirical label frequencies
};

struct FusionFit {
  FusionParams params;
  std::vector<double> loss_trace;  // loss after each epoch
};

/// Mean binary cross-entropy of `posterior` against the bundles' truth.
double fusion_loss(std::span<const LikelihoodBundle> bundles, const FusionParams& p);

/// Full-batch gradient descent on (eta1, eta2) from eta1 = eta2 = 1. A step
/// that raises the loss is rejected and the step size halved, so the loss
/// trace never increases.
FusionFit fit_fusion(std::span<const LikelihoodBundle> bundles, const SizePrior& size_prior,
                     const FusionOptions& options = {});

void write_fusion(std::ostream& os, const FusionParams& p);
FusionParams read_fusion(std::istream& is);

}  // namespace sgdiff

#endif  // SGDIFF_FUSION_HPP
