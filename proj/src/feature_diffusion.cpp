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


#include "sgdiff/feature_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sgdiff/errors.hpp"

namespace sgdiff {
namespace {

using M = RowMatrix<double>;

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T) {
    throw ArgumentError("feature diffusion step " + std::to_string(t) + " outside [1, " +
                        std::to_string(sched.T) + "]");
  }
}

const Eigen::MatrixXd& require_features(const EnclosingSubgraph& sub) {
  if (!sub.features) {
    throw StateError("subgraph has no node features; feature diffusion needs a featured graph "
                     "(run structure-only with use_features=0)");
  }
  return *sub.features;
}

}  // namespace

NoiseSchedule noise_schedule_from_betas(const Eigen::VectorXd& betas) {
  const int T = static_cast<int>(betas.size());
  if (T < 1) throw ArgumentError("noise schedule needs T >= 1");
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T + 1);
  s.alpha.resize(T + 1);
  s.alpha_bar.resize(T + 1);
  s.beta[0] = 0;
  s.alpha[0] = 1;
  s.alpha_bar[0] = 1;
  for (int t = 1; t <= T; ++t) {
    const double b = betas[t - 1];
    if (!(b > 0 && b < 1)) throw ArgumentError("beta_t must lie in (0, 1)");
    s.beta[t] = b;
    s.alpha[t] = 1 - b;
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  }
  return s;
}

NoiseSchedule linear_noise_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw ArgumentError("ds_g must be >= 1");
  Eigen::VectorXd b(T);
  for (int t = 0; t < T; ++t) b[t] = T == 1 ? beta_end : beta_start + (beta_end - beta_start) * t / (T - 1.0);
  NoiseSchedule s = noise_schedule_from_betas(b);
  if (!(s.alpha_bar[T] < 0.05)) {
    throw ArgumentError("feature noise schedule ends at alpha_bar = " + std::to_string(s.alpha_bar[T]) +
                        " (needs < 0.05); increase ds_g");
  }
  return s;
}

NoisedFeatures forward_noise_feat(const Eigen::MatrixXd& x0, int t, const NoiseSchedule& sched, Rng& rng) {
  check_step(t, sched);
  std::normal_distribution<double> normal(0.0, 1.0);
  NoisedFeatures out;
  out.eps.resize(x0.rows(), x0.cols());
  for (Index i = 0; i < out.eps.size(); ++i) out.eps.data()[i] = normal(rng);
  out.x_t = std::sqrt(sched.alpha_bar[t]) * x0 + std::sqrt(1 - sched.alpha_bar[t]) * out.eps;
  return out;
}

NoisedFeatures forward_noise_feat(const Eigen::MatrixXd& x0, int t, const NoiseSchedule& sched,
                                  std::uint64_t seed) {
  Rng rng(seed);
  return forward_noise_feat(x0, t, sched, rng);
}

Eigen::MatrixXd posterior_mean(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x_t, int t,
                               const NoiseSchedule& sched) {
  check_step(t, sched);
  const double abar = sched.alpha_bar[t];
  const double abar_prev = sched.alpha_bar[t - 1];
  const double c0 = std::sqrt(abar_prev) * sched.beta[t] / (1 - abar);
  const double ct = std::sqrt(sched.alpha[t]) * (1 - abar_prev) / (1 - abar);
  return c0 * x0 + ct * x_t;
}

double posterior_variance(int t, const NoiseSchedule& sched) {
  check_step(t, sched);
  return (1 - sched.alpha_bar[t - 1]) / (1 - sched.alpha_bar[t]) * sched.beta[t];
}

Eigen::MatrixXd eps_model_mean(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_hat, int t,
                               const NoiseSchedule& sched) {
  check_step(t, sched);
  return (x_t - sched.beta[t] / std::sqrt(1 - sched.alpha_bar[t]) * eps_hat) / std::sqrt(sched.alpha[t]);
}

double gaussian_step_kl(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_hat,
                        int t, const NoiseSchedule& sched) {
  if (t < 2) throw ArgumentError("gaussian_step_kl needs t >= 2");
  const double var = posterior_variance(t, sched);
  return (posterior_mean(x0, x_t, t, sched) - eps_model_mean(x_t, eps_hat, t, sched)).squaredNorm() / (2 * var);
}

Eigen::MatrixXd FeatureStats::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) {
    throw DimensionError("feature width " + std::to_string(x.cols()) + " vs statistics width " +
                         std::to_string(mean.size()));
  }
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

FeatureStats fit_feature_stats(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw ArgumentError("feature statistics of no rows");
  FeatureStats s;
  s.mean = rows.colwise().mean();
  s.scale = ((rows.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt();
  for (Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale[j] > 1e-12)) s.scale[j] = 1.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// GCN denoiser.

void FeatDenoiserConfig::validate() const {
  if (feat_dim < 1) throw ArgumentError("feature dimension must be >= 1");
  if (hidden < 1) throw ArgumentError("h_g must be >= 1");
  if (layers < 1) throw ArgumentError("l_g must be >= 1");
  if (T < 1) throw ArgumentError("ds_g must be >= 1");
}

FeatDenoiser::FeatDenoiser(const FeatDenoiserConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  for (int l = 0; l < config_.layers; ++l) {
    const Index in = l == 0 ? config_.feat_dim + 2 : config_.hidden;
    const Index out = l == config_.layers - 1 ? config_.feat_dim : config_.hidden;
    const double r = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-r, r);
    M w(in, out);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    weights_.push_back(Tensor::parameter(std::move(w)));
  }
}

Tensor FeatDenoiser::forward(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x_t, int y, int t) const {
  if (weights_.empty()) throw StateError("feature denoiser is not initialized");
  const Index n = x_t.rows();
  if (x_t.cols() != config_.feat_dim) {
    throw CompatibilityError("features have width " + std::to_string(x_t.cols()) + ", denoiser expects " +
                             std::to_string(config_.feat_dim));
  }
  if (a_hat.rows() != n || a_hat.cols() != n) throw DimensionError("adjacency does not match feature rows");
  M input(n, config_.feat_dim + 2);
  input.leftCols(config_.feat_dim) = x_t;
  input.col(config_.feat_dim).setConstant(static_cast<double>(y));
  input.col(config_.feat_dim + 1).setConstant(static_cast<double>(t) / config_.T);
  const Tensor a = Tensor::constant(M(a_hat));
  Tensor h = Tensor::constant(std::move(input));
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (l > 0) h = relu(h);
    h = matmul(a, matmul(h, weights_[l]));
  }
  return h;
}

Eigen::MatrixXd FeatDenoiser::predict(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x_t, int y,
                                      int t) const {
  NoGradGuard guard;
  return forward(a_hat, x_t, y, t).value();
}

Tensor FeatDenoiser::loss(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps,
                          int y, int t) const {
  return mse(forward(a_hat, x_t, y, t), Tensor::constant(M(eps)));
}

void FeatDenoiser::save(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_scalar(prefix + "config.feat_dim", config_.feat_dim);
  ckpt.put_scalar(prefix + "config.hidden", config_.hidden);
  ckpt.put_scalar(prefix + "config.layers", config_.layers);
  ckpt.put_scalar(prefix + "config.T", config_.T);
  ckpt.put_scalar(prefix + "trained", trained_ ? 1.0 : 0.0);
  for (std::size_t l = 0; l < weights_.size(); ++l) ckpt.put(prefix + "param.w" + std::to_string(l), weights_[l].value());
}

FeatDenoiser FeatDenoiser::load(const Checkpoint& ckpt, const std::string& prefix) {
  FeatDenoiserConfig c;
  c.feat_dim = static_cast<int>(ckpt.scalar(prefix + "config.feat_dim"));
  c.hidden = static_cast<int>(ckpt.scalar(prefix + "config.hidden"));
  c.layers = static_cast<int>(ckpt.scalar(prefix + "config.layers"));
  c.T = static_cast<int>(ckpt.scalar(prefix + "config.T"));
  FeatDenoiser d(c, 0);
  for (std::size_t l = 0; l < d.weights_.size(); ++l) {
    M w = ckpt.matrix(prefix + "param.w" + std::to_string(l));
    if (w.rows() != d.weights_[l].rows() || w.cols() != d.weights_[l].cols()) {
      throw CompatibilityError("feature denoiser weight " + std::to_string(l) + " has the wrong shape");
    }
    d.weights_[l].mutable_value() = std::move(w);
  }
  d.trained_ = ckpt.scalar(prefix + "trained") != 0.0;
  return d;
}

FeatTrainResult train_feat_denoiser(std::span<const EnclosingSubgraph> samples, const NoiseSchedule& sched,
                                    const FeatDenoiserConfig& config, const TrainOptions& options) {
  if (samples.empty()) throw ArgumentError("train_feat_denoiser: no samples");
  if (config.T != sched.T) throw ArgumentError("feature denoiser config does not match the schedule");
  if (options.epochs < 1 || options.batch_size < 1) throw ArgumentError("epochs and batch size must be >= 1");
  std::vector<Eigen::MatrixXd> a_hat;
  a_hat.reserve(samples.size());
  for (const auto& s : samples) {
    const auto& x = require_features(s);
    if (x.cols() != config.feat_dim) throw CompatibilityError("sample feature width differs from config");
    a_hat.push_back(normalize_adjacency(s.adj));
  }
  Rng rng(derive_seed(options.seed, 1));
  FeatTrainResult result{FeatDenoiser(config, derive_seed(options.seed, 0)), {}};
  FeatDenoiser& model = result.model;
  Adam opt(model.parameters(), {.lr = options.lr, .clip_norm = options.clip_norm});
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::uniform_int_distribution<int> pick_t(1, sched.T);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      const double weight = 1.0 / static_cast<double>(stop - start);
      opt.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const int t = pick_t(rng);
        auto noised = forward_noise_feat(*samples[i].features, t, sched, rng);
        Tensor loss = model.loss(a_hat[i], noised.x_t, noised.eps, samples[i].y, t);
        total += loss.item();
        backward(scale(loss, weight));
      }
      opt.step();
    }
    const double mean_loss = total / static_cast<double>(samples.size());
    if (!std::isfinite(mean_loss)) {
      throw NumericError("feature denoiser training diverged in epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(mean_loss);
    if (options.on_epoch) options.on_epoch(epoch, mean_loss);
  }
  model.mark_trained();
  return result;
}

std::vector<int> score_steps(int T, int count) {
  if (T < 1 || count < 1) throw ArgumentError("score_steps needs T >= 1 and count >= 1");
  std::vector<int> steps;
  if (count >= T) {
    steps.resize(T);
    std::iota(steps.begin(), steps.end(), 1);
    return steps;
  }
  for (int k = 0; k < count; ++k) {
    const int t = count == 1 ? (T + 1) / 2
                             : 1 + static_cast<int>(std::lround(static_cast<double>(k) * (T - 1) / (count - 1)));
    if (steps.empty() || steps.back() != t) steps.push_back(t);
  }
  return steps;
}

namespace {

template <std::size_t K>
std::array<double, K> feature_sweep(const EnclosingSubgraph& sub, const std::array<int, K>& ys,
                                    const FeatDenoiser& model, const NoiseSchedule& sched, int n_mc,
                                    std::uint64_t seed, int steps) {
  if (!model.trained()) throw StateError("feature denoiser is untrained");
  if (model.config().T != sched.T) throw CompatibilityError("feature denoiser does not match the schedule");
  if (n_mc < 1) throw ArgumentError("n_mc must be >= 1");
  const auto& x0 = require_features(sub);
  const Eigen::MatrixXd a_hat = normalize_adjacency(sub.adj);
  std::array<double, K> acc{};
  double count = 0;
  for (int r = 0; r < n_mc; ++r) {
    for (int t : score_steps(sched.T, steps)) {
      auto noised = forward_noise_feat(x0, t, sched, derive_seed(seed, static_cast<std::uint64_t>(r),
                                                                  static_cast<std::uint64_t>(t)));
      for (std::size_t k = 0; k < K; ++k) {
        acc[k] += (noised.eps - model.predict(a_hat, noised.x_t, ys[k], t)).squaredNorm();
      }
      count += static_cast<double>(x0.size());
    }
  }
  for (auto& a : acc) a = -a / count;
  return acc;
}

}  // namespace

double feature_loglik(const EnclosingSubgraph& sub, int y, const FeatDenoiser& model, const NoiseSchedule& sched,
                      int n_mc, std::uint64_t seed, int steps) {
  return feature_sweep<1>(sub, {y}, model, sched, n_mc, seed, steps)[0];
}

std::array<double, 2> feature_loglik_pair(const EnclosingSubgraph& sub, const FeatDenoiser& model,
                                          const NoiseSchedule& sched, int n_mc, std::uint64_t seed, int steps) {
  return feature_sweep<2>(sub, {0, 1}, model, sched, n_mc, seed, steps);
}

void save_feature_model(const FeatureModel& model, const std::filesystem::path& path) {
  Checkpoint c;
  c.put_scalar("kind.feature", 1);
  c.put_vector("schedule.beta", {model.sched.beta.data() + 1, static_cast<std::size_t>(model.sched.T)});
  c.put("stats.mean", model.stats.mean);
  c.put("stats.scale", model.stats.scale);
  model.denoiser.save(c, "denoiser.");
  write_checkpoint(c, path);
}

FeatureModel load_feature_model(const std::filesystem::path& path) {
  const Checkpoint c = read_checkpoint(path);
  if (!c.contains("kind.feature")) throw CompatibilityError(path.string() + " is not a feature model");
  FeatureModel m;
  const auto beta = c.vector("schedule.beta");
  m.sched = noise_schedule_from_betas(Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Index>(beta.size())));
  m.stats.mean = c.matrix("stats.mean");
  m.stats.scale = c.matrix("stats.scale");
  m.denoiser = FeatDenoiser::load(c, "denoiser.");
  if (m.denoiser.config().T != m.sched.T || m.stats.mean.size() != m.denoiser.config().feat_dim) {
    throw CompatibilityError("feature checkpoint pieces disagree");
  }
  return m;
}

}  // namespace sgdiff
