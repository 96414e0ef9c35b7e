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


#include "sgdiff/structure_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "sgdiff/errors.hpp"

namespace sgdiff {
namespace {

using M = RowMatrix<double>;

void check_distribution(const Eigen::VectorXd& m, const char* what) {
  if (m.size() < 2) throw ArgumentError(std::string(what) + " marginal needs >= 2 classes");
  if ((m.array() < 0).any() || !m.allFinite() || std::abs(m.sum() - 1.0) > 1e-9) {
    throw ArgumentError(std::string(what) + " marginal is not a probability vector");
  }
}

void check_step(int t, const TransitionSchedule& sched) {
  if (t < 1 || t > sched.T) {
    throw ArgumentError("diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(sched.T) + "]");
  }
}

int sample_row(const Eigen::MatrixXd& m, int row, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  const int k = static_cast<int>(m.cols());
  for (int c = 0; c < k - 1; ++c) {
    acc += m(row, c);
    if (u < acc) return c;
  }
  return k - 1;
}

// Index vectors over the n^2 edge slots (row r = i*n + j), shared across calls
// for the same n.
struct SlotIndex {
  std::shared_ptr<const std::vector<Index>> row_of;
  std::shared_ptr<const std::vector<Index>> col_of;
  std::shared_ptr<const std::vector<Index>> transposed;
  std::shared_ptr<const std::vector<Index>> upper;
};

const SlotIndex& slot_index(int n) {
  thread_local std::unordered_map<int, SlotIndex> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Index> row(n * n), col(n * n), tr(n * n), up;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      row[i * n + j] = i;
      col[i * n + j] = j;
      tr[i * n + j] = j * n + i;
      if (i < j) up.push_back(i * n + j);
    }
  }
  SlotIndex s{std::make_shared<const std::vector<Index>>(std::move(row)),
              std::make_shared<const std::vector<Index>>(std::move(col)),
              std::make_shared<const std::vector<Index>>(std::move(tr)),
              std::make_shared<const std::vector<Index>>(std::move(up))};
  return cache.emplace(n, std::move(s)).first->second;
}

}  // namespace

Eigen::MatrixXd marginal_kernel(double a, const Eigen::VectorXd& m) {
  const Index k = m.size();
  Eigen::MatrixXd q = (1.0 - a) * Eigen::VectorXd::Ones(k) * m.transpose();
  q.diagonal().array() += a;
  return q;
}

Eigen::VectorXd cosine_alpha_bar(int T, double s) {
  if (T < 1) throw ArgumentError("T must be >= 1");
  auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / T + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  Eigen::VectorXd abar(T + 1);
  for (int t = 0; t <= T; ++t) abar[t] = f(t) / f(0);
  return abar;
}

TransitionSchedule build_schedule(int T, int node_classes, const Eigen::VectorXd& m_edge,
                                  const Eigen::VectorXd& m_node) {
  if (m_node.size() != node_classes) {
    throw ArgumentError("node marginal has " + std::to_string(m_node.size()) + " classes, expected " +
                        std::to_string(node_classes));
  }
  const Eigen::VectorXd abar = cosine_alpha_bar(T);
  Eigen::VectorXd alpha(T + 1);
  alpha[0] = 1.0;
  for (int t = 1; t <= T; ++t) alpha[t] = std::clamp(abar[t] / abar[t - 1], 0.0, 1.0);
  return build_schedule_with_alphas(alpha, m_edge, m_node);
}

TransitionSchedule build_schedule_with_alphas(const Eigen::VectorXd& alpha, const Eigen::VectorXd& m_edge,
                                              const Eigen::VectorXd& m_node) {
  const int T = static_cast<int>(alpha.size()) - 1;
  if (T < 1) throw ArgumentError("schedule needs T >= 1");
  check_distribution(m_edge, "edge");
  check_distribution(m_node, "node");
  if (m_edge.size() != TransitionSchedule::edge_classes) throw ArgumentError("edge marginal must have 2 classes");

  TransitionSchedule s;
  s.T = T;
  s.node_classes = static_cast<int>(m_node.size());
  s.m_edge = m_edge;
  s.m_node = m_node;
  s.alpha = alpha;
  s.alpha[0] = 1.0;
  s.alpha_bar.resize(T + 1);
  s.alpha_bar[0] = 1.0;
  for (int t = 1; t <= T; ++t) {
    if (!(alpha[t] >= 0.0 && alpha[t] <= 1.0)) throw ArgumentError("alpha_t must lie in [0, 1]");
    s.alpha_bar[t] = s.alpha_bar[t - 1] * alpha[t];
  }
  for (int t = 0; t <= T; ++t) {
    s.q_edge.push_back(marginal_kernel(s.alpha[t], m_edge));
    s.q_node.push_back(marginal_kernel(s.alpha[t], m_node));
  }
  s.qbar_edge.push_back(s.q_edge[0]);
  s.qbar_node.push_back(s.q_node[0]);
  for (int t = 1; t <= T; ++t) {
    s.qbar_edge.push_back(s.qbar_edge[t - 1] * s.q_edge[t]);
    s.qbar_node.push_back(s.qbar_node[t - 1] * s.q_node[t]);
  }
  return s;
}

StructMarginals empirical_marginals(std::span<const EnclosingSubgraph> samples, int node_classes,
                                    double smoothing) {
  if (samples.empty()) throw ArgumentError("empirical_marginals of no samples");
  if (node_classes < 2) throw ArgumentError("node_classes must be >= 2");
  if (smoothing <= 0 || smoothing >= 1) throw ArgumentError("smoothing must lie in (0, 1)");
  Eigen::VectorXd edge = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd node = Eigen::VectorXd::Zero(node_classes);
  for (const auto& s : samples) {
    const int n = s.size();
    for (int i = 0; i < n; ++i) {
      node[clamp_drnl(s.drnl[i], node_classes)] += 1;
      for (int j = i + 1; j < n; ++j) edge[s.adj(i, j) ? 1 : 0] += 1;
    }
  }
  StructMarginals m;
  m.edge = (1 - smoothing) * edge / edge.sum() + Eigen::VectorXd::Constant(2, smoothing / 2);
  m.node = (1 - smoothing) * node / node.sum() + Eigen::VectorXd::Constant(node_classes, smoothing / node_classes);
  return m;
}

StructState clean_state(const EnclosingSubgraph& sub, int node_classes) {
  StructState s;
  s.adj = sub.adj;
  s.nodes.resize(sub.drnl.size());
  for (std::size_t i = 0; i < sub.drnl.size(); ++i) s.nodes[i] = clamp_drnl(sub.drnl[i], node_classes);
  return s;
}

StructState forward_noise(const StructState& clean, int t, const TransitionSchedule& sched, Rng& rng) {
  check_step(t, sched);
  const auto& qn = sched.qbar(Channel::node, t);
  const auto& qe = sched.qbar(Channel::edge, t);
  const int n = clean.size();
  StructState out;
  out.nodes.resize(n);
  for (int i = 0; i < n; ++i) out.nodes[i] = sample_row(qn, clean.nodes[i], rng);
  out.adj = Adjacency::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int e = sample_row(qe, clean.adj(i, j), rng);
      out.adj(i, j) = e;
      out.adj(j, i) = e;
    }
  }
  return out;
}

StructState forward_noise(const EnclosingSubgraph& sub, int t, const TransitionSchedule& sched,
                          std::uint64_t seed) {
  Rng rng(seed);
  return forward_noise(clean_state(sub, sched.node_classes), t, sched, rng);
}

Eigen::VectorXd posterior_q(int x_t, int x_0, int t, const TransitionSchedule& sched, Channel channel,
                            long slot) {
  check_step(t, sched);
  const int k = sched.classes(channel);
  if (x_t < 0 || x_t >= k || x_0 < 0 || x_0 >= k) throw ArgumentError("class index out of range");
  Eigen::VectorXd num = sched.q(channel, t).col(x_t).cwiseProduct(sched.qbar(channel, t - 1).row(x_0).transpose());
  const double z = num.sum();
  if (!(z > 0)) {
    throw NumericError("zero normalizer in posterior (x_t=" + std::to_string(x_t) + ", x_0=" +
                       std::to_string(x_0) + ", t=" + std::to_string(t) +
                       (slot >= 0 ? ", slot " + std::to_string(slot) : std::string()) + ")");
  }
  return num / z;
}

Eigen::VectorXd model_posterior(int x_t, const Eigen::Ref<const Eigen::VectorXd>& p_clean, int t,
                                const TransitionSchedule& sched, Channel channel) {
  const int k = sched.classes(channel);
  const auto& qt = sched.q(channel, t);
  const auto& qb = sched.qbar(channel, t - 1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
  double weight = 0;
  for (int x0 = 0; x0 < k; ++x0) {
    if (!(p_clean[x0] > 0)) continue;
    Eigen::VectorXd num = qt.col(x_t).cwiseProduct(qb.row(x0).transpose());
    const double z = num.sum();
    if (!(z > 0)) continue;
    out += (p_clean[x0] / z) * num;
    weight += p_clean[x0];
  }
  if (!(weight > 0)) throw NumericError("predicted clean distribution cannot reach x_t");
  return out / weight;
}

double categorical_kl(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
  double kl = 0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0) kl += p[i] * (std::log(p[i]) - std::log(std::max(q[i], 1e-300)));
  }
  return std::max(kl, 0.0);
}

// ---------------------------------------------------------------------------
// Denoiser.

void StructDenoiserConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ArgumentError(std::string(name) + " must be >= 1");
  };
  positive(T, "ds_t");
  positive(ha_x, "ha_x");
  positive(ha_e, "ha_e");
  positive(ha_y, "ha_y");
  positive(hm_x, "hm_x");
  positive(hm_e, "hm_e");
  positive(hm_y, "hm_y");
  positive(heads, "head");
  positive(layers, "l_t");
  if (node_classes < 2) throw ArgumentError("drnl_classes must be >= 2");
  if (ha_x % heads != 0) throw ArgumentError("ha_x must be divisible by head");
  if (ha_e < 2 || ha_y < 2 || ha_x < 2) throw ArgumentError("stream widths must be >= 2 for layer norm");
}

Tensor& StructDenoiser::add_param(const std::string& name, Index rows, Index cols, Rng& rng, int init) {
  M value(rows, cols);
  if (init == 0) {
    const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-r, r);
    for (Index i = 0; i < value.size(); ++i) value.data()[i] = u(rng);
  } else {
    value.setConstant(init == 2 ? 1.0 : 0.0);
  }
  params_.emplace_back(name, Tensor::parameter(std::move(value)));
  return params_.back().second;
}

StructDenoiser::StructDenoiser(const StructDenoiserConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int c = config_.node_classes;
  const int dx = config_.ha_x, de = config_.ha_e, dy = config_.ha_y;
  auto dense = [&](const std::string& name, Index in, Index out) {
    add_param(name + ".w", in, out, rng, 0);
    add_param(name + ".b", 1, out, rng, 1);
  };
  auto norm = [&](const std::string& name, Index width) {
    add_param(name + ".g", 1, width, rng, 2);
    add_param(name + ".b", 1, width, rng, 1);
  };
  dense("in.x", c + 1, dx);
  dense("in.e", TransitionSchedule::edge_classes + 1, de);
  dense("in.y", 2, dy);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add_param(p + "attn.q", dx, dx, rng, 0);
    add_param(p + "attn.k", dx, dx, rng, 0);
    add_param(p + "attn.v", dx, dx, rng, 0);
    add_param(p + "attn.o", dx, dx, rng, 0);
    add_param(p + "attn.edge_bias", de, config_.heads, rng, 0);
    add_param(p + "attn.global", dy, dx, rng, 0);
    norm(p + "norm.x1", dx);
    dense(p + "ffn.x1", dx, config_.hm_x);
    dense(p + "ffn.x2", config_.hm_x, dx);
    norm(p + "norm.x2", dx);
    add_param(p + "edge.self", de, de, rng, 0);
    add_param(p + "edge.node", dx, de, rng, 0);
    add_param(p + "edge.global", dy, de, rng, 0);
    dense(p + "ffn.e1", de, config_.hm_e);
    dense(p + "ffn.e2", config_.hm_e, de);
    norm(p + "norm.e", de);
    dense(p + "ffn.y1", dy + dx + de, config_.hm_y);
    dense(p + "ffn.y2", config_.hm_y, dy);
    norm(p + "norm.y", dy);
  }
  dense("out.x", dx, c);
  dense("out.e", de, TransitionSchedule::edge_classes);
}

const Tensor& StructDenoiser::param(const std::string& name) const {
  for (const auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw StateError("denoiser has no parameter " + name);
}

std::vector<Tensor> StructDenoiser::parameters() const {
  std::vector<Tensor> out;
  for (const auto& [n, t] : params_) out.push_back(t);
  return out;
}

StructDenoiser::Output StructDenoiser::forward(const StructState& s, int y, int t) const {
  if (params_.empty()) throw StateError("denoiser is not initialized");
  const int n = s.size();
  const int c = config_.node_classes;
  const double yv = static_cast<double>(y);
  M xin = M::Zero(n, c + 1);
  for (int i = 0; i < n; ++i) {
    if (s.nodes[i] < 0 || s.nodes[i] >= c) throw ArgumentError("node class out of range");
    xin(i, s.nodes[i]) = 1;
    xin(i, c) = yv;
  }
  M ein = M::Zero(static_cast<Index>(n) * n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      ein(i * n + j, s.adj(i, j) ? 1 : 0) = 1;
      ein(i * n + j, 2) = yv;
    }
  }
  M gin(1, 2);
  gin << yv, static_cast<double>(t) / config_.T;

  const SlotIndex& idx = slot_index(n);
  auto lin = [&](const Tensor& x, const std::string& name) { return linear(x, param(name + ".w"), param(name + ".b")); };
  auto ln = [&](const Tensor& x, const std::string& name) {
    return layer_norm(x, param(name + ".g"), param(name + ".b"));
  };
  auto mlp = [&](const Tensor& x, const std::string& a, const std::string& b) { return lin(relu(lin(x, a)), b); };

  Tensor x = relu(lin(Tensor::constant(std::move(xin)), "in.x"));
  Tensor e = relu(lin(Tensor::constant(std::move(ein)), "in.e"));
  Tensor g = relu(lin(Tensor::constant(std::move(gin)), "in.y"));
  const int dh = config_.ha_x / config_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    // Node attention with an additive per-head bias read from the edge stream.
    Tensor q = matmul(x, param(p + "attn.q"));
    Tensor k = matmul(x, param(p + "attn.k"));
    Tensor v = matmul(x, param(p + "attn.v"));
    Tensor bias = matmul(e, param(p + "attn.edge_bias"));
    std::vector<Tensor> heads;
    for (int h = 0; h < config_.heads; ++h) {
      Tensor qh = slice_cols(q, h * dh, dh);
      Tensor kh = slice_cols(k, h * dh, dh);
      Tensor vh = slice_cols(v, h * dh, dh);
      Tensor scores = add(scale(matmul(qh, transpose(kh)), inv_sqrt), reshape(slice_cols(bias, h, 1), n, n));
      heads.push_back(matmul(softmax(scores, 1), vh));
    }
    Tensor attn = matmul(concat(heads, 1), param(p + "attn.o"));
    x = ln(add(add(x, attn), matmul(g, param(p + "attn.global"))), p + "norm.x1");
    x = ln(add(x, mlp(x, p + "ffn.x1", p + "ffn.x2")), p + "norm.x2");

    // Edge update from both endpoints; symmetric whenever e is.
    Tensor ends = matmul(x, param(p + "edge.node"));
    Tensor pre = add(add(matmul(e, param(p + "edge.self")),
                         add(gather_rows(ends, idx.row_of), gather_rows(ends, idx.col_of))),
                     matmul(g, param(p + "edge.global")));
    e = ln(add(e, mlp(pre, p + "ffn.e1", p + "ffn.e2")), p + "norm.e");

    Tensor pooled = concat<double>({g, mean(x, 0), mean(e, 0)}, 1);
    g = ln(add(g, mlp(pooled, p + "ffn.y1", p + "ffn.y2")), p + "norm.y");
  }
  Output out;
  out.node_logits = lin(x, "out.x");
  Tensor el = lin(e, "out.e");
  out.edge_logits = scale(add(el, gather_rows(el, idx.transposed)), 0.5);
  return out;
}

CleanPrediction StructDenoiser::predict(const StructState& noisy, int y, int t) const {
  NoGradGuard guard;
  auto out = forward(noisy, y, t);
  CleanPrediction p;
  p.node_probs = softmax(out.node_logits, 1).value();
  p.edge_probs = softmax(out.edge_logits, 1).value();
  return p;
}

Tensor StructDenoiser::loss(const StructState& noisy, const StructState& clean, int y, int t) const {
  const int n = clean.size();
  auto out = forward(noisy, y, t);
  M node_target = M::Zero(n, config_.node_classes);
  for (int i = 0; i < n; ++i) node_target(i, clean.nodes[i]) = 1;
  const SlotIndex& idx = slot_index(n);
  const auto& upper = *idx.upper;
  M edge_target = M::Zero(static_cast<Index>(upper.size()), 2);
  for (std::size_t r = 0; r < upper.size(); ++r) {
    const int i = static_cast<int>(upper[r] / n);
    const int j = static_cast<int>(upper[r] % n);
    edge_target(static_cast<Index>(r), clean.adj(i, j) ? 1 : 0) = 1;
  }
  Tensor node_ce = cross_entropy(out.node_logits, node_target);
  Tensor edge_ce = cross_entropy(gather_rows(out.edge_logits, idx.upper), edge_target);
  return add(node_ce, edge_ce);
}

namespace {
const char* const kConfigKeys[] = {"node_classes", "T", "ha_x", "ha_e", "ha_y", "hm_x", "hm_e", "hm_y", "heads", "layers"};

int* config_field(StructDenoiserConfig& c, int i) {
  int* fields[] = {&c.node_classes, &c.T, &c.ha_x, &c.ha_e, &c.ha_y, &c.hm_x, &c.hm_e, &c.hm_y, &c.heads, &c.layers};
  return fields[i];
}
}  // namespace

void StructDenoiser::save(Checkpoint& ckpt, const std::string& prefix) const {
  StructDenoiserConfig c = config_;
  for (int i = 0; i < 10; ++i) ckpt.put_scalar(prefix + "config." + kConfigKeys[i], *config_field(c, i));
  ckpt.put_scalar(prefix + "trained", trained_ ? 1.0 : 0.0);
  for (const auto& [name, t] : params_) ckpt.put(prefix + "param." + name, t.value());
}

StructDenoiser StructDenoiser::load(const Checkpoint& ckpt, const std::string& prefix) {
  StructDenoiserConfig c;
  for (int i = 0; i < 10; ++i) {
    *config_field(c, i) = static_cast<int>(ckpt.scalar(prefix + "config." + kConfigKeys[i]));
  }
  StructDenoiser d(c, 0);
  for (auto& [name, t] : d.params_) {
    M value = ckpt.matrix(prefix + "param." + name);
    if (value.rows() != t.rows() || value.cols() != t.cols()) {
      throw CompatibilityError("parameter " + name + " has shape " + detail::shape_str(value.rows(), value.cols()) +
                               ", expected " + t.shape_string());
    }
    t.mutable_value() = std::move(value);
  }
  d.trained_ = ckpt.scalar(prefix + "trained") != 0.0;
  return d;
}

// ---------------------------------------------------------------------------
// Training and scoring.

StructTrainResult train_denoiser(std::span<const EnclosingSubgraph> samples, const TransitionSchedule& sched,
                                 const StructDenoiserConfig& config, const TrainOptions& options) {
  if (samples.empty()) throw ArgumentError("train_denoiser: no samples");
  if (config.node_classes != sched.node_classes || config.T != sched.T) {
    throw ArgumentError("denoiser config does not match the schedule");
  }
  if (options.epochs < 1 || options.batch_size < 1) throw ArgumentError("epochs and batch size must be >= 1");
  Rng rng(derive_seed(options.seed, 1));
  StructTrainResult result{StructDenoiser(config, derive_seed(options.seed, 0)), {}};
  StructDenoiser& model = result.model;
  Adam opt(model.parameters(), {.lr = options.lr, .clip_norm = options.clip_norm});

  std::vector<StructState> clean;
  clean.reserve(samples.size());
  for (const auto& s : samples) clean.push_back(clean_state(s, sched.node_classes));
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
        StructState noisy = forward_noise(clean[i], t, sched, rng);
        Tensor loss = model.loss(noisy, clean[i], samples[i].y, t);
        total += loss.item();
        backward(scale(loss, weight));
      }
      opt.step();
    }
    const double mean_loss = total / static_cast<double>(samples.size());
    if (!std::isfinite(mean_loss)) {
      throw NumericError("structure denoiser training diverged in epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(mean_loss);
    if (options.on_epoch) options.on_epoch(epoch, mean_loss);
  }
  model.mark_trained();
  return result;
}

StepDivergence step_divergence(const StructState& clean, const StructState& noisy, const CleanPrediction& pred,
                               int t, const TransitionSchedule& sched) {
  check_step(t, sched);
  const int n = clean.size();
  StepDivergence d;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd q = posterior_q(noisy.nodes[i], clean.nodes[i], t, sched, Channel::node, i);
    Eigen::VectorXd p = model_posterior(noisy.nodes[i], pred.node_probs.row(i).transpose(), t, sched, Channel::node);
    d.node += categorical_kl(q, p);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const long slot = static_cast<long>(i) * n + j;
      Eigen::VectorXd q = posterior_q(noisy.adj(i, j), clean.adj(i, j), t, sched, Channel::edge, slot);
      Eigen::VectorXd p =
          model_posterior(noisy.adj(i, j), pred.edge_probs.row(slot).transpose(), t, sched, Channel::edge);
      d.edge += categorical_kl(q, p);
    }
  }
  return d;
}

namespace {

template <std::size_t K>
std::array<double, K> loglik_sweep(const EnclosingSubgraph& sub, const std::array<int, K>& ys,
                                   const CleanPredictor& predictor, const TransitionSchedule& sched, int n_mc,
                                   std::uint64_t seed) {
  if (n_mc < 1) throw ArgumentError("n_mc must be >= 1");
  const StructState clean = clean_state(sub, sched.node_classes);
  std::array<double, K> acc{};
  for (int r = 0; r < n_mc; ++r) {
    for (int t = sched.T; t >= 1; --t) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(t)));
      const StructState noisy = forward_noise(clean, t, sched, rng);
      for (std::size_t k = 0; k < K; ++k) {
        acc[k] += step_divergence(clean, noisy, predictor(noisy, ys[k], t), t, sched).total();
      }
    }
  }
  for (auto& a : acc) a = -a / (static_cast<double>(n_mc) * sched.T);
  return acc;
}

CleanPredictor model_predictor(const StructDenoiser& model, const TransitionSchedule& sched) {
  if (!model.trained()) throw StateError("structure denoiser is untrained");
  if (model.config().node_classes != sched.node_classes || model.config().T != sched.T) {
    throw CompatibilityError("structure denoiser does not match the schedule");
  }
  return [&model](const StructState& s, int y, int t) { return model.predict(s, y, t); };
}

}  // namespace

double structure_loglik_with(const EnclosingSubgraph& sub, int y, const CleanPredictor& predictor,
                             const TransitionSchedule& sched, int n_mc, std::uint64_t seed) {
  return loglik_sweep<1>(sub, {y}, predictor, sched, n_mc, seed)[0];
}

double structure_loglik(const EnclosingSubgraph& sub, int y, const StructDenoiser& model,
                        const TransitionSchedule& sched, int n_mc, std::uint64_t seed) {
  return structure_loglik_with(sub, y, model_predictor(model, sched), sched, n_mc, seed);
}

std::array<double, 2> structure_loglik_pair(const EnclosingSubgraph& sub, const StructDenoiser& model,
                                            const TransitionSchedule& sched, int n_mc, std::uint64_t seed) {
  return loglik_sweep<2>(sub, {0, 1}, model_predictor(model, sched), sched, n_mc, seed);
}

void save_structure_model(const StructureModel& model, const std::filesystem::path& path) {
  Checkpoint c;
  c.put_scalar("kind.structure", 1);
  c.put_vector("schedule.alpha", {model.sched.alpha.data(), static_cast<std::size_t>(model.sched.alpha.size())});
  c.put_vector("schedule.m_edge", {model.sched.m_edge.data(), 2});
  c.put_vector("schedule.m_node",
               {model.sched.m_node.data(), static_cast<std::size_t>(model.sched.m_node.size())});
  model.denoiser.save(c, "denoiser.");
  write_checkpoint(c, path);
}

StructureModel load_structure_model(const std::filesystem::path& path) {
  const Checkpoint c = read_checkpoint(path);
  if (!c.contains("kind.structure")) throw CompatibilityError(path.string() + " is not a structure model");
  auto vec = [&](const std::string& name) {
    const auto v = c.vector(name);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())));
  };
  StructureModel m;
  m.sched = build_schedule_with_alphas(vec("schedule.alpha"), vec("schedule.m_edge"), vec("schedule.m_node"));
  m.denoiser = StructDenoiser::load(c, "denoiser.");
  if (m.denoiser.config().node_classes != m.sched.node_classes || m.denoiser.config().T != m.sched.T) {
    throw CompatibilityError("structure checkpoint schedule and denoiser disagree");
  }
  return m;
}

}  // namespace sgdiff
