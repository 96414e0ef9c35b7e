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


#include "sgdiff/fusion.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sgdiff/errors.hpp"

namespace sgdiff {
namespace {

// -log sigmoid(m) evaluated without overflow.
double softplus_neg(double m) { return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

double sigmoid(double z) {
  if (z >= 0) return 1 / (1 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1 + e);
}

void require_finite(double v, const char* component) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + component + " in fusion");
}

// Per-bundle pieces of the logit z = eta1 * fx + eta2 * fa + gap.
struct Logit {
  double fx = 0;
  double fa = 0;
  double gap = 0;
};

Logit logit_parts(const LikelihoodBundle& b, const FusionParams& p) {
  Logit l;
  require_finite(b.logA[0], "structure score");
  require_finite(b.logA[1], "structure score");
  l.fa = b.logA[1] - b.logA[0];
  if (!p.size_prior.empty()) {
    const double s1 = p.size_prior.log_p(b.n_s, 1);
    const double s0 = p.size_prior.log_p(b.n_s, 0);
    require_finite(s1, "size prior");
    require_finite(s0, "size prior");
    l.fa += s1 - s0;
  }
  if (b.logX) {
    require_finite((*b.logX)[0], "feature score");
    require_finite((*b.logX)[1], "feature score");
    l.fx = (*b.logX)[1] - (*b.logX)[0];
  }
  require_finite(p.class_logprior[0], "class prior");
  require_finite(p.class_logprior[1], "class prior");
  l.gap = p.class_logprior[1] - p.class_logprior[0];
  return l;
}

double logit(const Logit& l, const FusionParams& p) { return p.eta1 * l.fx + p.eta2 * l.fa + l.gap; }

}  // namespace

double SizePrior::log_p(int n_s, int y) const {
  if (y != 0 && y != 1) throw ArgumentError("size prior label must be 0 or 1");
  if (n_s < min_size || n_s > max_size) {
    throw ArgumentError("subgraph size " + std::to_string(n_s) + " outside the size prior range [" +
                        std::to_string(min_size) + ", " + std::to_string(max_size) + "]");
  }
  return log_prob[y][n_s - min_size];
}

SizePrior fit_size_prior(std::span<const std::pair<int, int>> sizes_and_labels, int max_nodes) {
  if (max_nodes < 2) throw ArgumentError("max_nodes must be >= 2");
  SizePrior prior;
  prior.max_size = max_nodes;
  const int range = max_nodes - 1;
  std::array<Eigen::VectorXd, 2> counts{Eigen::VectorXd::Ones(range), Eigen::VectorXd::Ones(range)};
  std::array<int, 2> seen{0, 0};
  for (auto [n, y] : sizes_and_labels) {
    if (y != 0 && y != 1) throw ArgumentError("size prior label must be 0 or 1");
    if (n < 2 || n > max_nodes) throw ArgumentError("subgraph size " + std::to_string(n) + " outside [2, max_nodes]");
    counts[y][n - 2] += 1;
    ++seen[y];
  }
  for (int y = 0; y < 2; ++y) {
    if (seen[y] == 0) throw ArgumentError("size prior: no samples with y=" + std::to_string(y));
    prior.log_prob[y] = (counts[y] / counts[y].sum()).array().log();
  }
  return prior;
}

double fused_logit(const LikelihoodBundle& b, const FusionParams& p) {
  const double z = logit(logit_parts(b, p), p);
  require_finite(z, "fused logit");
  return z;
}

double posterior(const LikelihoodBundle& b, const FusionParams& p) { return sigmoid(fused_logit(b, p)); }

Prediction predict(const LikelihoodBundle& b, const FusionParams& p) {
  const double p1 = posterior(b, p);
  return {p1 >= 0.5 ? 1 : 0, p1};
}

double fusion_loss(std::span<const LikelihoodBundle> bundles, const FusionParams& p) {
  if (bundles.empty()) throw ArgumentError("fusion loss of no bundles");
  double loss = 0;
  for (const auto& b : bundles) {
    if (!b.truth) throw ArgumentError("fusion loss needs labeled bundles");
    const double z = logit(logit_parts(b, p), p);
    loss += softplus_neg(*b.truth == 1 ? z : -z);
  }
  return loss / static_cast<double>(bundles.size());
}

FusionFit fit_fusion(std::span<const LikelihoodBundle> bundles, const SizePrior& size_prior,
                     const FusionOptions& options) {
  if (bundles.empty()) throw ArgumentError("fit_fusion: no bundles");
  if (options.epochs < 0 || options.lr < 0) throw ArgumentError("fit_fusion: epochs and lr must be >= 0");
  std::array<int, 2> counts{0, 0};
  const bool has_x = bundles.front().logX.has_value();
  for (const auto& b : bundles) {
    if (!b.truth || (*b.truth != 0 && *b.truth != 1)) throw ArgumentError("fit_fusion: bundle without a 0/1 label");
    if (b.logX.has_value() != has_x) throw ArgumentError("fit_fusion: feature scores present on only some bundles");
    ++counts[*b.truth];
  }
  if (counts[0] == 0 || counts[1] == 0) throw ArgumentError("fit_fusion: training bundles carry a single label");

  FusionFit fit;
  FusionParams& p = fit.params;
  p.size_prior = size_prior;
  if (options.fit_class_prior) {
    const double total = counts[0] + counts[1];
    p.class_logprior = {std::log(counts[0] / total), std::log(counts[1] / total)};
  }
  std::vector<Logit> parts;
  parts.reserve(bundles.size());
  for (const auto& b : bundles) parts.push_back(logit_parts(b, p));

  // Steps are taken in coordinates scaled by each feature's RMS so that
  // scores of very different magnitudes converge at the same rate.
  const double m = static_cast<double>(parts.size());
  double rms_x = 0;
  double rms_a = 0;
  for (const auto& l : parts) {
    rms_x += l.fx * l.fx;
    rms_a += l.fa * l.fa;
  }
  rms_x = rms_x > 0 ? std::sqrt(rms_x / m) : 1.0;
  rms_a = rms_a > 0 ? std::sqrt(rms_a / m) : 1.0;

  auto loss_at = [&](double e1, double e2) {
    double loss = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double z = e1 * parts[i].fx + e2 * parts[i].fa + parts[i].gap;
      loss += softplus_neg(*bundles[i].truth == 1 ? z : -z);
    }
    return loss / m;
  };

  double loss = loss_at(p.eta1, p.eta2);
  double lr = options.lr;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double g1 = 0;
    double g2 = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double r = sigmoid(p.eta1 * parts[i].fx + p.eta2 * parts[i].fa + parts[i].gap) - *bundles[i].truth;
      g1 += r * parts[i].fx;
      g2 += r * parts[i].fa;
    }
    g1 /= m;
    g2 /= m;
    // Try the step; on an increase halve and retry a bounded number of times.
    for (int attempt = 0; attempt < 60 && lr > 0; ++attempt) {
      const double e1 = has_x ? p.eta1 - lr * g1 / (rms_x * rms_x) : p.eta1;
      const double e2 = p.eta2 - lr * g2 / (rms_a * rms_a);
      const double trial = loss_at(e1, e2);
      if (std::isfinite(trial) && trial <= loss) {
        p.eta1 = e1;
        p.eta2 = e2;
        loss = trial;
        lr *= options.grow;
        break;
      }
      lr *= 0.5;
    }
    fit.loss_trace.push_back(loss);
  }
  return fit;
}

void write_fusion(std::ostream& os, const FusionParams& p) {
  os << std::setprecision(17);
  os << "# fusion parameters\n";
  os << "eta1=" << p.eta1 << '\n';
  os << "eta2=" << p.eta2 << '\n';
  os << "delta=" << p.delta << '\n';
  os << "class_logprior=" << p.class_logprior[0] << ',' << p.class_logprior[1] << '\n';
  if (!p.size_prior.empty()) {
    os << "size_prior.min=" << p.size_prior.min_size << '\n';
    os << "size_prior.max=" << p.size_prior.max_size << '\n';
    for (int y = 0; y < 2; ++y) {
      os << "size_prior.y" << y << '=';
      const auto& row = p.size_prior.log_prob[y];
      for (Eigen::Index i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
  }
}

FusionParams read_fusion(std::istream& is) {
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
    kv[line.substr(0, eq)] = {line.substr(eq + 1), lineno};
  }
  auto list = [](const std::string& text, std::size_t at) {
    std::vector<double> out;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + tok + "'", at);
      }
    }
    return out;
  };
  auto take = [&](const std::string& key) -> std::vector<double> {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing key " + key, lineno);
    auto out = list(it->second.first, it->second.second);
    kv.erase(it);
    return out;
  };
  auto one = [&](const std::string& key) {
    const std::size_t at = kv.count(key) ? kv[key].second : lineno;
    auto v = take(key);
    if (v.size() != 1) throw ParseError(key + " expects one value", at);
    return v[0];
  };
  FusionParams p;
  p.eta1 = one("eta1");
  p.eta2 = one("eta2");
  p.delta = one("delta");
  {
    const std::size_t at = kv.count("class_logprior") ? kv["class_logprior"].second : lineno;
    auto c = take("class_logprior");
    if (c.size() != 2) throw ParseError("class_logprior expects two values", at);
    p.class_logprior = {c[0], c[1]};
  }
  if (kv.count("size_prior.max")) {
    p.size_prior.min_size = static_cast<int>(one("size_prior.min"));
    p.size_prior.max_size = static_cast<int>(one("size_prior.max"));
    const auto width = static_cast<std::size_t>(p.size_prior.max_size - p.size_prior.min_size + 1);
    for (int y = 0; y < 2; ++y) {
      const std::string key = "size_prior.y" + std::to_string(y);
      const std::size_t at = kv.count(key) ? kv[key].second : lineno;
      auto row = take(key);
      if (row.size() != width) throw ParseError(key + " has the wrong length", at);
      p.size_prior.log_prob[y] = Eigen::Map<Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
    }
  }
  if (!kv.empty()) throw ParseError("unknown key " + kv.begin()->first, kv.begin()->second.second);
  return p;
}

}  // namespace sgdiff
