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


#include "sgdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgdiff/errors.hpp"

namespace sgdiff {
namespace {

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ArgumentError(std::string("non-finite ") + what + " score");
  }
}

}  // namespace

double auc(const ScoredSet& s) {
  if (s.pos.empty() || s.neg.empty()) throw ArgumentError("auc needs positives and negatives");
  check_finite(s.pos, "positive");
  check_finite(s.neg, "negative");
  // Count, for each positive, negatives strictly below plus half the ties.
  std::vector<double> neg = s.neg;
  std::sort(neg.begin(), neg.end());
  double won = 0;
  for (double p : s.pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    won += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return won / (static_cast<double>(s.pos.size()) * static_cast<double>(s.neg.size()));
}

double average_precision(const ScoredSet& s) {
  if (s.pos.empty()) throw ArgumentError("average_precision needs positives");
  check_finite(s.pos, "positive");
  check_finite(s.neg, "negative");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(s.pos.size() + s.neg.size());
  for (double x : s.pos) items.push_back({x, true});
  for (double x : s.neg) items.push_back({x, false});
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    return !a.positive && b.positive;
  });
  double hits = 0;
  double total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].positive) continue;
    hits += 1;
    total += hits / static_cast<double>(i + 1);
  }
  return total / static_cast<double>(s.pos.size());
}

double hits_at_k(const ScoredSet& s, int k) {
  if (k <= 0) throw ArgumentError("hits@k needs k >= 1");
  if (s.pos.empty()) throw ArgumentError("hits@k needs positives");
  check_finite(s.pos, "positive");
  check_finite(s.neg, "negative");
  if (s.neg.size() < static_cast<std::size_t>(k)) return 1.0;
  std::vector<double> neg = s.neg;
  std::nth_element(neg.begin(), neg.begin() + (k - 1), neg.end(), std::greater<>());
  const double threshold = neg[k - 1];
  const auto above = std::count_if(s.pos.begin(), s.pos.end(), [&](double p) { return p > threshold; });
  return static_cast<double>(above) / static_cast<double>(s.pos.size());
}

}  // namespace sgdiff
