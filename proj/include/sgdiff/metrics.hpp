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


#ifndef SGDIFF_METRICS_HPP
#define SGDIFF_METRICS_HPP

#include <vector>

namespace sgdiff {

struct ScoredSet {
  std::vector<double> pos;
  std::vector<double> neg;
};

/// Mann-Whitney AUC; ties count one half.
double auc(const ScoredSet& s);

/// Mean precision at each positive over the descending ranking. At equal
/// score negatives rank first, so ties never help.
double average_precision(const ScoredSet& s);

/// Fraction of positives strictly above the k-th highest negative; 1 when
/// there are fewer than k negatives.
double hits_at_k(const ScoredSet& s, int k = 100);

}  // namespace sgdiff

#endif  // SGDIFF_METRICS_HPP
