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


#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sgdiff/errors.hpp"
#include "sgdiff/metrics.hpp"
#include "sgdiff/random.hpp"

using namespace sgdiff;

TEST_CASE("auc examples") {
  CHECK(auc({{0.9, 0.8}, {0.7, 0.1}}) == 1.0);
  CHECK(auc({{0.8, 0.4}, {0.6, 0.2}}) == 0.75);
  CHECK(auc({{0.3, 0.3}, {0.3, 0.3, 0.3}}) == 0.5);
  CHECK_THROWS_AS(auc({{}, {0.1}}), ArgumentError);
  CHECK_THROWS_AS(auc({{0.1}, {}}), ArgumentError);
  CHECK_THROWS_AS(auc({{NAN}, {0.1}}), ArgumentError);
}

TEST_CASE("average precision examples") {
  CHECK(average_precision({{0.9, 0.8}, {0.1}}) == 1.0);
  CHECK(average_precision({{0.9, 0.5}, {0.7}}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2).epsilon(1e-15));
  CHECK(average_precision({{0.1}, {0.4, 0.3, 0.2}}) == 0.25);
  // ties rank negatives first
  CHECK(average_precision({{0.5}, {0.5}}) == 0.5);
  CHECK_THROWS_AS(average_precision({{}, {0.1}}), ArgumentError);
}

TEST_CASE("hits@k examples") {
  std::vector<double> neg50(50, 0.9);
  CHECK(hits_at_k({{0.1}, neg50}, 100) == 1.0);
  // 99 negatives at 0.65, the 100th highest at 0.6, the rest below
  std::vector<double> neg(99, 0.65);
  neg.push_back(0.6);
  neg.insert(neg.end(), 50, 0.1);
  CHECK(hits_at_k({{0.7, 0.5}, neg}, 100) == 0.5);
  std::vector<double> flat(120, 0.3);
  CHECK(hits_at_k({{0.3, 0.3}, flat}, 100) == 0.0);
  CHECK_THROWS_AS(hits_at_k({{0.1}, {0.2}}, 0), ArgumentError);
}

TEST_CASE("metrics agree with brute-force oracles") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int np = 1 + static_cast<int>(rng() % 50);
    const int nn = 1 + static_cast<int>(rng() % 50);
    // coarse scores so ties are common
    ScoredSet s;
    for (int i = 0; i < np; ++i) s.pos.push_back(static_cast<double>(rng() % 8));
    for (int i = 0; i < nn; ++i) s.neg.push_back(static_cast<double>(rng() % 6));
    CHECK(auc(s) == oracle::auc_by_pairs(s.pos, s.neg));
    CHECK(average_precision(s) == doctest::Approx(oracle::ap_by_counting(s.pos, s.neg)).epsilon(1e-13));
  }
}

TEST_CASE("metrics are invariant under strictly monotone maps") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    ScoredSet s;
    for (int i = 0; i < 40; ++i) s.pos.push_back(std::round(u(rng) * 4) / 4);
    for (int i = 0; i < 130; ++i) s.neg.push_back(std::round(u(rng) * 4) / 4);
    const double a = 0.5 + static_cast<double>(rng() % 5);
    ScoredSet t;
    auto f = [&](double x) { return std::exp(a * x) + x * x * x; };  // strictly increasing
    for (double x : s.pos) t.pos.push_back(f(x));
    for (double x : s.neg) t.neg.push_back(f(x));
    CHECK(auc(s) == auc(t));
    CHECK(average_precision(s) == average_precision(t));
    CHECK(hits_at_k(s, 100) == hits_at_k(t, 100));
    CHECK(hits_at_k(s, 20) == hits_at_k(t, 20));
  }
}
