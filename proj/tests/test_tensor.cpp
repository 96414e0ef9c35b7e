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

#include "oracles.hpp"
#include "sgdiff/errors.hpp"
#include "sgdiff/random.hpp"
#include "sgdiff/tensor.hpp"

using namespace sgdiff;
using M = RowMatrix<double>;

namespace {

M random_matrix(Index r, Index c, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  M m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Values bounded away from zero so relu's kink is never straddled.
M away_from_zero(Index r, Index c, std::uint64_t seed) {
  M m = random_matrix(r, c, seed, 0.2, 1.0);
  Rng rng(seed + 1);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < m.size(); ++i) {
    if (coin(rng)) m.data()[i] = -m.data()[i];
  }
  return m;
}

// Weighted sum so that every output element influences the loss differently.
Tensor probe(const Tensor& t, std::uint64_t seed) {
  return sum(mul(t, Tensor::constant(random_matrix(t.rows(), t.cols(), seed))));
}

}  // namespace

TEST_CASE("matmul by identity") {
  M a(2, 2);
  a << 1, 2, 3, 4;
  auto out = matmul(Tensor::constant(a), Tensor::constant(M::Identity(2, 2)));
  CHECK(out.value() == a);
}

TEST_CASE("softmax of zeros is uniform and rows sum to one") {
  auto s = softmax(Tensor::constant(M::Zero(1, 2)));
  CHECK(s.value()(0, 0) == doctest::Approx(0.5));
  CHECK(s.value()(0, 1) == doctest::Approx(0.5));
  auto x = Tensor::constant(random_matrix(5, 7, 1, -30, 30));
  auto r = softmax(x, 1);
  for (Index i = 0; i < 5; ++i) CHECK(std::abs(r.value().row(i).sum() - 1.0) < 1e-12);
  auto c = softmax(x, 0);
  for (Index j = 0; j < 7; ++j) CHECK(std::abs(c.value().col(j).sum() - 1.0) < 1e-12);
}

TEST_CASE("gradient of sum of squares") {
  M x0(1, 3);
  x0 << 1, 2, 3;
  auto x = Tensor::parameter(x0);
  backward(sum(mul(x, x)));
  CHECK(x.grad()(0, 0) == doctest::Approx(2));
  CHECK(x.grad()(0, 1) == doctest::Approx(4));
  CHECK(x.grad()(0, 2) == doctest::Approx(6));
  CHECK(oracle::max_grad_rel_error([&] { return sum(mul(x, x)); }, {x}) < 1e-4);
}

TEST_CASE("linear model gradient matches hand algebra") {
  const double xv = 1.5;
  const double tv = 0.25;
  auto w = Tensor::parameter(M::Constant(1, 1, 0.7));
  auto loss = [&] {
    auto y = scale(w, xv);
    auto d = sub(y, Tensor::scalar(tv));
    return mul(d, d);
  };
  backward(loss());
  CHECK(w.grad()(0, 0) == doctest::Approx(2 * xv * (0.7 * xv - tv)));
}

TEST_CASE("backward contract") {
  auto w = Tensor::parameter(M::Ones(2, 2));
  SUBCASE("non-scalar loss") { CHECK_THROWS_AS(backward(mul(w, w)), ArgumentError); }
  SUBCASE("constant loss leaves grads zero") {
    backward(Tensor::scalar(3.0));
    CHECK(w.grad().isZero());
  }
  SUBCASE("grads accumulate until zeroed") {
    backward(sum(w));
    backward(sum(w));
    CHECK(w.grad() == M::Constant(2, 2, 2.0));
    w.zero_grad();
    CHECK(w.grad().isZero());
  }
  SUBCASE("no-grad guard records nothing") {
    NoGradGuard guard;
    auto l = sum(mul(w, w));
    CHECK_FALSE(l.requires_grad());
  }
}

TEST_CASE("dimension errors name both shapes") {
  auto a = Tensor::constant(M::Zero(2, 3));
  auto b = Tensor::constant(M::Zero(2, 3));
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("(2x3) x (2x3)"), DimensionError);
  CHECK_THROWS_AS(add(a, Tensor::constant(M::Zero(3, 2))), DimensionError);
  CHECK_THROWS_AS(mse(a, Tensor::constant(M::Zero(3, 2))), DimensionError);
  CHECK_THROWS_AS(concat<double>({a, Tensor::constant(M::Zero(3, 3))}, 1), DimensionError);
  CHECK_THROWS_AS(reshape(a, 4, 2), DimensionError);
  CHECK_THROWS_AS(gather_rows(a, std::vector<Index>{0, 2}), IndexError);
}

TEST_CASE("broadcasting shapes") {
  auto a = Tensor::constant(M::Ones(3, 4));
  CHECK(add(a, Tensor::constant(M::Ones(1, 4))).shape() == std::array<Index, 2>{3, 4});
  CHECK(add(a, Tensor::constant(M::Ones(3, 1))).shape() == std::array<Index, 2>{3, 4});
  CHECK(add(Tensor::scalar(1.0), a).value() == M::Constant(3, 4, 2.0));
}

TEST_CASE("cross entropy is non-negative and zero only at one-hot") {
  M target = M::Zero(2, 3);
  target(0, 1) = 1;
  target(1, 2) = 1;
  auto logits = Tensor::constant(random_matrix(2, 3, 4));
  CHECK(cross_entropy(logits, target).item() > 0);
  M peaked = M::Constant(2, 3, -800);
  peaked(0, 1) = 800;
  peaked(1, 2) = 800;
  CHECK(cross_entropy(Tensor::constant(peaked), target).item() == doctest::Approx(0.0));
}

TEST_CASE("finite-difference check for every op") {
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

  auto check = [](const char* name, auto fn, std::vector<Tensor> params) {
    const double err = oracle::max_grad_rel_error(fn, params);
    INFO(name << " rel err " << err);
    CHECK(err < 1e-4);
  };
  check("add", [&] { return probe(add(a, b), 1); }, {a, b});
  check("add row", [&] { return probe(add(a, row), 2); }, {a, row});
  check("add col", [&] { return probe(add(col, a), 3); }, {a, col});
  check("add scalar", [&] { return probe(add(a, s), 4); }, {a, s});
  check("sub", [&] { return probe(sub(a, row), 5); }, {a, row});
  check("sub col", [&] { return probe(sub(col, a), 5); }, {a, col});
  check("mul", [&] { return probe(mul(a, b), 6); }, {a, b});
  check("mul row", [&] { return probe(mul(a, row), 7); }, {a, row});
  check("mul scalar", [&] { return probe(mul(s, a), 7); }, {a, s});
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
  check("composite", [&] {
    auto h = relu(linear(a, c, Tensor::constant(M::Zero(1, 5))));
    return cross_entropy(slice_cols(h, 0, 3), onehot);
  }, {a, c});
}

TEST_CASE("adam") {
  SUBCASE("zero grads leave params unchanged") {
    auto p = Tensor::parameter(random_matrix(2, 2, 1));
    const M before = p.value();
    Adam opt({p}, {.lr = 0.1});
    opt.zero_grad();
    opt.step();
    CHECK(p.value() == before);
    CHECK(opt.step_count() == 1);
  }
  SUBCASE("missing grads are a state error") {
    auto p = Tensor::parameter(random_matrix(2, 2, 1));
    Adam opt({p}, {});
    CHECK_THROWS_AS(opt.step(), StateError);
  }
  SUBCASE("constant gradient moves against its sign") {
    auto p = Tensor::parameter(M::Zero(1, 2));
    Adam opt({p}, {.lr = 0.01});
    for (int i = 0; i < 50; ++i) {
      opt.zero_grad();
      backward(sum(mul(p, Tensor::constant((M(1, 2) << 3.0, -0.5).finished()))));
      opt.step();
    }
    CHECK(p.value()(0, 0) < 0);
    CHECK(p.value()(0, 1) > 0);
  }
  SUBCASE("quadratic bowl converges") {
    auto p = Tensor::parameter(M::Zero(1, 1));
    Adam opt({p}, {.lr = 0.05});
    for (int i = 0; i < 500; ++i) {
      opt.zero_grad();
      auto d = sub(p, Tensor::scalar(3.0));
      backward(mul(d, d));
      opt.step();
    }
    CHECK(std::abs(p.value()(0, 0) - 3.0) < 0.01);
  }
  SUBCASE("lr zero is a no-op") {
    auto p = Tensor::parameter(random_matrix(3, 3, 2));
    const M before = p.value();
    Adam opt({p}, {.lr = 0.0});
    for (int i = 0; i < 5; ++i) {
      opt.zero_grad();
      backward(sum(mul(p, p)));
      opt.step();
    }
    CHECK(p.value() == before);
  }
}

TEST_CASE("replay determinism") {
  auto run = [] {
    auto w = Tensor::parameter(random_matrix(5, 5, 7));
    auto x = Tensor::constant(random_matrix(8, 5, 8));
    Adam opt({w}, {.lr = 0.01});
    double last = 0;
    for (int i = 0; i < 20; ++i) {
      opt.zero_grad();
      auto l = mean(mul(relu(matmul(x, w)), relu(matmul(x, w))));
      last = l.item();
      backward(l);
      opt.step();
    }
    return last;
  };
  CHECK(run() == run());
}
