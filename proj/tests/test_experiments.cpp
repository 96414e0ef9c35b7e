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

#include <atomic>
#include <sstream>

#include "sgdiff/errors.hpp"
#include "sgdiff/experiments.hpp"
#include "sgdiff/parallel.hpp"
#include "test_util.hpp"

using namespace sgdiff;

namespace {

RunConfig tiny_run() {
  RunConfig c;
  c.ha_x = 4;
  c.ha_e = 2;
  c.ha_y = 2;
  c.hm_x = 4;
  c.hm_e = 4;
  c.hm_y = 4;
  c.head = 2;
  c.l_t = 1;
  c.ds_t = 3;
  c.h_g = 4;
  c.ds_g = 30;
  c.epochs = 2;
  c.feat_epochs = 2;
  c.max_nodes = 10;
  c.ns = 4;
  c.max_train = 40;
  c.max_fusion = 20;
  c.max_eval = 15;
  c.feat_steps = 3;
  c.fusion_epochs = 50;
  c.seeds = 2;
  c.threads = 1;
  return c;
}

Dataset tiny_dataset(const std::string& kind = "geometric") { return {kind, make_surrogate(kind, 60, 3)}; }

bool same_records(const ExperimentReport& a, const ExperimentReport& b) {
  std::ostringstream x;
  std::ostringstream y;
  a.write_records(x);
  b.write_records(y);
  return x.str() == y.str();
}

}  // namespace

TEST_CASE("surrogates") {
  auto a = make_surrogate("geometric", 100, 1);
  auto b = make_surrogate("geometric", 100, 1);
  CHECK(a.edges() == b.edges());
  CHECK_FALSE(a.has_features());
  CHECK(a.num_edges() > 100);
  auto l = make_surrogate("latent", 100, 1);
  CHECK(l.edges() == a.edges());
  CHECK(l.features().cols() == 8);
  CHECK(make_surrogate("blocks", 100, 2).has_features());
  CHECK_THROWS_AS(make_surrogate("lattice", 100, 1), ArgumentError);
}

TEST_CASE("load_dataset") {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "toy");
  dir.write("toy/edges.txt", "0 1\n1 2\n2 3\n");
  dir.write("toy/features.txt", "1 0\n0 1\n1 1\n0 0\n");
  auto d = load_dataset(dir.path(), "Toy");
  CHECK(d.name == "Toy");
  CHECK(d.graph.num_edges() == 3);
  CHECK(d.graph.features().rows() == 4);
  CHECK_THROWS_WITH_AS(load_dataset(dir.path(), "USAir"), doctest::Contains("edges.txt"), IoError);
  auto s = load_dataset(dir.path(), "surrogate:latent:50:4");
  CHECK(s.graph.num_nodes() == 50);
  CHECK(s.graph.edges() == make_surrogate("latent", 50, 4).edges());
  CHECK_THROWS_AS(load_dataset(dir.path(), "surrogate:latent"), ArgumentError);
  CHECK_THROWS_AS(load_dataset(dir.path(), "surrogate:latent:many"), ArgumentError);
}

TEST_CASE("features_enabled") {
  RunConfig c;
  auto bare = make_surrogate("geometric", 40, 1);
  auto rich = make_surrogate("latent", 40, 1);
  CHECK_FALSE(features_enabled(c, bare));
  CHECK(features_enabled(c, rich));
  c.features = "off";
  CHECK_FALSE(features_enabled(c, rich));
  c.features = "on";
  CHECK_THROWS_AS(features_enabled(c, bare), StateError);
}

TEST_CASE("heuristic features and baseline") {
  // 0 and 1 share neighbors 2 (degree 2) and 3 (degree 3).
  Graph g(5, {{0, 2}, {1, 2}, {0, 3}, {1, 3}, {3, 4}});
  auto f = heuristic_features(g, {0, 1});
  CHECK(f[0] == 2);
  CHECK(f[1] == doctest::Approx(1 / std::log(2.0) + 1 / std::log(3.0)));
  CHECK(heuristic_features(g, {0, 4})[0] == 1);
  CHECK(heuristic_features(g, {2, 4})[0] == 0);

  auto geo = make_surrogate("geometric", 200, 5);
  auto split = split_edges(geo, {}, 1);
  auto observed = geo.with_edges(split.train_pos);
  auto model = fit_heuristic_baseline(observed, split.train_pos, split.train_neg);
  ScoredSet s;
  for (const auto& p : split.test_pos) s.pos.push_back(model.score(observed, p));
  for (const auto& p : split.test_neg) s.neg.push_back(model.score(observed, p));
  CHECK(auc(s) > 0.8);
  CHECK_THROWS_AS(fit_heuristic_baseline(observed, split.train_pos, {}), ArgumentError);
}

TEST_CASE("choose_training_pairs") {
  auto g = make_surrogate("geometric", 120, 2);
  auto split = split_edges(g, {}, 4);
  RunConfig c = tiny_run();
  auto t = choose_training_pairs(g, split, split.train_pos, split.train_neg, c, 9);
  CHECK(t.pos.size() == 20);
  CHECK(t.neg.size() == 20);
  CHECK(t.fusion_pos.size() == 10);
  CHECK(t.fusion_neg.size() == 10);
  for (const auto& p : t.fusion_pos) CHECK(std::find(t.pos.begin(), t.pos.end(), p) == t.pos.end());
  for (const auto& p : t.fusion_neg) CHECK_FALSE(g.has_edge(p.u, p.v));
  c.fusion_split = "valid";
  auto v = choose_training_pairs(g, split, split.train_pos, split.train_neg, c, 9);
  CHECK(v.fusion_pos.front() == split.valid_pos.front());
}

TEST_CASE("parallel_for") {
  std::vector<int> out(100, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (int i = 0; i < 100; ++i) CHECK(out[i] == i * i);
  std::atomic<int> calls{0};
  CHECK_THROWS_AS(parallel_for(50, 3,
                               [&](std::size_t i) {
                                 ++calls;
                                 if (i == 7) throw NumericError("boom");
                               }),
                  NumericError);
  parallel_for(0, 4, [&](std::size_t) { FAIL("called on empty range"); });
}

TEST_CASE("run_standard") {
  const auto data = tiny_dataset();
  const auto c = tiny_run();
  const auto report = run_standard(data, c);
  for (const char* key : {"auc", "ap", "hits100", "auc_std", "random_auc"}) {
    REQUIRE(report.metrics.count(key) == 1);
    CHECK(report.metrics.at(key) >= 0);
    CHECK(report.metrics.at(key) <= 1);
  }
  CHECK(report.fingerprint == config_fingerprint(c));
  SUBCASE("deterministic") {
    const auto again = run_standard(data, c);
    CHECK(again.metrics == report.metrics);
    CHECK(same_records(again, report));
  }
  SUBCASE("line records") {
    std::ostringstream os;
    report.write_records(os);
    std::istringstream is(os.str());
    std::string exp;
    std::string ds;
    std::string seed;
    std::string metric;
    double value = 0;
    is >> exp >> ds >> seed >> metric >> value;
    CHECK(exp == "standard");
    CHECK(ds == "geometric");
    std::ostringstream table;
    report.write_table(table);
    CHECK(table.str().find("hits100") != std::string::npos);
  }
}

TEST_CASE("run_seed with features") {
  const auto data = tiny_dataset("latent");
  auto c = tiny_run();
  auto run = run_seed(data, c, 7, 1.0);
  REQUIRE(run.models.feature.has_value());
  CHECK(run.models.feature->stats.mean.size() == 8);
  for (const auto& b : run.test_bundles) CHECK(b.logX.has_value());
  SUBCASE("feature width mismatch is a compatibility error") {
    Graph narrow = run.observed.graph.with_features(Eigen::MatrixXd::Zero(60, 3));
    CHECK_THROWS_AS(score_pairs(narrow, run.test_pairs, run.models, c, 1), CompatibilityError);
  }
  SUBCASE("threads do not change scores") {
    auto c4 = c;
    c4.threads = 4;
    auto a = score_pairs(run.observed.graph, run.test_pairs, run.models, c, 3);
    auto b = score_pairs(run.observed.graph, run.test_pairs, run.models, c4, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].logA == b[i].logA);
      CHECK(*a[i].logX == *b[i].logX);
    }
  }
}

TEST_CASE("run_limited") {
  const auto data = tiny_dataset();
  auto c = tiny_run();
  c.seeds = 1;
  SUBCASE("fraction 1 is the standard run") {
    auto lim = run_limited(data, 1.0, c);
    auto std_run = run_standard(data, c);
    CHECK(lim.metrics.at("auc") == std_run.metrics.at("auc"));
    CHECK(lim.metrics.count("baseline_auc") == 1);
  }
  SUBCASE("a fraction that selects nothing is rejected") {
    Dataset small{"path", Graph(20, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}, {8, 9},
                                     {9, 10}, {10, 11}, {11, 12}, {12, 13}, {13, 14}, {14, 15}, {15, 16},
                                     {16, 17}, {17, 18}, {18, 19}, {0, 19}})};
    CHECK_THROWS_WITH_AS(run_limited(small, 0.01, c), doctest::Contains("zero samples"), ArgumentError);
    CHECK_THROWS_AS(run_limited(data, 0.0, c), ArgumentError);
  }
}

TEST_CASE("run_transfer") {
  const auto data = tiny_dataset();
  auto c = tiny_run();
  c.seeds = 1;
  SUBCASE("features forced on breaks the contract") {
    auto on = c;
    on.features = "on";
    std::vector<Dataset> targets{data};
    CHECK_THROWS_AS(run_transfer(data, targets, on), ContractError);
  }
  SUBCASE("source equal to target reproduces the structure-only run") {
    std::vector<Dataset> targets{data, tiny_dataset("blocks")};
    auto reports = run_transfer(data, targets, c);
    REQUIRE(reports.size() == 2);
    auto off = c;
    off.features = "off";
    auto std_run = run_standard(data, off);
    CHECK(reports[0].metrics.at("auc") == std_run.metrics.at("auc"));
    CHECK(reports[1].dataset == "geometric->blocks");
  }
}

TEST_CASE("run_robustness") {
  const auto data = tiny_dataset();
  auto c = tiny_run();
  c.seeds = 1;
  std::vector<double> budgets{0.0, 0.25, 0.5};
  auto reports = run_robustness(data, budgets, c);
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].metrics.at("auc") == reports[0].metrics.at("clean_auc"));
  CHECK(reports[1].experiment == "robust@0.25");
  std::vector<double> bad{1.5};
  CHECK_THROWS_AS(run_robustness(data, bad, c), ArgumentError);
}
