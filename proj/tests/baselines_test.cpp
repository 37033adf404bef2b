/* Copyright 2026 The smrf Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>

#include "smrf/baselines.hpp"
#include "test_util.hpp"

namespace smrf {
namespace {

TEST(Means, Examples) {
  // User 1 rates {4, 4, 4}; user 2 rates {1, 5}.
  const auto d = testing::make_dataset({{1, 1, 4, 0}, {1, 2, 4, 0}, {1, 3, 4, 0}, {2, 1, 1, 0}, {2, 3, 5, 0}});
  EXPECT_DOUBLE_EQ(mean_predict(d, 0, 0, MeanKind::User), 4.0);
  EXPECT_DOUBLE_EQ(mean_predict(d, 1, 0, MeanKind::User), 3.0);
  EXPECT_DOUBLE_EQ(mean_predict(d, 0, 0, MeanKind::Item), 2.5);
  EXPECT_DOUBLE_EQ(mean_predict(d, 0, 2, MeanKind::Item), 4.5);
  EXPECT_DOUBLE_EQ(mean_predict(d, 0, 0, MeanKind::Global), 18.0 / 5);
  EXPECT_DOUBLE_EQ(mean_predict(d, -1, 0, MeanKind::User), 18.0 / 5);
  EXPECT_DOUBLE_EQ(mean_predict(d, 0, -1, MeanKind::Item), 18.0 / 5);
  const auto t = mean_tables(d);
  EXPECT_DOUBLE_EQ(t.dev_of_user(0), kDeviationFloor);
  EXPECT_DOUBLE_EQ(t.dev_of_user(1), 2.0);
  EXPECT_THROW(mean_tables(RatingDataset()), PreconditionError);
}

TEST(WeightedMean, Examples) {
  EXPECT_DOUBLE_EQ(weighted_mean(4, 1, 2, 0.5), 8.0 / 3);
  EXPECT_DOUBLE_EQ(weighted_mean(4, 0.7, 2, 0.7), 3.0);
  // Fixture: user 1 {2, 4} (dev 1), item 1 {2, 5, 5} (dev sqrt(2)).
  const auto d = testing::make_dataset({{1, 1, 2, 0}, {1, 2, 4, 0}, {2, 1, 5, 0}, {3, 1, 5, 0}});
  const double su = 1.0, si = std::sqrt(2.0);
  EXPECT_NEAR(weighted_mean_predict(d, 0, 0), (3.0 / su + 4.0 / si) / (1 / su + 1 / si), 1e-12);
}

TEST(WeightedMean, LiesBetweenTheMeans) {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const double a = 1 + 4 * rng.uniform(), b = 1 + 4 * rng.uniform();
    const double w = weighted_mean(a, 1e-6 + rng.uniform(), b, 1e-6 + rng.uniform());
    EXPECT_GE(w, std::min(a, b) - 1e-12);
    EXPECT_LE(w, std::max(a, b) + 1e-12);
  }
}

// Users A=1, B=2, C=3 over items 1..4.
//   A: 5 3 4 -      B: 4 2 3 5      C: 1 5 - 2
// s(A,B) = 1 (B = A - 1 on the co-rated items), s(A,C) = -1 on items 1, 2.
const std::vector<RatingTriple> kThree = {{1, 1, 5, 0}, {1, 2, 3, 0}, {1, 3, 4, 0}, {2, 1, 4, 0}, {2, 2, 2, 0},
                                          {2, 3, 3, 0}, {2, 4, 5, 0}, {3, 1, 1, 0}, {3, 2, 5, 0}, {3, 4, 2, 0}};

TEST(Knn, HandPearson) {
  const auto d = testing::make_dataset(kThree);
  EXPECT_NEAR(pearson_similarity(d, 0, 1), 1.0, 1e-12);
  EXPECT_NEAR(pearson_similarity(d, 0, 2), -1.0, 1e-12);
  // B and C share items 1, 2, 4: (4,2,5) vs (1,5,2).
  const double xb[] = {4, 2, 5}, xc[] = {1, 5, 2};
  const double mb = 11.0 / 3, mc = 8.0 / 3;
  double cov = 0, vb = 0, vc = 0;
  for (int k = 0; k < 3; ++k) {
    cov += (xb[k] - mb) * (xc[k] - mc);
    vb += (xb[k] - mb) * (xb[k] - mb);
    vc += (xc[k] - mc) * (xc[k] - mc);
  }
  EXPECT_NEAR(pearson_similarity(d, 1, 2), cov / std::sqrt(vb * vc), 1e-12);
  EXPECT_NEAR(pearson_similarity(d, 1, 1), 1.0, 1e-12);
}

TEST(Knn, HandPrediction) {
  const auto d = testing::make_dataset(kThree);
  // r_A = 4 + (1 * (5 - 3.5) + (-1) * (2 - 8/3)) / 2.
  EXPECT_NEAR(knn_user_predict(d, 0, 3), 4.0 + (1.5 + 2.0 / 3) / 2, 1e-12);
}

TEST(Knn, SingleNeighbour) {
  const auto d = testing::make_dataset({kThree.begin(), kThree.begin() + 7});
  EXPECT_NEAR(knn_user_predict(d, 0, 3), 4.0 + (5 - 3.5), 1e-12);
  KnnConfig one{0.0, 1};
  const auto full = testing::make_dataset(kThree);
  // Cap 1 keeps the lower id among |s| = 1 ties.
  EXPECT_NEAR(knn_user_predict(full, mean_tables(full), user_similarities(full, 0), 0, 3, one), 5.5, 1e-12);
}

TEST(Knn, ZeroSimilaritiesFallBackToUserMean) {
  // Users share at most one item: every similarity is 0.
  const auto d = testing::make_dataset({{1, 1, 5, 0}, {1, 2, 3, 0}, {2, 1, 1, 0}, {2, 3, 4, 0}, {3, 3, 2, 0}});
  EXPECT_DOUBLE_EQ(knn_user_predict(d, 0, 2), 4.0);
  EXPECT_DOUBLE_EQ(knn_user_predict(d, -1, 2), mean_tables(d).global_mean);
}

TEST(Knn, ZeroSimilarityNeighbourIsIgnored) {
  auto t = kThree;
  t.push_back({4, 4, 1, 0});
  t.push_back({4, 1, 3, 0});
  const auto with = testing::make_dataset(t);
  const auto without = testing::make_dataset(kThree);
  EXPECT_EQ(pearson_similarity(with, 0, 3), 0.0);
  EXPECT_NEAR(knn_user_predict(with, 0, 3), knn_user_predict(without, 0, 3), 1e-12);
}

TEST(Knn, SimilaritiesBounded) {
  Rng rng(8);
  const auto d = testing::random_dataset(rng, 15, 12, 5, 0.5);
  for (int u = 0; u < d.num_users(); ++u) {
    for (double s : user_similarities(d, u)) {
      EXPECT_GE(s, -1.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

RsvdParams random_rsvd(const RatingDataset& d, int F, bool normalize, Rng& rng) {
  auto p = make_rsvd_params(d, F, 0.3, normalize);
  for (auto* v : {&p.item_bias, &p.user_bias, &p.item_factors, &p.user_factors, &p.user_logvar, &p.item_logvar}) {
    for (auto& x : *v) x = 0.5 * rng.normal();
  }
  return p;
}

TEST(Rsvd, GradientMatchesFiniteDifferences) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = testing::random_dataset(rng, 4, 5, 5, 0.6);
    const bool normalize = trial % 2 == 0;
    auto p = random_rsvd(d, 2, normalize, rng);
    const auto g = rsvd_gradient(p, d, 0.05);
    const double h = 1e-5;
    double worst = 0;
    auto check = [&](std::vector<double>& v, const std::vector<double>& gv) {
      for (std::size_t k = 0; k < v.size(); ++k) {
        const double x = v[k];
        v[k] = x + h;
        const double up = rsvd_objective(p, d, 0.05);
        v[k] = x - h;
        const double down = rsvd_objective(p, d, 0.05);
        v[k] = x;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - gv[k]) / std::max({1.0, std::abs(fd), std::abs(gv[k])}));
      }
    };
    check(p.item_bias, g.item_bias);
    check(p.user_bias, g.user_bias);
    check(p.item_factors, g.item_factors);
    check(p.user_factors, g.user_factors);
    check(p.user_logvar, g.user_logvar);
    check(p.item_logvar, g.item_logvar);
    EXPECT_LT(worst, 1e-4);
  }
}

TEST(Rsvd, PredictExamples) {
  const auto d = testing::make_dataset({{1, 1, 2, 0}, {1, 2, 4, 0}, {2, 1, 5, 0}});
  auto p = make_rsvd_params(d, 2, 0.1, false);
  EXPECT_EQ(p.mu(0, 0), 0.0);
  EXPECT_EQ(rsvd_predict(p, 0, 0).variance, 1.0);
  EXPECT_EQ(rsvd_predict(p, 0, 0).mean, 1.0);  // 0 clamped to the rating range
  p.item_bias = {0.5, 1.0};
  p.user_bias = {2.0, -1.0};
  p.item_factors = {1, 2, 3, 4};
  p.user_factors = {0.5, -0.5, 1, 1};
  EXPECT_DOUBLE_EQ(p.mu(0, 1), 1.0 + 2.0 + 3 * 0.5 - 4 * 0.5);
  EXPECT_DOUBLE_EQ(p.mu(1, 0), 0.5 - 1.0 + 1 + 2);
  EXPECT_DOUBLE_EQ(p.mu(-1, 1), 1.0);  // cold user: item bias only
  p.user_logvar = {std::log(2.0), 0};
  p.item_logvar = {0, std::log(1.5)};
  EXPECT_NEAR(rsvd_predict(p, 0, 1).variance, 3.0, 1e-12);
  const auto pr = rsvd_predict(p, 0, 1);
  double z = 0;
  for (int k = 1; k <= 5; ++k) z += std::exp(-0.5 * (k - 2.5) * (k - 2.5) / 3.0);
  EXPECT_NEAR(pr.loglik(2), -0.5 * 0.25 / 3.0 - std::log(z), 1e-12);
  EXPECT_THROW(pr.loglik(6), RangeError);
}

TEST(Rsvd, NoFactorsIsBiasModel) {
  Rng rng(3);
  const auto d = testing::random_dataset(rng, 10, 8, 5, 0.6);
  RsvdConfig cfg;
  cfg.F = 0;
  cfg.max_epochs = 20;
  const auto r = rsvd_train(d, d, cfg);
  for (int u = 0; u < d.num_users(); ++u) {
    for (int i = 0; i < d.num_items(); ++i) {
      EXPECT_DOUBLE_EQ(r.params.mu(u, i), r.params.item_bias[i] + r.params.user_bias[u]);
    }
  }
}

TEST(Rsvd, RankOneNoiseFree) {
  // r_ui = x_u * y_i with x, y in {1, 2}: exact rank 1 on the rating scale.
  std::vector<RatingTriple> t;
  for (int u = 0; u < 12; ++u) {
    for (int i = 0; i < 10; ++i) t.push_back({u, i, (1 + u % 2) * (1 + (i * 7) % 3 % 2), 0});
  }
  const RatingDataset d(t, 5);
  RsvdConfig cfg;
  cfg.F = 1;
  cfg.lambda = 1e-4;
  cfg.normalize = false;
  cfg.eta = 0.05;
  cfg.max_epochs = 3000;
  cfg.patience = 50;
  cfg.init_scale = 0.5;
  const auto r = rsvd_train(d, d, cfg);
  EXPECT_LT(rsvd_rmse(r.params, d), 0.05);
}

TEST(Rsvd, TrainingImprovesOnZeroModelAndIsDeterministic) {
  auto planted = testing::planted_item_graph(3, 30, 20, 5, 0.7, 0.6, 20);
  const auto split = chronological_split(planted.data, 2, 2);
  RsvdConfig cfg;
  cfg.F = 3;
  cfg.max_epochs = 30;
  const auto a = rsvd_train(split.train, split.validation, cfg);
  const auto b = rsvd_train(split.train, split.validation, cfg);
  EXPECT_EQ(a.params, b.params);
  const auto zero = make_rsvd_params(split.train, 3, cfg.lambda);
  EXPECT_LT(rsvd_rmse(a.params, split.validation), rsvd_rmse(zero, split.validation) + 1e-12);
  EXPECT_FALSE(a.log.empty());
  const auto g = rsvd_train_grid(split.train, split.validation, cfg, kRsvdLambdaGrid);
  EXPECT_LE(rsvd_rmse(g.params, split.validation), rsvd_rmse(a.params, split.validation) + 1e-12);
}

TEST(Rsvd, DivergenceAborts) {
  Rng rng(3);
  const auto d = testing::random_dataset(rng, 10, 8, 5, 0.6);
  RsvdConfig cfg;
  cfg.F = 5;
  cfg.eta = 50;
  cfg.init_scale = 5;
  cfg.normalize = false;
  EXPECT_THROW(rsvd_train(d, d, cfg), TrainingAbort);
}

}  // namespace
}  // namespace smrf
