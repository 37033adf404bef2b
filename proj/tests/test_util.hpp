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

#ifndef SMRF_TESTS_TEST_UTIL_HPP_
#define SMRF_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "smrf/smrf.hpp"

namespace smrf::testing {

inline RatingDataset make_dataset(std::vector<RatingTriple> t, int K = 5) { return RatingDataset(std::move(t), K); }

// Random dataset: every (user, item) cell is present with probability
// `density`; at least one cell overall.
inline RatingDataset random_dataset(Rng& rng, int users, int items, int K, double density) {
  std::vector<RatingTriple> t;
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      if (rng.uniform() < density) {
        t.push_back({100 + u, 500 + i, static_cast<int>(rng.below(K)) + 1, static_cast<std::int64_t>(rng.below(1000))});
      }
    }
  }
  if (t.empty()) t.push_back({100, 500, 1, 0});
  return RatingDataset(std::move(t), K);
}

// Random dataset with exactly `cells` cells (<= users * items).
inline RatingDataset random_cells(Rng& rng, int users, int items, int K, int cells) {
  std::vector<int> all(users * items);
  std::iota(all.begin(), all.end(), 0);
  rng.shuffle(all);
  std::vector<RatingTriple> t;
  for (int k = 0; k < cells; ++k) {
    const int u = all[k] / items, i = all[k] % items;
    t.push_back({100 + u, 500 + i, static_cast<int>(rng.below(K)) + 1, static_cast<std::int64_t>(k)});
  }
  return RatingDataset(std::move(t), K);
}

// Random biases and a random weight on every pair of the id space.
inline void randomize(ModelParams& p, Rng& rng, double bias_scale = 0.5, double pair_scale = 0.5,
                      double pair_prob = 1.0) {
  for (auto& b : p.item_bias) b = bias_scale * rng.normal();
  for (auto& b : p.user_bias) b = bias_scale * rng.normal();
  for (int i = 0; i < p.num_items(); ++i) {
    for (int j = i + 1; j < p.num_items(); ++j) {
      if (rng.uniform() < pair_prob) p.item_pair.set(i, j, pair_scale * rng.normal());
    }
  }
  for (int u = 0; u < p.num_users(); ++u) {
    for (int v = u + 1; v < p.num_users(); ++v) {
      if (rng.uniform() < pair_prob) p.user_pair.set(u, v, pair_scale * rng.normal());
    }
  }
}

inline ModelParams random_params(const RatingDataset& d, Parameterization scheme, ModelScope scope, Rng& rng,
                                 double bias_scale = 0.5, double pair_scale = 0.5) {
  auto p = make_params(d, scheme, scope);
  randomize(p, rng, bias_scale, pair_scale);
  return p;
}

inline constexpr Parameterization kSchemes[] = {Parameterization::LinearByLinear, Parameterization::Gaussian,
                                                Parameterization::Smoothness};
inline constexpr ModelScope kScopes[] = {ModelScope::UserOnly, ModelScope::ItemOnly, ModelScope::Joint};

// Central-difference check of `grad` against `loss` over every bias and every
// pair of the id space. Returns the largest relative error
// |g - fd| / max(1, |g|, |fd|).
inline double max_gradient_error(ModelParams p, const GradientAccumulator& grad,
                                 const std::function<double(const ModelParams&)>& loss, double h = 1e-5) {
  double worst = 0.0;
  auto check = [&](double analytic, auto&& perturb) {
    perturb(+h);
    const double up = loss(p);
    perturb(-2 * h);
    const double down = loss(p);
    perturb(+h);
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)}));
  };
  for (std::size_t k = 0; k < p.item_bias.size(); ++k) check(grad.item_bias[k], [&](double d) { p.item_bias[k] += d; });
  for (std::size_t k = 0; k < p.user_bias.size(); ++k) check(grad.user_bias[k], [&](double d) { p.user_bias[k] += d; });
  auto pairs = [&](SymmetricPairMap& m, const SymmetricPairMap& g, int n) {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const double base = m.get(a, b);
        check(g.get(a, b), [&](double d) { m.set(a, b, m.get(a, b) + d); });
        m.set(a, b, base);
      }
    }
  };
  pairs(p.item_pair, grad.item_pair, p.num_items());
  pairs(p.user_pair, grad.user_pair, p.num_users());
  return worst;
}

// Graph with clusters of `cluster` consecutive items fully connected by
// `strength`; ratings drawn by long Gibbs runs of a user-scope smoothness
// model. Returns the dataset and the planted pairs (dense item ids).
struct PlantedData {
  RatingDataset data;
  std::vector<std::pair<int, int>> planted;
};

inline PlantedData planted_item_graph(std::uint64_t seed, int users, int items, int cluster, double density,
                                      double strength, int scans = 100) {
  Rng rng(seed);
  std::vector<RatingTriple> t;
  const int K = 5;
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      if (rng.uniform() < density) {
        t.push_back({u, i, static_cast<int>(rng.below(K)) + 1, static_cast<std::int64_t>(rng.below(1u << 20))});
      }
    }
  }
  RatingDataset start(t, K);
  auto truth = make_params(start, Parameterization::Smoothness, ModelScope::UserOnly);
  for (int i = 0; i < truth.num_items(); ++i) {
    // Mild item preferences so marginals are not uniform.
    const int pref = static_cast<int>(rng.below(K));
    truth.item_bias_row(i)[pref] = 0.3;
  }
  PlantedData out;
  for (int a = 0; a < truth.num_items(); ++a) {
    for (int b = a + 1; b < truth.num_items(); ++b) {
      if (a / cluster == b / cluster) {
        truth.item_pair.set(a, b, strength);
        out.planted.emplace_back(a, b);
      }
    }
  }
  auto values = observed_values(start);
  const auto cells = all_cells(start);
  gibbs_sweep(truth, start, cells, scans, rng, values);
  for (std::size_t c = 0; c < t.size(); ++c) t[c].rating = values[c];
  out.data = RatingDataset(std::move(t), K);
  return out;
}

// Area under the ROC curve of |weight| separating planted pairs from all
// other pairs of n nodes; ties count one half.
inline double planted_auc(const SymmetricPairMap& weights, int n, const std::vector<std::pair<int, int>>& planted) {
  std::vector<char> is_planted(static_cast<std::size_t>(n) * n, 0);
  for (auto [a, b] : planted) is_planted[static_cast<std::size_t>(a) * n + b] = 1;
  std::vector<std::pair<double, char>> scored;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) scored.emplace_back(std::abs(weights.get(a, b)), is_planted[static_cast<std::size_t>(a) * n + b]);
  }
  std::sort(scored.begin(), scored.end());
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t k = 0; k < scored.size();) {
    std::size_t e = k;
    while (e < scored.size() && scored[e].first == scored[k].first) ++e;
    const double mid = (k + 1 + e) / 2.0;  // average 1-based rank of the tie group
    for (std::size_t m = k; m < e; ++m) {
      if (scored[m].second) {
        rank_sum += mid;
        ++pos;
      } else {
        ++neg;
      }
    }
    k = e;
  }
  if (pos == 0 || neg == 0) return 0.5;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

}  // namespace smrf::testing

#endif  // SMRF_TESTS_TEST_UTIL_HPP_
