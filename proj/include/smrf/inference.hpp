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

#ifndef SMRF_INFERENCE_HPP_
#define SMRF_INFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "smrf/model.hpp"

namespace smrf {

struct Prediction {
  int map_rating = 1;
  double expected_rating = 0.0;
  double confidence = 0.0;
  PredictiveDistribution distribution;
};

// MAP ties go to the smallest rating.
inline Prediction summarize(PredictiveDistribution d) {
  Prediction p;
  int best = 1;
  double expected = 0.0;
  for (int k = 1; k <= d.K(); ++k) {
    if (d[k] > d[best]) best = k;
    expected += k * d[k];
  }
  p.map_rating = best;
  p.expected_rating = std::clamp(expected, 1.0, static_cast<double>(d.K()));
  p.confidence = d[best];
  p.distribution = std::move(d);
  return p;
}

// Prediction for cell (u, i) given the observed ratings in `data`. Either id
// may be -1 (cold start).
inline Prediction predict(const ModelParams& params, const RatingDataset& data, int u, int i) {
  return summarize(local_conditional(params, data, u, i));
}

inline double score_loglik(const ModelParams& params, const RatingDataset& data, int u, int i, int r) {
  if (r < 1 || r > params.K) throw RangeError("rating outside 1..K");
  return std::log(local_conditional(params, data, u, i)[r]);
}

inline double entropy(const PredictiveDistribution& d) {
  double h = 0.0;
  for (double q : d.probs) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

inline double novelty_entropy(const ModelParams& params, const RatingDataset& data, int u, int i) {
  return entropy(local_conditional(params, data, u, i));
}

struct RankedItem {
  int item;
  double score;
};

enum class RankCriterion { ExpectedEnergy, FreeEnergy };

namespace detail {

inline std::vector<RankedItem> rank(const ModelParams& params, const RatingDataset& data, int u,
                                    std::span<const int> candidates, RankCriterion criterion) {
  std::vector<RankedItem> out;
  out.reserve(candidates.size());
  std::vector<double> e(params.K), q(params.K);
  for (int i : candidates) {
    local_energies(params, u, i, data.user_row(u), data.item_column(i), e);
    double s = 0.0;
    if (criterion == RankCriterion::ExpectedEnergy) {
      energies_to_probs(e, q);
      for (int k = 0; k < params.K; ++k) s += q[k] * -e[k];
    } else {
      for (int k = 0; k < params.K; ++k) s += std::exp(-e[k]);
    }
    out.push_back({i, s});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
    return a.score != b.score ? a.score > b.score : a.item < b.item;
  });
  return out;
}

}  // namespace detail

// Expected negative local energy, sum_k P(k) * (-E(k)); higher ranks first.
inline std::vector<RankedItem> rank_energy(const ModelParams& params, const RatingDataset& data, int u,
                                           std::span<const int> candidates) {
  return detail::rank(params, data, u, candidates, RankCriterion::ExpectedEnergy);
}

// Local partition sum, sum_k exp(-E(k)); higher ranks first.
inline std::vector<RankedItem> rank_free_energy(const ModelParams& params, const RatingDataset& data, int u,
                                                std::span<const int> candidates) {
  return detail::rank(params, data, u, candidates, RankCriterion::FreeEnergy);
}

}  // namespace smrf

#endif  // SMRF_INFERENCE_HPP_
