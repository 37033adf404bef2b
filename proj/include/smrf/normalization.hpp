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

#ifndef SMRF_NORMALIZATION_HPP_
#define SMRF_NORMALIZATION_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "smrf/dataset.hpp"

namespace smrf {

inline constexpr double kDeviationFloor = 1e-6;

struct GroupStats {
  double mean = 0.0;
  double dev = 1.0;  // smoothed deviation
  int count = 0;

  friend bool operator==(const GroupStats&, const GroupStats&) = default;
};

// Two-step (per user, then per item) rating standardization. Vectors are
// indexed by the dense ids of the training id space.
struct NormalizationStats {
  double global_mean = 0.0;
  double global_dev = 1.0;
  double smoothing = 5.0;
  std::vector<GroupStats> per_user;
  std::vector<GroupStats> per_item;  // statistics of the step-1 values

  const GroupStats* user(int u) const {
    return u >= 0 && u < static_cast<int>(per_user.size()) ? &per_user[u] : nullptr;
  }
  const GroupStats* item(int i) const {
    return i >= 0 && i < static_cast<int>(per_item.size()) ? &per_item[i] : nullptr;
  }

  // Unknown users fall back to the global mean/deviation; unknown items skip
  // the second step.
  double user_mean(int u) const {
    const auto* s = user(u);
    return s ? s->mean : global_mean;
  }
  double user_dev(int u) const {
    const auto* s = user(u);
    return s ? s->dev : global_dev;
  }
  double item_mean(int i) const {
    const auto* s = item(i);
    return s ? s->mean : 0.0;
  }
  double item_dev(int i) const {
    const auto* s = item(i);
    return s ? s->dev : 1.0;
  }

  double normalize(double rating, int u, int i) const {
    const double step1 = (rating - user_mean(u)) / user_dev(u);
    return (step1 - item_mean(i)) / item_dev(i);
  }

  double denormalize(double value, int u, int i) const {
    return user_mean(u) + user_dev(u) * (item_mean(i) + item_dev(i) * value);
  }

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

inline NormalizationStats fit_normalization(const RatingDataset& train, double smoothing = 5.0) {
  if (train.empty()) throw PreconditionError("cannot fit normalization on an empty training set");
  if (!(smoothing > 0.0)) throw PreconditionError("smoothing must be positive");
  NormalizationStats st;
  st.smoothing = smoothing;
  const auto n = static_cast<double>(train.size());
  double sum = 0.0;
  for (const auto& t : train.triples()) sum += t.rating;
  st.global_mean = sum / n;
  double ss = 0.0;
  for (const auto& t : train.triples()) ss += (t.rating - st.global_mean) * (t.rating - st.global_mean);
  st.global_dev = std::max(std::sqrt(ss / n), kDeviationFloor);
  const double s2 = st.global_dev * st.global_dev;

  st.per_user.resize(train.num_users());
  for (int u = 0; u < train.num_users(); ++u) {
    auto& g = st.per_user[u];
    const auto row = train.user_row(u);
    g.count = static_cast<int>(row.size());
    if (row.empty()) {
      g.mean = st.global_mean;
      g.dev = st.global_dev;
      continue;
    }
    double rs = 0.0;
    for (const auto& e : row) rs += e.rating;
    g.mean = rs / g.count;
    double var = 0.0;
    for (const auto& e : row) var += (e.rating - g.mean) * (e.rating - g.mean);
    var /= g.count;
    g.dev = std::max(std::sqrt((smoothing * s2 + g.count * var) / (smoothing + g.count)), kDeviationFloor);
  }

  st.per_item.resize(train.num_items());
  for (int i = 0; i < train.num_items(); ++i) {
    auto& g = st.per_item[i];
    const auto col = train.item_column(i);
    g.count = static_cast<int>(col.size());
    if (col.empty()) {
      g.mean = 0.0;
      g.dev = 1.0;
      continue;
    }
    std::vector<double> step1;
    step1.reserve(col.size());
    for (const auto& e : col) step1.push_back((e.rating - st.per_user[e.id].mean) / st.per_user[e.id].dev);
    double ms = 0.0;
    for (double v : step1) ms += v;
    g.mean = ms / g.count;
    double dev2 = 0.0;
    for (double v : step1) dev2 += (v - g.mean) * (v - g.mean);
    // Prior variance 1 for the step-1 values.
    g.dev = std::max(std::sqrt((smoothing + dev2) / (smoothing + g.count)), kDeviationFloor);
  }
  return st;
}

}  // namespace smrf

#endif  // SMRF_NORMALIZATION_HPP_
