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

#ifndef SMRF_CANDIDATES_HPP_
#define SMRF_CANDIDATES_HPP_

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "smrf/dataset.hpp"

namespace smrf {

// Neighbourhood cap. An item may pair only with the `m` most popular items
// (training rating count, ties to the lower id); a pair is admitted when at
// least one endpoint is among them. Users likewise with `n`.
struct CandidatePairs {
  bool items_unlimited = true;
  bool users_unlimited = true;
  std::vector<char> item_hub;
  std::vector<char> user_hub;

  bool allows_items(int i, int j) const {
    return i != j && (items_unlimited || item_hub[i] || item_hub[j]);
  }
  bool allows_users(int u, int v) const {
    return u != v && (users_unlimited || user_hub[u] || user_hub[v]);
  }
};

namespace detail {

inline std::vector<char> top_popular(const std::vector<std::size_t>& counts, int cap) {
  std::vector<int> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return counts[a] > counts[b]; });
  std::vector<char> hub(counts.size(), 0);
  for (int k = 0; k < cap && k < static_cast<int>(order.size()); ++k) hub[order[k]] = 1;
  return hub;
}

}  // namespace detail

// Caps <= 0 mean unlimited.
inline CandidatePairs candidate_pairs(const RatingDataset& train, int item_cap, int user_cap) {
  CandidatePairs c;
  if (item_cap > 0 && item_cap < train.num_items()) {
    std::vector<std::size_t> counts(train.num_items());
    for (int i = 0; i < train.num_items(); ++i) counts[i] = train.item_column(i).size();
    c.items_unlimited = false;
    c.item_hub = detail::top_popular(counts, item_cap);
  }
  if (user_cap > 0 && user_cap < train.num_users()) {
    std::vector<std::size_t> counts(train.num_users());
    for (int u = 0; u < train.num_users(); ++u) counts[u] = train.user_row(u).size();
    c.users_unlimited = false;
    c.user_hub = detail::top_popular(counts, user_cap);
  }
  return c;
}

// Admitted item pairs (i < j) co-rated by at least one user.
inline std::vector<std::pair<int, int>> enumerate_item_pairs(const RatingDataset& train, const CandidatePairs& c) {
  std::set<std::pair<int, int>> pairs;
  for (int u = 0; u < train.num_users(); ++u) {
    const auto row = train.user_row(u);
    for (std::size_t a = 0; a < row.size(); ++a) {
      for (std::size_t b = a + 1; b < row.size(); ++b) {
        const int i = std::min(row[a].id, row[b].id), j = std::max(row[a].id, row[b].id);
        if (c.allows_items(i, j)) pairs.emplace(i, j);
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

inline std::vector<std::pair<int, int>> enumerate_user_pairs(const RatingDataset& train, const CandidatePairs& c) {
  std::set<std::pair<int, int>> pairs;
  for (int i = 0; i < train.num_items(); ++i) {
    const auto col = train.item_column(i);
    for (std::size_t a = 0; a < col.size(); ++a) {
      for (std::size_t b = a + 1; b < col.size(); ++b) {
        const int u = std::min(col[a].id, col[b].id), v = std::max(col[a].id, col[b].id);
        if (c.allows_users(u, v)) pairs.emplace(u, v);
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

}  // namespace smrf

#endif  // SMRF_CANDIDATES_HPP_
