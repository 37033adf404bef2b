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

#ifndef SMRF_ENUMERATE_HPP_
#define SMRF_ENUMERATE_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "smrf/gradient.hpp"
#include "smrf/model.hpp"

namespace smrf {

inline constexpr std::size_t kMaxEnumeratedCells = 10;

// Exact distribution over all K^n assignments of a set of cells, every other
// cell clamped to its observed rating. Built from joint_energy only, so it
// serves as an oracle for the local (Markov blanket) computations.
struct EnumeratedDistribution {
  int K = 0;
  std::vector<std::int32_t> cells;
  std::vector<double> probs;  // mixed radix, cells[0] varies fastest
  double log_z = 0.0;

  std::size_t num_states() const { return probs.size(); }

  // Assignment of the enumerated cells for a state index (values 1..K).
  std::vector<int> assignment(std::size_t state) const {
    std::vector<int> a(cells.size());
    for (std::size_t pos = 0; pos < cells.size(); ++pos) {
      a[pos] = static_cast<int>(state % K) + 1;
      state /= K;
    }
    return a;
  }

  std::size_t state_of(std::span<const int> a) const {
    std::size_t s = 0;
    for (std::size_t pos = cells.size(); pos-- > 0;) s = s * K + (a[pos] - 1);
    return s;
  }

  std::vector<double> marginal(std::size_t pos) const {
    std::vector<double> m(K, 0.0);
    for (std::size_t s = 0; s < probs.size(); ++s) m[assignment(s)[pos] - 1] += probs[s];
    return m;
  }

  // P(cell at `pos` | the other enumerated cells as in `a`).
  std::vector<double> conditional(std::size_t pos, std::span<const int> a) const {
    std::vector<int> b(a.begin(), a.end());
    std::vector<double> c(K);
    double z = 0.0;
    for (int k = 1; k <= K; ++k) {
      b[pos] = k;
      c[k - 1] = probs[state_of(b)];
      z += c[k - 1];
    }
    for (auto& v : c) v /= z;
    return c;
  }
};

inline EnumeratedDistribution enumerate_distribution(const ModelParams& p, const RatingDataset& data,
                                                     std::span<const std::int32_t> cells) {
  if (cells.size() > kMaxEnumeratedCells) {
    throw PreconditionError("refusing to enumerate " + std::to_string(cells.size()) + " cells (max " +
                            std::to_string(kMaxEnumeratedCells) + ")");
  }
  EnumeratedDistribution d;
  d.K = p.K;
  d.cells.assign(cells.begin(), cells.end());
  std::size_t n = 1;
  for (std::size_t k = 0; k < cells.size(); ++k) n *= static_cast<std::size_t>(p.K);
  auto values = observed_values(data);
  std::vector<double> neg_energy(n);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n; ++s) {
    const auto a = d.assignment(s);
    for (std::size_t pos = 0; pos < cells.size(); ++pos) values[cells[pos]] = a[pos];
    neg_energy[s] = -joint_energy(p, data, values);
    hi = std::max(hi, neg_energy[s]);
  }
  double z = 0.0;
  d.probs.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    d.probs[s] = std::exp(neg_energy[s] - hi);
    z += d.probs[s];
  }
  for (auto& q : d.probs) q /= z;
  d.log_z = hi + std::log(z);
  return d;
}

inline EnumeratedDistribution enumerate_distribution(const ModelParams& p, const RatingDataset& data) {
  const auto cells = all_cells(data);
  return enumerate_distribution(p, data, cells);
}

// Block gradient with the sampler replaced by the exact block conditional:
// E[f] - f(data), expectation over the enumerated block.
inline void exact_block_gradient(const ModelParams& p, const RatingDataset& data,
                                 std::span<const std::int32_t> cells, const CandidatePairs& cand,
                                 const FeatureMask& mask, GradientAccumulator& acc) {
  const auto dist = enumerate_distribution(p, data, cells);
  auto values = observed_values(data);
  std::vector<char> in_block(data.size(), 0);
  for (auto c : cells) in_block[c] = 1;
  accumulate_block_features(p, data, cand, cells, in_block, values, -1.0, mask, acc);
  for (std::size_t s = 0; s < dist.num_states(); ++s) {
    const auto a = dist.assignment(s);
    for (std::size_t pos = 0; pos < cells.size(); ++pos) values[cells[pos]] = a[pos];
    accumulate_block_features(p, data, cand, cells, in_block, values, dist.probs[s], mask, acc);
  }
}

}  // namespace smrf

#endif  // SMRF_ENUMERATE_HPP_
