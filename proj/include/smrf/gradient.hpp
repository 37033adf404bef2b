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

#ifndef SMRF_GRADIENT_HPP_
#define SMRF_GRADIENT_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "smrf/candidates.hpp"
#include "smrf/model.hpp"

namespace smrf {

// Loss gradient laid out like ModelParams: dense biases, sparse pairs.
struct GradientAccumulator {
  std::vector<double> item_bias;
  std::vector<double> user_bias;
  SymmetricPairMap item_pair;
  SymmetricPairMap user_pair;

  GradientAccumulator() = default;
  explicit GradientAccumulator(const ModelParams& p) { reset(p); }

  void reset(const ModelParams& p) {
    item_bias.assign(p.item_bias.size(), 0.0);
    user_bias.assign(p.user_bias.size(), 0.0);
    item_pair.clear();
    user_pair.clear();
  }

  void clear() {
    std::fill(item_bias.begin(), item_bias.end(), 0.0);
    std::fill(user_bias.begin(), user_bias.end(), 0.0);
    item_pair.clear();
    user_pair.clear();
  }

  void merge(const GradientAccumulator& o) {
    for (std::size_t k = 0; k < item_bias.size(); ++k) item_bias[k] += o.item_bias[k];
    for (std::size_t k = 0; k < user_bias.size(); ++k) user_bias[k] += o.user_bias[k];
    for (const auto& [key, v] : o.item_pair) {
      auto [a, b] = SymmetricPairMap::unpack(key);
      item_pair.add(a, b, v);
    }
    for (const auto& [key, v] : o.user_pair) {
      auto [a, b] = SymmetricPairMap::unpack(key);
      user_pair.add(a, b, v);
    }
  }
};

// Which parameter groups a gradient computation fills in.
struct FeatureMask {
  bool biases = true;
  bool item_pairs = true;
  bool user_pairs = true;
};

// Adds sum_k weights[k-1] * f(k) to `acc`, where f(k) = -dE(k)/dtheta is the
// feature vector of cell (u, i) at value k with the given neighbours.
template <class ValueOf = DataValue>
void accumulate_cell_features(const ModelParams& p, const CandidatePairs& cand, int u, int i,
                              std::span<const Entry> row, std::span<const Entry> col, std::span<const double> weights,
                              const FeatureMask& mask, GradientAccumulator& acc, ValueOf value_of = {}) {
  const int K = p.K;
  const bool ku = p.known_user(u), ki = p.known_item(i);
  const bool item_on = mask.item_pairs && ki && p.item_pairs_on();
  const bool user_on = mask.user_pairs && ku && p.user_pairs_on();
  switch (p.scheme) {
    case Parameterization::LinearByLinear: {
      if (mask.biases) {
        for (int k = 1; k <= K; ++k) {
          if (ki) acc.item_bias[static_cast<std::size_t>(i) * K + k - 1] += weights[k - 1];
          if (ku) acc.user_bias[static_cast<std::size_t>(u) * K + k - 1] += weights[k - 1];
        }
      }
      if (item_on) {
        double coef = 0.0;
        for (int k = 1; k <= K; ++k) coef += weights[k - 1] * (k - p.item_means[i]);
        for (const auto& e : row) {
          if (e.id == i || !cand.allows_items(i, e.id)) continue;
          acc.item_pair.add(i, e.id, coef * (value_of(e) - p.item_means[e.id]));
        }
      }
      if (user_on) {
        double coef = 0.0;
        for (int k = 1; k <= K; ++k) coef += weights[k - 1] * (k - p.user_means[u]);
        for (const auto& e : col) {
          if (e.id == u || !cand.allows_users(u, e.id)) continue;
          acc.user_pair.add(u, e.id, coef * (value_of(e) - p.user_means[e.id]));
        }
      }
      break;
    }
    case Parameterization::Gaussian: {
      double mean_x = 0.0;
      for (int k = 1; k <= K; ++k) mean_x += weights[k - 1] * p.slot_value(u, i, k);
      if (mask.biases) {
        const double bias = (ki ? p.item_bias_row(i)[0] : 0.0) + (ku ? p.user_bias_row(u)[0] : 0.0);
        double total = 0.0;
        for (int k = 1; k <= K; ++k) total += weights[k - 1];
        const double g = mean_x - bias * total;
        if (ki) acc.item_bias[i] += g;
        if (ku) acc.user_bias[u] += g;
      }
      if (item_on) {
        for (const auto& e : row) {
          if (e.id == i || !cand.allows_items(i, e.id)) continue;
          acc.item_pair.add(i, e.id, mean_x * p.slot_value(u, e.id, value_of(e)));
        }
      }
      if (user_on) {
        for (const auto& e : col) {
          if (e.id == u || !cand.allows_users(u, e.id)) continue;
          acc.user_pair.add(u, e.id, mean_x * p.slot_value(e.id, i, value_of(e)));
        }
      }
      break;
    }
    case Parameterization::Smoothness: {
      // dist[r - 1] = -sum_k weights[k-1] |k - r|
      std::vector<double> dist(K, 0.0);
      for (int r = 1; r <= K; ++r) {
        double s = 0.0;
        for (int k = 1; k <= K; ++k) s += weights[k - 1] * std::abs(k - r);
        dist[r - 1] = -s;
      }
      if (mask.biases) {
        for (int k2 = 1; k2 <= K; ++k2) {
          if (ki) acc.item_bias[static_cast<std::size_t>(i) * K + k2 - 1] += dist[k2 - 1];
          if (ku) acc.user_bias[static_cast<std::size_t>(u) * K + k2 - 1] += dist[k2 - 1];
        }
      }
      if (item_on) {
        for (const auto& e : row) {
          if (e.id == i || !cand.allows_items(i, e.id)) continue;
          acc.item_pair.add(i, e.id, dist[value_of(e) - 1]);
        }
      }
      if (user_on) {
        for (const auto& e : col) {
          if (e.id == u || !cand.allows_users(u, e.id)) continue;
          acc.user_pair.add(u, e.id, dist[value_of(e) - 1]);
        }
      }
      break;
    }
  }
}

// Negative log pseudo-likelihood of target cells, each conditioned on its
// neighbours in `context`. For training cells pass the training set as both.
inline double pl_loss(const ModelParams& p, const RatingDataset& context, const RatingDataset& targets,
                      std::span<const std::int32_t> cells) {
  std::vector<double> e(p.K), q(p.K);
  double loss = 0.0;
  for (auto c : cells) {
    const int u = targets.cell_user(c), i = targets.cell_item(c);
    local_energies(p, u, i, context.user_row(u), context.item_column(i), e);
    energies_to_probs(e, q);
    loss -= std::log(q[targets.cell_rating(c) - 1]);
  }
  return loss;
}

inline double pl_loss(const ModelParams& p, const RatingDataset& data, std::span<const std::int32_t> cells) {
  return pl_loss(p, data, data, cells);
}

inline std::vector<std::int32_t> all_cells(const RatingDataset& d) {
  std::vector<std::int32_t> c(d.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = static_cast<std::int32_t>(k);
  return c;
}

inline std::vector<std::int32_t> user_block(const RatingDataset& d, int u) {
  std::vector<std::int32_t> c;
  for (const auto& e : d.user_row(u)) c.push_back(e.cell);
  return c;
}

inline std::vector<std::int32_t> item_block(const RatingDataset& d, int i) {
  std::vector<std::int32_t> c;
  for (const auto& e : d.item_column(i)) c.push_back(e.cell);
  return c;
}

// Exact gradient of pl_loss over `cells`, accumulated into `acc`; returns the
// loss. Pairwise gradients are confined to candidate pairs.
inline double pl_gradient(const ModelParams& p, const RatingDataset& data, std::span<const std::int32_t> cells,
                          const CandidatePairs& cand, const FeatureMask& mask, GradientAccumulator& acc) {
  std::vector<double> e(p.K), w(p.K);
  double loss = 0.0;
  for (auto c : cells) {
    const int u = data.cell_user(c), i = data.cell_item(c), r = data.cell_rating(c);
    const auto row = data.user_row(u);
    const auto col = data.item_column(i);
    local_energies(p, u, i, row, col, e);
    energies_to_probs(e, w);
    loss -= std::log(w[r - 1]);
    w[r - 1] -= 1.0;  // E_P[f] - f(observed)
    accumulate_cell_features(p, cand, u, i, row, col, w, mask, acc);
  }
  return loss;
}

// Adds weight * f(values) for the energy of a block of cells: the block's
// singletons plus every pair term touching the block, each counted once.
// Neighbours outside the block read their entry of `values` too (clamped to
// data by the callers).
inline void accumulate_block_features(const ModelParams& p, const RatingDataset& data, const CandidatePairs& cand,
                                      std::span<const std::int32_t> cells, std::span<const char> in_block,
                                      std::span<const int> values, double weight, const FeatureMask& mask,
                                      GradientAccumulator& acc) {
  const int K = p.K;
  std::vector<double> onehot(K, 0.0);
  const FeatureMask singles{mask.biases, false, false};
  for (auto c : cells) {
    const int u = data.cell_user(c), i = data.cell_item(c), x = values[c];
    std::fill(onehot.begin(), onehot.end(), 0.0);
    onehot[x - 1] = weight;
    accumulate_cell_features(p, cand, u, i, {}, {}, onehot, singles, acc);
    if (mask.item_pairs && p.item_pairs_on()) {
      for (const auto& e : data.user_row(u)) {
        if (e.cell == c || (in_block[e.cell] && e.cell < c) || !cand.allows_items(i, e.id)) continue;
        const int y = values[e.cell];
        double f = 0.0;
        switch (p.scheme) {
          case Parameterization::LinearByLinear: f = (x - p.item_means[i]) * (y - p.item_means[e.id]); break;
          case Parameterization::Gaussian: f = p.slot_value(u, i, x) * p.slot_value(u, e.id, y); break;
          case Parameterization::Smoothness: f = -std::abs(x - y); break;
        }
        acc.item_pair.add(i, e.id, weight * f);
      }
    }
    if (mask.user_pairs && p.user_pairs_on()) {
      for (const auto& e : data.item_column(i)) {
        if (e.cell == c || (in_block[e.cell] && e.cell < c) || !cand.allows_users(u, e.id)) continue;
        const int y = values[e.cell];
        double f = 0.0;
        switch (p.scheme) {
          case Parameterization::LinearByLinear: f = (x - p.user_means[u]) * (y - p.user_means[e.id]); break;
          case Parameterization::Gaussian: f = p.slot_value(u, i, x) * p.slot_value(e.id, i, y); break;
          case Parameterization::Smoothness: f = -std::abs(x - y); break;
        }
        acc.user_pair.add(u, e.id, weight * f);
      }
    }
  }
}

inline int sample_slot(std::span<const double> probs, Rng& rng) {
  const double x = rng.uniform();
  double cum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cum += probs[k];
    if (x < cum) return static_cast<int>(k) + 1;
  }
  // Round-off: fall back to the last slot with mass.
  for (std::size_t k = probs.size(); k-- > 0;) {
    if (probs[k] > 0.0) return static_cast<int>(k) + 1;
  }
  return 1;
}

// Runs `scans` systematic Gibbs scans over the block cells, resampling each
// from its local conditional given the current `values` (all cells; entries
// outside the block stay fixed).
inline void gibbs_sweep(const ModelParams& p, const RatingDataset& data, std::span<const std::int32_t> cells,
                        int scans, Rng& rng, std::span<int> values) {
  if (scans < 1) throw PreconditionError("Gibbs sampling needs at least one scan");
  std::vector<double> e(p.K), q(p.K);
  auto current = [values](const Entry& en) { return values[en.cell]; };
  for (int s = 0; s < scans; ++s) {
    for (auto c : cells) {
      const int u = data.cell_user(c), i = data.cell_item(c);
      local_energies(p, u, i, data.user_row(u), data.item_column(i), e, current);
      energies_to_probs(e, q);
      values[c] = sample_slot(q, rng);
    }
  }
}

// Chain started at the observed ratings; returns the block's values (in the
// order of `cells`) after `scans` scans, everything outside the block clamped
// to data.
inline std::vector<int> gibbs_scan(const ModelParams& p, const RatingDataset& data,
                                   std::span<const std::int32_t> cells, int scans, Rng& rng) {
  auto values = observed_values(data);
  gibbs_sweep(p, data, cells, scans, rng, values);
  std::vector<int> out;
  out.reserve(cells.size());
  for (auto c : cells) out.push_back(values[c]);
  return out;
}

// Contrastive-divergence estimate of the block loss gradient:
// f(sample) - f(data) with the sample from a `scans`-step chain started at
// the data. `scratch` must hold the observed values of every cell; it is
// restored before returning.
inline void cd_gradient(const ModelParams& p, const RatingDataset& data, std::span<const std::int32_t> cells,
                        int scans, Rng& rng, const CandidatePairs& cand, const FeatureMask& mask,
                        GradientAccumulator& acc, std::span<int> scratch, std::span<char> in_block) {
  for (auto c : cells) in_block[c] = 1;
  accumulate_block_features(p, data, cand, cells, in_block, scratch, -1.0, mask, acc);
  gibbs_sweep(p, data, cells, scans, rng, scratch);
  accumulate_block_features(p, data, cand, cells, in_block, scratch, 1.0, mask, acc);
  for (auto c : cells) {
    scratch[c] = data.cell_rating(c);
    in_block[c] = 0;
  }
}

inline void cd_gradient(const ModelParams& p, const RatingDataset& data, std::span<const std::int32_t> cells,
                        int scans, Rng& rng, const CandidatePairs& cand, const FeatureMask& mask,
                        GradientAccumulator& acc) {
  auto values = observed_values(data);
  std::vector<char> in_block(data.size(), 0);
  cd_gradient(p, data, cells, scans, rng, cand, mask, acc, values, in_block);
}

}  // namespace smrf

#endif  // SMRF_GRADIENT_HPP_
