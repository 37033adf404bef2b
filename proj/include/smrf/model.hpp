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

#ifndef SMRF_MODEL_HPP_
#define SMRF_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "smrf/common.hpp"
#include "smrf/dataset.hpp"
#include "smrf/normalization.hpp"
#include "smrf/pair_map.hpp"

namespace smrf {

// Parameters of a rating MRF over a fixed id space.
//
// Biases are stored row-major with bias_width() values per user/item: K values
// (one per rating slot) for the linear-by-linear and smoothness schemes, a
// single value for the Gaussian scheme. Pairwise weights live in two sparse
// symmetric maps: item_pair (item-item, used by the per-user model) and
// user_pair (user-user, used by the per-item model).
struct ModelParams {
  Parameterization scheme = Parameterization::Smoothness;
  ModelScope scope = ModelScope::Joint;
  int K = 5;
  std::shared_ptr<const IdSpace> ids = std::make_shared<const IdSpace>();

  std::vector<double> item_bias;
  std::vector<double> user_bias;
  SymmetricPairMap item_pair;
  SymmetricPairMap user_pair;

  // Training means, frozen at creation; centre the linear-by-linear pairs.
  std::vector<double> item_means;
  std::vector<double> user_means;
  double global_mean = 0.0;

  // Required by the Gaussian scheme, which works on standardized ratings.
  std::optional<NormalizationStats> norm;

  int bias_width() const { return scheme == Parameterization::Gaussian ? 1 : K; }
  int num_users() const { return ids->num_users(); }
  int num_items() const { return ids->num_items(); }
  bool known_user(int u) const { return u >= 0 && u < num_users(); }
  bool known_item(int i) const { return i >= 0 && i < num_items(); }

  double* item_bias_row(int i) { return item_bias.data() + static_cast<std::size_t>(i) * bias_width(); }
  double* user_bias_row(int u) { return user_bias.data() + static_cast<std::size_t>(u) * bias_width(); }
  const double* item_bias_row(int i) const {
    return item_bias.data() + static_cast<std::size_t>(i) * bias_width();
  }
  const double* user_bias_row(int u) const {
    return user_bias.data() + static_cast<std::size_t>(u) * bias_width();
  }

  double item_mean(int i) const { return known_item(i) ? item_means[i] : global_mean; }
  double user_mean(int u) const { return known_user(u) ? user_means[u] : global_mean; }

  // Value a rating takes inside the potentials of cell (u, i): standardized
  // for the Gaussian scheme, the raw rating otherwise.
  double slot_value(int u, int i, double rating) const {
    return scheme == Parameterization::Gaussian ? norm->normalize(rating, u, i) : rating;
  }

  bool item_pairs_on() const { return item_pairs_active(scope); }
  bool user_pairs_on() const { return user_pairs_active(scope); }

  bool operator==(const ModelParams& o) const {
    return scheme == o.scheme && scope == o.scope && K == o.K && item_bias == o.item_bias &&
           user_bias == o.user_bias && item_pair == o.item_pair && user_pair == o.user_pair &&
           item_means == o.item_means && user_means == o.user_means && global_mean == o.global_mean &&
           norm == o.norm && std::ranges::equal(ids->user_ids(), o.ids->user_ids()) &&
           std::ranges::equal(ids->item_ids(), o.ids->item_ids());
  }
};

// All-zero parameters with means (and, for the Gaussian scheme, normalization)
// taken from the training data.
inline ModelParams make_params(const RatingDataset& train, Parameterization scheme, ModelScope scope,
                               double smoothing = 5.0) {
  ModelParams p;
  p.scheme = scheme;
  p.scope = scope;
  p.K = train.K();
  p.ids = train.id_space();
  p.item_bias.assign(static_cast<std::size_t>(p.num_items()) * p.bias_width(), 0.0);
  p.user_bias.assign(static_cast<std::size_t>(p.num_users()) * p.bias_width(), 0.0);
  double total = 0.0;
  for (const auto& t : train.triples()) total += t.rating;
  p.global_mean = train.empty() ? (p.K + 1) / 2.0 : total / static_cast<double>(train.size());
  p.item_means.assign(p.num_items(), p.global_mean);
  p.user_means.assign(p.num_users(), p.global_mean);
  for (int i = 0; i < p.num_items(); ++i) {
    const auto col = train.item_column(i);
    if (col.empty()) continue;
    double s = 0.0;
    for (const auto& e : col) s += e.rating;
    p.item_means[i] = s / static_cast<double>(col.size());
  }
  for (int u = 0; u < p.num_users(); ++u) {
    const auto row = train.user_row(u);
    if (row.empty()) continue;
    double s = 0.0;
    for (const auto& e : row) s += e.rating;
    p.user_means[u] = s / static_cast<double>(row.size());
  }
  if (scheme == Parameterization::Gaussian) p.norm = fit_normalization(train, smoothing);
  return p;
}

struct PredictiveDistribution {
  std::vector<double> probs;  // probs[k - 1] = P(rating = k)

  int K() const { return static_cast<int>(probs.size()); }
  double operator[](int k) const { return probs[k - 1]; }
};

namespace detail {

inline void check_slot(const ModelParams& p, int k) {
  if (k < 1 || k > p.K) throw RangeError("rating slot " + std::to_string(k) + " outside 1.." + std::to_string(p.K));
}

}  // namespace detail

// log phi_ui(k). Unknown users/items contribute nothing.
inline double log_singleton(const ModelParams& p, int u, int i, int k) {
  detail::check_slot(p, k);
  const bool ku = p.known_user(u), ki = p.known_item(i);
  switch (p.scheme) {
    case Parameterization::LinearByLinear:
      return (ki ? p.item_bias_row(i)[k - 1] : 0.0) + (ku ? p.user_bias_row(u)[k - 1] : 0.0);
    case Parameterization::Gaussian: {
      const double x = p.slot_value(u, i, k);
      const double b = (ki ? p.item_bias_row(i)[0] : 0.0) + (ku ? p.user_bias_row(u)[0] : 0.0);
      return -0.5 * (x - b) * (x - b);
    }
    case Parameterization::Smoothness: {
      double s = 0.0;
      for (int k2 = 1; k2 <= p.K; ++k2) {
        const double b = (ki ? p.item_bias_row(i)[k2 - 1] : 0.0) + (ku ? p.user_bias_row(u)[k2 - 1] : 0.0);
        s += b * std::abs(k - k2);
      }
      return -s;
    }
  }
  return 0.0;
}

// log psi_ij(k1, k2) for items i, j co-rated by user u (k1 on i, k2 on j).
inline double log_pairwise_item(const ModelParams& p, int u, int i, int j, int k1, int k2) {
  if (!p.item_pairs_on() || i == j) return 0.0;
  const double w = p.item_pair.get(i, j);
  if (w == 0.0) return 0.0;
  switch (p.scheme) {
    case Parameterization::LinearByLinear:
      return w * (k1 - p.item_mean(i)) * (k2 - p.item_mean(j));
    case Parameterization::Gaussian:
      return w * p.slot_value(u, i, k1) * p.slot_value(u, j, k2);
    case Parameterization::Smoothness:
      return -w * std::abs(k1 - k2);
  }
  return 0.0;
}

// log varphi_uv(k1, k2) for users u, v who both rated item i (k1 by u, k2 by v).
inline double log_pairwise_user(const ModelParams& p, int i, int u, int v, int k1, int k2) {
  if (!p.user_pairs_on() || u == v) return 0.0;
  const double w = p.user_pair.get(u, v);
  if (w == 0.0) return 0.0;
  switch (p.scheme) {
    case Parameterization::LinearByLinear:
      return w * (k1 - p.user_mean(u)) * (k2 - p.user_mean(v));
    case Parameterization::Gaussian:
      return w * p.slot_value(u, i, k1) * p.slot_value(v, i, k2);
    case Parameterization::Smoothness:
      return -w * std::abs(k1 - k2);
  }
  return 0.0;
}

struct DataValue {
  int operator()(const Entry& e) const { return e.rating; }
};

// Local energies E(k, neighbours) of cell (u, i) for k = 1..K, written to
// out[k - 1]. `row` is user u's row (item neighbours) and `col` item i's column
// (user neighbours); the cell itself is skipped if present. `value_of` maps a
// neighbour entry to its current rating, which lets samplers overlay values.
template <class ValueOf = DataValue>
void local_energies(const ModelParams& p, int u, int i, std::span<const Entry> row, std::span<const Entry> col,
                    std::span<double> out, ValueOf value_of = {}) {
  const int K = p.K;
  const bool ku = p.known_user(u), ki = p.known_item(i);
  const bool item_on = ki && p.item_pairs_on() && !p.item_pair.empty();
  const bool user_on = ku && p.user_pairs_on() && !p.user_pair.empty();
  switch (p.scheme) {
    case Parameterization::LinearByLinear: {
      double s_item = 0.0, s_user = 0.0;
      if (item_on) {
        for (const auto& e : row) {
          if (e.id == i) continue;
          const double w = p.item_pair.get(i, e.id);
          if (w != 0.0) s_item += w * (value_of(e) - p.item_means[e.id]);
        }
      }
      if (user_on) {
        for (const auto& e : col) {
          if (e.id == u) continue;
          const double w = p.user_pair.get(u, e.id);
          if (w != 0.0) s_user += w * (value_of(e) - p.user_means[e.id]);
        }
      }
      const double* a = ki ? p.item_bias_row(i) : nullptr;
      const double* b = ku ? p.user_bias_row(u) : nullptr;
      const double mi = p.item_mean(i), mu = p.user_mean(u);
      for (int k = 1; k <= K; ++k) {
        const double bias = (a ? a[k - 1] : 0.0) + (b ? b[k - 1] : 0.0);
        out[k - 1] = -(bias + (k - mi) * s_item + (k - mu) * s_user);
      }
      break;
    }
    case Parameterization::Gaussian: {
      double s = 0.0;
      if (item_on) {
        for (const auto& e : row) {
          if (e.id == i) continue;
          const double w = p.item_pair.get(i, e.id);
          if (w != 0.0) s += w * p.slot_value(u, e.id, value_of(e));
        }
      }
      if (user_on) {
        for (const auto& e : col) {
          if (e.id == u) continue;
          const double w = p.user_pair.get(u, e.id);
          if (w != 0.0) s += w * p.slot_value(e.id, i, value_of(e));
        }
      }
      const double bias = (ki ? p.item_bias_row(i)[0] : 0.0) + (ku ? p.user_bias_row(u)[0] : 0.0);
      for (int k = 1; k <= K; ++k) {
        const double x = p.slot_value(u, i, k);
        out[k - 1] = 0.5 * (x - bias) * (x - bias) - x * s;
      }
      break;
    }
    case Parameterization::Smoothness: {
      // Neighbour weights grouped by neighbour rating: W[r - 1].
      double W[64] = {};
      std::vector<double> big;
      double* w_by_rating = W;
      if (K > 64) {
        big.assign(K, 0.0);
        w_by_rating = big.data();
      }
      if (item_on) {
        for (const auto& e : row) {
          if (e.id == i) continue;
          const double w = p.item_pair.get(i, e.id);
          if (w != 0.0) w_by_rating[value_of(e) - 1] += w;
        }
      }
      if (user_on) {
        for (const auto& e : col) {
          if (e.id == u) continue;
          const double w = p.user_pair.get(u, e.id);
          if (w != 0.0) w_by_rating[value_of(e) - 1] += w;
        }
      }
      const double* a = ki ? p.item_bias_row(i) : nullptr;
      const double* b = ku ? p.user_bias_row(u) : nullptr;
      for (int k = 1; k <= K; ++k) {
        double e = 0.0;
        for (int k2 = 1; k2 <= K; ++k2) {
          const double bias = (a ? a[k2 - 1] : 0.0) + (b ? b[k2 - 1] : 0.0);
          e += (bias + w_by_rating[k2 - 1]) * std::abs(k - k2);
        }
        out[k - 1] = e;
      }
      break;
    }
  }
}

// Normalizes exp(-energy) over the K slots with a max shift.
inline void energies_to_probs(std::span<const double> energies, std::span<double> probs) {
  double lo = std::numeric_limits<double>::infinity();
  for (double e : energies) lo = std::min(lo, e);
  double z = 0.0;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    probs[k] = std::exp(-(energies[k] - lo));
    z += probs[k];
  }
  for (auto& q : probs) q /= z;
}

// Local energy of cell (u, i) at value k given its observed neighbours in `data`.
inline double local_energy(const ModelParams& p, const RatingDataset& data, int u, int i, int k) {
  detail::check_slot(p, k);
  std::vector<double> e(p.K);
  local_energies(p, u, i, data.user_row(u), data.item_column(i), e);
  return e[k - 1];
}

inline PredictiveDistribution local_conditional(const ModelParams& p, const RatingDataset& data, int u, int i) {
  std::vector<double> e(p.K);
  local_energies(p, u, i, data.user_row(u), data.item_column(i), e);
  PredictiveDistribution d;
  d.probs.resize(p.K);
  energies_to_probs(e, d.probs);
  return d;
}

// Energy of the whole database with cell values taken from `values`
// (values[cell]); each unordered neighbour pair is counted once per shared
// user (item pairs) or shared item (user pairs).
inline double joint_energy(const ModelParams& p, const RatingDataset& data, std::span<const int> values) {
  double log_pot = 0.0;
  for (std::size_t c = 0; c < data.size(); ++c) {
    log_pot += log_singleton(p, data.cell_user(c), data.cell_item(c), values[c]);
  }
  if (p.item_pairs_on()) {
    for (int u = 0; u < data.num_users(); ++u) {
      const auto row = data.user_row(u);
      for (std::size_t a = 0; a < row.size(); ++a) {
        for (std::size_t b = a + 1; b < row.size(); ++b) {
          log_pot += log_pairwise_item(p, u, row[a].id, row[b].id, values[row[a].cell], values[row[b].cell]);
        }
      }
    }
  }
  if (p.user_pairs_on()) {
    for (int i = 0; i < data.num_items(); ++i) {
      const auto col = data.item_column(i);
      for (std::size_t a = 0; a < col.size(); ++a) {
        for (std::size_t b = a + 1; b < col.size(); ++b) {
          log_pot += log_pairwise_user(p, i, col[a].id, col[b].id, values[col[a].cell], values[col[b].cell]);
        }
      }
    }
  }
  return -log_pot;
}

inline std::vector<int> observed_values(const RatingDataset& data) {
  std::vector<int> v(data.size());
  for (std::size_t c = 0; c < data.size(); ++c) v[c] = data.cell_rating(c);
  return v;
}

inline double joint_energy(const ModelParams& p, const RatingDataset& data) {
  const auto v = observed_values(data);
  return joint_energy(p, data, v);
}

}  // namespace smrf

#endif  // SMRF_MODEL_HPP_
