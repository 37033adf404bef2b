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

#ifndef SMRF_BASELINES_HPP_
#define SMRF_BASELINES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "smrf/checkpoint.hpp"
#include "smrf/common.hpp"
#include "smrf/dataset.hpp"
#include "smrf/normalization.hpp"

namespace smrf {

enum class MeanKind { User, Item, Global };

// Training means and population deviations per user and item. Ids without
// training ratings fall back to the global values.
struct MeanTables {
  double global_mean = 0.0;
  double global_dev = 1.0;
  std::vector<double> user_mean, user_dev, item_mean, item_dev;
  std::vector<int> user_count, item_count;

  double mean_of_user(int u) const {
    return u >= 0 && u < static_cast<int>(user_mean.size()) && user_count[u] > 0 ? user_mean[u] : global_mean;
  }
  double dev_of_user(int u) const {
    return u >= 0 && u < static_cast<int>(user_dev.size()) && user_count[u] > 0 ? user_dev[u] : global_dev;
  }
  double mean_of_item(int i) const {
    return i >= 0 && i < static_cast<int>(item_mean.size()) && item_count[i] > 0 ? item_mean[i] : global_mean;
  }
  double dev_of_item(int i) const {
    return i >= 0 && i < static_cast<int>(item_dev.size()) && item_count[i] > 0 ? item_dev[i] : global_dev;
  }
};

namespace detail {

template <class Range>
inline std::pair<double, double> mean_dev(const Range& entries) {
  double s = 0.0, ss = 0.0;
  for (const auto& e : entries) s += e.rating;
  const double n = static_cast<double>(entries.size());
  const double m = s / n;
  for (const auto& e : entries) ss += (e.rating - m) * (e.rating - m);
  return {m, std::max(std::sqrt(ss / n), kDeviationFloor)};
}

}  // namespace detail

inline MeanTables mean_tables(const RatingDataset& train) {
  if (train.empty()) throw PreconditionError("mean baselines need a non-empty training set");
  MeanTables t;
  std::tie(t.global_mean, t.global_dev) = detail::mean_dev(train.triples());
  const int nu = train.num_users(), ni = train.num_items();
  t.user_mean.assign(nu, t.global_mean);
  t.user_dev.assign(nu, t.global_dev);
  t.user_count.assign(nu, 0);
  t.item_mean.assign(ni, t.global_mean);
  t.item_dev.assign(ni, t.global_dev);
  t.item_count.assign(ni, 0);
  for (int u = 0; u < nu; ++u) {
    const auto row = train.user_row(u);
    t.user_count[u] = static_cast<int>(row.size());
    if (!row.empty()) std::tie(t.user_mean[u], t.user_dev[u]) = detail::mean_dev(row);
  }
  for (int i = 0; i < ni; ++i) {
    const auto col = train.item_column(i);
    t.item_count[i] = static_cast<int>(col.size());
    if (!col.empty()) std::tie(t.item_mean[i], t.item_dev[i]) = detail::mean_dev(col);
  }
  return t;
}

inline double mean_predict(const MeanTables& t, int u, int i, MeanKind kind) {
  switch (kind) {
    case MeanKind::User: return t.mean_of_user(u);
    case MeanKind::Item: return t.mean_of_item(i);
    case MeanKind::Global: break;
  }
  return t.global_mean;
}

inline double mean_predict(const RatingDataset& train, int u, int i, MeanKind kind) {
  return mean_predict(mean_tables(train), u, i, kind);
}

// Precision-style weighting by the inverse deviations.
inline double weighted_mean(double user_mean, double user_dev, double item_mean, double item_dev) {
  const double su = std::max(user_dev, kDeviationFloor), si = std::max(item_dev, kDeviationFloor);
  return (user_mean / su + item_mean / si) / (1.0 / su + 1.0 / si);
}

inline double weighted_mean_predict(const MeanTables& t, int u, int i) {
  return weighted_mean(t.mean_of_user(u), t.dev_of_user(u), t.mean_of_item(i), t.dev_of_item(i));
}

inline double weighted_mean_predict(const RatingDataset& train, int u, int i) {
  return weighted_mean_predict(mean_tables(train), u, i);
}

// ---------------------------------------------------------------------------
// User-based k nearest neighbours.

struct KnnConfig {
  double sim_floor = 0.0;  // neighbours need |s| > sim_floor
  int max_neighbors = 50;
};

// Pearson correlation of u with every user over co-rated items, centred on
// the co-rated means. Fewer than 2 co-rated items or a zero variance gives 0.
inline std::vector<double> user_similarities(const RatingDataset& train, int u) {
  const int nu = train.num_users();
  std::vector<double> sims(nu, 0.0);
  if (u < 0 || u >= nu) return sims;
  std::vector<int> n(nu, 0);
  std::vector<double> sx(nu, 0.0), sy(nu, 0.0), sxx(nu, 0.0), syy(nu, 0.0), sxy(nu, 0.0);
  std::vector<int> touched;
  for (const auto& e : train.user_row(u)) {
    const double x = e.rating;
    for (const auto& f : train.item_column(e.id)) {
      const int v = f.id;
      const double y = f.rating;
      if (n[v]++ == 0) touched.push_back(v);
      sx[v] += x;
      sy[v] += y;
      sxx[v] += x * x;
      syy[v] += y * y;
      sxy[v] += x * y;
    }
  }
  for (int v : touched) {
    if (n[v] < 2) continue;
    const double c = n[v];
    const double cov = sxy[v] - sx[v] * sy[v] / c;
    const double vx = sxx[v] - sx[v] * sx[v] / c;
    const double vy = syy[v] - sy[v] * sy[v] / c;
    if (vx <= 1e-12 || vy <= 1e-12) continue;
    sims[v] = std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
  }
  return sims;
}

inline double pearson_similarity(const RatingDataset& train, int u, int v) {
  if (v < 0 || v >= train.num_users()) return 0.0;
  return user_similarities(train, u)[v];
}

// Prediction from a precomputed similarity row of u.
inline double knn_user_predict(const RatingDataset& train, const MeanTables& means, std::span<const double> sims,
                               int u, int i, const KnnConfig& cfg = {}) {
  const double base = means.mean_of_user(u);
  struct Nb {
    int v;
    double s;
    double dev;
  };
  std::vector<Nb> nbs;
  for (const auto& e : train.item_column(i)) {
    if (e.id == u) continue;
    const double s = sims.empty() ? 0.0 : sims[e.id];
    if (std::abs(s) <= cfg.sim_floor) continue;
    nbs.push_back({e.id, s, e.rating - means.mean_of_user(e.id)});
  }
  if (cfg.max_neighbors > 0 && static_cast<int>(nbs.size()) > cfg.max_neighbors) {
    std::stable_sort(nbs.begin(), nbs.end(), [](const Nb& a, const Nb& b) {
      return std::abs(a.s) != std::abs(b.s) ? std::abs(a.s) > std::abs(b.s) : a.v < b.v;
    });
    nbs.resize(cfg.max_neighbors);
  }
  double num = 0.0, den = 0.0;
  for (const auto& nb : nbs) {
    num += nb.s * nb.dev;
    den += std::abs(nb.s);
  }
  return den > 0.0 ? base + num / den : base;
}

inline double knn_user_predict(const RatingDataset& train, int u, int i, double sim_floor = 0.0,
                               int max_neighbors = 50) {
  const auto sims = user_similarities(train, u);
  return knn_user_predict(train, mean_tables(train), sims, u, i, {sim_floor, max_neighbors});
}

// ---------------------------------------------------------------------------
// RSVD with per-user and per-item log-variances:
//   r ~ N(mu, sigma^2),  mu = a_i + b_u + A_i . B_u,  sigma^2 = exp(g_u + n_i),
// factors with N(0, 1/lambda) priors. Works on normalized ratings unless
// `normalize` is off.

struct RsvdParams {
  int K = 5;
  int F = 0;
  double lambda = 0.1;
  std::shared_ptr<const IdSpace> ids = std::make_shared<const IdSpace>();
  std::vector<double> item_bias, user_bias;          // a_i, b_u
  std::vector<double> item_factors, user_factors;    // A (M x F), B (N x F), row-major
  std::vector<double> user_logvar, item_logvar;      // gamma_u, nu_i
  std::optional<NormalizationStats> norm;

  int num_users() const { return ids->num_users(); }
  int num_items() const { return ids->num_items(); }
  bool known_user(int u) const { return u >= 0 && u < num_users(); }
  bool known_item(int i) const { return i >= 0 && i < num_items(); }

  // Mean and variance on the model's working scale.
  double mu(int u, int i) const {
    double m = 0.0;
    if (known_item(i)) m += item_bias[i];
    if (known_user(u)) m += user_bias[u];
    if (known_user(u) && known_item(i)) {
      const double* a = &item_factors[static_cast<std::size_t>(i) * F];
      const double* b = &user_factors[static_cast<std::size_t>(u) * F];
      for (int f = 0; f < F; ++f) m += a[f] * b[f];
    }
    return m;
  }
  double log_sigma2(int u, int i) const {
    return (known_user(u) ? user_logvar[u] : 0.0) + (known_item(i) ? item_logvar[i] : 0.0);
  }

  double to_working(double rating, int u, int i) const { return norm ? norm->normalize(rating, u, i) : rating; }

  bool operator==(const RsvdParams& o) const {
    return K == o.K && F == o.F && lambda == o.lambda && item_bias == o.item_bias && user_bias == o.user_bias &&
           item_factors == o.item_factors && user_factors == o.user_factors && user_logvar == o.user_logvar &&
           item_logvar == o.item_logvar && norm == o.norm &&
           std::ranges::equal(ids->user_ids(), o.ids->user_ids()) &&
           std::ranges::equal(ids->item_ids(), o.ids->item_ids());
  }
};

inline RsvdParams make_rsvd_params(const RatingDataset& train, int F, double lambda, bool normalize = true,
                                   double smoothing = 5.0) {
  if (F < 0) throw PreconditionError("F must be >= 0");
  if (!(lambda >= 0.0)) throw PreconditionError("lambda must be >= 0");
  RsvdParams p;
  p.K = train.K();
  p.F = F;
  p.lambda = lambda;
  p.ids = train.id_space();
  p.item_bias.assign(p.num_items(), 0.0);
  p.user_bias.assign(p.num_users(), 0.0);
  p.item_factors.assign(static_cast<std::size_t>(p.num_items()) * F, 0.0);
  p.user_factors.assign(static_cast<std::size_t>(p.num_users()) * F, 0.0);
  p.user_logvar.assign(p.num_users(), 0.0);
  p.item_logvar.assign(p.num_items(), 0.0);
  if (normalize) p.norm = fit_normalization(train, smoothing);
  return p;
}

struct RsvdConfig {
  int F = 50;
  double lambda = 0.1;
  double var_reg = 0.01;  // Gaussian prior precision on the log-variances
  double eta = 0.01;
  double eta_var = 0.01;
  double init_scale = 0.1;
  int max_epochs = 100;
  int var_epochs = 20;
  int finetune_epochs = 10;
  int patience = 3;
  bool normalize = true;
  double smoothing = 5.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (F < 0) throw PreconditionError("rsvd F must be >= 0");
    if (!(lambda >= 0.0) || !(var_reg >= 0.0)) throw PreconditionError("rsvd regularizers must be >= 0");
    if (!(eta > 0.0) || !(eta_var > 0.0)) throw PreconditionError("rsvd learning rates must be > 0");
    if (max_epochs < 1 || patience < 1) throw PreconditionError("rsvd epochs and patience must be >= 1");
  }
};

// Penalized negative log-likelihood on the working scale, constants dropped.
// The factor prior is applied once per rating occurrence, as in the SGD
// updates; `var_reg` puts a N(0, 1/var_reg) prior on each occurrence's
// log-variances.
inline double rsvd_objective(const RsvdParams& p, const RatingDataset& data, double var_reg) {
  double total = 0.0;
  for (std::size_t c = 0; c < data.size(); ++c) {
    const int u = data.cell_user(c), i = data.cell_item(c);
    const double y = p.to_working(data.cell_rating(c), u, i);
    const double e = y - p.mu(u, i);
    const double ls = p.log_sigma2(u, i);
    total += 0.5 * e * e * std::exp(-ls) + 0.5 * ls;
    double reg = 0.0;
    for (int f = 0; f < p.F; ++f) {
      const double a = p.item_factors[static_cast<std::size_t>(i) * p.F + f];
      const double b = p.user_factors[static_cast<std::size_t>(u) * p.F + f];
      reg += a * a + b * b;
    }
    total += 0.5 * p.lambda * reg;
    total += 0.5 * var_reg * (p.user_logvar[u] * p.user_logvar[u] + p.item_logvar[i] * p.item_logvar[i]);
  }
  return total;
}

struct RsvdMask {
  bool means = true;
  bool variances = true;
};

namespace detail {

// Adds the gradient of one cell's objective term, scaled by `scale`.
inline void rsvd_cell_gradient(const RsvdParams& p, int u, int i, double y, double var_reg, const RsvdMask& mask,
                               double scale, RsvdParams& g) {
  const double e = y - p.mu(u, i);
  const double inv = std::exp(-p.log_sigma2(u, i));
  const std::size_t ai = static_cast<std::size_t>(i) * p.F, bu = static_cast<std::size_t>(u) * p.F;
  if (mask.means) {
    g.item_bias[i] += scale * -e * inv;
    g.user_bias[u] += scale * -e * inv;
    for (int f = 0; f < p.F; ++f) {
      const double a = p.item_factors[ai + f], b = p.user_factors[bu + f];
      g.item_factors[ai + f] += scale * (-e * inv * b + p.lambda * a);
      g.user_factors[bu + f] += scale * (-e * inv * a + p.lambda * b);
    }
  }
  if (mask.variances) {
    const double d = 0.5 - 0.5 * e * e * inv;
    g.user_logvar[u] += scale * (d + var_reg * p.user_logvar[u]);
    g.item_logvar[i] += scale * (d + var_reg * p.item_logvar[i]);
  }
}

inline RsvdParams zeros_like(const RsvdParams& p) {
  RsvdParams g = p;
  for (auto* v : {&g.item_bias, &g.user_bias, &g.item_factors, &g.user_factors, &g.user_logvar, &g.item_logvar}) {
    std::fill(v->begin(), v->end(), 0.0);
  }
  return g;
}

}  // namespace detail

// Full-batch gradient of rsvd_objective.
inline RsvdParams rsvd_gradient(const RsvdParams& p, const RatingDataset& data, double var_reg) {
  auto g = detail::zeros_like(p);
  for (std::size_t c = 0; c < data.size(); ++c) {
    const int u = data.cell_user(c), i = data.cell_item(c);
    detail::rsvd_cell_gradient(p, u, i, p.to_working(data.cell_rating(c), u, i), var_reg, {}, 1.0, g);
  }
  return g;
}

struct RsvdPrediction {
  double mean = 0.0;      // rating scale, clamped to [1, K]
  double variance = 1.0;  // rating scale
  std::vector<double> probs;  // discretized over 1..K

  double loglik(int r) const {
    if (r < 1 || r > static_cast<int>(probs.size())) throw RangeError("rating outside 1..K");
    return std::log(probs[r - 1]);
  }
};

// Gaussian density renormalized over the K rating slots (on the working
// scale) so that log-likelihoods compare with the MRF's.
inline RsvdPrediction rsvd_predict(const RsvdParams& p, int u, int i) {
  RsvdPrediction out;
  const double m = p.mu(u, i);
  const double ls = p.log_sigma2(u, i);
  const double s2 = std::exp(ls);
  double mean = m, scale = 1.0;
  if (p.norm) {
    mean = p.norm->denormalize(m, u, i);
    scale = p.norm->user_dev(u) * p.norm->item_dev(i);
  }
  out.mean = std::clamp(mean, 1.0, static_cast<double>(p.K));
  out.variance = s2 * scale * scale;
  std::vector<double> logd(p.K);
  double hi = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= p.K; ++k) {
    const double y = p.to_working(k, u, i);
    logd[k - 1] = -0.5 * (y - m) * (y - m) / s2;
    hi = std::max(hi, logd[k - 1]);
  }
  out.probs.resize(p.K);
  double z = 0.0;
  for (int k = 0; k < p.K; ++k) z += out.probs[k] = std::exp(logd[k] - hi);
  for (auto& q : out.probs) q /= z;
  return out;
}

inline double rsvd_rmse(const RsvdParams& p, const RatingDataset& data) {
  double s = 0.0;
  for (std::size_t c = 0; c < data.size(); ++c) {
    const double e = rsvd_predict(p, data.cell_user(c), data.cell_item(c)).mean - data.cell_rating(c);
    s += e * e;
  }
  return data.empty() ? 0.0 : std::sqrt(s / static_cast<double>(data.size()));
}

// Mean negative discretized log-likelihood.
inline double rsvd_nll(const RsvdParams& p, const RatingDataset& data) {
  double s = 0.0;
  for (std::size_t c = 0; c < data.size(); ++c) {
    s -= rsvd_predict(p, data.cell_user(c), data.cell_item(c)).loglik(data.cell_rating(c));
  }
  return data.empty() ? 0.0 : s / static_cast<double>(data.size());
}

struct RsvdEpochLog {
  int phase;  // 1 means, 2 variances, 3 joint
  int epoch;
  double train_objective;
  double valid_rmse;
  double valid_nll;
};

struct RsvdResult {
  RsvdParams params;
  std::vector<RsvdEpochLog> log;
};

namespace detail {

inline bool finite_params(const RsvdParams& p) {
  for (const auto* v : {&p.item_bias, &p.user_bias, &p.item_factors, &p.user_factors, &p.user_logvar, &p.item_logvar}) {
    for (double x : *v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

inline void rsvd_sgd_epoch(RsvdParams& p, const RatingDataset& train, const std::vector<double>& targets,
                           const RsvdConfig& cfg, const RsvdMask& mask, Rng& rng, std::vector<std::size_t>& order) {
  rng.shuffle(order);
  const int F = p.F;
  for (std::size_t c : order) {
    const int u = train.cell_user(c), i = train.cell_item(c);
    const double y = targets[c];
    const double e = y - p.mu(u, i);
    const double inv = std::exp(-p.log_sigma2(u, i));
    double* a = p.item_factors.data() + static_cast<std::size_t>(i) * F;
    double* b = p.user_factors.data() + static_cast<std::size_t>(u) * F;
    if (mask.means) {
      const double g = e * inv;
      p.item_bias[i] += cfg.eta * g;
      p.user_bias[u] += cfg.eta * g;
      for (int f = 0; f < F; ++f) {
        const double af = a[f], bf = b[f];
        a[f] += cfg.eta * (g * bf - p.lambda * af);
        b[f] += cfg.eta * (g * af - p.lambda * bf);
      }
    }
    if (mask.variances) {
      const double d = 0.5 * e * e * inv - 0.5;
      p.user_logvar[u] += cfg.eta_var * (d - cfg.var_reg * p.user_logvar[u]);
      p.item_logvar[i] += cfg.eta_var * (d - cfg.var_reg * p.item_logvar[i]);
    }
  }
  if (!finite_params(p)) throw TrainingAbort("RSVD diverged (non-finite parameters)");
}

}  // namespace detail

// Three phases: means with unit variance, then log-variances with the means
// frozen, then a joint fine-tune. Phases 1 and 3 stop early on validation
// RMSE, phase 2 on validation log-likelihood; each keeps its best snapshot.
inline RsvdResult rsvd_train(const RatingDataset& train, const RatingDataset& valid, const RsvdConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw PreconditionError("RSVD needs a non-empty training set");
  RsvdResult res;
  auto& p = res.params;
  p = make_rsvd_params(train, cfg.F, cfg.lambda, cfg.normalize, cfg.smoothing);
  Rng init(derive_seed(cfg.seed, 0x5eed));
  for (auto& x : p.item_factors) x = cfg.init_scale * init.normal();
  for (auto& x : p.user_factors) x = cfg.init_scale * init.normal();
  std::vector<double> targets(train.size());
  for (std::size_t c = 0; c < train.size(); ++c) {
    targets[c] = p.to_working(train.cell_rating(c), train.cell_user(c), train.cell_item(c));
  }
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& monitor = valid.empty() ? train : valid;

  auto run = [&](int phase, int max_epochs, const RsvdMask& mask, bool by_rmse) {
    RsvdParams best = p;
    double best_score = by_rmse ? rsvd_rmse(p, monitor) : rsvd_nll(p, monitor);
    int bad = 0;
    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
      Rng rng(derive_seed(cfg.seed, epoch, phase));
      detail::rsvd_sgd_epoch(p, train, targets, cfg, mask, rng, order);
      const double rmse = rsvd_rmse(p, monitor);
      const double nll = rsvd_nll(p, monitor);
      res.log.push_back({phase, epoch, rsvd_objective(p, train, cfg.var_reg), rmse, nll});
      const double score = by_rmse ? rmse : nll;
      if (score < best_score - 1e-6) {
        best_score = score;
        best = p;
        bad = 0;
      } else if (++bad >= cfg.patience) {
        break;
      }
    }
    p = std::move(best);
  };
  run(1, cfg.max_epochs, {true, false}, true);
  run(2, cfg.var_epochs, {false, true}, false);
  run(3, cfg.finetune_epochs, {true, true}, true);
  return res;
}

// Trains one model per lambda and keeps the one with the best validation RMSE.
inline RsvdResult rsvd_train_grid(const RatingDataset& train, const RatingDataset& valid, RsvdConfig cfg,
                                  std::span<const double> lambdas) {
  std::optional<RsvdResult> best;
  double best_rmse = std::numeric_limits<double>::infinity();
  for (double l : lambdas) {
    cfg.lambda = l;
    auto r = rsvd_train(train, valid, cfg);
    const double rmse = rsvd_rmse(r.params, valid.empty() ? train : valid);
    if (rmse < best_rmse) {
      best_rmse = rmse;
      best = std::move(r);
    }
  }
  if (!best) throw PreconditionError("empty lambda grid");
  return std::move(*best);
}

inline constexpr double kRsvdLambdaGrid[] = {0.01, 0.1, 1.0};

inline void write_rsvd_checkpoint(std::ostream& out, const RsvdParams& p, const std::vector<std::string>& comments = {}) {
  detail::write_comments(out, comments);
  const auto users = p.ids->user_ids();
  const auto items = p.ids->item_ids();
  out << "[header]\n"
      << "format\tsmrf-rsvd-1\n"
      << "K\t" << p.K << '\n'
      << "F\t" << p.F << '\n'
      << "lambda\t" << format_exact(p.lambda) << '\n'
      << "users\t" << users.size() << '\n'
      << "items\t" << items.size() << '\n';
  out << "[items]\n";
  for (int i = 0; i < p.num_items(); ++i) {
    out << items[i] << '\t' << format_exact(p.item_bias[i]) << '\t' << format_exact(p.item_logvar[i]);
    for (int f = 0; f < p.F; ++f) out << '\t' << format_exact(p.item_factors[static_cast<std::size_t>(i) * p.F + f]);
    out << '\n';
  }
  out << "[users]\n";
  for (int u = 0; u < p.num_users(); ++u) {
    out << users[u] << '\t' << format_exact(p.user_bias[u]) << '\t' << format_exact(p.user_logvar[u]);
    for (int f = 0; f < p.F; ++f) out << '\t' << format_exact(p.user_factors[static_cast<std::size_t>(u) * p.F + f]);
    out << '\n';
  }
  if (p.norm) write_normalization(out, *p.norm, *p.ids);
}

inline RsvdParams read_rsvd_checkpoint(std::istream& in) {
  const auto t = read_sections(in);
  const auto head = detail::key_values(t.section("header"));
  if (detail::require_key(head, "format") != "smrf-rsvd-1") throw ParseError("not an RSVD checkpoint", 0);
  RsvdParams p;
  p.K = static_cast<int>(detail::to_double(detail::require_key(head, "K")));
  p.F = static_cast<int>(detail::to_double(detail::require_key(head, "F")));
  p.lambda = detail::to_double(detail::require_key(head, "lambda"));
  const auto& ir = t.section("items");
  const auto& ur = t.section("users");
  std::vector<std::int64_t> items, users;
  for (const auto& r : ir) items.push_back(detail::field_int(r, 0));
  for (const auto& r : ur) users.push_back(detail::field_int(r, 0));
  auto ids = std::make_shared<const IdSpace>(users, items);
  if (ids->num_items() != static_cast<int>(items.size()) || ids->num_users() != static_cast<int>(users.size())) {
    throw ParseError("duplicate id in RSVD checkpoint", 0);
  }
  p.ids = ids;
  p.item_bias.assign(items.size(), 0.0);
  p.user_bias.assign(users.size(), 0.0);
  p.item_logvar.assign(items.size(), 0.0);
  p.user_logvar.assign(users.size(), 0.0);
  p.item_factors.assign(items.size() * p.F, 0.0);
  p.user_factors.assign(users.size() * p.F, 0.0);
  auto fill = [&](const SectionedTable::Row& r, int idx, std::vector<double>& bias, std::vector<double>& logvar,
                  std::vector<double>& factors) {
    if (r.fields.size() != static_cast<std::size_t>(p.F) + 3) throw ParseError("RSVD row width", r.line);
    bias[idx] = detail::field_double(r, 1);
    logvar[idx] = detail::field_double(r, 2);
    for (int f = 0; f < p.F; ++f) factors[static_cast<std::size_t>(idx) * p.F + f] = detail::field_double(r, f + 3);
  };
  for (const auto& r : ir) fill(r, ids->item_index(detail::field_int(r, 0)), p.item_bias, p.item_logvar, p.item_factors);
  for (const auto& r : ur) fill(r, ids->user_index(detail::field_int(r, 0)), p.user_bias, p.user_logvar, p.user_factors);
  if (t.has("normalization")) p.norm = read_normalization(t.section("normalization"), *ids);
  return p;
}

}  // namespace smrf

#endif  // SMRF_BASELINES_HPP_
