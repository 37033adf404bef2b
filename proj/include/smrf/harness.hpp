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

#ifndef SMRF_HARNESS_HPP_
#define SMRF_HARNESS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "smrf/baselines.hpp"
#include "smrf/common.hpp"
#include "smrf/dataset.hpp"
#include "smrf/inference.hpp"
#include "smrf/learning.hpp"
#include "smrf/model.hpp"

namespace smrf {

// One scored held-out rating. `point` is the integer-style output used for
// MAE (the MAP rating for MRFs), `expected` the real-valued one used for
// RMSE. `loglik` is NaN for predictors without a distribution.
struct PredictionRecord {
  std::int64_t user = 0;
  std::int64_t item = 0;
  int truth = 0;
  double point = 0.0;
  double expected = 0.0;
  double confidence = std::numeric_limits<double>::quiet_NaN();
  double loglik = std::numeric_limits<double>::quiet_NaN();
};

struct MetricsRecord {
  double rmse = 0.0;
  double mae = 0.0;
  double ll = std::numeric_limits<double>::quiet_NaN();  // NaN: not available
  std::size_t Y = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> config_echo;
};

inline MetricsRecord compute_metrics(std::span<const PredictionRecord> preds) {
  if (preds.empty()) throw PreconditionError("no predictions to score");
  MetricsRecord m;
  double se = 0.0, ae = 0.0, ll = 0.0;
  bool have_ll = true;
  for (const auto& p : preds) {
    se += (p.truth - p.expected) * (p.truth - p.expected);
    ae += std::abs(p.truth - p.point);
    if (std::isnan(p.loglik)) have_ll = false;
    else ll += p.loglik;
  }
  const double y = static_cast<double>(preds.size());
  m.Y = preds.size();
  m.rmse = std::sqrt(se / y);
  m.mae = ae / y;
  if (have_ll) m.ll = ll / y;
  return m;
}

// ---------------------------------------------------------------------------
// Model specs: "user-mean", "item-mean", "global-mean", "weighted-mean",
// "knn", "rsvd", or "mrf.<user|item|joint>.<linear|gauss|smooth>.<pl|cd>".

enum class ModelKind { UserMean, ItemMean, GlobalMean, WeightedMean, Knn, Rsvd, Mrf };

struct ModelSpec {
  ModelKind kind = ModelKind::Mrf;
  ModelScope scope = ModelScope::Joint;
  Parameterization scheme = Parameterization::Smoothness;
  LearningMethod method = LearningMethod::PseudoLikelihood;

  bool operator==(const ModelSpec&) const = default;
};

inline std::string to_string(const ModelSpec& s) {
  switch (s.kind) {
    case ModelKind::UserMean: return "user-mean";
    case ModelKind::ItemMean: return "item-mean";
    case ModelKind::GlobalMean: return "global-mean";
    case ModelKind::WeightedMean: return "weighted-mean";
    case ModelKind::Knn: return "knn";
    case ModelKind::Rsvd: return "rsvd";
    case ModelKind::Mrf: break;
  }
  return "mrf." + to_string(s.scope) + "." + to_string(s.scheme) + "." + to_string(s.method);
}

inline ModelSpec parse_model_spec(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  ModelSpec spec;
  if (s == "user-mean") spec.kind = ModelKind::UserMean;
  else if (s == "item-mean") spec.kind = ModelKind::ItemMean;
  else if (s == "global-mean") spec.kind = ModelKind::GlobalMean;
  else if (s == "weighted-mean") spec.kind = ModelKind::WeightedMean;
  else if (s == "knn") spec.kind = ModelKind::Knn;
  else if (s == "rsvd") spec.kind = ModelKind::Rsvd;
  else {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const auto dot = s.find('.', start);
      parts.push_back(s.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (parts.size() != 4 || parts[0] != "mrf") throw Error("unknown model spec '" + std::string(text) + "'");
    spec.kind = ModelKind::Mrf;
    spec.scope = parse_scope(parts[1]);
    spec.scheme = parse_parameterization(parts[2]);
    spec.method = parse_method(parts[3]);
  }
  return spec;
}

struct ExperimentConfig {
  TrainConfig mrf;
  RsvdConfig rsvd;
  KnnConfig knn;
  bool rsvd_lambda_grid = true;
  double smoothing = 5.0;
};

struct ExperimentResult {
  MetricsRecord metrics;
  std::vector<PredictionRecord> predictions;
  std::optional<ModelParams> mrf;
  std::optional<RsvdParams> rsvd;
  std::vector<EpochLog> mrf_log;
};

namespace detail {

// Runs f(k) for k in [0, n) over `threads` workers; f must only write slot k.
template <class F>
inline void parallel_for(std::size_t n, int threads, F&& f) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) f(k);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < n; k += workers) f(k);
    });
  }
}

inline PredictionRecord point_record(const RatingDataset& test, std::size_t c, double value) {
  const auto& t = test.triple(c);
  const double v = std::clamp(value, 1.0, static_cast<double>(test.K()));
  return {t.user, t.item, t.rating, v, v, std::numeric_limits<double>::quiet_NaN(),
          std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace detail

// MRF predictions for every cell of `test`, conditioned on `context`.
inline std::vector<PredictionRecord> predict_cells(const ModelParams& params, const RatingDataset& context,
                                                   const RatingDataset& test, int threads = 1) {
  std::vector<PredictionRecord> out(test.size());
  detail::parallel_for(test.size(), threads, [&](std::size_t c) {
    const auto& t = test.triple(c);
    const int u = context.user_index(t.user), i = context.item_index(t.item);
    const auto pr = predict(params, context, u, i);
    out[c] = {t.user, t.item, t.rating, static_cast<double>(pr.map_rating), pr.expected_rating, pr.confidence,
              std::log(pr.distribution[t.rating])};
  });
  return out;
}

// Trains the model named by `spec` on split.train (validation for early
// stopping) and scores split.test. MRF predictions condition on training
// ratings only.
inline ExperimentResult run_experiment(const SplitBundle& split, const ModelSpec& spec, const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const auto& train = split.train;
  const auto& test = split.test;
  ExperimentResult res;
  res.predictions.resize(test.size());
  auto cell_ids = [&](std::size_t c) {
    const auto& t = test.triple(c);
    return std::pair{train.user_index(t.user), train.item_index(t.item)};
  };
  switch (spec.kind) {
    case ModelKind::UserMean:
    case ModelKind::ItemMean:
    case ModelKind::GlobalMean:
    case ModelKind::WeightedMean: {
      const auto means = mean_tables(train);
      for (std::size_t c = 0; c < test.size(); ++c) {
        const auto [u, i] = cell_ids(c);
        double v = 0.0;
        if (spec.kind == ModelKind::WeightedMean) v = weighted_mean_predict(means, u, i);
        else {
          v = mean_predict(means, u, i,
                           spec.kind == ModelKind::UserMean   ? MeanKind::User
                           : spec.kind == ModelKind::ItemMean ? MeanKind::Item
                                                              : MeanKind::Global);
        }
        res.predictions[c] = detail::point_record(test, c, v);
      }
      break;
    }
    case ModelKind::Knn: {
      const auto means = mean_tables(train);
      std::vector<std::vector<std::size_t>> by_user(train.num_users());
      std::vector<std::size_t> orphans;
      for (std::size_t c = 0; c < test.size(); ++c) {
        const auto [u, i] = cell_ids(c);
        (u >= 0 ? by_user[u] : orphans).push_back(c);
      }
      detail::parallel_for(by_user.size(), cfg.mrf.threads, [&](std::size_t u) {
        if (by_user[u].empty()) return;
        const auto sims = user_similarities(train, static_cast<int>(u));
        for (std::size_t c : by_user[u]) {
          const auto [uu, i] = cell_ids(c);
          res.predictions[c] = detail::point_record(test, c, knn_user_predict(train, means, sims, uu, i, cfg.knn));
        }
      });
      for (std::size_t c : orphans) {
        const auto [u, i] = cell_ids(c);
        res.predictions[c] = detail::point_record(test, c, knn_user_predict(train, means, {}, u, i, cfg.knn));
      }
      break;
    }
    case ModelKind::Rsvd: {
      auto r = cfg.rsvd_lambda_grid ? rsvd_train_grid(train, split.validation, cfg.rsvd, kRsvdLambdaGrid)
                                    : rsvd_train(train, split.validation, cfg.rsvd);
      for (std::size_t c = 0; c < test.size(); ++c) {
        const auto [u, i] = cell_ids(c);
        const auto pr = rsvd_predict(r.params, u, i);
        const auto& t = test.triple(c);
        res.predictions[c] = {t.user, t.item, t.rating, pr.mean, pr.mean, pr.probs[std::lround(pr.mean) - 1],
                              pr.loglik(t.rating)};
      }
      res.rsvd = std::move(r.params);
      break;
    }
    case ModelKind::Mrf: {
      auto tc = cfg.mrf;
      tc.method = spec.method;
      auto init = make_params(train, spec.scheme, spec.scope, cfg.smoothing);
      auto tr = smrf::train(train, split.validation, tc, std::move(init));
      res.predictions = predict_cells(tr.params, train, test, tc.threads);
      res.mrf = std::move(tr.params);
      res.mrf_log = std::move(tr.log);
      break;
    }
  }
  res.metrics = compute_metrics(res.predictions);
  res.metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return res;
}

// ---------------------------------------------------------------------------
// Correlation graphs.

enum class GraphKind { Item, User };

inline std::string to_string(GraphKind k) { return k == GraphKind::Item ? "item" : "user"; }

struct GraphEdge {
  std::int64_t a;  // raw ids, a < b
  std::int64_t b;
  double weight;
};

struct CorrelationGraph {
  GraphKind kind = GraphKind::Item;
  std::vector<GraphEdge> edges;
  std::size_t nodes = 0;
  std::size_t stored_nonzero = 0;
  double sparsity = 0.0;
};

// Stored nonzero pairs over all n(n-1)/2 unordered pairs.
inline double graph_sparsity(std::size_t nonzero, std::size_t n) {
  if (n < 2) return 0.0;
  return static_cast<double>(nonzero) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

// Edges with |weight| >= threshold; sparsity always counts every stored
// nonzero weight.
inline CorrelationGraph extract_graph(const ModelParams& p, GraphKind kind, double threshold = 0.0) {
  if (!(threshold >= 0.0)) throw PreconditionError("graph threshold must be >= 0");
  CorrelationGraph g;
  g.kind = kind;
  const auto& m = kind == GraphKind::Item ? p.item_pair : p.user_pair;
  const auto raw = kind == GraphKind::Item ? p.ids->item_ids() : p.ids->user_ids();
  g.nodes = raw.size();
  for (const auto& [a, b, w] : m.sorted_entries()) {
    if (w == 0.0) continue;
    ++g.stored_nonzero;
    if (std::abs(w) >= threshold) g.edges.push_back({raw[a], raw[b], w});
  }
  g.sparsity = graph_sparsity(g.stored_nonzero, g.nodes);
  return g;
}

// ---------------------------------------------------------------------------
// Tab-separated outputs. `comments` are written first as '#' lines.

inline void write_graph(std::ostream& out, std::span<const CorrelationGraph> graphs,
                        const std::vector<std::string>& comments = {}) {
  detail::write_comments(out, comments);
  for (const auto& g : graphs) {
    out << "# " << to_string(g.kind) << " sparsity " << format_exact(g.sparsity) << " (" << g.stored_nonzero
        << " stored of " << g.nodes << " nodes)\n";
  }
  out << "kind\tidA\tidB\tweight\n";
  for (const auto& g : graphs) {
    for (const auto& e : g.edges) out << to_string(g.kind) << '\t' << e.a << '\t' << e.b << '\t' << format_exact(e.weight) << '\n';
  }
}

inline std::string format_metric(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline void write_metrics_header(std::ostream& out) { out << "spec\tRMSE\tMAE\tLL\tY\tseconds\n"; }

inline void write_metrics_row(std::ostream& out, const std::string& spec, const MetricsRecord& m) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2f", m.wall_seconds);
  out << spec << '\t' << format_metric(m.rmse) << '\t' << format_metric(m.mae) << '\t' << format_metric(m.ll) << '\t'
      << m.Y << '\t' << secs << '\n';
}

inline void write_predictions(std::ostream& out, std::span<const PredictionRecord> preds,
                              const std::vector<std::string>& comments = {}) {
  detail::write_comments(out, comments);
  out << "user\titem\ttruth\tmap\texpected\tconfidence\tloglik\n";
  for (const auto& p : preds) {
    out << p.user << '\t' << p.item << '\t' << p.truth << '\t' << format_exact(p.point) << '\t'
        << format_exact(p.expected) << '\t' << format_exact(p.confidence) << '\t' << format_exact(p.loglik) << '\n';
  }
}

inline void write_ranking(std::ostream& out, std::int64_t user, std::span<const RankedItem> ranked,
                          const std::string& criterion, const IdSpace& ids) {
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    out << user << '\t' << ids.item_id(ranked[k].item) << '\t' << criterion << '\t' << format_exact(ranked[k].score)
        << '\t' << k + 1 << '\n';
  }
}

}  // namespace smrf

#endif  // SMRF_HARNESS_HPP_
