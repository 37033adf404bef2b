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

#ifndef SMRF_LEARNING_HPP_
#define SMRF_LEARNING_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "smrf/candidates.hpp"
#include "smrf/gradient.hpp"
#include "smrf/model.hpp"

namespace smrf {

enum class LearningMethod { PseudoLikelihood, ContrastiveDivergence };

inline std::string to_string(LearningMethod m) {
  return m == LearningMethod::PseudoLikelihood ? "pl" : "cd";
}

inline LearningMethod parse_method(std::string_view s) {
  if (s == "pl" || s == "PL") return LearningMethod::PseudoLikelihood;
  if (s == "cd" || s == "CD") return LearningMethod::ContrastiveDivergence;
  throw Error("unknown learning method '" + std::string(s) + "'");
}

struct TrainConfig {
  double lambda1 = 1e-3;  // item-item penalty
  double lambda2 = 1e-3;  // user-user penalty
  double eta_bias = 0.1;
  double eta_pair = 0.01;
  int batch = 100;
  double epsilon = 1e-3;
  int cd_steps = 1;
  LearningMethod method = LearningMethod::PseudoLikelihood;
  int item_cap = 0;  // 0: unlimited
  int user_cap = 0;
  int stage1_min_epochs = 1;
  int patience = 3;
  int max_epochs = 100;
  double min_delta = 1e-5;  // required drop in per-cell validation PL
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw PreconditionError(std::string("invalid training config: ") + what);
    };
    require(lambda1 >= 0.0 && lambda2 >= 0.0, "penalties must be >= 0");
    require(eta_bias > 0.0 && eta_pair > 0.0, "learning rates must be > 0");
    require(batch >= 1, "batch must be >= 1");
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    require(cd_steps >= 1, "cd_steps must be >= 1");
    require(item_cap >= 0 && user_cap >= 0, "caps must be >= 0");
    require(stage1_min_epochs >= 0 && patience >= 1 && max_epochs >= 0, "bad schedule");
    require(min_delta >= 0.0, "min_delta must be >= 0");
    require(threads >= 1, "threads must be >= 1");
  }
};

// Smooth absolute value lambda * sqrt(eps^2 + w^2) and its derivative.
struct L1Term {
  double value;
  double gradient;
};

inline L1Term l1_term(double w, double lambda, double eps) {
  const double r = std::sqrt(eps * eps + w * w);
  return {lambda * r, lambda * w / r};
}

// One gradient step on a pairwise weight: a loss step, then a penalty step
// with the l1 gradient taken at the loss-updated weight, stopping at exactly
// zero rather than crossing it.
inline double pair_step(double w, double grad, double lambda, double eps, double eta) {
  const double after_loss = w - eta * grad;
  const double shrink = eta * std::abs(l1_term(after_loss, lambda, eps).gradient);
  if (std::abs(after_loss) <= shrink) return 0.0;
  return after_loss > 0.0 ? after_loss - shrink : after_loss + shrink;
}

namespace detail {

inline void require_finite(double g, const char* what) {
  if (!std::isfinite(g)) throw TrainingAbort(std::string("non-finite gradient in ") + what);
}

inline void update_pairs(SymmetricPairMap& weights, const SymmetricPairMap& grads, double lambda, double eps,
                         double eta, double scale) {
  // Stored weights without a gradient this batch: penalty only.
  for (auto it = weights.begin(); it != weights.end();) {
    if (grads.find(it->first) != grads.end()) {
      ++it;
      continue;
    }
    const double next = pair_step(it->second, 0.0, lambda, eps, eta);
    if (next == 0.0) {
      it = weights.erase(it);
    } else {
      it->second = next;
      ++it;
    }
  }
  for (const auto& [key, g] : grads) {
    auto [a, b] = SymmetricPairMap::unpack(key);
    weights.set(a, b, pair_step(weights.get(a, b), scale * g, lambda, eps, eta));
  }
}

}  // namespace detail

// theta <- theta - eta * (scale * grad + l1 gradient); biases are not
// penalized. Only the groups enabled in `mask` move.
inline void apply_update(ModelParams& p, const GradientAccumulator& acc, const TrainConfig& cfg,
                         const FeatureMask& mask, double scale = 1.0) {
  if (mask.biases) {
    for (double g : acc.item_bias) detail::require_finite(g, "item biases");
    for (double g : acc.user_bias) detail::require_finite(g, "user biases");
  }
  if (mask.item_pairs) {
    for (const auto& [k, g] : acc.item_pair) detail::require_finite(g, "item-item weights");
  }
  if (mask.user_pairs) {
    for (const auto& [k, g] : acc.user_pair) detail::require_finite(g, "user-user weights");
  }
  if (mask.biases) {
    for (std::size_t k = 0; k < p.item_bias.size(); ++k) p.item_bias[k] -= cfg.eta_bias * scale * acc.item_bias[k];
    for (std::size_t k = 0; k < p.user_bias.size(); ++k) p.user_bias[k] -= cfg.eta_bias * scale * acc.user_bias[k];
  }
  if (mask.item_pairs && p.item_pairs_on()) {
    detail::update_pairs(p.item_pair, acc.item_pair, cfg.lambda1, cfg.epsilon, cfg.eta_pair, scale);
  }
  if (mask.user_pairs && p.user_pairs_on()) {
    detail::update_pairs(p.user_pair, acc.user_pair, cfg.lambda2, cfg.epsilon, cfg.eta_pair, scale);
  }
}

// Smoothed l1 penalty of the stored pairwise weights.
inline double penalty(const ModelParams& p, const TrainConfig& cfg) {
  double s = 0.0;
  if (p.item_pairs_on()) {
    for (const auto& [k, w] : p.item_pair) s += l1_term(w, cfg.lambda1, cfg.epsilon).value;
  }
  if (p.user_pairs_on()) {
    for (const auto& [k, w] : p.user_pair) s += l1_term(w, cfg.lambda2, cfg.epsilon).value;
  }
  return s;
}

struct EpochLog {
  int epoch = 0;
  int stage = 1;
  double train_pl = 0.0;  // per cell
  double valid_pl = 0.0;  // per cell, conditioned on training neighbours
  std::size_t item_edges = 0;
  std::size_t user_edges = 0;
  double wall_seconds = 0.0;
};

class TrainingDiverged : public TrainingAbort {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochLog> log) : TrainingAbort(what), log_(std::move(log)) {}
  const std::vector<EpochLog>& log() const { return log_; }

 private:
  std::vector<EpochLog> log_;
};

struct TrainResult {
  ModelParams params;  // best-validation snapshot
  std::vector<EpochLog> log;
  int best_epoch = 0;
  int stage2_epoch = -1;  // first epoch with pairwise updates, -1 if never
};

using EpochCallback = std::function<void(const EpochLog&, const ModelParams&)>;

namespace detail {

// Blocks are processed in fixed chunks whose gradients are merged in order, so
// the result does not depend on the thread count.
inline constexpr int kChunkBlocks = 8;

struct WorkerScratch {
  std::vector<int> values;
  std::vector<char> in_block;
};

class BlockTrainer {
 public:
  BlockTrainer(const RatingDataset& train, const TrainConfig& cfg, const CandidatePairs& cand, ModelParams& params)
      : train_(train), cfg_(cfg), cand_(cand), params_(params) {
    const int max_chunks = (cfg.batch + kChunkBlocks - 1) / kChunkBlocks;
    chunks_.resize(max_chunks);
    for (auto& c : chunks_) c.reset(params);
    if (cfg.method == LearningMethod::ContrastiveDivergence) {
      scratch_.resize(std::min(cfg.threads, max_chunks));
      for (auto& s : scratch_) {
        s.values = observed_values(train);
        s.in_block.assign(train.size(), 0);
      }
    }
  }

  // One pass over user blocks (by_user) or item blocks.
  void run_phase(bool by_user, int epoch, const FeatureMask& mask) {
    std::vector<int> blocks;
    const int n = by_user ? train_.num_users() : train_.num_items();
    for (int b = 0; b < n; ++b) {
      if (!(by_user ? train_.user_row(b) : train_.item_column(b)).empty()) blocks.push_back(b);
    }
    Rng order(derive_seed(cfg_.seed, static_cast<std::uint64_t>(epoch), by_user ? 1 : 2));
    order.shuffle(blocks);
    for (std::size_t start = 0; start < blocks.size(); start += cfg_.batch) {
      const std::size_t stop = std::min(blocks.size(), start + static_cast<std::size_t>(cfg_.batch));
      run_batch(std::span<const int>(blocks.data() + start, stop - start), by_user, epoch, mask);
    }
  }

 private:
  void run_batch(std::span<const int> batch, bool by_user, int epoch, const FeatureMask& mask) {
    const int nchunks = static_cast<int>((batch.size() + kChunkBlocks - 1) / kChunkBlocks);
    const int workers = std::min(nchunks, cfg_.threads);
    if (workers <= 1) {
      for (int ch = 0; ch < nchunks; ++ch) run_chunk(batch, by_user, epoch, mask, ch, 0);
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (int ch = w; ch < nchunks; ch += workers) run_chunk(batch, by_user, epoch, mask, ch, w);
        });
      }
    }
    for (int ch = 1; ch < nchunks; ++ch) chunks_[0].merge(chunks_[ch]);
    apply_update(params_, chunks_[0], cfg_, mask, 1.0 / static_cast<double>(batch.size()));
  }

  void run_chunk(std::span<const int> batch, bool by_user, int epoch, const FeatureMask& mask, int ch, int worker) {
    auto& acc = chunks_[ch];
    acc.clear();
    const std::size_t lo = static_cast<std::size_t>(ch) * kChunkBlocks;
    const std::size_t hi = std::min(batch.size(), lo + kChunkBlocks);
    for (std::size_t k = lo; k < hi; ++k) {
      const int b = batch[k];
      const auto cells = by_user ? user_block(train_, b) : item_block(train_, b);
      if (cfg_.method == LearningMethod::PseudoLikelihood) {
        pl_gradient(params_, train_, cells, cand_, mask, acc);
      } else {
        Rng rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(epoch), by_user ? 1 : 2,
                            static_cast<std::uint64_t>(b)));
        auto& s = scratch_[worker];
        cd_gradient(params_, train_, cells, cfg_.cd_steps, rng, cand_, mask, acc, s.values, s.in_block);
      }
    }
  }

  const RatingDataset& train_;
  const TrainConfig& cfg_;
  const CandidatePairs& cand_;
  ModelParams& params_;
  std::vector<GradientAccumulator> chunks_;
  std::vector<WorkerScratch> scratch_;
};

}  // namespace detail

// Alternating blockwise training. Stage 1 learns biases only until validation
// PL stalls for `patience` epochs; stage 2 adds the pairwise weights (user
// blocks move item-item weights, item blocks move user-user weights) and stops
// on the same rule. Returns the best validation snapshot.
inline TrainResult train(const RatingDataset& train, const RatingDataset& valid, const TrainConfig& cfg,
                         ModelParams params, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train.empty()) throw PreconditionError("empty training set");
  const auto started = std::chrono::steady_clock::now();
  const auto cand = candidate_pairs(train, cfg.item_cap, cfg.user_cap);
  const auto train_cells = all_cells(train);
  const auto valid_cells = all_cells(valid);
  const bool have_valid = !valid.empty();

  TrainResult result;
  auto evaluate = [&](int epoch, int stage) {
    EpochLog e;
    e.epoch = epoch;
    e.stage = stage;
    e.train_pl = pl_loss(params, train, train_cells) / static_cast<double>(train.size());
    e.valid_pl = have_valid ? pl_loss(params, train, valid, valid_cells) / static_cast<double>(valid.size())
                            : e.train_pl;
    e.item_edges = params.item_pair.size();
    e.user_edges = params.user_pair.size();
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return e;
  };

  result.log.push_back(evaluate(0, 1));
  if (on_epoch) on_epoch(result.log.back(), params);
  const double initial = result.log.back().valid_pl;
  double best = initial;
  result.params = params;

  detail::BlockTrainer trainer(train, cfg, cand, params);
  const bool user_half = params.scope != ModelScope::ItemOnly;
  const bool item_half = params.scope != ModelScope::UserOnly;
  int stage = 1;
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const bool pairs = stage == 2;
    if (user_half) trainer.run_phase(true, epoch, FeatureMask{true, pairs && params.item_pairs_on(), false});
    if (item_half) trainer.run_phase(false, epoch, FeatureMask{true, false, pairs && params.user_pairs_on()});
    result.log.push_back(evaluate(epoch, stage));
    const auto& e = result.log.back();
    if (on_epoch) on_epoch(e, params);
    if (!std::isfinite(e.valid_pl) || e.valid_pl > 10.0 * initial) {
      throw TrainingDiverged("validation PL diverged at epoch " + std::to_string(epoch) + " (" +
                                 format_exact(e.valid_pl) + " vs initial " + format_exact(initial) + ")",
                             result.log);
    }
    if (e.valid_pl < best - cfg.min_delta) {
      best = e.valid_pl;
      result.params = params;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (stage == 1) {
      if (epoch >= cfg.stage1_min_epochs && stale >= cfg.patience) {
        stage = 2;
        stale = 0;
        result.stage2_epoch = epoch + 1;
      }
    } else if (stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

inline void write_training_log_header(std::ostream& out) {
  out << "# validation PL is conditioned on training neighbours only\n";
  out << "epoch\tstage\ttrainPL\tvalidPL\titemEdges\tuserEdges\twallSeconds\n";
}

inline void write_training_log_row(std::ostream& out, const EpochLog& e) {
  out << e.epoch << '\t' << e.stage << '\t' << format_exact(e.train_pl) << '\t' << format_exact(e.valid_pl) << '\t'
      << e.item_edges << '\t' << e.user_edges << '\t' << e.wall_seconds << '\n';
}

inline void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  write_training_log_header(out);
  for (const auto& e : log) write_training_log_row(out, e);
}

}  // namespace smrf

#endif  // SMRF_LEARNING_HPP_
