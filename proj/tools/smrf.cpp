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

// smrf: command-line driver.
//
//   smrf ingest       --data ratings.dat --out_dir work
//   smrf split        --data work/ratings.tsv --out_dir work
//   smrf train        --data work/ratings.tsv --scope joint --method pl
//   smrf evaluate     --data work/ratings.tsv [--checkpoint work/model.ckpt]
//   smrf predict      --data work/ratings.tsv --checkpoint work/model.ckpt
//   smrf rank         --data work/ratings.tsv --checkpoint work/model.ckpt --user 7
//   smrf export-graph --checkpoint work/model.ckpt
//
// Every configuration key is also a flag (--lambda1 1e-3) and may be set in a
// key=value file given by --config. Flags override the file.
//
// Exit codes: 0 success, 1 usage, 2 data, 3 training abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smrf/smrf.hpp"

namespace fs = std::filesystem;

namespace {

using namespace smrf;

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kAbort = 3;

class DataError : public Error {
 public:
  using Error::Error;
};

struct Command {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> flags;
  std::string config;
  std::string checkpoint;
  std::int64_t user = -1;
  std::int64_t item = -1;
  std::string criterion = "energy";
  int top = 0;
};

void add_config_flags(Command& c) {
  c.app->add_option("--config", c.config, "key=value configuration file");
  for (const auto& k : config_keys()) c.app->add_option("--" + k.name, c.flags[k.name], k.help);
}

Settings resolve(const Command& c) {
  Settings s;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw ConfigError("cannot open config file " + c.config);
    try {
      apply_config(s, read_config(in));
    } catch (const ConfigError& e) {
      throw ConfigError(c.config + ": " + e.what());
    }
  }
  for (const auto& [key, value] : c.flags) {
    if (c.app->count("--" + key) > 0) set_config_value(s, key, value);
  }
  validate_settings(s);
  return s;
}

std::vector<std::string> header(const Settings& s, const std::string& command) {
  std::vector<std::string> h{"smrf " + command};
  for (auto& line : echo_config(s)) h.push_back(std::move(line));
  return h;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " not found: " + path);
}

std::ofstream open_output(const Settings& s, const std::string& name) {
  fs::create_directories(s.out_dir);
  const auto path = fs::path(s.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// Raw files use the configured separator; the tab-separated working format is
// recognised automatically.
RatingDataset load_ratings(const Settings& s) {
  std::ifstream in(s.data);
  if (!in) throw DataError("cannot open " + s.data);
  std::stringstream buf;
  buf << in.rdbuf();
  FormatDescriptor fmt{s.separator, s.K};
  {
    std::istringstream probe(buf.str());
    std::string line;
    while (std::getline(probe, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (line.find(s.separator) == std::string::npos && line.find('\t') != std::string::npos) fmt.separator = "\t";
      break;
    }
  }
  try {
    auto d = parse_ratings(buf, fmt);
    if (d.empty()) throw DataError(s.data + ": no ratings");
    return d;
  } catch (const ParseError& e) {
    throw DataError(s.data + ": " + e.what());
  }
}

RatingDataset filtered(const Settings& s) {
  auto d = filter_infrequent(load_ratings(s), s.min_ratings);
  if (s.subsample < 1.0) d = subsample_users(d, s.subsample, s.exp.mrf.seed);
  if (d.empty()) throw DataError("no ratings left after filtering");
  return d;
}

SplitBundle protocol_split(const Settings& s) {
  auto split = chronological_split(filtered(s), s.n_valid, s.n_test);
  if (s.per_user > 0) split.train = subsample_per_user(split.train, s.per_user, s.exp.mrf.seed);
  return split;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_rsvd_checkpoint(const std::string& text) { return text.find("format\tsmrf-rsvd-1") != std::string::npos; }

ModelParams load_mrf(const std::string& path) {
  const auto text = slurp(path);
  if (is_rsvd_checkpoint(text)) throw ConfigError(path + " is an RSVD checkpoint; this command needs an MRF");
  std::istringstream in(text);
  try {
    return read_checkpoint(in);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// The training ratings re-indexed by the checkpoint's id space.
RatingDataset context_for(const ModelParams& p, const RatingDataset& train) {
  try {
    return train.with_ids(p.ids);
  } catch (const PreconditionError&) {
    throw DataError("checkpoint does not cover the training data");
  }
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Command& c) {
  const auto s = resolve(c);
  require_file(s.data, "ratings file");
  const auto d = filtered(s);
  const auto h = header(s, "ingest");
  auto out = open_output(s, "ratings.tsv");
  detail::write_comments(out, h);
  write_ratings(out, d);
  auto stats = open_output(s, "stats.tsv");
  detail::write_comments(stats, h);
  write_stats(stats, dataset_stats(d));
  write_stats(std::cout, dataset_stats(d));
  return 0;
}

int cmd_split(const Command& c) {
  const auto s = resolve(c);
  require_file(s.data, "ratings file");
  const auto split = protocol_split(s);
  const auto h = header(s, "split");
  const std::pair<const char*, const RatingDataset*> parts[] = {
      {"train.tsv", &split.train}, {"valid.tsv", &split.validation}, {"test.tsv", &split.test}};
  std::cout << "part\tusers\titems\tratings\n";
  for (const auto& [name, d] : parts) {
    auto out = open_output(s, name);
    detail::write_comments(out, h);
    write_ratings(out, *d);
    std::cout << name << '\t' << d->active_users() << '\t' << d->active_items() << '\t' << d->size() << '\n';
  }
  return 0;
}

int cmd_train(const Command& c) {
  const auto s = resolve(c);
  require_file(s.data, "ratings file");
  const auto spec = s.model_spec();
  if (spec.kind != ModelKind::Mrf && spec.kind != ModelKind::Rsvd) {
    throw ConfigError("model '" + s.model + "' has no parameters to train; use evaluate");
  }
  const auto split = protocol_split(s);
  const auto h = header(s, "train");
  const auto exp = s.experiment();

  if (spec.kind == ModelKind::Rsvd) {
    auto r = exp.rsvd_lambda_grid ? rsvd_train_grid(split.train, split.validation, exp.rsvd, kRsvdLambdaGrid)
                                  : rsvd_train(split.train, split.validation, exp.rsvd);
    auto log = open_output(s, "rsvd.log");
    detail::write_comments(log, h);
    log << "phase\tepoch\ttrainObjective\tvalidRMSE\tvalidNLL\n";
    for (const auto& e : r.log) {
      log << e.phase << '\t' << e.epoch << '\t' << format_exact(e.train_objective) << '\t'
          << format_exact(e.valid_rmse) << '\t' << format_exact(e.valid_nll) << '\n';
    }
    auto out = open_output(s, "rsvd.ckpt");
    write_rsvd_checkpoint(out, r.params, h);
    std::cout << "wrote " << (fs::path(s.out_dir) / "rsvd.ckpt").string() << '\n';
    return 0;
  }

  auto tc = exp.mrf;
  tc.method = spec.method;
  auto log = open_output(s, "training.log");
  detail::write_comments(log, h);
  write_training_log_header(log);
  log.flush();
  auto on_epoch = [&](const EpochLog& e, const ModelParams&) {
    write_training_log_row(log, e);
    log.flush();
    std::cerr << "epoch " << e.epoch << " stage " << e.stage << " validPL " << format_exact(e.valid_pl) << '\n';
  };
  auto init = make_params(split.train, spec.scheme, spec.scope, exp.smoothing);
  const auto r = smrf::train(split.train, split.validation, tc, std::move(init), on_epoch);
  auto out = open_output(s, "model.ckpt");
  auto comments = h;
  comments.push_back("bestEpoch=" + std::to_string(r.best_epoch));
  write_checkpoint(out, r.params, comments);
  std::cout << "wrote " << (fs::path(s.out_dir) / "model.ckpt").string() << " (best epoch " << r.best_epoch << ", "
            << r.params.item_pair.size() << " item edges, " << r.params.user_pair.size() << " user edges)\n";
  return 0;
}

int cmd_evaluate(const Command& c) {
  const auto s = resolve(c);
  require_file(s.data, "ratings file");
  if (!c.checkpoint.empty()) require_file(c.checkpoint, "checkpoint");
  const auto split = protocol_split(s);
  std::string label = to_string(s.model_spec());
  std::vector<PredictionRecord> preds;
  MetricsRecord m;
  if (c.checkpoint.empty()) {
    auto r = run_experiment(split, s.model_spec(), s.experiment());
    preds = std::move(r.predictions);
    m = r.metrics;
  } else {
    const auto started = std::chrono::steady_clock::now();
    const auto text = slurp(c.checkpoint);
    if (is_rsvd_checkpoint(text)) {
      std::istringstream in(text);
      const auto p = read_rsvd_checkpoint(in);
      label = "rsvd";
      for (const auto& t : split.test.triples()) {
        const auto pr = rsvd_predict(p, p.ids->user_index(t.user), p.ids->item_index(t.item));
        preds.push_back({t.user, t.item, t.rating, pr.mean, pr.mean, pr.probs[std::lround(pr.mean) - 1],
                         pr.loglik(t.rating)});
      }
    } else {
      const auto p = load_mrf(c.checkpoint);
      label = "mrf." + to_string(p.scope) + "." + to_string(p.scheme);
      preds = predict_cells(p, context_for(p, split.train), split.test, s.exp.mrf.threads);
    }
    m = compute_metrics(preds);
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  const auto h = header(s, "evaluate");
  auto out = open_output(s, "metrics.tsv");
  detail::write_comments(out, h);
  write_metrics_header(out);
  write_metrics_row(out, label, m);
  auto pout = open_output(s, "predictions.tsv");
  write_predictions(pout, preds, h);
  write_metrics_header(std::cout);
  write_metrics_row(std::cout, label, m);
  return 0;
}

int cmd_predict(const Command& c) {
  const auto s = resolve(c);
  require_file(s.data, "ratings file");
  require_file(c.checkpoint, "checkpoint");
  if ((c.user < 0) != (c.item < 0)) throw ConfigError("--user and --item go together");
  const auto split = protocol_split(s);
  const auto p = load_mrf(c.checkpoint);
  const auto context = context_for(p, split.train);
  std::vector<std::pair<std::int64_t, std::int64_t>> cells;
  if (c.user >= 0) {
    cells.emplace_back(c.user, c.item);
  } else {
    for (const auto& t : split.test.triples()) cells.emplace_back(t.user, t.item);
  }
  detail::write_comments(std::cout, header(s, "predict"));
  std::cout << "user\titem\tmap\texpected\tconfidence";
  for (int k = 1; k <= p.K; ++k) std::cout << "\tp" << k;
  std::cout << '\n';
  for (const auto& [user, item] : cells) {
    const auto pr = predict(p, context, context.user_index(user), context.item_index(item));
    std::cout << user << '\t' << item << '\t' << pr.map_rating << '\t' << format_exact(pr.expected_rating) << '\t'
              << format_exact(pr.confidence);
    for (int k = 1; k <= p.K; ++k) std::cout << '\t' << format_exact(pr.distribution[k]);
    std::cout << '\n';
  }
  return 0;
}

int cmd_rank(const Command& c) {
  const auto s = resolve(c);
  require_file(s.data, "ratings file");
  require_file(c.checkpoint, "checkpoint");
  if (c.user < 0) throw ConfigError("--user is required");
  if (c.criterion != "energy" && c.criterion != "free-energy") {
    throw ConfigError("--criterion must be energy or free-energy");
  }
  const auto split = protocol_split(s);
  const auto p = load_mrf(c.checkpoint);
  const auto context = context_for(p, split.train);
  const int u = context.user_index(c.user);
  if (u < 0) throw DataError("unknown user " + std::to_string(c.user));
  std::vector<char> rated(context.num_items(), 0);
  for (const auto& e : context.user_row(u)) rated[e.id] = 1;
  std::vector<int> candidates;
  for (int i = 0; i < context.num_items(); ++i) {
    if (!rated[i]) candidates.push_back(i);
  }
  auto ranked = c.criterion == "energy" ? rank_energy(p, context, u, candidates)
                                        : rank_free_energy(p, context, u, candidates);
  if (c.top > 0 && static_cast<std::size_t>(c.top) < ranked.size()) ranked.resize(c.top);
  detail::write_comments(std::cout, header(s, "rank"));
  std::cout << "user\titem\tcriterion\tscore\trank\n";
  write_ranking(std::cout, c.user, ranked, c.criterion, *p.ids);
  return 0;
}

int cmd_export_graph(const Command& c) {
  const auto s = resolve(c);
  require_file(c.checkpoint, "checkpoint");
  const auto p = load_mrf(c.checkpoint);
  const CorrelationGraph graphs[] = {extract_graph(p, GraphKind::Item, s.graph_threshold),
                                     extract_graph(p, GraphKind::User, s.graph_threshold)};
  auto out = open_output(s, "graph.tsv");
  write_graph(out, graphs, header(s, "export-graph"));
  for (const auto& g : graphs) {
    std::cout << to_string(g.kind) << "\tedges " << g.edges.size() << "\tsparsity " << format_exact(g.sparsity)
              << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Markov random fields for collaborative filtering"};
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Command&);
    bool model_io;
  };
  const Entry entries[] = {
      {"ingest", "parse, filter and cache a ratings file", cmd_ingest, false},
      {"split", "write the chronological train/validation/test split", cmd_split, false},
      {"train", "fit an MRF or RSVD model", cmd_train, false},
      {"evaluate", "score the test split (baseline, fresh fit or checkpoint)", cmd_evaluate, true},
      {"predict", "predictive distributions from a checkpoint", cmd_predict, true},
      {"rank", "rank a user's unrated items", cmd_rank, true},
      {"export-graph", "write the learned correlation graphs", cmd_export_graph, true},
  };
  std::vector<Command> commands(std::size(entries));
  for (std::size_t k = 0; k < std::size(entries); ++k) {
    auto& c = commands[k];
    c.app = app.add_subcommand(entries[k].name, entries[k].help);
    add_config_flags(c);
    if (entries[k].model_io) c.app->add_option("--checkpoint", c.checkpoint, "model checkpoint");
  }
  for (auto* name : {"predict", "rank"}) {
    auto& c = commands[name == std::string("predict") ? 4 : 5];
    c.app->add_option("--user", c.user, "raw user id");
    if (name == std::string("predict")) c.app->add_option("--item", c.item, "raw item id");
  }
  commands[5].app->add_option("--criterion", commands[5].criterion, "energy | free-energy");
  commands[5].app->add_option("--top", commands[5].top, "keep the best N items");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  for (std::size_t k = 0; k < std::size(entries); ++k) {
    if (!commands[k].app->parsed()) continue;
    try {
      return entries[k].run(commands[k]);
    } catch (const ConfigError& e) {
      std::cerr << "smrf: " << e.what() << '\n';
      return kUsage;
    } catch (const TrainingAbort& e) {
      std::cerr << "smrf: training aborted: " << e.what() << '\n';
      return kAbort;
    } catch (const std::exception& e) {
      std::cerr << "smrf: " << e.what() << '\n';
      return kData;
    }
  }
  return kUsage;
}
