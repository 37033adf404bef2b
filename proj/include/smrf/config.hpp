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

#ifndef SMRF_CONFIG_HPP_
#define SMRF_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "smrf/common.hpp"
#include "smrf/harness.hpp"

namespace smrf {

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Everything a run depends on. Flat so that it can be echoed as key=value
// lines and read back.
struct Settings {
  std::string data;
  std::string separator = "::";
  int K = 5;
  int min_ratings = 30;
  int n_valid = 5;
  int n_test = 10;
  double subsample = 1.0;  // fraction of users kept
  int per_user = 0;        // >0: keep this many training ratings per user
  std::string out_dir = ".";
  std::string model = "mrf";  // "mrf" uses scheme/scope/method below
  Parameterization scheme = Parameterization::Smoothness;
  ModelScope scope = ModelScope::Joint;
  double graph_threshold = 0.0;
  ExperimentConfig exp;

  Settings() { exp.mrf.threads = default_threads(); }

  static int default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
  }

  // The single seed drives every random stream.
  ExperimentConfig experiment() const {
    auto e = exp;
    e.rsvd.seed = e.mrf.seed;
    e.rsvd.smoothing = e.smoothing;
    return e;
  }

  ModelSpec model_spec() const {
    if (model == "mrf") return {ModelKind::Mrf, scope, scheme, exp.mrf.method};
    return parse_model_spec(model);
  }
};

namespace detail {

template <class T>
inline T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean '" + std::string(v) + "' for " + std::string(key));
}

}  // namespace detail

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const Settings&)> get;
  std::function<void(Settings&, std::string_view)> set;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    auto str = [&](std::string name, std::string help, std::string Settings::*m) {
      k.push_back({name, help, [m](const Settings& s) { return s.*m; },
                   [m](Settings& s, std::string_view v) { s.*m = std::string(v); }});
    };
    auto num = [&](std::string name, std::string help, auto get_ref) {
      using T = std::remove_reference_t<decltype(get_ref(std::declval<Settings&>()))>;
      k.push_back({name, help,
                   [get_ref](const Settings& s) {
                     auto& v = get_ref(const_cast<Settings&>(s));
                     if constexpr (std::is_floating_point_v<T>) return format_exact(v);
                     else return std::to_string(v);
                   },
                   [get_ref, name](Settings& s, std::string_view v) { get_ref(s) = detail::parse_number<T>(name, v); }});
    };
    auto flag = [&](std::string name, std::string help, auto get_ref) {
      k.push_back({name, help, [get_ref](const Settings& s) {
                     return std::string(get_ref(const_cast<Settings&>(s)) ? "true" : "false");
                   },
                   [get_ref, name](Settings& s, std::string_view v) { get_ref(s) = detail::parse_bool(name, v); }});
    };

    str("data", "ratings file", &Settings::data);
    str("separator", "field separator of the ratings file", &Settings::separator);
    num("K", "rating scale 1..K", [](Settings& s) -> int& { return s.K; });
    num("min_ratings", "drop users with fewer ratings", [](Settings& s) -> int& { return s.min_ratings; });
    num("n_valid", "validation ratings per user", [](Settings& s) -> int& { return s.n_valid; });
    num("n_test", "test ratings per user", [](Settings& s) -> int& { return s.n_test; });
    num("subsample", "fraction of users kept", [](Settings& s) -> double& { return s.subsample; });
    num("per_user", "training ratings kept per user (0: all)", [](Settings& s) -> int& { return s.per_user; });
    str("out_dir", "output directory", &Settings::out_dir);
    str("model", "mrf or a baseline/MRF spec", &Settings::model);
    k.push_back({"scheme", "linear | gauss | smooth", [](const Settings& s) { return to_string(s.scheme); },
                 [](Settings& s, std::string_view v) { s.scheme = parse_parameterization(v); }});
    k.push_back({"scope", "user | item | joint", [](const Settings& s) { return to_string(s.scope); },
                 [](Settings& s, std::string_view v) { s.scope = parse_scope(v); }});
    k.push_back({"method", "pl | cd", [](const Settings& s) { return to_string(s.exp.mrf.method); },
                 [](Settings& s, std::string_view v) { s.exp.mrf.method = parse_method(v); }});
    num("smoothing", "normalization smoothing count", [](Settings& s) -> double& { return s.exp.smoothing; });
    num("lambda1", "item-item l1 penalty", [](Settings& s) -> double& { return s.exp.mrf.lambda1; });
    num("lambda2", "user-user l1 penalty", [](Settings& s) -> double& { return s.exp.mrf.lambda2; });
    num("eta_bias", "bias learning rate", [](Settings& s) -> double& { return s.exp.mrf.eta_bias; });
    num("eta_pair", "pairwise learning rate", [](Settings& s) -> double& { return s.exp.mrf.eta_pair; });
    num("batch", "blocks per update", [](Settings& s) -> int& { return s.exp.mrf.batch; });
    num("epsilon", "smooth l1 epsilon", [](Settings& s) -> double& { return s.exp.mrf.epsilon; });
    num("cd_steps", "Gibbs scans per CD gradient", [](Settings& s) -> int& { return s.exp.mrf.cd_steps; });
    num("item_cap", "item neighbourhood cap m (0: all)", [](Settings& s) -> int& { return s.exp.mrf.item_cap; });
    num("user_cap", "user neighbourhood cap n (0: all)", [](Settings& s) -> int& { return s.exp.mrf.user_cap; });
    num("stage1_min_epochs", "minimum bias-only epochs",
        [](Settings& s) -> int& { return s.exp.mrf.stage1_min_epochs; });
    num("patience", "epochs without validation gain", [](Settings& s) -> int& { return s.exp.mrf.patience; });
    num("max_epochs", "epoch limit", [](Settings& s) -> int& { return s.exp.mrf.max_epochs; });
    num("min_delta", "required validation PL gain", [](Settings& s) -> double& { return s.exp.mrf.min_delta; });
    num("seed", "random seed", [](Settings& s) -> std::uint64_t& { return s.exp.mrf.seed; });
    num("threads", "worker threads", [](Settings& s) -> int& { return s.exp.mrf.threads; });
    num("rsvd_F", "RSVD latent dimension", [](Settings& s) -> int& { return s.exp.rsvd.F; });
    num("rsvd_lambda", "RSVD prior precision", [](Settings& s) -> double& { return s.exp.rsvd.lambda; });
    flag("rsvd_grid", "tune RSVD lambda over {0.01, 0.1, 1}", [](Settings& s) -> bool& { return s.exp.rsvd_lambda_grid; });
    num("rsvd_var_reg", "RSVD log-variance prior precision", [](Settings& s) -> double& { return s.exp.rsvd.var_reg; });
    num("rsvd_eta", "RSVD learning rate", [](Settings& s) -> double& { return s.exp.rsvd.eta; });
    num("rsvd_eta_var", "RSVD variance learning rate", [](Settings& s) -> double& { return s.exp.rsvd.eta_var; });
    num("rsvd_init_scale", "RSVD factor init scale", [](Settings& s) -> double& { return s.exp.rsvd.init_scale; });
    num("rsvd_max_epochs", "RSVD mean-phase epoch limit", [](Settings& s) -> int& { return s.exp.rsvd.max_epochs; });
    num("rsvd_var_epochs", "RSVD variance-phase epoch limit", [](Settings& s) -> int& { return s.exp.rsvd.var_epochs; });
    num("rsvd_finetune_epochs", "RSVD joint-phase epoch limit",
        [](Settings& s) -> int& { return s.exp.rsvd.finetune_epochs; });
    num("rsvd_patience", "RSVD early stopping patience", [](Settings& s) -> int& { return s.exp.rsvd.patience; });
    flag("rsvd_normalize", "RSVD on normalized ratings", [](Settings& s) -> bool& { return s.exp.rsvd.normalize; });
    num("knn_max_neighbors", "kNN neighbour limit", [](Settings& s) -> int& { return s.exp.knn.max_neighbors; });
    num("knn_sim_floor", "kNN minimum |similarity|", [](Settings& s) -> double& { return s.exp.knn.sim_floor; });
    num("graph_threshold", "minimum |weight| exported", [](Settings& s) -> double& { return s.graph_threshold; });
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

inline void set_config_value(Settings& s, std::string_view key, std::string_view value) {
  const auto* k = find_config_key(key);
  if (!k) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  try {
    k->set(s, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// key=value lines; '#' starts a comment line.
inline std::vector<std::pair<std::string, std::string>> read_config(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(n) + ": expected key=value");
    auto key = trim(std::string_view(t).substr(0, eq));
    if (!find_config_key(key)) throw ConfigError("line " + std::to_string(n) + ": unknown key '" + key + "'");
    kv.emplace_back(std::move(key), trim(std::string_view(t).substr(eq + 1)));
  }
  return kv;
}

inline void apply_config(Settings& s, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) set_config_value(s, k, v);
}

// Every key as "key=value", in registry order.
inline std::vector<std::string> echo_config(const Settings& s) {
  std::vector<std::string> out;
  for (const auto& k : config_keys()) out.push_back(k.name + "=" + k.get(s));
  return out;
}

// Cross-field checks; nothing touches the filesystem before this passes.
inline void validate_settings(const Settings& s) {
  if (s.K < 2) throw ConfigError("K must be >= 2");
  if (s.min_ratings < 0 || s.n_valid < 0 || s.n_test < 0) throw ConfigError("protocol counts must be >= 0");
  if (!(s.subsample > 0.0 && s.subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  if (s.per_user < 0) throw ConfigError("per_user must be >= 0");
  if (s.separator.empty()) throw ConfigError("separator must not be empty");
  if (!(s.graph_threshold >= 0.0)) throw ConfigError("graph_threshold must be >= 0");
  if (s.model != "mrf") {
    try {
      parse_model_spec(s.model);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    s.exp.mrf.validate();
    s.exp.rsvd.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace smrf

#endif  // SMRF_CONFIG_HPP_
