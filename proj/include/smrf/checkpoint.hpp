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

#ifndef SMRF_CHECKPOINT_HPP_
#define SMRF_CHECKPOINT_HPP_

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "smrf/common.hpp"
#include "smrf/model.hpp"

namespace smrf {

// Sectioned tab-separated text: "[name]" lines open a section, every other
// non-blank line is a row of tab-separated fields. Lines starting with '#' are
// comments and are kept apart.
struct SectionedTable {
  struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;
  };
  std::vector<std::string> comments;
  std::map<std::string, std::vector<Row>> sections;

  const std::vector<Row>& section(const std::string& name) const {
    auto it = sections.find(name);
    if (it == sections.end()) throw ParseError("missing section [" + name + "]", 0);
    return it->second;
  }
  bool has(const std::string& name) const { return sections.count(name) != 0; }
};

inline SectionedTable read_sections(std::istream& in) {
  SectionedTable t;
  std::vector<SectionedTable::Row>* current = nullptr;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line);
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      const auto name = line.substr(1, line.size() - 2);
      if (t.sections.count(name)) throw ParseError("duplicate section [" + name + "]", n);
      current = &t.sections[name];
      continue;
    }
    if (!current) throw ParseError("row outside any section", n);
    SectionedTable::Row row;
    row.line = n;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      row.fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    current->push_back(std::move(row));
  }
  return t;
}

namespace detail {

inline double field_double(const SectionedTable::Row& r, std::size_t k) {
  if (k >= r.fields.size()) throw ParseError("missing field " + std::to_string(k + 1), r.line);
  const auto& s = r.fields[k];
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ParseError("bad number '" + s + "'", r.line);
  return v;
}

inline std::int64_t field_int(const SectionedTable::Row& r, std::size_t k) {
  if (k >= r.fields.size()) throw ParseError("missing field " + std::to_string(k + 1), r.line);
  const auto& s = r.fields[k];
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ParseError("bad integer '" + s + "'", r.line);
  return v;
}

inline std::map<std::string, std::string> key_values(const std::vector<SectionedTable::Row>& rows) {
  std::map<std::string, std::string> kv;
  for (const auto& r : rows) {
    if (r.fields.size() != 2) throw ParseError("expected key<TAB>value", r.line);
    kv[r.fields[0]] = r.fields[1];
  }
  return kv;
}

inline const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("missing header key '" + key + "'", 0);
  return it->second;
}

inline double to_double(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ParseError("bad number '" + s + "'", 0);
  return v;
}

inline void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

inline void write_pairs(std::ostream& out, const SymmetricPairMap& m, std::span<const std::int64_t> raw) {
  for (const auto& [a, b, w] : m.sorted_entries()) out << raw[a] << '\t' << raw[b] << '\t' << format_exact(w) << '\n';
}

}  // namespace detail

inline void write_normalization(std::ostream& out, const NormalizationStats& n, const IdSpace& ids) {
  out << "[normalization]\n"
      << "global\t" << format_exact(n.global_mean) << '\t' << format_exact(n.global_dev) << '\t'
      << format_exact(n.smoothing) << '\n';
  for (std::size_t u = 0; u < n.per_user.size(); ++u) {
    const auto& g = n.per_user[u];
    out << "user\t" << ids.user_id(static_cast<int>(u)) << '\t' << format_exact(g.mean) << '\t'
        << format_exact(g.dev) << '\t' << g.count << '\n';
  }
  for (std::size_t i = 0; i < n.per_item.size(); ++i) {
    const auto& g = n.per_item[i];
    out << "item\t" << ids.item_id(static_cast<int>(i)) << '\t' << format_exact(g.mean) << '\t'
        << format_exact(g.dev) << '\t' << g.count << '\n';
  }
}

inline NormalizationStats read_normalization(const std::vector<SectionedTable::Row>& rows, const IdSpace& ids) {
  NormalizationStats n;
  n.per_user.resize(ids.num_users());
  n.per_item.resize(ids.num_items());
  for (const auto& r : rows) {
    if (r.fields.empty()) continue;
    if (r.fields[0] == "global") {
      n.global_mean = detail::field_double(r, 1);
      n.global_dev = detail::field_double(r, 2);
      n.smoothing = detail::field_double(r, 3);
      continue;
    }
    const bool is_user = r.fields[0] == "user";
    if (!is_user && r.fields[0] != "item") throw ParseError("normalization row kind", r.line);
    const auto raw = detail::field_int(r, 1);
    const int idx = is_user ? ids.user_index(raw) : ids.item_index(raw);
    if (idx < 0) throw ParseError("normalization row references unknown id", r.line);
    auto& g = is_user ? n.per_user[idx] : n.per_item[idx];
    g.mean = detail::field_double(r, 2);
    g.dev = detail::field_double(r, 3);
    g.count = static_cast<int>(detail::field_int(r, 4));
  }
  return n;
}

// `comments` go first as '#' lines (typically the effective configuration).
inline void write_checkpoint(std::ostream& out, const ModelParams& p, const std::vector<std::string>& comments = {}) {
  detail::write_comments(out, comments);
  const auto users = p.ids->user_ids();
  const auto items = p.ids->item_ids();
  const int w = p.bias_width();
  out << "[header]\n"
      << "format\tsmrf-mrf-1\n"
      << "K\t" << p.K << '\n'
      << "scheme\t" << to_string(p.scheme) << '\n'
      << "scope\t" << to_string(p.scope) << '\n'
      << "users\t" << users.size() << '\n'
      << "items\t" << items.size() << '\n'
      << "itemEdges\t" << p.item_pair.size() << '\n'
      << "userEdges\t" << p.user_pair.size() << '\n'
      << "globalMean\t" << format_exact(p.global_mean) << '\n';
  out << "[item-bias]\n";
  for (int i = 0; i < p.num_items(); ++i) {
    out << items[i];
    for (int k = 0; k < w; ++k) out << '\t' << format_exact(p.item_bias_row(i)[k]);
    out << '\n';
  }
  out << "[user-bias]\n";
  for (int u = 0; u < p.num_users(); ++u) {
    out << users[u];
    for (int k = 0; k < w; ++k) out << '\t' << format_exact(p.user_bias_row(u)[k]);
    out << '\n';
  }
  out << "[item-edges]\n";
  detail::write_pairs(out, p.item_pair, items);
  out << "[user-edges]\n";
  detail::write_pairs(out, p.user_pair, users);
  out << "[means]\n";
  for (int i = 0; i < p.num_items(); ++i) out << "item\t" << items[i] << '\t' << format_exact(p.item_means[i]) << '\n';
  for (int u = 0; u < p.num_users(); ++u) out << "user\t" << users[u] << '\t' << format_exact(p.user_means[u]) << '\n';
  if (p.norm) write_normalization(out, *p.norm, *p.ids);
}

namespace detail {

inline void read_pairs(const std::vector<SectionedTable::Row>& rows, const IdSpace& ids, bool items,
                       SymmetricPairMap& out) {
  for (const auto& r : rows) {
    const auto a = field_int(r, 0), b = field_int(r, 1);
    const int ia = items ? ids.item_index(a) : ids.user_index(a);
    const int ib = items ? ids.item_index(b) : ids.user_index(b);
    if (ia < 0 || ib < 0) throw ParseError("edge references unknown id", r.line);
    if (ia == ib) throw ParseError("self edge", r.line);
    out.set(ia, ib, field_double(r, 2));
  }
}

}  // namespace detail

inline ModelParams read_checkpoint(std::istream& in) {
  const auto t = read_sections(in);
  const auto head = detail::key_values(t.section("header"));
  if (detail::require_key(head, "format") != "smrf-mrf-1") throw ParseError("not an MRF checkpoint", 0);
  ModelParams p;
  p.K = static_cast<int>(detail::to_double(detail::require_key(head, "K")));
  p.scheme = parse_parameterization(detail::require_key(head, "scheme"));
  p.scope = parse_scope(detail::require_key(head, "scope"));
  p.global_mean = detail::to_double(detail::require_key(head, "globalMean"));
  const int w = p.bias_width();

  const auto& ib = t.section("item-bias");
  const auto& ub = t.section("user-bias");
  std::vector<std::int64_t> items, users;
  for (const auto& r : ib) items.push_back(detail::field_int(r, 0));
  for (const auto& r : ub) users.push_back(detail::field_int(r, 0));
  auto ids = std::make_shared<const IdSpace>(users, items);
  if (ids->num_items() != static_cast<int>(items.size()) || ids->num_users() != static_cast<int>(users.size())) {
    throw ParseError("duplicate id in bias section", 0);
  }
  if (std::to_string(users.size()) != detail::require_key(head, "users") ||
      std::to_string(items.size()) != detail::require_key(head, "items")) {
    throw ParseError("id counts disagree with header", 0);
  }
  p.ids = ids;
  p.item_bias.assign(items.size() * w, 0.0);
  p.user_bias.assign(users.size() * w, 0.0);
  for (const auto& r : ib) {
    if (r.fields.size() != static_cast<std::size_t>(w) + 1) throw ParseError("bias row width", r.line);
    double* row = p.item_bias_row(ids->item_index(detail::field_int(r, 0)));
    for (int k = 0; k < w; ++k) row[k] = detail::field_double(r, k + 1);
  }
  for (const auto& r : ub) {
    if (r.fields.size() != static_cast<std::size_t>(w) + 1) throw ParseError("bias row width", r.line);
    double* row = p.user_bias_row(ids->user_index(detail::field_int(r, 0)));
    for (int k = 0; k < w; ++k) row[k] = detail::field_double(r, k + 1);
  }
  detail::read_pairs(t.section("item-edges"), *ids, true, p.item_pair);
  detail::read_pairs(t.section("user-edges"), *ids, false, p.user_pair);

  p.item_means.assign(items.size(), p.global_mean);
  p.user_means.assign(users.size(), p.global_mean);
  for (const auto& r : t.section("means")) {
    if (r.fields.size() != 3) throw ParseError("means row width", r.line);
    const auto raw = detail::field_int(r, 1);
    const double v = detail::field_double(r, 2);
    const int idx = r.fields[0] == "item" ? ids->item_index(raw) : r.fields[0] == "user" ? ids->user_index(raw) : -2;
    if (idx == -2) throw ParseError("means row kind must be item or user", r.line);
    if (idx < 0) throw ParseError("means row references unknown id", r.line);
    (r.fields[0] == "item" ? p.item_means : p.user_means)[idx] = v;
  }

  if (t.has("normalization")) {
    p.norm = read_normalization(t.section("normalization"), *ids);
  } else if (p.scheme == Parameterization::Gaussian) {
    throw ParseError("Gaussian checkpoint lacks [normalization]", 0);
  }
  return p;
}

}  // namespace smrf

#endif  // SMRF_CHECKPOINT_HPP_
