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

#ifndef SMRF_DATASET_HPP_
#define SMRF_DATASET_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "smrf/common.hpp"

namespace smrf {

struct RatingTriple {
  std::int64_t user = 0;
  std::int64_t item = 0;
  int rating = 0;
  std::int64_t timestamp = 0;

  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

// One side of the dual index. `id` is the dense index on the *other* side
// (an item index inside a user row, a user index inside an item column);
// `cell` is the position of the triple in RatingDataset::triples().
struct Entry {
  std::int32_t id;
  std::int32_t rating;
  std::int64_t timestamp;
  std::int32_t cell;
};

// Dense numbering of raw user and item ids. Split datasets share one IdSpace so
// that a dense index means the same user/item in train, validation and test.
class IdSpace {
 public:
  IdSpace() = default;
  IdSpace(std::vector<std::int64_t> users, std::vector<std::int64_t> items)
      : users_(std::move(users)), items_(std::move(items)) {
    std::sort(users_.begin(), users_.end());
    users_.erase(std::unique(users_.begin(), users_.end()), users_.end());
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
    for (std::size_t k = 0; k < users_.size(); ++k) user_index_.emplace(users_[k], static_cast<int>(k));
    for (std::size_t k = 0; k < items_.size(); ++k) item_index_.emplace(items_[k], static_cast<int>(k));
  }

  static std::shared_ptr<const IdSpace> from_triples(std::span<const RatingTriple> triples) {
    std::vector<std::int64_t> users, items;
    users.reserve(triples.size());
    items.reserve(triples.size());
    for (const auto& t : triples) {
      users.push_back(t.user);
      items.push_back(t.item);
    }
    return std::make_shared<const IdSpace>(std::move(users), std::move(items));
  }

  int num_users() const { return static_cast<int>(users_.size()); }
  int num_items() const { return static_cast<int>(items_.size()); }
  std::int64_t user_id(int u) const { return users_[u]; }
  std::int64_t item_id(int i) const { return items_[i]; }
  std::span<const std::int64_t> user_ids() const { return users_; }
  std::span<const std::int64_t> item_ids() const { return items_; }

  // -1 when the raw id is not part of the space.
  int user_index(std::int64_t raw) const {
    auto it = user_index_.find(raw);
    return it == user_index_.end() ? -1 : it->second;
  }
  int item_index(std::int64_t raw) const {
    auto it = item_index_.find(raw);
    return it == item_index_.end() ? -1 : it->second;
  }

 private:
  std::vector<std::int64_t> users_, items_;
  std::unordered_map<std::int64_t, int> user_index_, item_index_;
};

// Immutable rating database with rows (by user) and columns (by item), both
// sorted by timestamp with ties broken by the other side's id.
class RatingDataset {
 public:
  RatingDataset() : ids_(std::make_shared<const IdSpace>()) {}

  RatingDataset(std::vector<RatingTriple> triples, int K) : K_(K), triples_(std::move(triples)) {
    if (K_ < 2) throw RangeError("rating scale K must be at least 2");
    ids_ = IdSpace::from_triples(triples_);
    build();
  }

  RatingDataset(std::vector<RatingTriple> triples, int K, std::shared_ptr<const IdSpace> ids)
      : K_(K), ids_(std::move(ids)), triples_(std::move(triples)) {
    if (K_ < 2) throw RangeError("rating scale K must be at least 2");
    build();
  }

  int K() const { return K_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  std::span<const RatingTriple> triples() const { return triples_; }
  const RatingTriple& triple(std::size_t cell) const { return triples_[cell]; }

  const std::shared_ptr<const IdSpace>& id_space() const { return ids_; }
  int num_users() const { return ids_->num_users(); }
  int num_items() const { return ids_->num_items(); }
  int user_index(std::int64_t raw) const { return ids_->user_index(raw); }
  int item_index(std::int64_t raw) const { return ids_->item_index(raw); }
  std::int64_t user_id(int u) const { return ids_->user_id(u); }
  std::int64_t item_id(int i) const { return ids_->item_id(i); }

  std::span<const Entry> user_row(int u) const {
    if (u < 0 || u >= num_users()) return {};
    return {by_user_.data() + row_start_[u], by_user_.data() + row_start_[u + 1]};
  }
  std::span<const Entry> item_column(int i) const {
    if (i < 0 || i >= num_items()) return {};
    return {by_item_.data() + col_start_[i], by_item_.data() + col_start_[i + 1]};
  }

  int cell_user(std::size_t cell) const { return cell_user_[cell]; }
  int cell_item(std::size_t cell) const { return cell_item_[cell]; }
  int cell_rating(std::size_t cell) const { return triples_[cell].rating; }

  std::optional<int> rating(int u, int i) const {
    for (const auto& e : user_row(u)) {
      if (e.id == i) return e.rating;
    }
    return std::nullopt;
  }

  // Number of users/items with at least one rating.
  int active_users() const {
    int n = 0;
    for (int u = 0; u < num_users(); ++u) n += row_start_[u + 1] > row_start_[u];
    return n;
  }
  int active_items() const {
    int n = 0;
    for (int i = 0; i < num_items(); ++i) n += col_start_[i + 1] > col_start_[i];
    return n;
  }

  // Same triples re-indexed against another id space (must contain all ids).
  RatingDataset with_ids(std::shared_ptr<const IdSpace> ids) const {
    return RatingDataset(triples_, K_, std::move(ids));
  }

 private:
  void build() {
    const int nu = ids_->num_users();
    const int ni = ids_->num_items();
    cell_user_.resize(triples_.size());
    cell_item_.resize(triples_.size());
    std::vector<std::size_t> row_count(nu + 1, 0), col_count(ni + 1, 0);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(triples_.size() * 2);
    for (std::size_t c = 0; c < triples_.size(); ++c) {
      const auto& t = triples_[c];
      if (t.rating < 1 || t.rating > K_) {
        throw RangeError("rating " + std::to_string(t.rating) + " outside 1.." + std::to_string(K_) +
                         " for (user " + std::to_string(t.user) + ", item " + std::to_string(t.item) + ")");
      }
      const int u = ids_->user_index(t.user);
      const int i = ids_->item_index(t.item);
      if (u < 0 || i < 0) {
        throw PreconditionError("id (user " + std::to_string(t.user) + ", item " + std::to_string(t.item) +
                                ") not in id space");
      }
      if (!seen.insert((static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(i)).second) {
        throw Error("duplicate rating for (user " + std::to_string(t.user) + ", item " + std::to_string(t.item) + ")");
      }
      cell_user_[c] = u;
      cell_item_[c] = i;
      ++row_count[u + 1];
      ++col_count[i + 1];
    }
    row_start_.assign(nu + 1, 0);
    col_start_.assign(ni + 1, 0);
    for (int u = 0; u < nu; ++u) row_start_[u + 1] = row_start_[u] + row_count[u + 1];
    for (int i = 0; i < ni; ++i) col_start_[i + 1] = col_start_[i] + col_count[i + 1];
    by_user_.resize(triples_.size());
    by_item_.resize(triples_.size());
    std::vector<std::size_t> row_fill(row_start_.begin(), row_start_.end() - 1);
    std::vector<std::size_t> col_fill(col_start_.begin(), col_start_.end() - 1);
    for (std::size_t c = 0; c < triples_.size(); ++c) {
      const auto& t = triples_[c];
      const int u = cell_user_[c], i = cell_item_[c];
      const auto cell = static_cast<std::int32_t>(c);
      by_user_[row_fill[u]++] = Entry{i, t.rating, t.timestamp, cell};
      by_item_[col_fill[i]++] = Entry{u, t.rating, t.timestamp, cell};
    }
    auto chrono = [](const Entry& a, const Entry& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
    };
    for (int u = 0; u < nu; ++u) std::sort(by_user_.begin() + row_start_[u], by_user_.begin() + row_start_[u + 1], chrono);
    for (int i = 0; i < ni; ++i) std::sort(by_item_.begin() + col_start_[i], by_item_.begin() + col_start_[i + 1], chrono);
  }

  int K_ = 5;
  std::shared_ptr<const IdSpace> ids_;
  std::vector<RatingTriple> triples_;
  std::vector<int> cell_user_, cell_item_;
  std::vector<Entry> by_user_, by_item_;
  std::vector<std::size_t> row_start_{0}, col_start_{0};
};

struct FormatDescriptor {
  std::string separator = "::";
  int K = 5;
};

namespace detail {

inline std::int64_t parse_int(std::string_view field, std::size_t line, const char* what) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(field) + "'", line);
  }
  return v;
}

}  // namespace detail

// Reads "user<SEP>item<SEP>rating<SEP>timestamp" lines. Blank lines and lines
// starting with '#' are skipped.
inline RatingDataset parse_ratings(std::istream& in, const FormatDescriptor& fmt = {}) {
  if (fmt.separator.empty()) throw Error("empty field separator");
  std::vector<RatingTriple> triples;
  std::string line;
  std::size_t lineno = 0;
  auto key = [](std::int64_t u, std::int64_t i) {
    return mix64(static_cast<std::uint64_t>(u)) ^ static_cast<std::uint64_t>(i);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_key;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::string_view rest(line);
    std::string_view fields[4];
    int n = 0;
    while (n < 4) {
      const auto pos = rest.find(fmt.separator);
      if (pos == std::string_view::npos) {
        fields[n++] = rest;
        rest = {};
        break;
      }
      fields[n++] = rest.substr(0, pos);
      rest.remove_prefix(pos + fmt.separator.size());
    }
    if (n != 4 || !rest.empty()) {
      throw ParseError("expected 4 fields separated by '" + fmt.separator + "'", lineno);
    }
    RatingTriple t;
    t.user = detail::parse_int(fields[0], lineno, "user id");
    t.item = detail::parse_int(fields[1], lineno, "item id");
    const auto r = detail::parse_int(fields[2], lineno, "rating");
    t.timestamp = detail::parse_int(fields[3], lineno, "timestamp");
    if (t.user < 0 || t.item < 0) throw ParseError("negative id", lineno);
    if (r < 1 || r > fmt.K) {
      throw RangeError("line " + std::to_string(lineno) + ": rating " + std::to_string(r) + " outside 1.." +
                       std::to_string(fmt.K));
    }
    t.rating = static_cast<int>(r);
    auto& bucket = by_key[key(t.user, t.item)];
    for (std::size_t prev : bucket) {
      if (triples[prev].user == t.user && triples[prev].item == t.item) {
        throw ParseError("duplicate rating for (user " + std::to_string(t.user) + ", item " +
                             std::to_string(t.item) + ")",
                         lineno);
      }
    }
    bucket.push_back(triples.size());
    triples.push_back(t);
  }
  return RatingDataset(std::move(triples), fmt.K);
}

// Drops users with fewer than `min_ratings` ratings; the id space is rebuilt so
// items left without ratings disappear from the item index.
inline RatingDataset filter_infrequent(const RatingDataset& d, int min_ratings = 30) {
  if (min_ratings < 0) throw PreconditionError("minRatings must be non-negative");
  std::vector<RatingTriple> kept;
  kept.reserve(d.size());
  for (std::size_t c = 0; c < d.size(); ++c) {
    if (static_cast<int>(d.user_row(d.cell_user(c)).size()) >= min_ratings) kept.push_back(d.triple(c));
  }
  return RatingDataset(std::move(kept), d.K());
}

struct SplitBundle {
  RatingDataset train, validation, test;
};

// Per user: the n_test most recent ratings go to test, the next n_valid most
// recent to validation, the rest to train.
inline SplitBundle chronological_split(const RatingDataset& d, int n_valid = 5, int n_test = 10) {
  if (n_valid < 0 || n_test < 0) throw PreconditionError("hold-out sizes must be non-negative");
  std::vector<RatingTriple> train, valid, test;
  for (int u = 0; u < d.num_users(); ++u) {
    const auto row = d.user_row(u);
    if (row.empty()) continue;
    const auto n = static_cast<int>(row.size());
    if (n <= n_valid + n_test) {
      throw PreconditionError("user " + std::to_string(d.user_id(u)) + " has " + std::to_string(n) +
                              " ratings; needs more than " + std::to_string(n_valid + n_test));
    }
    for (int k = 0; k < n; ++k) {
      const auto& t = d.triple(row[k].cell);
      if (k >= n - n_test) test.push_back(t);
      else if (k >= n - n_test - n_valid) valid.push_back(t);
      else train.push_back(t);
    }
  }
  const auto& ids = d.id_space();
  return {RatingDataset(std::move(train), d.K(), ids), RatingDataset(std::move(valid), d.K(), ids),
          RatingDataset(std::move(test), d.K(), ids)};
}

// Swaps the roles of users and items.
inline RatingDataset transpose_dataset(const RatingDataset& d) {
  std::vector<RatingTriple> swapped(d.triples().begin(), d.triples().end());
  for (auto& t : swapped) std::swap(t.user, t.item);
  const auto& ids = *d.id_space();
  auto space = std::make_shared<const IdSpace>(
      std::vector<std::int64_t>(ids.item_ids().begin(), ids.item_ids().end()),
      std::vector<std::int64_t>(ids.user_ids().begin(), ids.user_ids().end()));
  return RatingDataset(std::move(swapped), d.K(), std::move(space));
}

// Keeps a seeded fraction of the users (all of their ratings).
inline RatingDataset subsample_users(const RatingDataset& d, double fraction, std::uint64_t seed) {
  std::vector<char> keep(d.num_users(), 0);
  Rng rng(derive_seed(seed, 0x5b5));
  for (int u = 0; u < d.num_users(); ++u) keep[u] = rng.uniform() < fraction;
  std::vector<RatingTriple> kept;
  for (std::size_t c = 0; c < d.size(); ++c) {
    if (keep[d.cell_user(c)]) kept.push_back(d.triple(c));
  }
  return RatingDataset(std::move(kept), d.K());
}

// Keeps at most q randomly chosen ratings per user, same id space.
inline RatingDataset subsample_per_user(const RatingDataset& d, int q, std::uint64_t seed) {
  std::vector<RatingTriple> kept;
  for (int u = 0; u < d.num_users(); ++u) {
    std::vector<std::int32_t> cells;
    for (const auto& e : d.user_row(u)) cells.push_back(e.cell);
    Rng rng(derive_seed(seed, 0x9e7, static_cast<std::uint64_t>(u)));
    rng.shuffle(cells);
    if (static_cast<int>(cells.size()) > q) cells.resize(q);
    std::sort(cells.begin(), cells.end());
    for (auto c : cells) kept.push_back(d.triple(c));
  }
  return RatingDataset(std::move(kept), d.K(), d.id_space());
}

struct DatasetStats {
  int users = 0;
  int items = 0;
  std::size_t ratings = 0;
  double density = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

inline DatasetStats dataset_stats(const RatingDataset& d) {
  DatasetStats s;
  s.users = d.active_users();
  s.items = d.active_items();
  s.ratings = d.size();
  if (s.users > 0 && s.items > 0) s.density = static_cast<double>(s.ratings) / (static_cast<double>(s.users) * s.items);
  if (!d.empty()) {
    double sum = 0.0;
    for (const auto& t : d.triples()) sum += t.rating;
    s.mean = sum / static_cast<double>(d.size());
    double ss = 0.0;
    for (const auto& t : d.triples()) ss += (t.rating - s.mean) * (t.rating - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(d.size()));
  }
  return s;
}

inline void write_stats(std::ostream& out, const DatasetStats& s) {
  out << "users\titems\tratings\tdensity\tmean\tstd\n";
  out << s.users << '\t' << s.items << '\t' << s.ratings << '\t' << format_exact(s.density) << '\t'
      << format_exact(s.mean) << '\t' << format_exact(s.std) << '\n';
}

// Tab-separated working format, readable by parse_ratings with separator "\t".
inline void write_ratings(std::ostream& out, const RatingDataset& d) {
  for (const auto& t : d.triples()) {
    out << t.user << '\t' << t.item << '\t' << t.rating << '\t' << t.timestamp << '\n';
  }
}

}  // namespace smrf

#endif  // SMRF_DATASET_HPP_
