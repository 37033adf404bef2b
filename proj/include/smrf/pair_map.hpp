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

#ifndef SMRF_PAIR_MAP_HPP_
#define SMRF_PAIR_MAP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

namespace smrf {

// Sparse symmetric weights over unordered pairs {a, b}, a != b. Each pair is
// stored once under (min, max); a missing key reads as 0.
class SymmetricPairMap {
 public:
  using Key = std::uint64_t;

  static Key key(int a, int b) {
    if (a == b) throw std::invalid_argument("self pair");
    const auto lo = static_cast<std::uint32_t>(std::min(a, b));
    const auto hi = static_cast<std::uint32_t>(std::max(a, b));
    return (static_cast<Key>(lo) << 32) | hi;
  }
  static std::pair<int, int> unpack(Key k) {
    return {static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)};
  }

  double get(int a, int b) const {
    if (a == b || map_.empty()) return 0.0;
    auto it = map_.find(key(a, b));
    return it == map_.end() ? 0.0 : it->second;
  }

  // Storing exactly 0 erases the pair.
  void set(int a, int b, double v) {
    const Key k = key(a, b);
    if (v == 0.0) map_.erase(k);
    else map_[k] = v;
  }

  void add(int a, int b, double v) { map_[key(a, b)] += v; }

  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }
  void clear() { map_.clear(); }
  void reserve(std::size_t n) { map_.reserve(n); }

  std::size_t count_above(double threshold) const {
    std::size_t n = 0;
    for (const auto& [k, v] : map_) n += std::abs(v) > threshold;
    return n;
  }

  // (a, b, weight) with a < b, sorted.
  std::vector<std::tuple<int, int, double>> sorted_entries() const {
    std::vector<std::pair<Key, double>> kv(map_.begin(), map_.end());
    std::sort(kv.begin(), kv.end());
    std::vector<std::tuple<int, int, double>> out;
    out.reserve(kv.size());
    for (const auto& [k, v] : kv) {
      auto [a, b] = unpack(k);
      out.emplace_back(a, b, v);
    }
    return out;
  }

  auto begin() { return map_.begin(); }
  auto end() { return map_.end(); }
  auto begin() const { return map_.begin(); }
  auto end() const { return map_.end(); }
  template <class It>
  auto erase(It it) {
    return map_.erase(it);
  }
  auto find(Key k) const { return map_.find(k); }

  bool operator==(const SymmetricPairMap& o) const { return map_ == o.map_; }

 private:
  std::unordered_map<Key, double> map_;
};

}  // namespace smrf

#endif  // SMRF_PAIR_MAP_HPP_
