/*
 * Copyright (C) 2026 The fpclassify Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FPCLASSIFY_KEY_BITS_HPP_
#define FPCLASSIFY_KEY_BITS_HPP_

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fpclassify/attribute.hpp"

namespace fpclassify {

// Dense numbering of every attribute key seen in a corpus.
class KeyUniverse {
 public:
  std::uint32_t Intern(const AttributeKey& key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  }

  std::optional<std::uint32_t> Find(const AttributeKey& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const AttributeKey& key(std::uint32_t i) const { return keys_.at(i); }
  std::size_t size() const { return keys_.size(); }

 private:
  std::map<AttributeKey, std::uint32_t> index_;
  std::vector<AttributeKey> keys_;
};

// Key set as a bitmap over a KeyUniverse. Cardinality is cached.
class KeyBits {
 public:
  KeyBits() = default;
  explicit KeyBits(std::size_t universe_size) : words_((universe_size + 63) / 64, 0) {}

  void Set(std::uint32_t i) {
    std::size_t w = i / 64;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (!(words_[w] & bit)) {
      words_[w] |= bit;
      ++count_;
    }
  }

  bool Test(std::uint32_t i) const {
    std::size_t w = i / 64;
    return w < words_.size() && (words_[w] >> (i % 64)) & 1u;
  }

  std::size_t Count() const { return count_; }
  bool Empty() const { return count_ == 0; }

  template <typename Fn>
  void ForEach(Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word) {
        int bit = std::countr_zero(word);
        fn(static_cast<std::uint32_t>(w * 64 + bit));
        word &= word - 1;
      }
    }
  }

  static KeyBits FromSet(const AttributeSet& set, KeyUniverse& universe) {
    KeyBits bits(universe.size());
    for (const auto& [k, c] : set) bits.Set(universe.Intern(k));
    return bits;
  }

  KeySet ToKeySet(const KeyUniverse& universe) const {
    KeySet out;
    ForEach([&](std::uint32_t i) { out.insert(universe.key(i)); });
    return out;
  }

  friend std::size_t IntersectionCount(const KeyBits& a, const KeyBits& b) {
    std::size_t n = std::min(a.words_.size(), b.words_.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) total += std::popcount(a.words_[i] & b.words_[i]);
    return total;
  }

  friend KeyBits IntersectionOf(const KeyBits& a, const KeyBits& b) {
    std::size_t n = std::min(a.words_.size(), b.words_.size());
    KeyBits out;
    out.words_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.words_[i] = a.words_[i] & b.words_[i];
      out.count_ += std::popcount(out.words_[i]);
    }
    return out;
  }

  friend bool operator==(const KeyBits& a, const KeyBits& b) {
    if (a.count_ != b.count_) return false;
    const auto& longer = a.words_.size() >= b.words_.size() ? a.words_ : b.words_;
    const auto& shorter = a.words_.size() >= b.words_.size() ? b.words_ : a.words_;
    for (std::size_t i = 0; i < longer.size(); ++i) {
      std::uint64_t other = i < shorter.size() ? shorter[i] : 0;
      if (longer[i] != other) return false;
    }
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t count_ = 0;
};

}  // namespace fpclassify

#endif  // FPCLASSIFY_KEY_BITS_HPP_
