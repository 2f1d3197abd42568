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

#ifndef FPCLASSIFY_SIMILARITY_HPP_
#define FPCLASSIFY_SIMILARITY_HPP_

#include <algorithm>
#include <compare>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpclassify/attribute.hpp"
#include "fpclassify/error.hpp"
#include "fpclassify/key_bits.hpp"
#include "fpclassify/matrix.hpp"

namespace fpclassify {

// An exact Jaccard value |A n B| / |A u B|. Kept unreduced so the counts it
// was built from stay visible; ordering and equality are by rational value.
struct Score {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;

  static Score Zero() { return {0, 1}; }
  static Score One() { return {1, 1}; }

  bool IsOne() const { return denominator != 0 && numerator == denominator; }
  double ToDouble() const {
    return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
  }

  friend std::strong_ordering operator<=>(const Score& a, const Score& b) {
    unsigned __int128 lhs = static_cast<unsigned __int128>(a.numerator) * b.denominator;
    unsigned __int128 rhs = static_cast<unsigned __int128>(b.numerator) * a.denominator;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const Score& a, const Score& b) { return (a <=> b) == 0; }

  std::string ToString() const {
    return std::to_string(numerator) + "/" + std::to_string(denominator);
  }
};

// Set algebra needed by the scoring templates. Specialized for the three
// representations in use: AttributeSet, KeySet and KeyBits.
template <typename Set>
struct SetAlgebra;

template <>
struct SetAlgebra<KeySet> {
  static std::size_t Size(const KeySet& s) { return s.size(); }
  static std::size_t IntersectionSize(const KeySet& a, const KeySet& b) {
    std::size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
      if (*ia < *ib) {
        ++ia;
      } else if (*ib < *ia) {
        ++ib;
      } else {
        ++n;
        ++ia;
        ++ib;
      }
    }
    return n;
  }
  static KeySet Intersection(const KeySet& a, const KeySet& b) {
    KeySet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
  }
  static bool Equal(const KeySet& a, const KeySet& b) { return a == b; }
};

template <>
struct SetAlgebra<AttributeSet> {
  static std::size_t Size(const AttributeSet& s) { return s.size(); }
  static std::size_t IntersectionSize(const AttributeSet& a, const AttributeSet& b) {
    std::size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
      if (ia->first < ib->first) {
        ++ia;
      } else if (ib->first < ia->first) {
        ++ib;
      } else {
        ++n;
        ++ia;
        ++ib;
      }
    }
    return n;
  }
  static AttributeSet Intersection(const AttributeSet& a, const AttributeSet& b) {
    return fpclassify::Intersect(a, b);
  }
  static bool Equal(const AttributeSet& a, const AttributeSet& b) { return a == b; }
};

template <>
struct SetAlgebra<KeyBits> {
  static std::size_t Size(const KeyBits& s) { return s.Count(); }
  static std::size_t IntersectionSize(const KeyBits& a, const KeyBits& b) {
    return IntersectionCount(a, b);
  }
  static KeyBits Intersection(const KeyBits& a, const KeyBits& b) { return IntersectionOf(a, b); }
  static bool Equal(const KeyBits& a, const KeyBits& b) { return a == b; }
};

template <typename Set>
concept KeySetLike = requires(const Set& a, const Set& b) {
  { SetAlgebra<Set>::Size(a) } -> std::convertible_to<std::size_t>;
  { SetAlgebra<Set>::IntersectionSize(a, b) } -> std::convertible_to<std::size_t>;
  { SetAlgebra<Set>::Intersection(a, b) } -> std::same_as<Set>;
  { SetAlgebra<Set>::Equal(a, b) } -> std::convertible_to<bool>;
};

inline Score JaccardFromCounts(std::size_t size_a, std::size_t size_b, std::size_t shared) {
  std::size_t uni = size_a + size_b - shared;
  if (uni == 0) return Score::Zero();  // jaccard(empty, empty) := 0
  return Score{shared, uni};
}

template <KeySetLike Set>
Score Jaccard(const Set& a, const Set& b) {
  using Ops = SetAlgebra<Set>;
  return JaccardFromCounts(Ops::Size(a), Ops::Size(b), Ops::IntersectionSize(a, b));
}

// Best row so far for one script.
struct RowMatch {
  Score score;
  std::size_t row = 0;
  std::size_t intersection_size = 0;
};

// A candidate replaces the incumbent only when strictly better: higher score,
// or the same score with a larger intersection. Earlier rows therefore win
// full ties.
inline bool IsBetterMatch(const Score& score, std::size_t intersection_size, const RowMatch& incumbent) {
  auto cmp = score <=> incumbent.score;
  if (cmp != 0) return cmp > 0;
  return intersection_size > incumbent.intersection_size;
}

// Folds rows [begin, end) into `best`. `row_set(i)` yields row i's set.
// Feeding rows in several batches gives the same answer as one batch.
template <KeySetLike Set, typename RowSetFn>
bool FoldBestMatch(const Set& script, std::size_t begin, std::size_t end, RowSetFn&& row_set,
                   std::optional<RowMatch>& best) {
  using Ops = SetAlgebra<Set>;
  bool changed = false;
  const std::size_t script_size = Ops::Size(script);
  for (std::size_t i = begin; i < end; ++i) {
    const Set& row = row_set(i);
    std::size_t shared = Ops::IntersectionSize(script, row);
    Score score = JaccardFromCounts(script_size, Ops::Size(row), shared);
    if (!best || IsBetterMatch(score, shared, *best)) {
      best = RowMatch{score, i, shared};
      changed = true;
    }
  }
  return changed;
}

// Largest |clean n fp_intersection| seen so far.
template <KeySetLike Set>
struct CleanMatch {
  std::optional<std::size_t> clean_index;
  std::size_t size = 0;
  Set intersection{};
};

// Folds cleans [begin, end). Earlier cleans win equal sizes.
template <KeySetLike Set, typename CleanSetFn>
void FoldBiggestIntersection(const Set& fp_intersection, std::size_t begin, std::size_t end,
                             CleanSetFn&& clean_set, CleanMatch<Set>& best) {
  using Ops = SetAlgebra<Set>;
  for (std::size_t i = begin; i < end; ++i) {
    if (best.clean_index && best.size == Ops::Size(fp_intersection)) return;  // cannot grow
    const Set& clean = clean_set(i);
    std::size_t shared = Ops::IntersectionSize(clean, fp_intersection);
    if (!best.clean_index || shared > best.size) {
      best.clean_index = i;
      best.size = shared;
      best.intersection = Ops::Intersection(clean, fp_intersection);
    }
  }
}

// The retained tuple for one script: best score, winning fingerprinter and
// the shared keys.
struct SimilarityResult {
  std::string script_id;
  Score score;
  std::optional<std::string> matched_fingerprinter_id;
  KeySet intersection;
};

inline SimilarityResult ScoreAgainstMatrix(const std::string& script_id, const AttributeSet& attributes,
                                           const FingerprinterMatrix& matrix) {
  if (matrix.empty()) throw Error(Errc::kEmptyMatrix, "cannot score " + script_id);
  std::optional<RowMatch> best;
  FoldBestMatch(attributes, 0, matrix.size(),
                [&](std::size_t i) -> const AttributeSet& { return matrix.row(i).attributes; }, best);
  const MatrixRow& row = matrix.row(best->row);
  return SimilarityResult{script_id, best->score, row.fingerprinter_id,
                          Intersect(attributes, row.attributes).Keys()};
}

inline SimilarityResult ScoreAgainstMatrix(const ScriptRecord& script, const FingerprinterMatrix& matrix) {
  return ScoreAgainstMatrix(script.script_id, script.attributes, matrix);
}

// Ranking order: score descending, then intersection size descending, then
// script id ascending. Total over distinct ids.
inline bool RanksBefore(const Score& score_a, std::size_t inter_a, const std::string& id_a,
                        const Score& score_b, std::size_t inter_b, const std::string& id_b) {
  auto cmp = score_a <=> score_b;
  if (cmp != 0) return cmp > 0;
  if (inter_a != inter_b) return inter_a > inter_b;
  return id_a < id_b;
}

inline std::vector<SimilarityResult> RankScripts(std::vector<SimilarityResult> results) {
  std::sort(results.begin(), results.end(), [](const SimilarityResult& a, const SimilarityResult& b) {
    return RanksBefore(a.score, a.intersection.size(), a.script_id, b.score, b.intersection.size(),
                       b.script_id);
  });
  return results;
}

inline KeySet BiggestCleanIntersection(std::span<const AttributeSet> clean_sets, const KeySet& fp_intersection) {
  std::vector<KeySet> keys;
  keys.reserve(clean_sets.size());
  for (const auto& c : clean_sets) keys.push_back(c.Keys());
  CleanMatch<KeySet> best;
  FoldBiggestIntersection(fp_intersection, 0, keys.size(),
                          [&](std::size_t i) -> const KeySet& { return keys[i]; }, best);
  return best.intersection;
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_SIMILARITY_HPP_
