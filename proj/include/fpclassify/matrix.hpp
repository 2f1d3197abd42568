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

#ifndef FPCLASSIFY_MATRIX_HPP_
#define FPCLASSIFY_MATRIX_HPP_

#include <string>
#include <unordered_set>
#include <vector>

#include "fpclassify/attribute.hpp"
#include "fpclassify/error.hpp"

namespace fpclassify {

struct MatrixRow {
  std::string fingerprinter_id;
  AttributeSet attributes;
};

// Fingerprinter matrix. Rows keep insertion order; row position is the tie-breaker when two
// fingerprinters score the same against a script.
class FingerprinterMatrix {
 public:
  void AddRow(std::string id, AttributeSet attributes) {
    if (attributes.empty()) throw Error(Errc::kEmptyFingerprinterAttributes, id);
    if (!ids_.insert(id).second) throw Error(Errc::kDuplicateScript, id);
    rows_.push_back(MatrixRow{std::move(id), std::move(attributes)});
  }

  const std::vector<MatrixRow>& rows() const { return rows_; }
  const MatrixRow& row(std::size_t i) const { return rows_.at(i); }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  bool Contains(const std::string& id) const { return ids_.count(id) != 0; }

  friend bool operator==(const FingerprinterMatrix& a, const FingerprinterMatrix& b) {
    if (a.rows_.size() != b.rows_.size()) return false;
    for (std::size_t i = 0; i < a.rows_.size(); ++i) {
      if (a.rows_[i].fingerprinter_id != b.rows_[i].fingerprinter_id) return false;
      if (!a.rows_[i].attributes.IdenticalTo(b.rows_[i].attributes)) return false;
    }
    return true;
  }

 private:
  std::vector<MatrixRow> rows_;
  std::unordered_set<std::string> ids_;
};

}  // namespace fpclassify

#endif  // FPCLASSIFY_MATRIX_HPP_
