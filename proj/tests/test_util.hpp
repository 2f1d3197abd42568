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

#ifndef FPCLASSIFY_TESTS_TEST_UTIL_HPP_
#define FPCLASSIFY_TESTS_TEST_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fpclassify/fpclassify.hpp"

namespace fpclassify::testing {

inline AttributeKey K(std::string name, std::vector<std::string> args = {}) {
  return AttributeKey{std::move(name), std::move(args)};
}

inline AttributeSet Attrs(std::initializer_list<std::string> names) {
  AttributeSet set;
  for (const auto& n : names) set.Add(K(n));
  return set;
}

inline std::string FakeHash(const std::string& seed) { return Sha256Hex(seed); }

inline ScriptRecord Script(std::string id, AttributeSet attrs) {
  ScriptRecord rec;
  rec.script_id = id;
  rec.source_url = "https://scripts.example/" + id + ".js";
  rec.content_hash = FakeHash(id);
  rec.attributes = std::move(attrs);
  return rec;
}

inline ScriptRecord Script(std::string id, std::initializer_list<std::string> names) {
  return Script(std::move(id), Attrs(names));
}

// Random subset of k0..k{universe-1}.
inline AttributeSet RandomSet(std::mt19937_64& rng, int universe, double density) {
  std::bernoulli_distribution pick(density);
  AttributeSet set;
  for (int i = 0; i < universe; ++i)
    if (pick(rng)) set.Add(K("k" + std::to_string(i)));
  return set;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("fpclassify-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fpclassify::testing

#endif  // FPCLASSIFY_TESTS_TEST_UTIL_HPP_
