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

#ifndef FPCLASSIFY_IO_HPP_
#define FPCLASSIFY_IO_HPP_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fpclassify/error.hpp"

namespace fpclassify {

inline std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(Errc::kIoFailure, "read failed: " + path.string());
  return buf.str();
}

inline void WriteTextFile(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, "cannot open " + path.string() + " for writing");
  out << contents;
  out.flush();
  if (!out) throw Error(Errc::kIoFailure, "write failed: " + path.string());
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_IO_HPP_
