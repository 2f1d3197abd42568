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

#ifndef FPCLASSIFY_STORE_HPP_
#define FPCLASSIFY_STORE_HPP_

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <string>
#include <system_error>

#include "json.hpp"

#include "fpclassify/classifier.hpp"
#include "fpclassify/codec.hpp"
#include "fpclassify/error.hpp"
#include "fpclassify/ingestion.hpp"
#include "fpclassify/io.hpp"

// Snapshot file, format_version 1:
//
//   {
//     "format_version": 1,
//     "created_at": "2026-01-01T00:00:00Z",
//     "corpus_digest": <sha256 over sorted content hashes>,
//     "manifest_digest": <sha256 over manifest ids, one per line>,
//     "state": {
//       "options": {"identity": "name-args", "rescore_labeled": false},
//       "matrix": [row ids...], "ground_truth_rows": n,
//       "suspects": [...], "cleans": [...], "unknowns": [...], "unlabeled": [...],
//       "pass_count": n, "manual_decision_count": n, "finished": bool,
//       "rescore_conflicts": n,
//       "walk": {"open": bool, "order": [...], "cursor": n, "pending": id|null},
//       "decision_log": [{"seq": 1, ...}, ...]
//     }
//   }
//
// Matrix rows and cleans are stored by id; their attribute sets come from the
// corpus, which the digest pins. decision_log seq numbers run 1..N with no
// gaps.
namespace fpclassify {

inline constexpr int kSnapshotFormatVersion = 1;

struct SnapshotHeader {
  int format_version = kSnapshotFormatVersion;
  std::string corpus_digest;
  std::string manifest_digest;
  std::string created_at;
};

struct SaveHooks {
  // Runs after the temp file is complete and before it replaces the target.
  std::function<void(const std::filesystem::path& temp)> before_rename;
};

inline std::string UtcNow() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json StateToJson(const SessionState& s) {
  nlohmann::json matrix = nlohmann::json::array();
  for (const auto& row : s.matrix.rows()) matrix.push_back(row.fingerprinter_id);
  return {{"options",
           {{"identity", IdentityModeName(s.options.identity)}, {"rescore_labeled", s.options.rescore_labeled}}},
          {"matrix", std::move(matrix)},
          {"ground_truth_rows", s.ground_truth_rows},
          {"suspects", s.suspects},
          {"cleans", s.cleans},
          {"unknowns", s.unknowns},
          {"unlabeled", s.unlabeled},
          {"pass_count", s.pass_count},
          {"manual_decision_count", s.manual_decision_count},
          {"finished", s.finished},
          {"rescore_conflicts", s.rescore_conflicts},
          {"walk",
           {{"open", s.walk.open},
            {"order", s.walk.order},
            {"cursor", s.walk.cursor},
            {"pending", s.walk.pending ? nlohmann::json(*s.walk.pending) : nlohmann::json(nullptr)}}},
          {"decision_log", DecisionLogToJson(s.decision_log)}};
}

inline SessionState StateFromJson(const nlohmann::json& j, const Corpus& corpus) {
  SessionState s;
  try {
    const auto& opts = j.at("options");
    auto identity = ParseIdentityMode(opts.at("identity").get<std::string>());
    if (!identity) throw Error(Errc::kCorruptSnapshot, "unknown identity mode");
    s.options.identity = *identity;
    s.options.rescore_labeled = opts.at("rescore_labeled").get<bool>();
    for (const auto& id_json : j.at("matrix")) {
      auto id = id_json.get<std::string>();
      const ScriptRecord* rec = corpus.Find(id);
      if (rec == nullptr) throw Error(Errc::kCorruptSnapshot, "matrix row " + id + " not in corpus");
      s.matrix.AddRow(id, rec->attributes);
    }
    s.ground_truth_rows = j.at("ground_truth_rows").get<std::size_t>();
    s.suspects = j.at("suspects").get<std::vector<std::string>>();
    s.cleans = j.at("cleans").get<std::vector<std::string>>();
    s.unknowns = j.at("unknowns").get<std::vector<std::string>>();
    s.unlabeled = j.at("unlabeled").get<std::set<std::string>>();
    s.pass_count = j.at("pass_count").get<std::uint64_t>();
    s.manual_decision_count = j.at("manual_decision_count").get<std::uint64_t>();
    s.finished = j.at("finished").get<bool>();
    s.rescore_conflicts = j.at("rescore_conflicts").get<std::uint64_t>();
    const auto& walk = j.at("walk");
    s.walk.open = walk.at("open").get<bool>();
    s.walk.order = walk.at("order").get<std::vector<std::string>>();
    s.walk.cursor = walk.at("cursor").get<std::size_t>();
    if (!walk.at("pending").is_null()) s.walk.pending = walk["pending"].get<std::string>();
    std::uint64_t expected_seq = 1;
    for (const auto& e : j.at("decision_log")) {
      s.decision_log.push_back(LabelEventFromJson(e));
      if (s.decision_log.back().seq != expected_seq++)
        throw Error(Errc::kCorruptSnapshot, "decision log sequence gap");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kCorruptSnapshot, e.what());
  }
  if (s.walk.cursor > s.walk.order.size()) throw Error(Errc::kCorruptSnapshot, "walk cursor out of range");
  for (const auto& id : s.walk.order)
    if (!corpus.IndexOf(id)) throw Error(Errc::kCorruptSnapshot, "walk entry " + id + " not in corpus");
  if (auto err = CheckPartition(s, corpus)) throw Error(Errc::kCorruptSnapshot, *err);
  return s;
}

namespace detail {

inline void FsyncFile(const std::filesystem::path& path) {
  int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace detail

// Atomic replace: write "<path>.tmp", copy the current file to "<path>.bak",
// then rename the temp file over `path`.
inline void SaveSnapshot(const SessionState& state, const Corpus& corpus, const std::string& manifest_digest,
                         const std::filesystem::path& path, const SaveHooks& hooks = {}) {
  if (auto err = CheckPartition(state, corpus)) throw Error(Errc::kConsistencyError, *err);
  nlohmann::json doc = {{"format_version", kSnapshotFormatVersion},
                        {"created_at", UtcNow()},
                        {"corpus_digest", corpus.Digest()},
                        {"manifest_digest", manifest_digest},
                        {"state", StateToJson(state)}};
  std::filesystem::path temp = path;
  temp += ".tmp";
  std::filesystem::path backup = path;
  backup += ".bak";
  try {
    WriteTextFile(temp, doc.dump(1) + "\n");
    detail::FsyncFile(temp);
    if (hooks.before_rename) hooks.before_rename(temp);
    std::error_code ec;
    if (std::filesystem::exists(path)) {
      std::filesystem::copy_file(path, backup, std::filesystem::copy_options::overwrite_existing, ec);
      if (ec) throw Error(Errc::kIoFailure, "backup " + backup.string() + ": " + ec.message());
    }
    std::filesystem::rename(temp, path, ec);
    if (ec) throw Error(Errc::kIoFailure, "rename " + temp.string() + ": " + ec.message());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(temp, ignored);
    throw;
  }
}

inline nlohmann::json ReadSnapshotDocument(const std::filesystem::path& path) {
  std::string text = ReadTextFile(path);
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::kCorruptSnapshot, path.string());
  auto version = doc.find("format_version");
  if (version == doc.end() || !version->is_number_integer()) throw Error(Errc::kCorruptSnapshot, "no format_version");
  if (version->get<int>() != kSnapshotFormatVersion)
    throw Error(Errc::kUnsupportedVersion, std::to_string(version->get<int>()));
  if (!doc.contains("state") || !doc.contains("corpus_digest")) throw Error(Errc::kCorruptSnapshot, path.string());
  return doc;
}

struct RestoredSnapshot {
  SnapshotHeader header;
  SessionState state;
};

inline RestoredSnapshot RestoreSnapshot(const std::filesystem::path& path, const Corpus& corpus) {
  nlohmann::json doc = ReadSnapshotDocument(path);
  RestoredSnapshot out;
  try {
    out.header.format_version = doc.at("format_version").get<int>();
    out.header.corpus_digest = doc.at("corpus_digest").get<std::string>();
    out.header.manifest_digest = doc.at("manifest_digest").get<std::string>();
    out.header.created_at = doc.at("created_at").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kCorruptSnapshot, e.what());
  }
  if (out.header.corpus_digest != corpus.Digest())
    throw Error(Errc::kCorpusMismatch, "snapshot was taken over a different corpus");
  out.state = StateFromJson(doc.at("state"), corpus);
  return out;
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_STORE_HPP_
