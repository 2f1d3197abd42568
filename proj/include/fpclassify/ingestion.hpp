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

#ifndef FPCLASSIFY_INGESTION_HPP_
#define FPCLASSIFY_INGESTION_HPP_

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fpclassify/attribute.hpp"
#include "fpclassify/digest.hpp"
#include "fpclassify/error.hpp"
#include "fpclassify/io.hpp"
#include "fpclassify/matrix.hpp"

namespace fpclassify {

// API paths worth recognizing, e.g. "navigator.userAgent".
struct AttributeCatalog {
  std::set<std::string> api_names;

  bool Contains(const std::string& name) const { return api_names.count(name) != 0; }
};

// Known fingerprinters, in the order their rows enter the matrix.
struct GroundTruthManifest {
  std::vector<std::string> fingerprinter_ids;
};

namespace detail {

inline nlohmann::json ParseJsonOrThrow(std::string_view text, Errc code, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(code, what + ": " + e.what());
  }
}

inline std::vector<std::string> ParseUniqueStringArray(std::string_view text, const std::string& what) {
  nlohmann::json j = ParseJsonOrThrow(text, Errc::kInvalidInput, what);
  if (!j.is_array()) throw Error(Errc::kInvalidInput, what + ": expected a JSON array of strings");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(Errc::kInvalidInput, what + ": non-string entry " + v.dump());
    auto s = v.get<std::string>();
    if (!seen.insert(s).second) throw Error(Errc::kInvalidInput, what + ": duplicate entry " + s);
    out.push_back(std::move(s));
  }
  return out;
}

inline const nlohmann::json& RequireField(const nlohmann::json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw Error(Errc::kMissingField, field);
  return *it;
}

inline std::string RequireString(const nlohmann::json& obj, const char* field) {
  const auto& v = RequireField(obj, field);
  if (!v.is_string()) throw Error(Errc::kMalformedTrace, std::string(field) + " must be a string");
  return v.get<std::string>();
}

inline void AppendObservedValues(const nlohmann::json& holder, std::vector<std::string>& out) {
  auto it = holder.find("observed_values");
  if (it == holder.end()) return;
  if (!it->is_array()) throw Error(Errc::kMalformedTrace, "observed_values must be an array");
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(Errc::kMalformedTrace, "observed_values entries must be strings");
    out.push_back(v.get<std::string>());
  }
}

}  // namespace detail

inline AttributeCatalog ParseCatalog(std::string_view text) {
  auto names = detail::ParseUniqueStringArray(text, "attribute catalog");
  if (names.empty()) throw Error(Errc::kInvalidInput, "attribute catalog is empty");
  AttributeCatalog catalog;
  for (auto& n : names) {
    if (n.empty()) throw Error(Errc::kInvalidInput, "attribute catalog: empty api name");
    catalog.api_names.insert(std::move(n));
  }
  return catalog;
}

inline GroundTruthManifest ParseManifest(std::string_view text) {
  return GroundTruthManifest{detail::ParseUniqueStringArray(text, "ground-truth manifest")};
}

inline std::string ManifestDigest(const GroundTruthManifest& manifest) {
  std::string joined;
  for (const auto& id : manifest.fingerprinter_ids) {
    joined += id;
    joined.push_back('\n');
  }
  return Sha256Hex(joined);
}

// Builds a record from one trace object. `base_dir` resolves a relative
// source_path; when null, source_path is ignored.
inline ScriptRecord TraceFromJson(const nlohmann::json& j, const std::filesystem::path* base_dir = nullptr) {
  if (!j.is_object()) throw Error(Errc::kMalformedTrace, "trace must be a JSON object");
  ScriptRecord rec;
  rec.source_url = detail::RequireString(j, "source_url");
  rec.script_id = j.contains("script_id") ? detail::RequireString(j, "script_id") : rec.source_url;
  if (rec.script_id.empty()) throw Error(Errc::kMalformedTrace, "script_id is empty");
  rec.content_hash = detail::RequireString(j, "content_hash");
  if (!IsHex64(rec.content_hash))
    throw Error(Errc::kMalformedTrace, "content_hash must be 64 hex characters");
  std::transform(rec.content_hash.begin(), rec.content_hash.end(), rec.content_hash.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

  const auto& events = detail::RequireField(j, "events");
  if (!events.is_array()) throw Error(Errc::kMalformedTrace, "events must be an array");
  std::vector<AttributeSignature> signatures;
  signatures.reserve(events.size());
  for (const auto& ev : events) {
    if (!ev.is_object()) throw Error(Errc::kMalformedTrace, "event must be an object");
    std::string api = detail::RequireString(ev, "api");
    nlohmann::json args = ev.value("args", nlohmann::json::array());
    if (!args.is_array()) throw Error(Errc::kMalformedTrace, "args of " + api + " must be an array");
    std::uint64_t count = 1;
    if (auto it = ev.find("count"); it != ev.end()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 1)
        throw Error(Errc::kMalformedTrace, "count of " + api + " must be an integer >= 1");
      count = it->get<std::uint64_t>();
    }
    signatures.push_back(AttributeSignature{CanonicalizeSignature(api, args), count});
    detail::AppendObservedValues(ev, rec.observed_values);
  }
  rec.attributes = BuildAttributeSet(signatures);
  detail::AppendObservedValues(j, rec.observed_values);

  if (auto it = j.find("network_sends"); it != j.end()) {
    if (!it->is_array()) throw Error(Errc::kMalformedTrace, "network_sends must be an array");
    for (const auto& send : *it) {
      if (!send.is_object()) throw Error(Errc::kMalformedTrace, "network send must be an object");
      NetworkSend ns;
      ns.destination_url = detail::RequireString(send, "url");
      auto payload = Base64Decode(detail::RequireString(send, "payload_b64"));
      if (!payload) throw Error(Errc::kMalformedTrace, "payload_b64 is not valid base64");
      ns.payload = std::move(*payload);
      rec.network_sends.push_back(std::move(ns));
    }
  }
  if (auto it = j.find("source_text"); it != j.end() && it->is_string()) {
    rec.source_text = it->get<std::string>();
  } else if (auto sp = j.find("source_path"); sp != j.end() && base_dir != nullptr) {
    if (!sp->is_string()) throw Error(Errc::kMalformedTrace, "source_path must be a string");
    std::filesystem::path p = sp->get<std::string>();
    if (p.is_relative()) p = *base_dir / p;
    if (std::filesystem::exists(p)) rec.source_text = ReadTextFile(p);
  }
  rec.low_confidence = j.value("low_confidence", false);
  return rec;
}

inline ScriptRecord ParseTraceFile(std::string_view bytes) {
  return TraceFromJson(detail::ParseJsonOrThrow(bytes, Errc::kMalformedTrace, "trace"));
}

// Inverse of TraceFromJson. Args are already canonical strings, so they
// re-canonicalize to themselves. Observed values move to the top level.
inline nlohmann::json TraceToJson(const ScriptRecord& rec) {
  nlohmann::json j;
  j["script_id"] = rec.script_id;
  j["source_url"] = rec.source_url;
  j["content_hash"] = rec.content_hash;
  nlohmann::json events = nlohmann::json::array();
  for (const auto& [key, count] : rec.attributes) {
    events.push_back({{"api", key.name}, {"args", key.args}, {"count", count}});
  }
  j["events"] = std::move(events);
  if (!rec.network_sends.empty()) {
    nlohmann::json sends = nlohmann::json::array();
    for (const auto& s : rec.network_sends)
      sends.push_back({{"url", s.destination_url}, {"payload_b64", Base64Encode(s.payload)}});
    j["network_sends"] = std::move(sends);
  }
  if (!rec.observed_values.empty()) j["observed_values"] = rec.observed_values;
  if (rec.source_text) j["source_text"] = *rec.source_text;
  if (rec.low_confidence) j["low_confidence"] = true;
  return j;
}

inline std::string SerializeTrace(const ScriptRecord& rec) { return TraceToJson(rec).dump(); }

// A file holds either one JSON object (possibly spanning lines) or one
// object per line. Errors name the origin and line.
inline std::vector<ScriptRecord> ParseTraceStream(std::string_view bytes, const std::string& origin,
                                                  const std::filesystem::path* base_dir = nullptr) {
  std::vector<ScriptRecord> out;
  auto whole = nlohmann::json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (!whole.is_discarded()) {
    try {
      out.push_back(TraceFromJson(whole, base_dir));
    } catch (const Error& e) {
      throw Error(e.code(), origin + ":1: " + e.detail());
    }
    return out;
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    bool blank = std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
    if (!blank) {
      try {
        out.push_back(TraceFromJson(
            detail::ParseJsonOrThrow(line, Errc::kMalformedTrace, "trace line"), base_dir));
      } catch (const Error& e) {
        throw Error(e.code(), origin + ":" + std::to_string(line_no) + ": " + e.detail());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (out.empty()) throw Error(Errc::kMalformedTrace, origin + ": no trace objects");
  return out;
}

// The script population. Ids are unique; lookup is by id.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<ScriptRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (!index_.emplace(records_[i].script_id, i).second)
        throw Error(Errc::kDuplicateScript, records_[i].script_id);
    }
  }

  const std::vector<ScriptRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::optional<std::size_t> IndexOf(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const ScriptRecord* Find(const std::string& id) const {
    auto i = IndexOf(id);
    return i ? &records_[*i] : nullptr;
  }
  const ScriptRecord& Get(const std::string& id) const {
    const ScriptRecord* r = Find(id);
    if (r == nullptr) throw Error(Errc::kUnknownScript, id);
    return *r;
  }

  // SHA-256 over the sorted content hashes, one per line.
  std::string Digest() const {
    std::vector<std::string> hashes;
    hashes.reserve(records_.size());
    for (const auto& r : records_) hashes.push_back(r.content_hash);
    std::sort(hashes.begin(), hashes.end());
    std::string joined;
    for (const auto& h : hashes) {
      joined += h;
      joined.push_back('\n');
    }
    return Sha256Hex(joined);
  }

 private:
  std::vector<ScriptRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline Corpus ProjectCorpus(const Corpus& corpus, IdentityMode mode) {
  if (mode == IdentityMode::kNameArgs) return corpus;
  std::vector<ScriptRecord> records = corpus.records();
  for (auto& r : records) r.attributes = ProjectIdentity(r.attributes, mode);
  return Corpus(std::move(records));
}

inline FingerprinterMatrix BuildMatrix(const GroundTruthManifest& manifest, const Corpus& corpus) {
  FingerprinterMatrix matrix;
  for (const auto& id : manifest.fingerprinter_ids) {
    const ScriptRecord* rec = corpus.Find(id);
    if (rec == nullptr) throw Error(Errc::kUnknownGroundTruthId, id);
    if (rec->attributes.empty()) throw Error(Errc::kEmptyFingerprinterAttributes, id);
    matrix.AddRow(id, rec->attributes);
  }
  return matrix;
}

namespace detail {

inline bool IsIdentStart(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
inline bool IsIdentChar(unsigned char c) { return IsIdentStart(c) || std::isdigit(c); }

struct IdentifierToken {
  std::size_t begin;
  std::size_t end;
  bool member_access;  // preceded by '.' or '?.'
};

// Identifiers outside comments and string literals. Regex literals are not
// recognized.
inline std::vector<IdentifierToken> TokenizeIdentifiers(std::string_view src) {
  std::vector<IdentifierToken> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto prev_significant = [&](std::size_t pos) -> std::optional<std::size_t> {
    while (pos > 0) {
      --pos;
      if (!std::isspace(static_cast<unsigned char>(src[pos]))) return pos;
    }
    return std::nullopt;
  };
  while (i < n) {
    char c = src[i];
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      auto close = src.find("*/", i + 2);
      i = close == std::string_view::npos ? n : close + 2;
    } else if (c == '"' || c == '\'' || c == '`') {
      ++i;
      while (i < n && src[i] != c) i += (src[i] == '\\') ? 2 : 1;
      ++i;
    } else if (IsIdentStart(static_cast<unsigned char>(c))) {
      std::size_t begin = i;
      while (i < n && IsIdentChar(static_cast<unsigned char>(src[i]))) ++i;
      bool member = false;
      if (auto p = prev_significant(begin); p && src[*p] == '.') {
        // "..." spread is not member access.
        member = !(*p >= 2 && src[*p - 1] == '.' && src[*p - 2] == '.');
      }
      out.push_back(IdentifierToken{begin, i, member});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < n && (IsIdentChar(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace detail

// Low-confidence scan of raw source. A dotted catalog entry matches a member
// access of its last segment (".userAgent" -> "navigator.userAgent"); when
// the full dotted path is spelled out, only entries matching it are counted.
// Undotted entries match any whole identifier.
inline AttributeSet StaticExtract(std::string_view source, const AttributeCatalog& catalog) {
  std::map<std::string, std::vector<const std::string*>, std::less<>> by_tail;
  std::map<std::string, const std::string*, std::less<>> bare;
  for (const auto& name : catalog.api_names) {
    auto dot = name.rfind('.');
    if (dot == std::string::npos) {
      bare.emplace(name, &name);
    } else {
      by_tail[name.substr(dot + 1)].push_back(&name);
    }
  }
  auto tokens = detail::TokenizeIdentifiers(source);
  AttributeSet out;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& tok = tokens[t];
    std::string_view ident = source.substr(tok.begin, tok.end - tok.begin);
    if (!tok.member_access) {
      if (auto it = bare.find(ident); it != bare.end()) out.Add(AttributeKey{*it->second, {}});
      continue;
    }
    auto it = by_tail.find(ident);
    if (it == by_tail.end()) continue;
    // Rebuild the dotted chain ending here, e.g. "window.navigator.userAgent".
    std::string chain(ident);
    for (std::size_t k = t; k > 0 && tokens[k].member_access; --k) {
      const auto& prev = tokens[k - 1];
      std::string_view gap = source.substr(prev.end, tokens[k].begin - prev.end);
      if (gap.find_first_not_of(" \t\r\n.?") != std::string_view::npos) break;
      chain = std::string(source.substr(prev.begin, prev.end - prev.begin)) + "." + chain;
    }
    std::vector<const std::string*> qualified;
    for (const std::string* name : it->second) {
      bool ends_with = chain.size() >= name->size() &&
                       chain.compare(chain.size() - name->size(), name->size(), *name) == 0;
      bool boundary = chain.size() == name->size() || chain[chain.size() - name->size() - 1] == '.';
      if (ends_with && boundary) qualified.push_back(name);
    }
    const auto& hits = qualified.empty() ? it->second : qualified;
    for (const std::string* name : hits) out.Add(AttributeKey{*name, {}});
  }
  return out;
}

struct IngestReport {
  std::vector<ScriptRecord> records;
  std::size_t trace_files = 0;
  std::size_t static_records = 0;
  std::size_t uncatalogued_events = 0;
  std::vector<std::string> warnings;
};

// Keeps only catalogued api names. Returns how many keys were dropped.
inline std::size_t FilterToCatalog(ScriptRecord& rec, const AttributeCatalog& catalog) {
  AttributeSet kept;
  std::size_t dropped = 0;
  for (const auto& [k, c] : rec.attributes) {
    if (catalog.Contains(k.name)) {
      kept.Add(k, c);
    } else {
      ++dropped;
    }
  }
  rec.attributes = std::move(kept);
  return dropped;
}

// Same id with different content: every member of the group becomes
// "id#<first 8 hash chars>". Same id and same content: later copies dropped.
inline void AssignUniqueIds(std::vector<ScriptRecord>& records, std::vector<std::string>& warnings) {
  std::map<std::string, std::set<std::string>> hashes_by_id;
  for (const auto& r : records) hashes_by_id[r.script_id].insert(r.content_hash);
  for (auto& r : records) {
    if (hashes_by_id[r.script_id].size() > 1) r.script_id += "#" + r.content_hash.substr(0, 8);
  }
  std::set<std::string> seen;
  std::vector<ScriptRecord> unique;
  unique.reserve(records.size());
  for (auto& r : records) {
    if (!seen.insert(r.script_id).second) {
      warnings.push_back("duplicate trace for " + r.script_id + " ignored");
      continue;
    }
    unique.push_back(std::move(r));
  }
  records = std::move(unique);
}

inline std::vector<std::filesystem::path> ListFilesSorted(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::kIoFailure, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Loads every *.json / *.jsonl / *.ndjson trace under `traces_dir`. Source
// files under `static_dir` that no trace references become low-confidence
// records built by StaticExtract.
inline IngestReport IngestDirectory(const std::filesystem::path& traces_dir, const AttributeCatalog& catalog,
                                    const std::optional<std::filesystem::path>& static_dir = std::nullopt) {
  IngestReport report;
  std::set<std::filesystem::path> referenced_sources;
  for (const auto& file : ListFilesSorted(traces_dir)) {
    auto ext = file.extension().string();
    if (ext != ".json" && ext != ".jsonl" && ext != ".ndjson") continue;
    ++report.trace_files;
    std::string text = ReadTextFile(file);
    std::filesystem::path base = file.parent_path();
    auto records = ParseTraceStream(text, file.string(), &base);
    // Remember referenced sources so the static pass skips them.
    auto whole = nlohmann::json::parse(text, nullptr, false);
    std::vector<nlohmann::json> objs;
    if (!whole.is_discarded()) {
      objs.push_back(whole);
    } else {
      std::size_t pos = 0;
      while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (!j.is_discarded()) objs.push_back(std::move(j));
        if (nl == std::string::npos) break;
        pos = nl + 1;
      }
    }
    for (const auto& o : objs) {
      if (auto sp = o.find("source_path"); sp != o.end() && sp->is_string()) {
        std::filesystem::path p = sp->get<std::string>();
        if (p.is_relative()) p = base / p;
        std::error_code ec;
        auto canon = std::filesystem::weakly_canonical(p, ec);
        referenced_sources.insert(ec ? p : canon);
      }
    }
    for (auto& r : records) {
      report.uncatalogued_events += FilterToCatalog(r, catalog);
      report.records.push_back(std::move(r));
    }
  }
  if (static_dir) {
    for (const auto& file : ListFilesSorted(*static_dir)) {
      std::error_code ec;
      auto canon = std::filesystem::weakly_canonical(file, ec);
      if (referenced_sources.count(ec ? file : canon)) continue;
      std::string text = ReadTextFile(file);
      ScriptRecord rec;
      rec.source_url = "file://" + std::filesystem::relative(file, *static_dir).generic_string();
      rec.script_id = rec.source_url;
      rec.content_hash = Sha256Hex(text);
      rec.attributes = StaticExtract(text, catalog);
      rec.source_text = std::move(text);
      rec.low_confidence = true;
      report.records.push_back(std::move(rec));
      ++report.static_records;
    }
  }
  AssignUniqueIds(report.records, report.warnings);
  return report;
}

inline constexpr int kCorpusIndexVersion = 1;

inline nlohmann::json CorpusToJson(const Corpus& corpus) {
  nlohmann::json scripts = nlohmann::json::array();
  for (const auto& r : corpus.records()) scripts.push_back(TraceToJson(r));
  return {{"format_version", kCorpusIndexVersion}, {"scripts", std::move(scripts)}};
}

inline Corpus CorpusFromJson(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format_version", 0) != kCorpusIndexVersion || !j.contains("scripts"))
    throw Error(Errc::kInvalidInput, "not a version 1 corpus index");
  std::vector<ScriptRecord> records;
  std::size_t i = 0;
  for (const auto& s : j.at("scripts")) {
    try {
      records.push_back(TraceFromJson(s));
    } catch (const Error& e) {
      throw Error(e.code(), "corpus index entry " + std::to_string(i) + ": " + e.detail());
    }
    ++i;
  }
  return Corpus(std::move(records));
}

inline void SaveCorpusIndex(const std::filesystem::path& path, const Corpus& corpus) {
  WriteTextFile(path, CorpusToJson(corpus).dump(1) + "\n");
}

inline Corpus LoadCorpusIndex(const std::filesystem::path& path) {
  return CorpusFromJson(detail::ParseJsonOrThrow(ReadTextFile(path), Errc::kInvalidInput, path.string()));
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_INGESTION_HPP_
