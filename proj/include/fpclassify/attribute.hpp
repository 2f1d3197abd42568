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

#ifndef FPCLASSIFY_ATTRIBUTE_HPP_
#define FPCLASSIFY_ATTRIBUTE_HPP_

#include <charconv>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fpclassify/error.hpp"

namespace fpclassify {

// One accessed API together with the canonical rendering of the arguments it
// was called with. The observation count lives beside the key, never in it.
struct AttributeKey {
  std::string name;
  std::vector<std::string> args;

  auto operator<=>(const AttributeKey&) const = default;
  bool operator==(const AttributeKey&) const = default;

  // ["name","arg0",...] as minimal JSON.
  std::string Serialize() const {
    nlohmann::json j = nlohmann::json::array();
    j.push_back(name);
    for (const auto& a : args) j.push_back(a);
    return j.dump();
  }
};

struct AttributeSignature {
  AttributeKey key;
  std::uint64_t count = 1;
};

using KeySet = std::set<AttributeKey>;

// attr(s): key -> observation count. Equality and the set algebra look at
// keys only.
class AttributeSet {
 public:
  using Map = std::map<AttributeKey, std::uint64_t>;
  using const_iterator = Map::const_iterator;

  AttributeSet() = default;
  AttributeSet(std::initializer_list<std::pair<const AttributeKey, std::uint64_t>> init) {
    for (const auto& [k, c] : init) Add(k, c);
  }

  // Counts below one are clamped to one.
  void Add(const AttributeKey& key, std::uint64_t count = 1) {
    entries_[key] += count == 0 ? 1 : count;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const AttributeKey& key) const { return entries_.count(key) != 0; }
  std::uint64_t count(const AttributeKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second;
  }
  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }
  const Map& entries() const { return entries_; }

  KeySet Keys() const {
    KeySet keys;
    for (const auto& [k, c] : entries_) keys.insert(keys.end(), k);
    return keys;
  }

  friend bool operator==(const AttributeSet& a, const AttributeSet& b) {
    if (a.size() != b.size()) return false;
    auto ib = b.entries_.begin();
    for (const auto& [k, c] : a.entries_) {
      if (!(k == ib->first)) return false;
      ++ib;
    }
    return true;
  }

  // Same keys and same counts.
  bool IdenticalTo(const AttributeSet& other) const { return entries_ == other.entries_; }

 private:
  Map entries_;
};

// Counts come from the left operand.
inline AttributeSet Intersect(const AttributeSet& a, const AttributeSet& b) {
  AttributeSet out;
  for (const auto& [k, c] : a)
    if (b.contains(k)) out.Add(k, c);
  return out;
}

// Counts are summed.
inline AttributeSet Union(const AttributeSet& a, const AttributeSet& b) {
  AttributeSet out = a;
  for (const auto& [k, c] : b) out.Add(k, c);
  return out;
}

enum class Label { kFingerprinter, kNonFingerprinter, kUnknown };

inline std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kFingerprinter: return "fingerprinter";
    case Label::kNonFingerprinter: return "non-fingerprinter";
    case Label::kUnknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<Label> ParseLabel(std::string_view text) {
  if (text == "fingerprinter") return Label::kFingerprinter;
  if (text == "non-fingerprinter") return Label::kNonFingerprinter;
  if (text == "unknown") return Label::kUnknown;
  return std::nullopt;
}

struct NetworkSend {
  std::string destination_url;
  std::string payload;  // raw bytes

  bool operator==(const NetworkSend&) const = default;
};

struct ScriptRecord {
  std::string script_id;
  std::string source_url;
  std::string content_hash;
  AttributeSet attributes;
  std::vector<NetworkSend> network_sends;
  std::optional<std::string> source_text;
  // Attribute return values recorded by the tracer, used for exfiltration
  // matching only.
  std::vector<std::string> observed_values;
  // Built by static scanning rather than from a runtime trace.
  bool low_confidence = false;

  friend bool operator==(const ScriptRecord& a, const ScriptRecord& b) {
    return a.script_id == b.script_id && a.source_url == b.source_url &&
           a.content_hash == b.content_hash && a.attributes.IdenticalTo(b.attributes) &&
           a.network_sends == b.network_sends && a.source_text == b.source_text &&
           a.observed_values == b.observed_values && a.low_confidence == b.low_confidence;
  }
};

enum class IdentityMode { kNameArgs, kNameOnly };

inline std::string_view IdentityModeName(IdentityMode mode) {
  return mode == IdentityMode::kNameOnly ? "name-only" : "name-args";
}

inline std::optional<IdentityMode> ParseIdentityMode(std::string_view text) {
  if (text == "name-args") return IdentityMode::kNameArgs;
  if (text == "name-only") return IdentityMode::kNameOnly;
  return std::nullopt;
}

// Under name-only identity, keys differing only in args collapse and their
// counts add up.
inline AttributeSet ProjectIdentity(const AttributeSet& set, IdentityMode mode) {
  if (mode == IdentityMode::kNameArgs) return set;
  AttributeSet out;
  for (const auto& [k, c] : set) out.Add(AttributeKey{k.name, {}}, c);
  return out;
}

namespace detail {

inline void AppendNumber(std::string& out, const nlohmann::json& value) {
  char buf[64];
  std::to_chars_result res;
  if (value.is_number_unsigned()) {
    res = std::to_chars(buf, buf + sizeof(buf), value.get<std::uint64_t>());
  } else if (value.is_number_integer()) {
    res = std::to_chars(buf, buf + sizeof(buf), value.get<std::int64_t>());
  } else {
    double d = value.get<double>();
    if (d == 0.0) d = 0.0;  // -0 renders as 0
    res = std::to_chars(buf, buf + sizeof(buf), d);
  }
  out.append(buf, res.ptr);
}

inline void AppendCanonicalJson(std::string& out, const nlohmann::json& value) {
  switch (value.type()) {
    case nlohmann::json::value_t::object: {
      // object_t iterates in bytewise key order.
      out.push_back('{');
      bool first = true;
      for (const auto& [k, v] : value.items()) {
        if (!first) out.push_back(',');
        first = false;
        out += nlohmann::json(k).dump();
        out.push_back(':');
        AppendCanonicalJson(out, v);
      }
      out.push_back('}');
      break;
    }
    case nlohmann::json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& v : value) {
        if (!first) out.push_back(',');
        first = false;
        AppendCanonicalJson(out, v);
      }
      out.push_back(']');
      break;
    }
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned:
    case nlohmann::json::value_t::number_float:
      AppendNumber(out, value);
      break;
    default:
      out += value.dump();
      break;
  }
}

inline bool HasControlChar(std::string_view s) {
  for (unsigned char c : s)
    if (c < 0x20 || c == 0x7f) return true;
  return false;
}

}  // namespace detail

// Renders one argument: strings verbatim, numbers in shortest round-trip
// form, booleans and null by name, composites as sorted-key minimal JSON.
inline std::string RenderArgument(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  std::string out;
  detail::AppendCanonicalJson(out, value);
  return out;
}

inline AttributeKey CanonicalizeSignature(std::string_view api_name,
                                          std::span<const nlohmann::json> raw_args) {
  if (api_name.empty()) throw Error(Errc::kEmptyApiName, "api name is empty");
  if (detail::HasControlChar(api_name))
    throw Error(Errc::kEmptyApiName, "api name contains control characters");
  AttributeKey key{std::string(api_name), {}};
  key.args.reserve(raw_args.size());
  for (const auto& a : raw_args) key.args.push_back(RenderArgument(a));
  return key;
}

inline AttributeKey CanonicalizeSignature(std::string_view api_name,
                                          const nlohmann::json& raw_args) {
  if (raw_args.is_null()) return CanonicalizeSignature(api_name, std::span<const nlohmann::json>{});
  std::vector<nlohmann::json> args(raw_args.begin(), raw_args.end());
  return CanonicalizeSignature(api_name, std::span<const nlohmann::json>(args));
}

inline AttributeSet BuildAttributeSet(std::span<const AttributeSignature> events) {
  AttributeSet set;
  for (const auto& e : events) set.Add(e.key, e.count);
  return set;
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_ATTRIBUTE_HPP_
