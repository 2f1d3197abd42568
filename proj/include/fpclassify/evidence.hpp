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

#ifndef FPCLASSIFY_EVIDENCE_HPP_
#define FPCLASSIFY_EVIDENCE_HPP_

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpclassify/attribute.hpp"
#include "fpclassify/digest.hpp"
#include "fpclassify/error.hpp"
#include "fpclassify/similarity.hpp"

namespace fpclassify {

// ---------------------------------------------------------------------------
// Adblock filter subset.
//
// Supported: "||" domain anchors, "|" start/end anchors, "*" wildcards, "^"
// separators, "@@" exceptions, and the $script / $domain= options. Regex
// rules are skipped and counted as warnings; cosmetic rules ("##" and
// friends) and comments are skipped silently. Matching is case-insensitive.
// ---------------------------------------------------------------------------

enum class FilterKind { kDomainAnchor, kSubstring, kExactAddress };

struct PatternPart {
  enum class Type { kLiteral, kSeparator, kWildcard };
  Type type = Type::kLiteral;
  std::string literal;  // lowercase, only for kLiteral

  bool operator==(const PatternPart&) const = default;
};

struct FilterRule {
  std::string raw;
  FilterKind kind = FilterKind::kSubstring;
  std::vector<PatternPart> pattern_parts;
  bool is_exception = false;
  bool anchor_end = false;
  bool excludes_scripts = false;  // $~script
  std::vector<std::string> include_domains;
  std::vector<std::string> exclude_domains;
};

struct FilterList {
  std::string name;
  std::vector<FilterRule> rules;
  std::size_t warnings = 0;
};

// Page the script was loaded on; only needed for $domain= rules.
struct FilterContext {
  std::optional<std::string> page_host;
};

namespace detail {

inline std::string ToLower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool IsCosmetic(std::string_view line) {
  for (std::string_view marker : {"##", "#@#", "#?#", "#$#", "#%#", "#@$#", "#@?#"})
    if (line.find(marker) != std::string_view::npos) return true;
  return false;
}

inline bool LooksLikeOptions(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '~' || c == '=' || c == ',' || c == '|' || c == '.' || c == '-' ||
           c == '_' || c == '*';
  });
}

inline std::vector<PatternPart> TokenizePattern(std::string_view pattern) {
  std::vector<PatternPart> parts;
  for (char c : pattern) {
    if (c == '*') {
      if (parts.empty() || parts.back().type != PatternPart::Type::kWildcard)
        parts.push_back({PatternPart::Type::kWildcard, {}});
    } else if (c == '^') {
      parts.push_back({PatternPart::Type::kSeparator, {}});
    } else {
      if (parts.empty() || parts.back().type != PatternPart::Type::kLiteral)
        parts.push_back({PatternPart::Type::kLiteral, {}});
      parts.back().literal.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return parts;
}

inline bool IsSeparatorChar(unsigned char c) {
  return !(std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == '%');
}

struct ParsedUrl {
  std::string lowered;
  std::size_t host_begin = 0;
  std::size_t host_end = 0;
};

inline ParsedUrl ParseAbsoluteUrl(std::string_view url) {
  ParsedUrl out;
  out.lowered = ToLower(url);
  auto scheme_end = out.lowered.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0) throw Error(Errc::kInvalidUrl, std::string(url));
  for (std::size_t i = 0; i < scheme_end; ++i) {
    unsigned char c = out.lowered[i];
    if (!(std::isalnum(c) || c == '+' || c == '-' || c == '.')) throw Error(Errc::kInvalidUrl, std::string(url));
  }
  std::size_t auth_begin = scheme_end + 3;
  std::size_t auth_end = out.lowered.find_first_of("/?#", auth_begin);
  if (auth_end == std::string::npos) auth_end = out.lowered.size();
  std::size_t host_begin = auth_begin;
  auto at = out.lowered.rfind('@', auth_end);
  if (at != std::string::npos && at >= auth_begin) host_begin = at + 1;
  std::size_t host_end = auth_end;
  auto colon = out.lowered.find(':', host_begin);
  if (colon != std::string::npos && colon < auth_end && out.lowered[host_begin] != '[') host_end = colon;
  if (host_end <= host_begin) throw Error(Errc::kInvalidUrl, std::string(url));
  out.host_begin = host_begin;
  out.host_end = host_end;
  return out;
}

// Positions reachable after matching all parts from `start`.
inline bool MatchFrom(const std::vector<PatternPart>& parts, std::string_view url, std::size_t start,
                      bool anchor_end) {
  const std::size_t n = url.size();
  std::vector<char> reach(n + 1, 0);
  reach[start] = 1;
  for (const auto& part : parts) {
    std::vector<char> next(n + 1, 0);
    bool any = false;
    switch (part.type) {
      case PatternPart::Type::kLiteral:
        for (std::size_t p = 0; p <= n; ++p) {
          if (reach[p] && p + part.literal.size() <= n &&
              url.compare(p, part.literal.size(), part.literal) == 0) {
            next[p + part.literal.size()] = 1;
            any = true;
          }
        }
        break;
      case PatternPart::Type::kSeparator:
        for (std::size_t p = 0; p <= n; ++p) {
          if (!reach[p]) continue;
          if (p == n) {
            next[n] = 1;  // end of address counts as a separator
            any = true;
          } else if (IsSeparatorChar(static_cast<unsigned char>(url[p]))) {
            next[p + 1] = 1;
            any = true;
          }
        }
        break;
      case PatternPart::Type::kWildcard: {
        std::size_t first = n + 1;
        for (std::size_t p = 0; p <= n; ++p)
          if (reach[p]) {
            first = p;
            break;
          }
        for (std::size_t p = first; p <= n; ++p) {
          next[p] = 1;
          any = true;
        }
        break;
      }
    }
    if (!any) return false;
    reach.swap(next);
  }
  if (anchor_end) return reach[n] != 0;
  return std::any_of(reach.begin(), reach.end(), [](char c) { return c != 0; });
}

inline bool HostMatchesDomain(std::string_view host, std::string_view domain) {
  if (host == domain) return true;
  return host.size() > domain.size() && host.substr(host.size() - domain.size()) == domain &&
         host[host.size() - domain.size() - 1] == '.';
}

}  // namespace detail

// Parses one line. Returns nullopt for blank lines, comments, cosmetic rules
// and anything unsupported; `warning` is set for the unsupported case.
inline std::optional<FilterRule> ParseFilterLine(std::string_view line_in, bool* warning = nullptr) {
  std::string_view line = detail::Trim(line_in);
  if (warning) *warning = false;
  if (line.empty() || line.front() == '!' || line.front() == '[') return std::nullopt;
  if (detail::IsCosmetic(line)) return std::nullopt;

  FilterRule rule;
  rule.raw = std::string(line);
  std::string_view body = line;
  if (body.substr(0, 2) == "@@") {
    rule.is_exception = true;
    body.remove_prefix(2);
  }
  if (auto dollar = body.rfind('$'); dollar != std::string_view::npos &&
                                     detail::LooksLikeOptions(body.substr(dollar + 1))) {
    std::string options = detail::ToLower(body.substr(dollar + 1));
    body = body.substr(0, dollar);
    std::size_t pos = 0;
    while (pos <= options.size()) {
      auto comma = options.find(',', pos);
      std::string opt = options.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (opt == "~script") {
        rule.excludes_scripts = true;
      } else if (opt.rfind("domain=", 0) == 0) {
        std::string_view list = std::string_view(opt).substr(7);
        std::size_t dp = 0;
        while (dp <= list.size()) {
          auto bar = list.find('|', dp);
          std::string_view d = list.substr(dp, bar == std::string_view::npos ? std::string_view::npos : bar - dp);
          if (!d.empty()) {
            if (d.front() == '~') {
              rule.exclude_domains.emplace_back(d.substr(1));
            } else {
              rule.include_domains.emplace_back(d);
            }
          }
          if (bar == std::string_view::npos) break;
          dp = bar + 1;
        }
      }
      // "script" always holds here.
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (body.size() >= 2 && body.front() == '/' && body.back() == '/') {
    if (warning) *warning = true;  // regex rules are outside the subset
    return std::nullopt;
  }
  if (body.substr(0, 2) == "||") {
    rule.kind = FilterKind::kDomainAnchor;
    body.remove_prefix(2);
  } else if (!body.empty() && body.front() == '|') {
    rule.kind = FilterKind::kExactAddress;
    body.remove_prefix(1);
  }
  if (!body.empty() && body.back() == '|') {
    rule.anchor_end = true;
    body.remove_suffix(1);
  }
  if (body.find('|') != std::string_view::npos) {
    if (warning) *warning = true;
    return std::nullopt;
  }
  rule.pattern_parts = detail::TokenizePattern(body);
  if (rule.pattern_parts.empty()) rule.pattern_parts.push_back({PatternPart::Type::kWildcard, {}});
  return rule;
}

inline FilterList ParseFilterList(std::string_view text, std::string name = {}) {
  FilterList list;
  list.name = std::move(name);
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    bool warning = false;
    if (auto rule = ParseFilterLine(line, &warning)) {
      list.rules.push_back(std::move(*rule));
    } else if (warning) {
      ++list.warnings;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return list;
}

// Whether a single rule's pattern and options match, ignoring exceptions.
inline bool RuleMatches(const FilterRule& rule, const detail::ParsedUrl& url, const FilterContext& ctx) {
  if (rule.excludes_scripts) return false;
  if (!rule.include_domains.empty() || !rule.exclude_domains.empty()) {
    if (!ctx.page_host) {
      if (!rule.include_domains.empty()) return false;
    } else {
      std::string host = detail::ToLower(*ctx.page_host);
      for (const auto& d : rule.exclude_domains)
        if (detail::HostMatchesDomain(host, d)) return false;
      if (!rule.include_domains.empty() &&
          std::none_of(rule.include_domains.begin(), rule.include_domains.end(),
                       [&](const std::string& d) { return detail::HostMatchesDomain(host, d); }))
        return false;
    }
  }
  const std::string& u = url.lowered;
  switch (rule.kind) {
    case FilterKind::kExactAddress:
      return detail::MatchFrom(rule.pattern_parts, u, 0, rule.anchor_end);
    case FilterKind::kDomainAnchor:
      for (std::size_t p = url.host_begin; p < url.host_end; ++p) {
        if (p != url.host_begin && u[p - 1] != '.') continue;
        if (detail::MatchFrom(rule.pattern_parts, u, p, rule.anchor_end)) return true;
      }
      return false;
    case FilterKind::kSubstring:
      for (std::size_t p = 0; p <= u.size(); ++p)
        if (detail::MatchFrom(rule.pattern_parts, u, p, rule.anchor_end)) return true;
      return false;
  }
  return false;
}

// Blocking rules that match `url`. Empty when nothing matches or when any
// exception rule matches.
inline std::vector<const FilterRule*> MatchesFilter(std::span<const FilterRule> rules, std::string_view url,
                                                    const FilterContext& ctx = {}) {
  auto parsed = detail::ParseAbsoluteUrl(url);
  std::vector<const FilterRule*> hits;
  for (const auto& rule : rules) {
    if (!RuleMatches(rule, parsed, ctx)) continue;
    if (rule.is_exception) return {};
    hits.push_back(&rule);
  }
  return hits;
}

// ---------------------------------------------------------------------------
// Evidence bundle.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& DefaultKeywords() {
  static const std::vector<std::string> kKeywords = {"fingerprint", "devicefingerprint", "canvasfp", "fpjs"};
  return kKeywords;
}

struct FilterHit {
  std::string list_name;
  std::string raw_rule;
  bool operator==(const FilterHit&) const = default;
};

struct KeywordHit {
  std::string keyword;
  std::size_t occurrence_count = 0;
  bool operator==(const KeywordHit&) const = default;
};

struct ExfiltrationHit {
  std::string value_excerpt;
  std::string destination_url;
  bool operator==(const ExfiltrationHit&) const = default;
};

namespace detail {

inline std::size_t CountOccurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace detail

// Case-insensitive substring tally over the source text, the script id and
// the source url.
inline std::vector<KeywordHit> KeywordHits(const std::optional<std::string>& source_text, std::string_view script_id,
                                           std::string_view source_url, std::span<const std::string> keywords) {
  std::string src = source_text ? detail::ToLower(*source_text) : std::string();
  std::string id = detail::ToLower(script_id);
  std::string url = detail::ToLower(source_url);
  std::vector<KeywordHit> hits;
  std::set<std::string> done;
  for (const auto& kw_raw : keywords) {
    std::string kw = detail::ToLower(kw_raw);
    if (kw.empty() || !done.insert(kw).second) continue;
    std::size_t n = detail::CountOccurrences(src, kw) + detail::CountOccurrences(id, kw);
    if (url != id) n += detail::CountOccurrences(url, kw);
    if (n > 0) hits.push_back(KeywordHit{kw, n});
  }
  return hits;
}

inline constexpr std::size_t kMinExfiltrationValueLength = 8;

// A send is flagged once per recorded attribute value (>= 8 bytes) found in
// its payload or url, compared verbatim, percent-decoded, and
// form-decoded ('+' as space).
inline std::vector<ExfiltrationHit> ExfiltrationSignals(const ScriptRecord& record) {
  std::vector<std::string> values;
  std::set<std::string> seen;
  for (const auto& v : record.observed_values)
    if (v.size() >= kMinExfiltrationValueLength && seen.insert(v).second) values.push_back(v);
  std::vector<ExfiltrationHit> hits;
  for (const auto& send : record.network_sends) {
    std::string plus_as_space = send.payload;
    std::replace(plus_as_space.begin(), plus_as_space.end(), '+', ' ');
    std::string url_plus = send.destination_url;
    std::replace(url_plus.begin(), url_plus.end(), '+', ' ');
    const std::string variants[] = {send.payload, PercentDecode(send.payload), PercentDecode(plus_as_space),
                                    send.destination_url, PercentDecode(send.destination_url),
                                    PercentDecode(url_plus)};
    for (const auto& v : values) {
      bool found = std::any_of(std::begin(variants), std::end(variants),
                               [&](const std::string& hay) { return hay.find(v) != std::string::npos; });
      if (found) hits.push_back(ExfiltrationHit{v.substr(0, 64), send.destination_url});
    }
  }
  return hits;
}

inline int CountCriteria(bool filter_hit, bool keyword_hit, bool exfiltration_hit, bool privacy_policy) {
  return int{filter_hit} + int{keyword_hit} + int{exfiltration_hit} + int{privacy_policy};
}

inline constexpr int kSuggestFingerprinterThreshold = 2;

// Everything a reviewer sees for one script. The suggestion is advisory;
// the classifier only consumes explicit labels.
struct EvidenceBundle {
  std::string script_id;
  std::vector<FilterHit> filter_hits;
  std::vector<KeywordHit> keyword_hits;
  std::vector<ExfiltrationHit> exfiltration_hits;
  bool privacy_policy_checked = false;
  SimilarityResult similarity;
  KeySet clean_intersection;
  int criteria_met = 0;
  Label suggested_label = Label::kUnknown;

  void Recount() {
    criteria_met = CountCriteria(!filter_hits.empty(), !keyword_hits.empty(), !exfiltration_hits.empty(),
                                 privacy_policy_checked);
    suggested_label = criteria_met >= kSuggestFingerprinterThreshold ? Label::kFingerprinter : Label::kUnknown;
  }

  void SetPrivacyPolicyChecked(bool checked) {
    privacy_policy_checked = checked;
    Recount();
  }
};

struct EvidenceConfig {
  std::vector<FilterList> filter_lists;
  std::vector<std::string> keywords = DefaultKeywords();
  FilterContext filter_context;
};

// Filter hits across all lists together: an exception in any list clears
// blocks from every list.
inline std::vector<FilterHit> FilterHitsFor(std::string_view url, std::span<const FilterList> lists,
                                            const FilterContext& ctx = {}) {
  detail::ParsedUrl parsed;
  try {
    parsed = detail::ParseAbsoluteUrl(url);
  } catch (const Error&) {
    return {};
  }
  std::vector<FilterHit> hits;
  for (const auto& list : lists) {
    for (const auto& rule : list.rules) {
      if (!RuleMatches(rule, parsed, ctx)) continue;
      if (rule.is_exception) return {};
      hits.push_back(FilterHit{list.name, rule.raw});
    }
  }
  return hits;
}

inline EvidenceBundle BuildEvidence(const ScriptRecord& record, SimilarityResult similarity, KeySet clean_intersection,
                                    const EvidenceConfig& config) {
  EvidenceBundle b;
  b.script_id = record.script_id;
  b.filter_hits = FilterHitsFor(record.source_url, config.filter_lists, config.filter_context);
  b.keyword_hits = KeywordHits(record.source_text, record.script_id, record.source_url, config.keywords);
  b.exfiltration_hits = ExfiltrationSignals(record);
  b.similarity = std::move(similarity);
  b.clean_intersection = std::move(clean_intersection);
  b.Recount();
  return b;
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_EVIDENCE_HPP_
