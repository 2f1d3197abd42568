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

#ifndef FPCLASSIFY_CODEC_HPP_
#define FPCLASSIFY_CODEC_HPP_

#include <string>

#include "json.hpp"

#include "fpclassify/attribute.hpp"
#include "fpclassify/classifier.hpp"
#include "fpclassify/evidence.hpp"
#include "fpclassify/similarity.hpp"

// JSON shapes shared by the snapshot store, the review API and reports.
namespace fpclassify {

inline nlohmann::json KeyToJson(const AttributeKey& key) { return {{"name", key.name}, {"args", key.args}}; }

inline AttributeKey KeyFromJson(const nlohmann::json& j) {
  return AttributeKey{j.at("name").get<std::string>(), j.at("args").get<std::vector<std::string>>()};
}

inline nlohmann::json KeySetToJson(const KeySet& keys) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& k : keys) out.push_back(KeyToJson(k));
  return out;
}

inline nlohmann::json AttributeSetToJson(const AttributeSet& set) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [k, c] : set) out.push_back({{"name", k.name}, {"args", k.args}, {"count", c}});
  return out;
}

inline nlohmann::json ScoreToJson(const Score& s) {
  return {{"numerator", s.numerator}, {"denominator", s.denominator}, {"value", s.ToDouble()}};
}

inline Score ScoreFromJson(const nlohmann::json& j) {
  return Score{j.at("numerator").get<std::uint64_t>(), j.at("denominator").get<std::uint64_t>()};
}

inline nlohmann::json SimilarityToJson(const SimilarityResult& r) {
  return {{"script_id", r.script_id},
          {"score", ScoreToJson(r.score)},
          {"matched_fingerprinter_id", r.matched_fingerprinter_id ? nlohmann::json(*r.matched_fingerprinter_id)
                                                                  : nlohmann::json(nullptr)},
          {"intersection", KeySetToJson(r.intersection)}};
}

inline nlohmann::json EvidenceToJson(const EvidenceBundle& b) {
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& h : b.filter_hits) filters.push_back({{"list_name", h.list_name}, {"rule", h.raw_rule}});
  nlohmann::json keywords = nlohmann::json::array();
  for (const auto& h : b.keyword_hits) keywords.push_back({{"keyword", h.keyword}, {"occurrence_count", h.occurrence_count}});
  nlohmann::json exfil = nlohmann::json::array();
  for (const auto& h : b.exfiltration_hits)
    exfil.push_back({{"value_excerpt", h.value_excerpt}, {"destination_url", h.destination_url}});
  return {{"script_id", b.script_id},
          {"filter_hits", std::move(filters)},
          {"keyword_hits", std::move(keywords)},
          {"exfiltration_hits", std::move(exfil)},
          {"privacy_policy_checked", b.privacy_policy_checked},
          {"similarity", SimilarityToJson(b.similarity)},
          {"clean_intersection", KeySetToJson(b.clean_intersection)},
          {"criteria_met", b.criteria_met},
          {"suggested_label", LabelName(b.suggested_label)}};
}

inline nlohmann::json LabelEventToJson(const LabelEvent& e) {
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"seq", e.seq},
          {"script_id", e.script_id},
          {"label", LabelName(e.label)},
          {"method", LabelMethodName(e.method)},
          {"pass_index", e.pass_index},
          {"score", {e.score.numerator, e.score.denominator}},
          {"matched_fingerprinter", opt(e.matched_fingerprinter)},
          {"evidence_ref", opt(e.evidence_ref)},
          {"criteria_met", opt(e.criteria_met)},
          {"privacy_policy_checked", e.privacy_policy_checked}};
}

inline LabelEvent LabelEventFromJson(const nlohmann::json& j) {
  LabelEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.script_id = j.at("script_id").get<std::string>();
  auto label = ParseLabel(j.at("label").get<std::string>());
  auto method = ParseLabelMethod(j.at("method").get<std::string>());
  if (!label || !method) throw Error(Errc::kCorruptSnapshot, "bad label event " + std::to_string(e.seq));
  e.label = *label;
  e.method = *method;
  e.pass_index = j.at("pass_index").get<std::uint64_t>();
  const auto& score = j.at("score");
  e.score = Score{score.at(0).get<std::uint64_t>(), score.at(1).get<std::uint64_t>()};
  if (!j.at("matched_fingerprinter").is_null()) e.matched_fingerprinter = j["matched_fingerprinter"].get<std::string>();
  if (!j.at("evidence_ref").is_null()) e.evidence_ref = j["evidence_ref"].get<std::string>();
  if (!j.at("criteria_met").is_null()) e.criteria_met = j["criteria_met"].get<int>();
  e.privacy_policy_checked = j.at("privacy_policy_checked").get<bool>();
  return e;
}

inline nlohmann::json DecisionLogToJson(const std::vector<LabelEvent>& log) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : log) out.push_back(LabelEventToJson(e));
  return out;
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_CODEC_HPP_
