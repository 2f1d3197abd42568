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

#ifndef FPCLASSIFY_REPORT_HPP_
#define FPCLASSIFY_REPORT_HPP_

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fpclassify/classifier.hpp"
#include "fpclassify/codec.hpp"
#include "fpclassify/error.hpp"

namespace fpclassify {

struct ReportRow {
  std::string script_id;
  std::string label;   // fingerprinter | non-fingerprinter | unknown | unlabeled
  std::string method;  // auto | manual | "" when unlabeled
  std::string rule;    // auto-score1 | auto-intersection | manual | ""
  std::optional<Score> score;
  std::optional<int> criteria_met;
};

struct Report {
  std::vector<ReportRow> rows;  // sorted by script_id
  std::size_t suspects = 0;
  std::size_t cleans = 0;
  std::size_t unknowns = 0;
  std::size_t unlabeled = 0;
  std::uint64_t manual_decisions = 0;
  std::uint64_t passes = 0;
  bool finished = false;
};

// Builds the report from a snapshot's "state" object alone; no corpus needed.
inline Report BuildReport(const nlohmann::json& state) {
  Report report;
  std::map<std::string, std::string> label_of;
  std::map<std::string, LabelEvent> last_event;
  try {
    for (const auto& id : state.at("suspects")) label_of[id.get<std::string>()] = "fingerprinter";
    for (const auto& id : state.at("cleans")) label_of[id.get<std::string>()] = "non-fingerprinter";
    for (const auto& id : state.at("unknowns")) label_of[id.get<std::string>()] = "unknown";
    for (const auto& id : state.at("unlabeled")) label_of[id.get<std::string>()] = "unlabeled";
    for (const auto& e : state.at("decision_log")) {
      LabelEvent ev = LabelEventFromJson(e);
      last_event[ev.script_id] = ev;
    }
    report.suspects = state.at("suspects").size();
    report.cleans = state.at("cleans").size();
    report.unknowns = state.at("unknowns").size();
    report.unlabeled = state.at("unlabeled").size();
    report.manual_decisions = state.at("manual_decision_count").get<std::uint64_t>();
    report.passes = state.at("pass_count").get<std::uint64_t>();
    report.finished = state.at("finished").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kCorruptSnapshot, e.what());
  }
  for (const auto& [id, label] : label_of) {
    ReportRow row{id, label, "", "", std::nullopt, std::nullopt};
    if (auto it = last_event.find(id); it != last_event.end() && label != "unlabeled") {
      const LabelEvent& ev = it->second;
      row.method = ev.method == LabelMethod::kManual ? "manual" : "auto";
      row.rule = std::string(LabelMethodName(ev.method));
      row.score = ev.score;
      row.criteria_met = ev.criteria_met;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline std::string FormatScore(const std::optional<Score>& score) {
  if (!score) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", score->ToDouble());
  return buf;
}

inline std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string RenderCsv(const Report& report) {
  std::ostringstream out;
  out << "script_id,label,method,score,criteria_met\n";
  for (const auto& r : report.rows) {
    out << CsvField(r.script_id) << ',' << r.label << ',' << r.method << ',' << FormatScore(r.score) << ','
        << (r.criteria_met ? std::to_string(*r.criteria_met) : "") << '\n';
  }
  return out.str();
}

inline std::string RenderJson(const Report& report) {
  nlohmann::json scripts = nlohmann::json::array();
  for (const auto& r : report.rows) {
    scripts.push_back({{"script_id", r.script_id},
                       {"label", r.label},
                       {"method", r.method.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.method)},
                       {"rule", r.rule.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.rule)},
                       {"score", r.score ? ScoreToJson(*r.score) : nlohmann::json(nullptr)},
                       {"criteria_met", r.criteria_met ? nlohmann::json(*r.criteria_met) : nlohmann::json(nullptr)}});
  }
  nlohmann::json doc = {{"summary",
                         {{"suspects", report.suspects},
                          {"cleans", report.cleans},
                          {"unknowns", report.unknowns},
                          {"unlabeled", report.unlabeled},
                          {"manual_decisions", report.manual_decisions},
                          {"passes", report.passes},
                          {"finished", report.finished}}},
                        {"scripts", std::move(scripts)}};
  return doc.dump(2) + "\n";
}

inline std::string RenderText(const Report& report) {
  std::ostringstream out;
  auto list = [&](const char* title, const char* label) {
    out << title << ":\n";
    for (const auto& r : report.rows)
      if (r.label == label)
        out << "  " << r.script_id << "  [" << (r.rule.empty() ? "-" : r.rule) << ", score " << FormatScore(r.score)
            << "]\n";
  };
  list("fingerprinters", "fingerprinter");
  list("non-fingerprinters", "non-fingerprinter");
  list("unknown", "unknown");
  if (report.unlabeled) list("unlabeled", "unlabeled");
  out << "suspects=" << report.suspects << " cleans=" << report.cleans << " unknowns=" << report.unknowns
      << " unlabeled=" << report.unlabeled << " manual_decisions=" << report.manual_decisions
      << " passes=" << report.passes << (report.finished ? " (finished)" : " (in progress)") << '\n';
  return out.str();
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_REPORT_HPP_
