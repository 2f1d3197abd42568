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

#ifndef FPCLASSIFY_HTTP_HPP_
#define FPCLASSIFY_HTTP_HPP_

#include <algorithm>
#include <chrono>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "fpclassify/codec.hpp"
#include "fpclassify/review.hpp"

namespace fpclassify {

inline constexpr int kMaxLongPollSeconds = 30;

namespace detail {

inline void SendJson(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

inline int StatusFor(Errc code) {
  switch (code) {
    case Errc::kUnknownScript: return 404;
    case Errc::kStaleSubmission:
    case Errc::kAlreadyLabeled: return 409;
    case Errc::kInvalidLabel:
    case Errc::kInvalidInput: return 400;
    default: return 500;
  }
}

inline void SendError(httplib::Response& res, const Error& e) {
  SendJson(res, StatusFor(e.code()), {{"error", ErrcName(e.code())}, {"detail", e.detail()}});
}

}  // namespace detail

// Routes:
//   GET  /api/progress
//   GET  /api/queue/next[?wait=seconds]
//   POST /api/labels         {script_id, label, privacy_policy_checked}
//   GET  /api/labels
//   GET  /api/scripts/{id}   (id percent-encoded; may contain '/')
inline void MountReviewApi(httplib::Server& server, ReviewService& service) {
  server.Get("/api/progress", [&service](const httplib::Request&, httplib::Response& res) {
    detail::SendJson(res, 200, ProgressToJson(service.GetProgress()));
  });

  server.Get("/api/queue/next", [&service](const httplib::Request& req, httplib::Response& res) {
    int wait = 0;
    if (req.has_param("wait")) {
      try {
        wait = std::stoi(req.get_param_value("wait"));
      } catch (const std::exception&) {
        detail::SendJson(res, 400, {{"error", "InvalidInput"}, {"detail", "wait must be an integer"}});
        return;
      }
    }
    wait = std::clamp(wait, 0, kMaxLongPollSeconds);
    auto item = service.GetNextPending(std::chrono::seconds(wait));
    if (item) {
      detail::SendJson(res, 200, {{"pending", true}, {"item", PendingToJson(*item)}});
    } else {
      auto progress = service.GetProgress();
      detail::SendJson(res, 200, {{"pending", false}, {"finished", progress.finished}});
    }
  });

  server.Post("/api/labels", [&service](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("script_id") || !body["script_id"].is_string() ||
        !body.contains("label") || !body["label"].is_string() ||
        (body.contains("privacy_policy_checked") && !body["privacy_policy_checked"].is_boolean())) {
      detail::SendJson(res, 400, {{"error", "InvalidInput"}, {"detail", "expected {script_id, label}"}});
      return;
    }
    bool privacy = body.value("privacy_policy_checked", false);
    try {
      auto ack = service.SubmitLabel(body["script_id"].get<std::string>(), body["label"].get<std::string>(), privacy);
      detail::SendJson(res, 200, {{"accepted", ack.accepted}, {"recompute_triggered", ack.recompute_triggered}});
    } catch (const Error& e) {
      detail::SendError(res, e);
    }
  });

  server.Get("/api/labels", [&service](const httplib::Request&, httplib::Response& res) {
    detail::SendJson(res, 200, DecisionLogToJson(service.GetLabels()));
  });

  server.Get(R"(/api/scripts/(.+))", [&service](const httplib::Request& req, httplib::Response& res) {
    // httplib has already percent-decoded the path.
    std::string id = req.matches[1].str();
    try {
      detail::SendJson(res, 200, service.GetScript(id));
    } catch (const Error& e) {
      detail::SendError(res, e);
    }
  });
}

}  // namespace fpclassify

#endif  // FPCLASSIFY_HTTP_HPP_
