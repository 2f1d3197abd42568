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

#ifndef FPCLASSIFY_REVIEW_HPP_
#define FPCLASSIFY_REVIEW_HPP_

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fpclassify/classifier.hpp"
#include "fpclassify/codec.hpp"
#include "fpclassify/evidence.hpp"
#include "fpclassify/store.hpp"

namespace fpclassify {

struct Progress {
  std::size_t total = 0;
  std::size_t suspects = 0;
  std::size_t cleans = 0;
  std::size_t unknowns = 0;
  std::size_t unlabeled = 0;
  std::uint64_t pass_index = 0;
  std::uint64_t manual_decisions = 0;
  bool finished = false;
};

struct PendingItem {
  std::string script_id;
  EvidenceBundle evidence;
  std::size_t position = 0;
  std::uint64_t pass_index = 0;
};

struct SubmitAck {
  bool accepted = false;
  bool recompute_triggered = false;
};

struct Persistence {
  std::filesystem::path state_path;
  std::string manifest_digest;
};

inline nlohmann::json ProgressToJson(const Progress& p) {
  return {{"total", p.total},         {"suspects", p.suspects},   {"cleans", p.cleans},
          {"unknowns", p.unknowns},   {"unlabeled", p.unlabeled}, {"pass_index", p.pass_index},
          {"manual_decisions", p.manual_decisions}, {"finished", p.finished}};
}

inline nlohmann::json PendingToJson(const PendingItem& item) {
  return {{"script_id", item.script_id},
          {"evidence", EvidenceToJson(item.evidence)},
          {"position", item.position},
          {"pass_index", item.pass_index}};
}

// Serializes every access to one Session: one pending item at a time,
// exactly-once acceptance per item, a snapshot after every manual label.
class ReviewService {
 public:
  ReviewService(Session session, EvidenceConfig config, std::optional<Persistence> persistence = std::nullopt)
      : session_(std::move(session)), config_(std::move(config)), persistence_(std::move(persistence)) {
    std::lock_guard<std::mutex> lock(mu_);
    AdvanceLocked();
  }

  Progress GetProgress() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ProgressLocked();
  }

  // Returns the current item; repeated calls return the same one until it is
  // labeled. Waits up to `wait` for one to appear while processing runs.
  std::optional<PendingItem> GetNextPending(std::chrono::milliseconds wait = std::chrono::milliseconds(0)) {
    std::unique_lock<std::mutex> lock(mu_);
    auto deadline = std::chrono::steady_clock::now() + wait;
    while (!pending_ && !session_.finished()) {
      if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) break;
    }
    return pending_;
  }

  SubmitAck SubmitLabel(const std::string& script_id, std::string_view label_text, bool privacy_policy_checked) {
    auto label = ParseLabel(label_text);
    if (!label) throw Error(Errc::kInvalidLabel, std::string(label_text));
    return SubmitLabel(script_id, *label, privacy_policy_checked);
  }

  SubmitAck SubmitLabel(const std::string& script_id, Label label, bool privacy_policy_checked) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!session_.corpus().IndexOf(script_id)) throw Error(Errc::kUnknownScript, script_id);
    if (!pending_ || pending_->script_id != script_id) throw Error(Errc::kStaleSubmission, script_id);
    EvidenceBundle evidence = pending_->evidence;
    evidence.SetPrivacyPolicyChecked(privacy_policy_checked);
    ManualDecision decision{label, privacy_policy_checked, evidence.criteria_met};
    auto outcome = session_.ApplyManualLabel(script_id, decision);
    pending_.reset();
    AdvanceLocked();
    PersistLocked();
    cv_.notify_all();
    return SubmitAck{true, outcome == Session::ApplyOutcome::kRecompute};
  }

  // Read-only detail view for one corpus script.
  nlohmann::json GetScript(const std::string& script_id) {
    std::lock_guard<std::mutex> lock(mu_);
    const ScriptRecord& rec = session_.corpus().Get(script_id);
    nlohmann::json sends = nlohmann::json::array();
    for (const auto& s : rec.network_sends)
      sends.push_back({{"url", s.destination_url}, {"payload_bytes", s.payload.size()}});
    nlohmann::json out = {{"script_id", rec.script_id},
                          {"source_url", rec.source_url},
                          {"content_hash", rec.content_hash},
                          {"low_confidence", rec.low_confidence},
                          {"ground_truth", session_.IsGroundTruth(script_id)},
                          {"attributes", AttributeSetToJson(rec.attributes)},
                          {"network_sends", std::move(sends)},
                          {"source_text", rec.source_text ? nlohmann::json(*rec.source_text) : nlohmann::json(nullptr)}};
    auto label = session_.LabelOf(script_id);
    out["label"] = label ? nlohmann::json(LabelName(*label)) : nlohmann::json(nullptr);
    const LabelEvent* ev = session_.EventFor(script_id);
    out["label_event"] = ev ? LabelEventToJson(*ev) : nlohmann::json(nullptr);
    if (!session_.state().matrix.empty()) {
      EvidenceBundle b = BuildEvidence(rec, session_.Similarity(script_id), session_.CleanIntersection(script_id), config_);
      if (ev && ev->method == LabelMethod::kManual) b.SetPrivacyPolicyChecked(ev->privacy_policy_checked);
      out["evidence"] = EvidenceToJson(b);
    } else {
      out["evidence"] = nullptr;
    }
    return out;
  }

  std::vector<LabelEvent> GetLabels() const {
    std::lock_guard<std::mutex> lock(mu_);
    return session_.state().decision_log;
  }

  SessionState StateCopy() const {
    std::lock_guard<std::mutex> lock(mu_);
    return session_.state();
  }

  // Writes a snapshot now. No-op without persistence.
  void Checkpoint() {
    std::lock_guard<std::mutex> lock(mu_);
    if (persistence_)
      SaveSnapshot(session_.state(), session_.corpus(), persistence_->manifest_digest, persistence_->state_path);
  }

  std::optional<std::string> last_persist_error() const {
    std::lock_guard<std::mutex> lock(mu_);
    return last_persist_error_;
  }

 private:
  Progress ProgressLocked() const {
    const auto& s = session_.state();
    Progress p;
    p.suspects = s.suspects.size();
    p.cleans = s.cleans.size();
    p.unknowns = s.unknowns.size();
    p.unlabeled = s.unlabeled.size();
    p.total = p.suspects + p.cleans + p.unknowns + p.unlabeled;
    p.pass_index = s.pass_count;
    p.manual_decisions = s.manual_decision_count;
    p.finished = s.finished;
    return p;
  }

  void AdvanceLocked() {
    Session::Step step = session_.Advance();
    if (step.finished) {
      pending_.reset();
      return;
    }
    const DecisionRequest& req = *step.request;
    const ScriptRecord& rec = session_.corpus().Get(req.script_id);
    pending_ = PendingItem{req.script_id, BuildEvidence(rec, req.similarity, req.clean_intersection, config_),
                           req.position, req.pass_index};
  }

  void PersistLocked() {
    if (!persistence_) return;
    try {
      SaveSnapshot(session_.state(), session_.corpus(), persistence_->manifest_digest, persistence_->state_path);
      last_persist_error_.reset();
    } catch (const Error& e) {
      last_persist_error_ = e.what();
    }
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  Session session_;
  EvidenceConfig config_;
  std::optional<Persistence> persistence_;
  std::optional<PendingItem> pending_;
  std::optional<std::string> last_persist_error_;
};

}  // namespace fpclassify

#endif  // FPCLASSIFY_REVIEW_HPP_
