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

#ifndef FPCLASSIFY_CLASSIFIER_HPP_
#define FPCLASSIFY_CLASSIFIER_HPP_

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fpclassify/attribute.hpp"
#include "fpclassify/error.hpp"
#include "fpclassify/ingestion.hpp"
#include "fpclassify/key_bits.hpp"
#include "fpclassify/matrix.hpp"
#include "fpclassify/similarity.hpp"

namespace fpclassify {

enum class AutoDecision { kLabelFingerprinter, kLabelClean, kNeedsManual };

enum class LabelMethod { kAutoScore1, kAutoIntersection, kManual };

inline std::string_view LabelMethodName(LabelMethod m) {
  switch (m) {
    case LabelMethod::kAutoScore1: return "auto-score1";
    case LabelMethod::kAutoIntersection: return "auto-intersection";
    case LabelMethod::kManual: return "manual";
  }
  return "manual";
}

inline std::optional<LabelMethod> ParseLabelMethod(std::string_view text) {
  if (text == "auto-score1") return LabelMethod::kAutoScore1;
  if (text == "auto-intersection") return LabelMethod::kAutoIntersection;
  if (text == "manual") return LabelMethod::kManual;
  return std::nullopt;
}

// Score exactly one labels a fingerprinter; otherwise equal fingerprinter and
// clean intersections label a clean; anything else goes to a human.
template <KeySetLike Set>
AutoDecision AutoDecide(const Score& score, const Set& fp_intersection, const Set& clean_intersection) {
  if (score.IsOne()) return AutoDecision::kLabelFingerprinter;
  if (SetAlgebra<Set>::Equal(fp_intersection, clean_intersection)) return AutoDecision::kLabelClean;
  return AutoDecision::kNeedsManual;
}

inline AutoDecision AutoDecide(const SimilarityResult& result, const KeySet& clean_intersection) {
  return AutoDecide(result.score, result.intersection, clean_intersection);
}

// What a reviewer (or oracle) answers for one script.
struct ManualDecision {
  Label label = Label::kUnknown;
  bool privacy_policy_checked = false;
  std::optional<int> criteria_met;
};

struct LabelEvent {
  std::uint64_t seq = 0;
  std::string script_id;
  Label label = Label::kUnknown;
  LabelMethod method = LabelMethod::kManual;
  std::uint64_t pass_index = 0;
  Score score;
  std::optional<std::string> matched_fingerprinter;
  std::optional<std::string> evidence_ref;
  std::optional<int> criteria_met;
  bool privacy_policy_checked = false;

  friend bool operator==(const LabelEvent& a, const LabelEvent& b) {
    return a.seq == b.seq && a.script_id == b.script_id && a.label == b.label && a.method == b.method &&
           a.pass_index == b.pass_index && a.score.numerator == b.score.numerator &&
           a.score.denominator == b.score.denominator && a.matched_fingerprinter == b.matched_fingerprinter &&
           a.evidence_ref == b.evidence_ref && a.criteria_met == b.criteria_met &&
           a.privacy_policy_checked == b.privacy_policy_checked;
  }
};

struct SessionOptions {
  // Keep labeled scripts in the scoring pool. Their labels never change;
  // disagreeing auto decisions are only counted.
  bool rescore_labeled = false;
  IdentityMode identity = IdentityMode::kNameArgs;

  bool operator==(const SessionOptions&) const = default;
};

// Position inside the current pass.
struct WalkState {
  bool open = false;
  std::vector<std::string> order;
  std::size_t cursor = 0;
  std::optional<std::string> pending;

  bool operator==(const WalkState&) const = default;
};

struct SessionState {
  FingerprinterMatrix matrix;
  std::size_t ground_truth_rows = 0;
  std::vector<std::string> suspects;
  std::vector<std::string> cleans;
  std::vector<std::string> unknowns;
  std::set<std::string> unlabeled;
  std::uint64_t pass_count = 0;
  std::uint64_t manual_decision_count = 0;
  std::vector<LabelEvent> decision_log;
  WalkState walk;
  bool finished = false;
  std::uint64_t rescore_conflicts = 0;
  SessionOptions options;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

// Ids that take part in labeling: the corpus minus the ground-truth rows.
inline std::set<std::string> LabelingPopulation(const Corpus& corpus, const FingerprinterMatrix& matrix,
                                                std::size_t ground_truth_rows) {
  std::set<std::string> ids;
  for (const auto& r : corpus.records()) ids.insert(r.script_id);
  for (std::size_t i = 0; i < ground_truth_rows && i < matrix.size(); ++i)
    ids.erase(matrix.row(i).fingerprinter_id);
  return ids;
}

// Empty when suspects, cleans, unknowns and unlabeled partition the
// population; otherwise a description of the first violation.
inline std::optional<std::string> CheckPartition(const SessionState& state, const Corpus& corpus) {
  auto population = LabelingPopulation(corpus, state.matrix, state.ground_truth_rows);
  std::set<std::string> seen;
  auto take = [&](const std::string& id, const char* where) -> std::optional<std::string> {
    if (!population.count(id)) return std::string(where) + " holds " + id + " outside the population";
    if (!seen.insert(id).second) return id + " appears twice (" + where + ")";
    return std::nullopt;
  };
  for (const auto& id : state.suspects)
    if (auto err = take(id, "suspects")) return err;
  for (const auto& id : state.cleans)
    if (auto err = take(id, "cleans")) return err;
  for (const auto& id : state.unknowns)
    if (auto err = take(id, "unknowns")) return err;
  for (const auto& id : state.unlabeled)
    if (auto err = take(id, "unlabeled")) return err;
  if (seen.size() != population.size()) return std::string("partition does not cover the population");
  if (state.ground_truth_rows > state.matrix.size()) return std::string("ground_truth_rows exceeds matrix size");
  return std::nullopt;
}

struct DecisionRequest {
  std::string script_id;
  SimilarityResult similarity;
  KeySet clean_intersection;
  std::size_t position = 0;
  std::uint64_t pass_index = 0;
};

enum class PassOutcome { kRecompute, kFinished };

// The incremental labeling loop as an explicit state machine. Advance() runs
// automatic labeling until a human answer is needed or the corpus is done;
// ApplyManualLabel() feeds the answer back. Not thread-safe; callers
// serialize access.
class Session {
 public:
  struct Step {
    bool finished = false;
    std::optional<DecisionRequest> request;
  };

  enum class ApplyOutcome { kRecompute, kContinue };

  Session(std::shared_ptr<const Corpus> corpus, FingerprinterMatrix matrix, SessionOptions options = {})
      : corpus_(std::move(corpus)) {
    state_.matrix = std::move(matrix);
    state_.ground_truth_rows = state_.matrix.size();
    state_.options = options;
    state_.unlabeled = LabelingPopulation(*corpus_, state_.matrix, state_.ground_truth_rows);
    Rebuild();
  }

  // Continues from a saved state. The state must partition `corpus`.
  static Session Resume(std::shared_ptr<const Corpus> corpus, SessionState state) {
    if (auto err = CheckPartition(state, *corpus)) throw Error(Errc::kConsistencyError, *err);
    return Session(std::move(corpus), std::move(state));
  }

  const SessionState& state() const { return state_; }
  const Corpus& corpus() const { return *corpus_; }
  std::shared_ptr<const Corpus> shared_corpus() const { return corpus_; }
  bool finished() const { return state_.finished; }

  std::optional<Label> LabelOf(const std::string& id) const {
    auto it = label_of_.find(id);
    if (it == label_of_.end()) return std::nullopt;
    return it->second;
  }

  bool IsGroundTruth(const std::string& id) const {
    for (std::size_t i = 0; i < state_.ground_truth_rows; ++i)
      if (state_.matrix.row(i).fingerprinter_id == id) return true;
    return false;
  }

  // Most recent event for `id`, if any.
  const LabelEvent* EventFor(const std::string& id) const {
    for (auto it = state_.decision_log.rbegin(); it != state_.decision_log.rend(); ++it)
      if (it->script_id == id) return &*it;
    return nullptr;
  }

  Step Advance() {
    if (state_.finished) return Step{true, std::nullopt};
    if (state_.walk.pending) return Step{false, MakeRequest(*state_.walk.pending)};
    if (!state_.walk.open) StartPass();
    auto& walk = state_.walk;
    while (walk.cursor < walk.order.size()) {
      const std::string id = walk.order[walk.cursor];
      const std::size_t idx = *corpus_->IndexOf(id);
      AutoDecision decision = Decide(idx);
      auto label = LabelOf(id);
      if (label && *label != Label::kUnknown) {
        // Only reachable with rescore_labeled.
        bool agrees = (decision == AutoDecision::kLabelFingerprinter && *label == Label::kFingerprinter) ||
                      (decision == AutoDecision::kLabelClean && *label == Label::kNonFingerprinter) ||
                      decision == AutoDecision::kNeedsManual;
        if (!agrees) ++state_.rescore_conflicts;
        ++walk.cursor;
        continue;
      }
      if (decision == AutoDecision::kLabelFingerprinter) {
        AssignLabel(id, idx, Label::kFingerprinter, LabelMethod::kAutoScore1, {});
      } else if (decision == AutoDecision::kLabelClean) {
        AssignLabel(id, idx, Label::kNonFingerprinter, LabelMethod::kAutoIntersection, {});
      } else if (!label) {
        walk.pending = id;
        return Step{false, MakeRequest(id)};
      }
      // Scripts already marked unknown are never sent back to review.
      ++walk.cursor;
    }
    walk = WalkState{};
    state_.finished = true;
    return Step{true, std::nullopt};
  }

  std::optional<DecisionRequest> Pending() {
    if (!state_.walk.pending) return std::nullopt;
    return MakeRequest(*state_.walk.pending);
  }

  // Records a human label. Fingerprinter and NonFingerprinter end the current
  // pass (scores must be recomputed); Unknown lets the walk continue.
  ApplyOutcome ApplyManualLabel(const std::string& id, const ManualDecision& decision) {
    auto idx = corpus_->IndexOf(id);
    if (!idx) throw Error(Errc::kUnknownScript, id);
    if (!state_.unlabeled.count(id)) throw Error(Errc::kAlreadyLabeled, id);
    const ScriptRecord& rec = corpus_->records()[*idx];
    if (decision.label == Label::kFingerprinter && rec.attributes.empty())
      throw Error(Errc::kEmptyFingerprinterAttributes, id);

    ++state_.manual_decision_count;
    AssignLabel(id, *idx, decision.label, LabelMethod::kManual, decision);
    const bool was_pending = state_.walk.pending == id;
    if (decision.label == Label::kUnknown) {
      if (was_pending) {
        state_.walk.pending.reset();
        ++state_.walk.cursor;
      }
      return ApplyOutcome::kContinue;
    }
    state_.walk = WalkState{};
    return ApplyOutcome::kRecompute;
  }

  // Current best match for any corpus script.
  SimilarityResult Similarity(const std::string& id) {
    auto idx = corpus_->IndexOf(id);
    if (!idx) throw Error(Errc::kUnknownScript, id);
    if (state_.matrix.empty()) throw Error(Errc::kEmptyMatrix, "cannot score " + id);
    Refresh(*idx);
    return BuildResult(*idx);
  }

  KeySet CleanIntersection(const std::string& id) {
    auto idx = corpus_->IndexOf(id);
    if (!idx) throw Error(Errc::kUnknownScript, id);
    if (state_.matrix.empty()) return {};
    Refresh(*idx);
    RefreshClean(*idx);
    return cache_[*idx].clean.intersection.ToKeySet(universe_);
  }

 private:
  struct ScriptCache {
    std::size_t rows_seen = 0;
    std::optional<RowMatch> best;
    KeyBits fp_intersection;
    std::size_t cleans_seen = 0;
    CleanMatch<KeyBits> clean;
  };

  Session(std::shared_ptr<const Corpus> corpus, SessionState state)
      : corpus_(std::move(corpus)), state_(std::move(state)) {
    Rebuild();
  }

  void Rebuild() {
    universe_ = KeyUniverse{};
    for (const auto& r : corpus_->records())
      for (const auto& [k, c] : r.attributes) universe_.Intern(k);
    bits_.clear();
    for (const auto& r : corpus_->records()) bits_.push_back(KeyBits::FromSet(r.attributes, universe_));
    row_bits_.clear();
    for (const auto& row : state_.matrix.rows()) row_bits_.push_back(KeyBits::FromSet(row.attributes, universe_));
    clean_index_.clear();
    for (const auto& id : state_.cleans) {
      auto idx = corpus_->IndexOf(id);
      if (!idx) throw Error(Errc::kConsistencyError, "clean " + id + " not in corpus");
      clean_index_.push_back(*idx);
    }
    cache_.assign(corpus_->size(), ScriptCache{});
    label_of_.clear();
    for (const auto& id : state_.suspects) label_of_[id] = Label::kFingerprinter;
    for (const auto& id : state_.cleans) label_of_[id] = Label::kNonFingerprinter;
    for (const auto& id : state_.unknowns) label_of_[id] = Label::kUnknown;
  }

  void StartPass() {
    std::vector<std::size_t> pool;
    for (const auto& id : state_.unlabeled) pool.push_back(*corpus_->IndexOf(id));
    for (const auto& id : state_.unknowns) pool.push_back(*corpus_->IndexOf(id));
    if (state_.options.rescore_labeled) {
      for (const auto& id : state_.suspects) pool.push_back(*corpus_->IndexOf(id));
      for (const auto& id : state_.cleans) pool.push_back(*corpus_->IndexOf(id));
    }
    if (!pool.empty() && state_.matrix.empty()) throw Error(Errc::kEmptyMatrix, "no fingerprinter rows");
    ++state_.pass_count;
    for (std::size_t idx : pool) Refresh(idx);
    const auto& records = corpus_->records();
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      return RanksBefore(cache_[a].best->score, cache_[a].best->intersection_size, records[a].script_id,
                         cache_[b].best->score, cache_[b].best->intersection_size, records[b].script_id);
    });
    WalkState walk;
    walk.open = true;
    walk.order.reserve(pool.size());
    for (std::size_t idx : pool) walk.order.push_back(records[idx].script_id);
    state_.walk = std::move(walk);
  }

  // Folds matrix rows added since the last visit. A new winner invalidates
  // the cached clean comparison.
  void Refresh(std::size_t idx) {
    auto& c = cache_[idx];
    if (c.rows_seen >= row_bits_.size()) return;
    bool changed = FoldBestMatch(bits_[idx], c.rows_seen, row_bits_.size(),
                                 [&](std::size_t i) -> const KeyBits& { return row_bits_[i]; }, c.best);
    c.rows_seen = row_bits_.size();
    if (changed) {
      c.fp_intersection = IntersectionOf(bits_[idx], row_bits_[c.best->row]);
      c.cleans_seen = 0;
      c.clean = CleanMatch<KeyBits>{};
    }
  }

  void RefreshClean(std::size_t idx) {
    auto& c = cache_[idx];
    if (c.cleans_seen >= clean_index_.size()) return;
    FoldBiggestIntersection(c.fp_intersection, c.cleans_seen, clean_index_.size(),
                            [&](std::size_t i) -> const KeyBits& { return bits_[clean_index_[i]]; }, c.clean);
    c.cleans_seen = clean_index_.size();
  }

  AutoDecision Decide(std::size_t idx) {
    Refresh(idx);
    auto& c = cache_[idx];
    if (c.best->score.IsOne()) return AutoDecision::kLabelFingerprinter;
    RefreshClean(idx);
    return AutoDecide(c.best->score, c.fp_intersection, c.clean.intersection);
  }

  SimilarityResult BuildResult(std::size_t idx) const {
    const auto& c = cache_[idx];
    return SimilarityResult{corpus_->records()[idx].script_id, c.best->score,
                            state_.matrix.row(c.best->row).fingerprinter_id,
                            c.fp_intersection.ToKeySet(universe_)};
  }

  DecisionRequest MakeRequest(const std::string& id) {
    std::size_t idx = *corpus_->IndexOf(id);
    Refresh(idx);
    RefreshClean(idx);
    return DecisionRequest{id, BuildResult(idx), cache_[idx].clean.intersection.ToKeySet(universe_),
                           state_.walk.cursor, state_.pass_count};
  }

  void AssignLabel(const std::string& id, std::size_t idx, Label label, LabelMethod method,
                   const std::optional<ManualDecision>& manual) {
    LabelEvent ev;
    ev.seq = state_.decision_log.size() + 1;
    ev.script_id = id;
    ev.label = label;
    ev.method = method;
    ev.pass_index = state_.pass_count;
    if (!state_.matrix.empty()) {
      Refresh(idx);
      ev.score = cache_[idx].best->score;
      ev.matched_fingerprinter = state_.matrix.row(cache_[idx].best->row).fingerprinter_id;
    }
    if (manual) {
      ev.evidence_ref = "ev-" + std::to_string(ev.seq);
      ev.criteria_met = manual->criteria_met;
      ev.privacy_policy_checked = manual->privacy_policy_checked;
    }

    auto previous = LabelOf(id);
    if (previous == Label::kUnknown) {
      auto& u = state_.unknowns;
      u.erase(std::remove(u.begin(), u.end(), id), u.end());
    }
    state_.unlabeled.erase(id);
    switch (label) {
      case Label::kFingerprinter:
        state_.suspects.push_back(id);
        if (method == LabelMethod::kManual) {
          state_.matrix.AddRow(id, corpus_->records()[idx].attributes);
          row_bits_.push_back(bits_[idx]);
        }
        break;
      case Label::kNonFingerprinter:
        state_.cleans.push_back(id);
        clean_index_.push_back(idx);
        break;
      case Label::kUnknown:
        state_.unknowns.push_back(id);
        break;
    }
    label_of_[id] = label;
    state_.decision_log.push_back(std::move(ev));
  }

  std::shared_ptr<const Corpus> corpus_;
  SessionState state_;
  KeyUniverse universe_;
  std::vector<KeyBits> bits_;
  std::vector<KeyBits> row_bits_;
  std::vector<std::size_t> clean_index_;
  std::vector<ScriptCache> cache_;
  std::unordered_map<std::string, Label> label_of_;
};

template <typename Provider>
concept DecisionProvider = std::invocable<Provider&, const DecisionRequest&> &&
    std::convertible_to<std::invoke_result_t<Provider&, const DecisionRequest&>, ManualDecision>;

// Runs one pass to its end. A throwing provider leaves the request pending.
template <DecisionProvider Provider>
PassOutcome RunPass(Session& session, Provider& provider) {
  for (;;) {
    Session::Step step = session.Advance();
    if (step.finished) return PassOutcome::kFinished;
    ManualDecision decision;
    try {
      decision = provider(*step.request);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::kDecisionProviderFailure, e.what());
    }
    if (session.ApplyManualLabel(step.request->script_id, decision) == Session::ApplyOutcome::kRecompute)
      return PassOutcome::kRecompute;
  }
}

template <DecisionProvider Provider>
void RunToCompletion(Session& session, Provider& provider) {
  while (RunPass(session, provider) != PassOutcome::kFinished) {
  }
}

template <DecisionProvider Provider>
SessionState Classify(std::shared_ptr<const Corpus> corpus, const GroundTruthManifest& manifest,
                      Provider& provider, SessionOptions options = {}) {
  Session session(corpus, BuildMatrix(manifest, *corpus), options);
  RunToCompletion(session, provider);
  return session.state();
}

// Answers from a fixed id -> label table. Ids missing from the table are
// answered Unknown and remembered.
class ScriptedOracle {
 public:
  ScriptedOracle() = default;
  explicit ScriptedOracle(std::unordered_map<std::string, Label> answers) : answers_(std::move(answers)) {}

  static ScriptedOracle Parse(std::string_view text) {
    nlohmann::json j = detail::ParseJsonOrThrow(text, Errc::kInvalidInput, "oracle file");
    if (!j.is_object()) throw Error(Errc::kInvalidInput, "oracle file must be a JSON object");
    std::unordered_map<std::string, Label> answers;
    for (const auto& [id, v] : j.items()) {
      auto label = v.is_string() ? ParseLabel(v.get<std::string>()) : std::nullopt;
      if (!label) throw Error(Errc::kInvalidLabel, "oracle entry " + id + ": " + v.dump());
      answers.emplace(id, *label);
    }
    return ScriptedOracle(std::move(answers));
  }

  ManualDecision operator()(const DecisionRequest& request) {
    ++asked_;
    auto it = answers_.find(request.script_id);
    if (it == answers_.end()) {
      missing_.push_back(request.script_id);
      return ManualDecision{Label::kUnknown, false, std::nullopt};
    }
    return ManualDecision{it->second, false, std::nullopt};
  }

  const std::vector<std::string>& missing() const { return missing_; }
  std::size_t asked() const { return asked_; }

 private:
  std::unordered_map<std::string, Label> answers_;
  std::vector<std::string> missing_;
  std::size_t asked_ = 0;
};

}  // namespace fpclassify

#endif  // FPCLASSIFY_CLASSIFIER_HPP_
