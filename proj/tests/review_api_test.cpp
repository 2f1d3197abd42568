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

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "fpclassify/http.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

namespace fpclassify {
namespace {

using nlohmann::json;
using testing::Script;

std::shared_ptr<const Corpus> HandTraceCorpus() {
  return std::make_shared<const Corpus>(std::vector<ScriptRecord>{
      Script("f1", {"A", "B", "C"}), Script("f2", {"C", "D"}), Script("s1", {"A", "B", "C"}),
      Script("s2", {"A", "B"}), Script("s3", {"E"}), Script("s4", {"C", "D", "E"}),
      Script("lib/dir/x.js", {"A", "Q"})});
}

class ReviewApi : public ::testing::Test {
 protected:
  void SetUp() override {
    auto corpus = HandTraceCorpus();
    Session session(corpus, BuildMatrix(GroundTruthManifest{{"f1", "f2"}}, *corpus));
    service_ = std::make_unique<ReviewService>(std::move(session), EvidenceConfig{},
                                               Persistence{dir_ / "state.json", "manifest"});
    MountReviewApi(server_, *service_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Client Client() {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(std::chrono::seconds(10));
    return c;
  }

  json Get(const std::string& path, int expect = 200) {
    auto res = Client().Get(path);
    EXPECT_TRUE(res);
    if (!res) return nullptr;
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return json::parse(res->body);
  }

  std::pair<int, json> Post(const std::string& body) {
    auto res = Client().Post("/api/labels", body, "application/json");
    EXPECT_TRUE(res);
    if (!res) return {0, nullptr};
    return {res->status, json::parse(res->body, nullptr, false)};
  }

  std::pair<int, json> Submit(const std::string& id, const std::string& label, bool privacy = false) {
    return Post(json{{"script_id", id}, {"label", label}, {"privacy_policy_checked", privacy}}.dump());
  }

  testing::TempDir dir_;
  std::unique_ptr<ReviewService> service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void ExpectConsistent(const json& p) {
  EXPECT_EQ(p["total"].get<int>(), p["suspects"].get<int>() + p["cleans"].get<int>() + p["unknowns"].get<int>() +
                                        p["unlabeled"].get<int>());
}

TEST_F(ReviewApi, ProgressCountsPopulationOnly) {
  json p = Get("/api/progress");
  EXPECT_EQ(p["total"], 5);
  EXPECT_EQ(p["pass_index"], 1);
  EXPECT_EQ(p["manual_decisions"], 0);
  EXPECT_EQ(p["finished"], false);
  ExpectConsistent(p);
}

TEST_F(ReviewApi, NextIsIdempotent) {
  json a = Get("/api/queue/next");
  json b = Get("/api/queue/next");
  ASSERT_EQ(a["pending"], true);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a["item"].contains("evidence"));
  EXPECT_TRUE(a["item"]["evidence"].contains("criteria_met"));
}

TEST_F(ReviewApi, WalksTheHandTraceToCompletion) {
  const std::map<std::string, std::string> answers = {
      {"s2", "non-fingerprinter"}, {"s4", "fingerprinter"}, {"s3", "unknown"}, {"lib/dir/x.js", "non-fingerprinter"}};
  int decisions = 0;
  for (;;) {
    json next = Get("/api/queue/next");
    if (next["pending"] == false) {
      EXPECT_EQ(next["finished"], true);
      break;
    }
    std::string id = next["item"]["script_id"];
    ASSERT_TRUE(answers.count(id)) << id;
    auto [status, ack] = Submit(id, answers.at(id));
    ASSERT_EQ(status, 200) << ack;
    EXPECT_EQ(ack["accepted"], true);
    EXPECT_EQ(ack["recompute_triggered"], answers.at(id) != "unknown");
    ExpectConsistent(Get("/api/progress"));
    ++decisions;
    ASSERT_LT(decisions, 10);
  }
  json p = Get("/api/progress");
  EXPECT_EQ(p["finished"], true);
  EXPECT_EQ(p["unlabeled"], 0);
  EXPECT_EQ(p["manual_decisions"], decisions);
  json labels = Get("/api/labels");
  ASSERT_TRUE(labels.is_array());
  for (std::size_t i = 0; i < labels.size(); ++i) EXPECT_EQ(labels[i]["seq"], i + 1);

  RestoredSnapshot snap = RestoreSnapshot(dir_ / "state.json", *HandTraceCorpus());
  EXPECT_EQ(snap.state, service_->StateCopy());
}

TEST_F(ReviewApi, SubmitErrors) {
  std::string pending = Get("/api/queue/next")["item"]["script_id"];
  std::string other = pending == "s1" ? "s2" : "s1";

  EXPECT_EQ(Submit("nope", "fingerprinter").first, 404);
  EXPECT_EQ(Submit(other, "fingerprinter").first, 409);
  EXPECT_EQ(Submit(pending, "Maybe").first, 400);
  EXPECT_EQ(Post("not json").first, 400);
  EXPECT_EQ(Post(R"({"script_id": "s1"})").first, 400);
  EXPECT_EQ(Post(json{{"script_id", pending}, {"label", "fingerprinter"}, {"privacy_policy_checked", "yes"}}.dump()).first, 400);
  EXPECT_EQ(Get("/api/progress")["manual_decisions"], 0);

  EXPECT_EQ(Submit(pending, "non-fingerprinter").first, 200);
  EXPECT_EQ(Submit(pending, "non-fingerprinter").first, 409);
  EXPECT_EQ(Get("/api/progress")["manual_decisions"], 1);
}

TEST_F(ReviewApi, ConcurrentDuplicateSubmissionsAcceptOnce) {
  std::string pending = Get("/api/queue/next")["item"]["script_id"];
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      httplib::Client c("127.0.0.1", port_);
      auto res = c.Post("/api/labels", json{{"script_id", pending}, {"label", "non-fingerprinter"}}.dump(), "application/json");
      if (res && res->status == 200) ++ok;
      if (res && res->status == 409) ++conflict;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok, 1);
  EXPECT_EQ(conflict, 7);
  int manual = 0;
  for (const auto& e : Get("/api/labels")) {
    if (e["method"] != "manual") continue;
    ++manual;
    EXPECT_EQ(e["script_id"], pending);
  }
  EXPECT_EQ(manual, 1);
  EXPECT_EQ(Get("/api/progress")["manual_decisions"], 1);
}

TEST_F(ReviewApi, ScriptDetail) {
  json s = Get("/api/scripts/lib%2Fdir%2Fx.js");
  EXPECT_EQ(s["script_id"], "lib/dir/x.js");
  ASSERT_EQ(s["attributes"].size(), 2u);
  EXPECT_EQ(s["attributes"][0]["count"], 1);
  EXPECT_EQ(s["label"], nullptr);
  EXPECT_EQ(s["ground_truth"], false);
  EXPECT_TRUE(s["evidence"].is_object());
  EXPECT_EQ(Get("/api/scripts/lib/dir/x.js")["script_id"], "lib/dir/x.js");
  EXPECT_EQ(Get("/api/scripts/f1")["ground_truth"], true);
  EXPECT_EQ(Get("/api/scripts/missing", 404)["error"], "UnknownScript");
}

TEST_F(ReviewApi, LongPollReturnsOnceFinished) {
  EXPECT_EQ(Get("/api/queue/next?wait=abc", 400)["error"], "InvalidInput");
  std::thread labeler([this] {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    for (;;) {
      auto item = service_->GetNextPending();
      if (!item) break;
      service_->SubmitLabel(item->script_id, Label::kNonFingerprinter, false);
    }
  });
  auto start = std::chrono::steady_clock::now();
  for (;;) {
    json next = Get("/api/queue/next?wait=2");
    if (next["pending"] == false) {
      EXPECT_EQ(next["finished"], true);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  labeler.join();
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));
}

}  // namespace
}  // namespace fpclassify
