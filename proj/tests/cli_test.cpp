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

#include <signal.h>
#include <spawn.h>
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "fpclassify/ingestion.hpp"
#include "fpclassify/io.hpp"
#include "fpclassify/store.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

extern char** environ;

namespace fpclassify {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kSamples = fs::path(FPCLASSIFY_TEST_DATA) / "../../samples";

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  Result Run(const std::string& args, const std::string& env = {}) {
    std::string cmd = env + " " + std::string(FPCLASSIFY_CLI) + " " + args + " >" + (dir_ / "out").string() +
                      " 2>" + (dir_ / "err").string() + " </dev/null";
    int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = ReadTextFile(dir_ / "out");
    r.err = ReadTextFile(dir_ / "err");
    return r;
  }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  void Ingest() {
    Result r = Run("ingest --traces " + (kSamples / "traces").string() + " --static-sources " +
                   (kSamples / "static").string() + " --out " + Path("corpus.json"));
    ASSERT_EQ(r.code, 0) << r.err;
  }

  std::string ClassifyArgs() const {
    return "classify --corpus " + Path("corpus.json") + " --ground-truth " + (kSamples / "ground-truth.json").string() +
           " --filters " + (kSamples / "filters.txt").string() + " --state " + Path("state.json");
  }

  testing::TempDir dir_;
};

TEST_F(Cli, IngestSamples) {
  Ingest();
  json corpus = json::parse(ReadTextFile(Path("corpus.json")));
  EXPECT_EQ(corpus["scripts"].size(), 9u);
}

TEST_F(Cli, IngestNamesMalformedFile) {
  fs::create_directories(dir_ / "traces");
  fs::copy_file(kSamples / "traces/fp-vendor-a.json", dir_ / "traces/good.json");
  WriteTextFile(dir_ / "traces/broken.json", "{\"script_id\": ");
  Result r = Run("ingest --traces " + Path("traces") + " --out " + Path("corpus.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("broken.json"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "corpus.json"));
}

TEST_F(Cli, ClassifyWithOracleThenReport) {
  Ingest();
  Result r = Run(ClassifyArgs() + " --mode oracle=" + (kSamples / "oracle.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("suspects=2 cleans=4 unknowns=1 unlabeled=0"), std::string::npos) << r.out;

  Result csv = Run("report --format csv --state " + Path("state.json"));
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(csv.out.rfind("script_id,label,method,score,criteria_met\n", 0), 0u);
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 8);

  Result js = Run("report --format json --state " + Path("state.json"));
  ASSERT_EQ(js.code, 0) << js.err;
  json report = json::parse(js.out);
  EXPECT_EQ(report["scripts"].size(), 7u);

  EXPECT_EQ(Run("report --format xml --state " + Path("state.json")).code, 2);
}

TEST_F(Cli, AutoOnlyLeavesResidualUnknowns) {
  Ingest();
  Result r = Run(ClassifyArgs() + " --mode auto-only");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("residual unknowns (auto-only): "), std::string::npos) << r.out;
}

TEST_F(Cli, ResumesAfterPause) {
  Ingest();
  std::string oracle = " --mode oracle=" + (kSamples / "oracle.json").string();
  Result whole = Run(ClassifyArgs() + oracle);
  ASSERT_EQ(whole.code, 0) << whole.err;
  SessionState expected = RestoreSnapshot(Path("state.json"), LoadCorpusIndex(Path("corpus.json"))).state;
  fs::remove(dir_ / "state.json");

  int runs = 0;
  for (;;) {
    Result r = Run(ClassifyArgs() + oracle + " --max-manual 1");
    ASSERT_EQ(r.code, 0) << r.err;
    ++runs;
    if (r.err.find("session paused") == std::string::npos) break;
    ASSERT_LT(runs, 10);
  }
  EXPECT_GT(runs, 2);
  SessionState resumed = RestoreSnapshot(Path("state.json"), LoadCorpusIndex(Path("corpus.json"))).state;
  EXPECT_EQ(resumed.decision_log.size(), expected.decision_log.size());
  EXPECT_EQ(resumed.suspects, expected.suspects);
  EXPECT_EQ(resumed.cleans, expected.cleans);
  EXPECT_EQ(resumed.unknowns, expected.unknowns);
}

TEST_F(Cli, StateFromEnvironment) {
  Ingest();
  std::string args = "classify --corpus " + Path("corpus.json") + " --ground-truth " +
                     (kSamples / "ground-truth.json").string() + " --mode auto-only";
  Result r = Run(args, "FPCLASSIFY_STATE=" + Path("env-state.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "env-state.json"));
}

TEST_F(Cli, CorruptSnapshotIsInputError) {
  Ingest();
  WriteTextFile(dir_ / "state.json", "{\"format_version\": 1, \"state\": ");
  Result r = Run(ClassifyArgs() + " --mode auto-only");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("CorruptSnapshot"), std::string::npos) << r.err;
  EXPECT_EQ(Run("report --state " + Path("state.json")).code, 2);
}

TEST_F(Cli, UnwritableStateIsPersistenceError) {
  Ingest();
  Result r = Run("classify --corpus " + Path("corpus.json") + " --ground-truth " +
                 (kSamples / "ground-truth.json").string() + " --mode auto-only --state " + Path("no/such/dir/s.json"));
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, BadArgumentsExitTwo) {
  EXPECT_EQ(Run("classify --mode auto-only").code, 2);
  EXPECT_EQ(Run("frobnicate").code, 2);
  Ingest();
  EXPECT_EQ(Run(ClassifyArgs() + " --mode guess").code, 2);
  EXPECT_EQ(Run(ClassifyArgs() + " --mode auto-only --identity fuzzy").code, 2);
}

class Process {
 public:
  explicit Process(const std::vector<std::string>& args) {
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    if (posix_spawn(&pid_, argv[0], nullptr, nullptr, argv.data(), environ) != 0) pid_ = -1;
  }
  ~Process() {
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      Wait();
    }
  }
  void Signal(int sig) { kill(pid_, sig); }
  int Wait() {
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  bool ok() const { return pid_ > 0; }

 private:
  pid_t pid_ = -1;
};

// A listening socket on an ephemeral loopback port.
class PortHolder {
 public:
  PortHolder() {
    fd_ = socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof(addr);
    if (bind(fd_, reinterpret_cast<sockaddr*>(&addr), len) == 0 && listen(fd_, 1) == 0 &&
        getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) == 0)
      port_ = ntohs(addr.sin_port);
  }
  ~PortHolder() {
    if (fd_ >= 0) close(fd_);
  }
  int port() const { return port_; }

 private:
  int fd_ = -1;
  int port_ = 0;
};

int FreePort() { return PortHolder().port(); }

TEST_F(Cli, ServeLabelsAndCheckpointsOnSigterm) {
  Ingest();
  fs::create_directories(dir_ / "ui");
  WriteTextFile(dir_ / "ui/index.html", "<html>review</html>");
  int port = FreePort();
  Process server({FPCLASSIFY_CLI, "serve", "--corpus", Path("corpus.json"), "--ground-truth",
                  (kSamples / "ground-truth.json").string(), "--state", Path("state.json"), "--port",
                  std::to_string(port), "--ui-dir", Path("ui")});
  ASSERT_TRUE(server.ok());
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(std::chrono::seconds(5));
  httplib::Result progress;
  for (int i = 0; i < 200 && !progress; ++i) {
    progress = client.Get("/api/progress");
    if (!progress) std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
  ASSERT_TRUE(progress);
  EXPECT_EQ(json::parse(progress->body)["total"], 7);

  auto ui = client.Get("/");
  ASSERT_TRUE(ui) << httplib::to_string(ui.error());
  EXPECT_EQ(ui->status, 200);
  EXPECT_NE(ui->body.find("review"), std::string::npos);

  json next = json::parse(client.Get("/api/queue/next")->body);
  ASSERT_EQ(next["pending"], true);
  std::string id = next["item"]["script_id"];
  auto ack = client.Post("/api/labels", json{{"script_id", id}, {"label", "non-fingerprinter"}}.dump(),
                         "application/json");
  ASSERT_TRUE(ack);
  EXPECT_EQ(ack->status, 200);

  server.Signal(SIGTERM);
  EXPECT_EQ(server.Wait(), 0);
  SessionState state = RestoreSnapshot(Path("state.json"), LoadCorpusIndex(Path("corpus.json"))).state;
  EXPECT_EQ(state.manual_decision_count, 1u);
  ASSERT_TRUE(state.walk.pending.has_value());
}

TEST_F(Cli, ServeBindFailureExitsTwo) {
  Ingest();
  PortHolder occupier;
  int port = occupier.port();
  ASSERT_GT(port, 0);
  Result r = Run("serve --corpus " + Path("corpus.json") + " --ground-truth " +
                 (kSamples / "ground-truth.json").string() + " --state " + Path("state.json") + " --port " +
                 std::to_string(port));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cannot bind"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace fpclassify
