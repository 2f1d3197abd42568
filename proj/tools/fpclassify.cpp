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

// fpclassify: ingest traces, run the incremental labeling loop, serve the
// review API, and print label reports.
//
// Exit codes: 0 success, 2 input error, 3 persistence error.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"

#include "fpclassify/fpclassify.hpp"
#include "fpclassify/http.hpp"

namespace fs = std::filesystem;
using namespace fpclassify;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitPersistence = 3;

#ifndef FPCLASSIFY_DATA_DIR
#define FPCLASSIFY_DATA_DIR "data"
#endif

std::string DefaultStatePath() {
  if (const char* env = std::getenv("FPCLASSIFY_STATE"); env != nullptr && *env != '\0') return env;
  return "fpclassify-state.json";
}

std::vector<std::string> LoadKeywords(const std::string& path) {
  if (path.empty()) return DefaultKeywords();
  auto j = nlohmann::json::parse(ReadTextFile(path), nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw Error(Errc::kInvalidInput, path + ": expected a JSON array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(Errc::kInvalidInput, path + ": non-string keyword");
    out.push_back(v.get<std::string>());
  }
  return out;
}

EvidenceConfig LoadEvidenceConfig(const std::vector<std::string>& filter_files, const std::string& keywords_file,
                                  const std::string& page_host) {
  EvidenceConfig config;
  for (const auto& f : filter_files) {
    FilterList list = ParseFilterList(ReadTextFile(f), fs::path(f).filename().string());
    if (list.warnings) std::cerr << f << ": " << list.warnings << " unsupported rules skipped\n";
    config.filter_lists.push_back(std::move(list));
  }
  config.keywords = LoadKeywords(keywords_file);
  if (!page_host.empty()) config.filter_context.page_host = page_host;
  return config;
}

struct OpenedSession {
  std::unique_ptr<Session> session;
  std::string manifest_digest;
  bool resumed = false;
};

OpenedSession OpenSession(const std::string& corpus_path, const std::string& ground_truth_path,
                          const std::string& state_path, const SessionOptions& options) {
  auto corpus = std::make_shared<const Corpus>(ProjectCorpus(LoadCorpusIndex(corpus_path), options.identity));
  GroundTruthManifest manifest = ParseManifest(ReadTextFile(ground_truth_path));
  OpenedSession out;
  out.manifest_digest = ManifestDigest(manifest);
  if (!state_path.empty() && fs::exists(state_path)) {
    RestoredSnapshot snap = RestoreSnapshot(state_path, *corpus);
    if (snap.header.manifest_digest != out.manifest_digest)
      throw Error(Errc::kCorpusMismatch, "snapshot was taken with a different ground-truth manifest");
    if (!(snap.state.options == options))
      throw Error(Errc::kInvalidInput, "snapshot options (identity / rescore-labeled) differ from the command line");
    out.session = std::make_unique<Session>(Session::Resume(corpus, std::move(snap.state)));
    out.resumed = true;
  } else {
    out.session = std::make_unique<Session>(corpus, BuildMatrix(manifest, *corpus), options);
  }
  return out;
}

void PrintKeySet(std::ostream& os, const KeySet& keys) {
  os << "{";
  bool first = true;
  for (const auto& k : keys) {
    os << (first ? "" : ", ") << k.name;
    if (!k.args.empty()) {
      os << "(";
      for (std::size_t i = 0; i < k.args.size(); ++i) os << (i ? "," : "") << k.args[i];
      os << ")";
    }
    first = false;
  }
  os << "}";
}

void RenderEvidence(std::ostream& os, const ScriptRecord& rec, const EvidenceBundle& b, const DecisionRequest& req) {
  os << "\n=== " << rec.script_id << "  (pass " << req.pass_index << ", rank " << req.position << ")\n";
  os << "url: " << rec.source_url << (rec.low_confidence ? "  [static scan, low confidence]" : "") << "\n";
  os << "attributes (" << rec.attributes.size() << "):\n";
  for (const auto& [k, c] : rec.attributes) {
    os << "  " << k.name;
    if (!k.args.empty()) {
      os << "(";
      for (std::size_t i = 0; i < k.args.size(); ++i) os << (i ? "," : "") << k.args[i];
      os << ")";
    }
    os << " x" << c << "\n";
  }
  os << "best match: " << b.similarity.matched_fingerprinter_id.value_or("-") << "  score "
     << b.similarity.score.ToString() << "\n";
  os << "shared with fingerprinter: ";
  PrintKeySet(os, b.similarity.intersection);
  os << "\nshared with best clean:    ";
  PrintKeySet(os, b.clean_intersection);
  os << "\nfilter hits: " << b.filter_hits.size();
  for (const auto& h : b.filter_hits) os << "\n  " << h.list_name << ": " << h.raw_rule;
  os << "\nkeyword hits: " << b.keyword_hits.size();
  for (const auto& h : b.keyword_hits) os << "\n  " << h.keyword << " x" << h.occurrence_count;
  os << "\nexfiltration hits: " << b.exfiltration_hits.size();
  for (const auto& h : b.exfiltration_hits) os << "\n  " << h.value_excerpt << " -> " << h.destination_url;
  os << "\nprivacy policy mentions fingerprinting: " << (b.privacy_policy_checked ? "yes" : "no")
     << "\ncriteria met: " << b.criteria_met << "/4, suggested: " << LabelName(b.suggested_label) << "\n";
}

// Prompts on stderr, reads stdin. "p" toggles the privacy-policy criterion.
std::optional<ManualDecision> AskReviewer(const ScriptRecord& rec, EvidenceBundle bundle, const DecisionRequest& req) {
  RenderEvidence(std::cerr, rec, bundle, req);
  for (;;) {
    std::cerr << "label [f]ingerprinter / [n]on-fingerprinter / [u]nknown, [p] toggle privacy policy: " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return std::nullopt;
    if (line == "p") {
      bundle.SetPrivacyPolicyChecked(!bundle.privacy_policy_checked);
      std::cerr << "criteria met: " << bundle.criteria_met << "/4, suggested: " << LabelName(bundle.suggested_label)
                << "\n";
      continue;
    }
    Label label;
    if (line == "f") {
      label = Label::kFingerprinter;
    } else if (line == "n") {
      label = Label::kNonFingerprinter;
    } else if (line == "u") {
      label = Label::kUnknown;
    } else {
      continue;
    }
    return ManualDecision{label, bundle.privacy_policy_checked, bundle.criteria_met};
  }
}

struct ClassifyArgs {
  std::string corpus;
  std::string ground_truth;
  std::string state = DefaultStatePath();
  std::string mode;
  std::vector<std::string> filters;
  std::string keywords;
  std::string page_host;
  std::string identity = "name-args";
  bool rescore_labeled = false;
  std::size_t max_manual = 0;
};

int RunClassify(const ClassifyArgs& args) {
  enum class Mode { kInteractive, kOracle, kAutoOnly } mode;
  std::optional<ScriptedOracle> oracle;
  if (args.mode == "interactive") {
    mode = Mode::kInteractive;
  } else if (args.mode == "auto-only") {
    mode = Mode::kAutoOnly;
  } else if (args.mode.rfind("oracle=", 0) == 0) {
    mode = Mode::kOracle;
    oracle = ScriptedOracle::Parse(ReadTextFile(args.mode.substr(7)));
  } else {
    std::cerr << "error: --mode must be interactive, oracle=FILE or auto-only\n";
    return kExitInput;
  }
  SessionOptions options;
  options.rescore_labeled = args.rescore_labeled;
  options.identity = *ParseIdentityMode(args.identity);

  OpenedSession opened = OpenSession(args.corpus, args.ground_truth, args.state, options);
  Session& session = *opened.session;
  if (opened.resumed) std::cerr << "resuming from " << args.state << "\n";
  EvidenceConfig config = LoadEvidenceConfig(args.filters, args.keywords, args.page_host);

  auto persist = [&]() -> bool {
    try {
      SaveSnapshot(session.state(), session.corpus(), opened.manifest_digest, args.state);
      return true;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return false;
    }
  };

  std::size_t manual_this_run = 0;
  bool paused = false;
  for (;;) {
    Session::Step step = session.Advance();
    if (step.finished) break;
    if (args.max_manual != 0 && manual_this_run >= args.max_manual) {
      paused = true;
      break;
    }
    const DecisionRequest& req = *step.request;
    const ScriptRecord& rec = session.corpus().Get(req.script_id);
    EvidenceBundle bundle = BuildEvidence(rec, req.similarity, req.clean_intersection, config);
    ManualDecision decision{Label::kUnknown, false, bundle.criteria_met};
    if (mode == Mode::kOracle) {
      decision.label = (*oracle)(req).label;
      if (!oracle->missing().empty() && oracle->missing().back() == req.script_id)
        std::cerr << "warning: oracle has no answer for " << req.script_id << "; using unknown\n";
    } else if (mode == Mode::kInteractive) {
      auto answer = AskReviewer(rec, bundle, req);
      if (!answer) {
        paused = true;
        break;
      }
      decision = *answer;
    }
    session.ApplyManualLabel(req.script_id, decision);
    ++manual_this_run;
    if (!persist()) return kExitPersistence;
  }
  if (!persist()) return kExitPersistence;

  Report report = BuildReport(StateToJson(session.state()));
  std::cout << RenderText(report);
  if (mode == Mode::kAutoOnly) std::cout << "residual unknowns (auto-only): " << report.unknowns << "\n";
  if (options.rescore_labeled) std::cout << "rescore conflicts: " << session.state().rescore_conflicts << "\n";
  if (paused) std::cerr << "session paused; rerun with --state " << args.state << " to continue\n";
  return kExitOk;
}

struct IngestArgs {
  std::string traces;
  std::string catalog = std::string(FPCLASSIFY_DATA_DIR) + "/catalog.json";
  std::string static_sources;
  std::string out = "corpus.json";
};

int RunIngest(const IngestArgs& args) {
  AttributeCatalog catalog = ParseCatalog(ReadTextFile(args.catalog));
  std::optional<fs::path> static_dir;
  if (!args.static_sources.empty()) static_dir = args.static_sources;
  IngestReport report = IngestDirectory(args.traces, catalog, static_dir);
  Corpus corpus(std::move(report.records));
  std::set<AttributeKey> distinct;
  for (const auto& r : corpus.records())
    for (const auto& [k, c] : r.attributes) distinct.insert(k);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  try {
    SaveCorpusIndex(args.out, corpus);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPersistence;
  }
  std::cout << corpus.size() << " scripts, " << distinct.size() << " distinct attributes\n";
  std::cout << report.trace_files << " trace files, " << report.static_records
            << " low-confidence static records, " << report.uncatalogued_events << " uncatalogued events dropped, "
            << report.warnings.size() << " warnings\n";
  std::cout << "corpus index written to " << args.out << "\n";
  return kExitOk;
}

std::atomic<bool> g_stop_requested{false};

extern "C" void HandleStopSignal(int) { g_stop_requested.store(true); }

struct ServeArgs {
  std::string corpus;
  std::string ground_truth;
  std::string state = DefaultStatePath();
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> filters;
  std::string keywords;
  std::string page_host;
  std::string ui_dir;
  std::string identity = "name-args";
  bool rescore_labeled = false;
};

int RunServe(const ServeArgs& args) {
  SessionOptions options;
  options.rescore_labeled = args.rescore_labeled;
  options.identity = *ParseIdentityMode(args.identity);
  OpenedSession opened = OpenSession(args.corpus, args.ground_truth, args.state, options);
  EvidenceConfig config = LoadEvidenceConfig(args.filters, args.keywords, args.page_host);
  ReviewService service(std::move(*opened.session), std::move(config),
                        Persistence{args.state, opened.manifest_digest});

  httplib::Server server;
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  MountReviewApi(server, service);
  if (!args.ui_dir.empty() && !server.set_mount_point("/", args.ui_dir)) {
    std::cerr << "error: cannot serve UI from " << args.ui_dir << "\n";
    return kExitInput;
  }
  if (!server.bind_to_port(args.host, args.port)) {
    std::cerr << "error: cannot bind " << args.host << ":" << args.port << "\n";
    return kExitInput;
  }
  std::signal(SIGTERM, HandleStopSignal);
  std::signal(SIGINT, HandleStopSignal);
  std::thread watcher([&server] {
    while (!g_stop_requested.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  std::cerr << "serving review API on http://" << args.host << ":" << args.port << "\n";
  server.listen_after_bind();
  g_stop_requested.store(true);
  watcher.join();
  try {
    service.Checkpoint();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPersistence;
  }
  std::cerr << "snapshot written to " << args.state << "\n";
  return kExitOk;
}

int RunReport(const std::string& state, const std::string& format) {
  Report report = BuildReport(ReadSnapshotDocument(state).at("state"));
  if (format == "csv") {
    std::cout << RenderCsv(report);
  } else if (format == "json") {
    std::cout << RenderJson(report);
  } else {
    std::cout << RenderText(report);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental browser-fingerprinting script classifier"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate trace files and write a corpus index");
  ingest_cmd->add_option("--traces", ingest.traces, "Directory of trace files")->required()->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--catalog", ingest.catalog, "Attribute catalog (JSON array of API paths)")->capture_default_str();
  ingest_cmd->add_option("--static-sources", ingest.static_sources, "Directory of raw script sources")
      ->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--out", ingest.out, "Corpus index to write")->capture_default_str();

  ClassifyArgs classify;
  auto* classify_cmd = app.add_subcommand("classify", "Run the labeling loop");
  classify_cmd->add_option("--corpus", classify.corpus, "Corpus index from `ingest`")->required();
  classify_cmd->add_option("--ground-truth", classify.ground_truth, "JSON array of fingerprinter ids")->required();
  classify_cmd->add_option("--state", classify.state, "Snapshot file (resumed when present)")->capture_default_str();
  classify_cmd->add_option("--mode", classify.mode, "interactive | oracle=FILE | auto-only")->required();
  classify_cmd->add_option("--filters", classify.filters, "Adblock filter list files");
  classify_cmd->add_option("--keywords", classify.keywords, "JSON array of keywords");
  classify_cmd->add_option("--page-host", classify.page_host, "Page host for $domain= filter options");
  classify_cmd->add_option("--identity", classify.identity, "Attribute identity: name-args | name-only")->capture_default_str()
      ->check(CLI::IsMember({"name-args", "name-only"}));
  classify_cmd->add_flag("--rescore-labeled", classify.rescore_labeled, "Keep labeled scripts in the scoring pool");
  classify_cmd->add_option("--max-manual", classify.max_manual, "Stop after N manual decisions (0 = no limit)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the review API");
  serve_cmd->add_option("--corpus", serve.corpus, "Corpus index from `ingest`")->required();
  serve_cmd->add_option("--ground-truth", serve.ground_truth, "JSON array of fingerprinter ids")->required();
  serve_cmd->add_option("--state", serve.state, "Snapshot file (resumed when present)")->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Port")->capture_default_str();
  serve_cmd->add_option("--filters", serve.filters, "Adblock filter list files");
  serve_cmd->add_option("--keywords", serve.keywords, "JSON array of keywords");
  serve_cmd->add_option("--page-host", serve.page_host, "Page host for $domain= filter options");
  serve_cmd->add_option("--ui-dir", serve.ui_dir, "Static UI assets served at /");
  serve_cmd->add_option("--identity", serve.identity, "Attribute identity: name-args | name-only")->capture_default_str()
      ->check(CLI::IsMember({"name-args", "name-only"}));
  serve_cmd->add_flag("--rescore-labeled", serve.rescore_labeled, "Keep labeled scripts in the scoring pool");

  std::string report_state = DefaultStatePath();
  std::string report_format = "text";
  auto* report_cmd = app.add_subcommand("report", "Print the labels stored in a snapshot");
  report_cmd->add_option("--state", report_state, "Snapshot file")->capture_default_str();
  report_cmd->add_option("--format", report_format, "text | json | csv")->capture_default_str()
      ->check(CLI::IsMember({"text", "json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*ingest_cmd) return RunIngest(ingest);
    if (*classify_cmd) return RunClassify(classify);
    if (*serve_cmd) return RunServe(serve);
    if (*report_cmd) return RunReport(report_state, report_format);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
