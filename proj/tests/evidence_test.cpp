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

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fpclassify/evidence.hpp"
#include "fpclassify/io.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

namespace fpclassify {
namespace {

using nlohmann::json;
using testing::Script;

std::vector<std::string> Match(const std::vector<std::string>& lines, const std::string& url,
                               const FilterContext& ctx = {}) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  FilterList list = ParseFilterList(text, "t");
  std::vector<std::string> raws;
  for (const FilterRule* r : MatchesFilter(list.rules, url, ctx)) raws.push_back(r->raw);
  return raws;
}

TEST(ParseFilterList, Examples) {
  FilterList list = ParseFilterList("! comment\n||tracker.example^");
  ASSERT_EQ(list.rules.size(), 1u);
  EXPECT_EQ(list.rules[0].kind, FilterKind::kDomainAnchor);
  EXPECT_EQ(list.rules[0].raw, "||tracker.example^");

  list = ParseFilterList("@@||cdn.example^");
  ASSERT_EQ(list.rules.size(), 1u);
  EXPECT_TRUE(list.rules[0].is_exception);

  EXPECT_TRUE(ParseFilterList("example.com##.ad").rules.empty());
  EXPECT_TRUE(ParseFilterList("example.com#@#.ad\n[Adblock Plus 2.0]\n\n   \n").rules.empty());
}

TEST(ParseFilterList, KindsAndWarnings) {
  FilterList list = ParseFilterList("|https://a.example/\nfp.js|\n/fp[0-9]+\\.js/\n/banner/*/img\nab|cd\n");
  ASSERT_EQ(list.rules.size(), 3u);
  EXPECT_EQ(list.rules[0].kind, FilterKind::kExactAddress);
  EXPECT_EQ(list.rules[1].kind, FilterKind::kSubstring);
  EXPECT_TRUE(list.rules[1].anchor_end);
  EXPECT_EQ(list.rules[2].raw, "/banner/*/img");
  EXPECT_EQ(list.warnings, 2u);
}

TEST(ParseFilterList, RawRoundTrips) {
  const std::vector<std::string> lines = {"||a.example^$script,domain=b.example|~c.example", "@@|https://x/|",
                                          "/ads/*", "fingerprint"};
  std::string text;
  for (const auto& l : lines) text += l + "\r\n";
  FilterList list = ParseFilterList(text);
  ASSERT_EQ(list.rules.size(), lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    EXPECT_EQ(list.rules[i].raw, lines[i]);
    auto again = ParseFilterLine(list.rules[i].raw);
    ASSERT_TRUE(again);
    EXPECT_EQ(again->pattern_parts, list.rules[i].pattern_parts);
  }
  EXPECT_EQ(list.rules[0].include_domains, (std::vector<std::string>{"b.example"}));
  EXPECT_EQ(list.rules[0].exclude_domains, (std::vector<std::string>{"c.example"}));
}

TEST(MatchesFilter, Examples) {
  EXPECT_EQ(Match({"||tracker.example^"}, "https://tracker.example/fp.js").size(), 1u);
  EXPECT_TRUE(Match({"||tracker.example^"}, "https://nottracker.example/fp.js").empty());
  EXPECT_TRUE(Match({"||cdn.example^", "@@||cdn.example^"}, "https://cdn.example/a.js").empty());
}

TEST(MatchesFilter, InvalidUrl) {
  FilterList list = ParseFilterList("||a.example^");
  for (const char* bad : {"a.example/x.js", "//a.example/x", "://x", "https:///path"}) {
    try {
      MatchesFilter(list.rules, bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kInvalidUrl);
    }
  }
}

TEST(MatchesFilter, DomainOptionWithoutPageHost) {
  EXPECT_TRUE(Match({"||t.example^$domain=news.example"}, "https://t.example/a.js").empty());
  EXPECT_EQ(Match({"||t.example^$domain=~news.example"}, "https://t.example/a.js").size(), 1u);
}

// Committed vectors, generated and checked against a reference matcher by
// tests/data/make_adblock_vectors.py.
TEST(MatchesFilter, CommittedVectors) {
  json vectors = json::parse(ReadTextFile(std::string(FPCLASSIFY_TEST_DATA) + "/adblock_vectors.json"));
  ASSERT_GE(vectors.size(), 40u);
  for (const auto& v : vectors) {
    FilterContext ctx;
    if (v.contains("page_host")) ctx.page_host = v["page_host"].get<std::string>();
    bool got = !Match(v["rules"].get<std::vector<std::string>>(), v["url"].get<std::string>(), ctx).empty();
    EXPECT_EQ(got, v["match"].get<bool>()) << v["name"].get<std::string>();
  }
}

TEST(KeywordHits, Examples) {
  const auto& kw = DefaultKeywords();
  auto hits = KeywordHits(std::string("function getDeviceFingerprint()"), "s", "https://x.example/a.js", kw);
  bool device = false;
  for (const auto& h : hits) device = device || (h.keyword == "devicefingerprint" && h.occurrence_count == 1);
  EXPECT_TRUE(device);

  hits = KeywordHits(std::nullopt, "https://x.example/fingerprint2.js", "https://x.example/fingerprint2.js", kw);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].keyword, "fingerprint");
  EXPECT_EQ(hits[0].occurrence_count, 1u);

  EXPECT_TRUE(KeywordHits(std::string("finger print"), "s", "https://x.example/a.js", kw).empty());
  hits = KeywordHits(std::string("FPJS fpjs FpJs"), "s", "https://x.example/a.js", kw);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].occurrence_count, 3u);
}

ScriptRecord Sender(std::vector<std::string> values, std::vector<NetworkSend> sends) {
  ScriptRecord rec = Script("s", {"navigator.userAgent"});
  rec.observed_values = std::move(values);
  rec.network_sends = std::move(sends);
  return rec;
}

const std::string kUa = "Mozilla/5.0 (X11; Linux x86_64) Gecko/20100101 Firefox/128.0";

TEST(ExfiltrationSignals, Examples) {
  auto hits = ExfiltrationSignals(Sender({kUa}, {{"https://sink.example/c", "ua=" + kUa}}));
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].destination_url, "https://sink.example/c");
  EXPECT_TRUE(ExfiltrationSignals(Sender({kUa}, {})).empty());
  EXPECT_TRUE(ExfiltrationSignals(Sender({"short"}, {{"https://sink.example/c", "short"}})).empty());
  EXPECT_TRUE(ExfiltrationSignals(Sender({kUa}, {{"https://sink.example/c", "nothing here"}})).empty());
}

// Encoded by an independent percent-encoder (httplib's).
TEST(ExfiltrationSignals, PercentEncodedPayloadAndUrl) {
  std::string encoded = httplib::detail::encode_query_param(kUa);
  ASSERT_NE(encoded, kUa);
  EXPECT_EQ(ExfiltrationSignals(Sender({kUa}, {{"https://sink.example/c", "ua=" + encoded}})).size(), 1u);
  EXPECT_EQ(ExfiltrationSignals(Sender({kUa}, {{"https://sink.example/c?ua=" + encoded, ""}})).size(), 1u);
  std::string form = kUa;
  std::replace(form.begin(), form.end(), ' ', '+');
  EXPECT_EQ(ExfiltrationSignals(Sender({kUa}, {{"https://sink.example/c", "ua=" + form}})).size(), 1u);
}

TEST(BuildEvidence, CriteriaCounting) {
  EvidenceConfig config;
  config.filter_lists.push_back(ParseFilterList("||tracker.example^", "easyprivacy"));
  ScriptRecord rec = Script("fp", {"navigator.userAgent"});
  rec.source_url = "https://tracker.example/fingerprint.js";
  EvidenceBundle b = BuildEvidence(rec, SimilarityResult{}, {}, config);
  ASSERT_EQ(b.filter_hits.size(), 1u);
  EXPECT_EQ(b.filter_hits[0], (FilterHit{"easyprivacy", "||tracker.example^"}));
  EXPECT_FALSE(b.keyword_hits.empty());
  EXPECT_EQ(b.criteria_met, 2);
  EXPECT_EQ(b.suggested_label, Label::kFingerprinter);
  EXPECT_FALSE(b.privacy_policy_checked);

  ScriptRecord plain = Script("plain", {"screen.width"});
  b = BuildEvidence(plain, SimilarityResult{}, {}, config);
  EXPECT_EQ(b.criteria_met, 0);
  EXPECT_EQ(b.suggested_label, Label::kUnknown);

  ScriptRecord exfil = Sender({kUa}, {{"https://sink.example/c", kUa}});
  b = BuildEvidence(exfil, SimilarityResult{}, {}, config);
  EXPECT_EQ(b.criteria_met, 1);
  EXPECT_EQ(b.suggested_label, Label::kUnknown);
  b.SetPrivacyPolicyChecked(true);
  EXPECT_EQ(b.criteria_met, 2);
  EXPECT_EQ(b.suggested_label, Label::kFingerprinter);
  b.SetPrivacyPolicyChecked(false);
  EXPECT_EQ(b.criteria_met, 1);
}

TEST(BuildEvidence, CountIsPureFunctionOfFlags) {
  for (int mask = 0; mask < 16; ++mask) {
    bool f = mask & 1, k = mask & 2, e = mask & 4, p = mask & 8;
    int n = CountCriteria(f, k, e, p);
    EXPECT_EQ(n, __builtin_popcount(mask));
    EXPECT_EQ(CountCriteria(f, k, e, !p), n + (p ? -1 : 1));
  }
}

TEST(FilterHitsFor, ExceptionInAnyListClearsAll) {
  std::vector<FilterList> lists = {ParseFilterList("||cdn.example^", "a"), ParseFilterList("@@||cdn.example/ok/", "b")};
  EXPECT_TRUE(FilterHitsFor("https://cdn.example/ok/x.js", lists).empty());
  EXPECT_EQ(FilterHitsFor("https://cdn.example/x.js", lists).size(), 1u);
  EXPECT_TRUE(FilterHitsFor("file://local.js", lists).empty());
}

}  // namespace
}  // namespace fpclassify
