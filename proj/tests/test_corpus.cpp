// Copyright 2026 The Entendre Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <ctime>
#include <random>
#include <sstream>

#include "entendre/corpus.hpp"
#include "support.hpp"

namespace {

using namespace entendre;
using testing_support::TempDir;

corpus::RawRecord raw(const std::string& line) {
  auto out = corpus::parse_record(line, 1);
  EXPECT_EQ(out.status, corpus::ParseStatus::kRecord);
  return out.record;
}

std::string post_line(int i, const std::string& author = "alice") {
  return Json{{"post_id", "p" + std::to_string(i)}, {"author", author}, {"body", "hello #Tag"}, {"created_at", 1000 + i}}
      .dump();
}

TEST(ParseRecord, Outcomes) {
  EXPECT_EQ(corpus::parse_record(R"({"body":"x","author":"a","created_at":1})", 1).status, corpus::ParseStatus::kRecord);
  EXPECT_EQ(corpus::parse_record("not json{", 2).status, corpus::ParseStatus::kMalformed);
  EXPECT_EQ(corpus::parse_record("", 3).status, corpus::ParseStatus::kBlank);
  EXPECT_EQ(corpus::parse_record("   \t", 3).status, corpus::ParseStatus::kBlank);
  EXPECT_EQ(corpus::parse_record("{}", 4).status, corpus::ParseStatus::kMalformed);
  EXPECT_EQ(corpus::parse_record("[1,2]", 5).status, corpus::ParseStatus::kMalformed);
}

TEST(MapRecord, KindsAndHashtags) {
  const auto m = corpus::SchemaMapping::canonical();
  auto p = corpus::map_post(
      raw(R"({"post_id":"1","author":"a","body":"RT #QAnon","created_at":5,"kind":"echo","parent_id":"0"})"), m);
  EXPECT_EQ(p.kind, PostKind::kEcho);
  EXPECT_EQ(p.parent_id, "0");
  EXPECT_EQ(p.hashtags, std::vector<std::string>{"qanon"});

  try {
    corpus::map_post(raw(R"({"post_id":"1","author":"a","body":"","created_at":5,"kind":"boost"})"), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownKindValue);
  }
  try {
    corpus::map_post(raw(R"({"post_id":"1","author":"a","created_at":5})"), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingRequiredField);
  }
  try {
    corpus::map_post(raw(R"({"post_id":"1","author":"a","body":"","created_at":5,"kind":"comment"})"), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingRequiredField);
  }
}

TEST(MapRecord, AccountOptionalFields) {
  const auto a = corpus::map_account(raw(R"({"username":"bob","following":3})"), corpus::SchemaMapping::canonical());
  EXPECT_EQ(a.username, "bob");
  EXPECT_FALSE(a.followers.has_value());
  EXPECT_EQ(a.following, 3);
}

TEST(MapRecord, ForeignSchema) {
  const auto m = corpus::SchemaMapping::from_json(Json::parse(R"({
    "field_map": {"post_id": "id", "author": "user.name", "body": "text", "created_at": "ts",
                  "kind": "type", "parent_id": "reply_to", "username": "user.name"},
    "kind_map": {"post": "original", "reply": "comment", "share": "echo"},
    "timestamp_format": "iso8601"})"));
  const auto p = corpus::map_post(
      raw(R"({"id":"x","user":{"name":"carol"},"text":"hi","ts":"2020-11-03T00:00:00Z","type":"reply","reply_to":"w"})"), m);
  EXPECT_EQ(p.author, "carol");
  EXPECT_EQ(p.created_at, 1604361600);
  EXPECT_EQ(p.kind, PostKind::kComment);
}

TEST(MapRecord, ShippedForeignMapping) {
  const auto m = corpus::SchemaMapping::load(std::filesystem::path(ENTENDRE_CONFIG_DIR) / "mapping.json");
  const auto p = corpus::map_post(raw(R"({"id":"c9","creator":{"username":"dan"},"body":"ok #Tag","type":"comment",
      "parent":"c1","createdAt":"2021-01-06T12:00:00Z","hashtags":["Tag"],"upvotes":4})"), m);
  EXPECT_EQ(p.post_id, "c9");
  EXPECT_EQ(p.author, "dan");
  EXPECT_EQ(p.kind, PostKind::kComment);
  EXPECT_EQ(p.parent_id, "c1");
  EXPECT_EQ(p.created_at, 1609934400);
  EXPECT_EQ(p.upvotes, 4);
  const auto a = corpus::map_account(raw(R"({"username":"dan","user_followers":3,"user_following":7,
      "bio":"hi","verified":false,"joined":"2020-01-01T00:00:00Z"})"), m);
  EXPECT_EQ(a.followers, 3);
  EXPECT_EQ(a.following, 7);
  EXPECT_EQ(a.created_at, 1577836800);
  EXPECT_TRUE(a.complete());
}

TEST(MapRecord, InvalidMapping) {
  EXPECT_THROW(corpus::SchemaMapping::from_json(Json::parse(R"({"field_map": {"post_id": "id"}})")), Error);
  EXPECT_THROW(corpus::SchemaMapping::from_json(Json::parse(R"({"field_map": {}, "timestamp_format": "x"})")), Error);
}

TEST(Iso8601, AgreesWithTimegm) {
  EXPECT_EQ(time::parse_iso8601("2020-11-03T00:00:00Z"), 1604361600);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    std::tm tm{};
    tm.tm_year = 70 + static_cast<int>(rng() % 100);
    tm.tm_mon = static_cast<int>(rng() % 12);
    tm.tm_mday = 1 + static_cast<int>(rng() % 28);
    tm.tm_hour = static_cast<int>(rng() % 24);
    tm.tm_min = static_cast<int>(rng() % 60);
    tm.tm_sec = static_cast<int>(rng() % 60);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    ASSERT_EQ(time::parse_iso8601(buf), static_cast<EpochSeconds>(timegm(&tm))) << buf;
  }
  EXPECT_FALSE(time::parse_iso8601("yesterday").has_value());
}

TEST(Ingest, CountsAcceptedAndRejected) {
  TempDir dir;
  std::ostringstream posts;
  for (int i = 0; i < 1000; ++i) {
    posts << post_line(i, i % 2 ? "alice" : "bob") << "\n";
    if (i % 100 == 0) posts << "not json{\n\n";
  }
  std::istringstream pin(posts.str()), ain(R"({"username":"alice","followers":4})" "\n");
  const auto report = corpus::ingest(pin, ain, corpus::SchemaMapping::canonical(), dir / "store");
  EXPECT_EQ(report.posts.accepted, 1000u);
  EXPECT_EQ(report.posts.rejected, 10u);
  EXPECT_EQ(report.posts.blank, 10u);
  EXPECT_EQ(report.posts.accepted + report.posts.rejected + report.posts.blank, report.posts.total_lines);
  EXPECT_EQ(report.synthesized_accounts, 1u);

  const auto store = corpus::CorpusStore::open(dir / "store");
  EXPECT_EQ(store.post_count(), 1000u);
  EXPECT_EQ(store.accounts().size(), 2u);
  EXPECT_EQ(store.posts_of("alice").size(), 500u);
  EXPECT_EQ(store.find_account("alice")->followers, 4);
  EXPECT_FALSE(store.find_account("bob")->followers.has_value());
}

TEST(Ingest, RoundTripsEveryAcceptedRecord) {
  TempDir dir;
  const auto& world = testing_support::SmallWorld::get();
  std::map<std::string, std::vector<Post>> expected;
  for (const auto& p : world.corpus.posts) expected[p.author].push_back(p);
  corpus::ingest_files(world.dir / "data/posts.ndjson", world.dir / "data/accounts.ndjson",
                       corpus::SchemaMapping::canonical(), dir / "store", {700});
  const auto store = corpus::CorpusStore::open(dir / "store");
  EXPECT_GT(store.meta()["shards"].get<std::size_t>(), 1u);
  for (const auto& [author, posts] : expected) ASSERT_EQ(store.posts_of(author), posts) << author;
  for (const auto& a : world.corpus.accounts) ASSERT_EQ(*store.find_account(a.username), a);
}

TEST(Ingest, DeterministicAndRestartSafe) {
  TempDir dir;
  std::ostringstream posts;
  for (int i = 0; i < 50; ++i) posts << post_line(i, "u" + std::to_string(i % 7)) << "\n";
  testing_support::write_file(dir / "posts.ndjson", posts.str());
  const auto m = corpus::SchemaMapping::canonical();
  corpus::ingest_files(dir / "posts.ndjson", {}, m, dir / "a", {8});
  corpus::ingest_files(dir / "posts.ndjson", {}, m, dir / "b", {8});
  EXPECT_EQ(testing_support::snapshot(dir / "a"), testing_support::snapshot(dir / "b"));

  // A stale partial run must be replaced, not merged.
  testing_support::write_file(dir / "b/posts-99999.ndjson", "junk\n");
  testing_support::write_file(dir / "b/stray", "junk\n");
  corpus::ingest_files(dir / "posts.ndjson", {}, m, dir / "b", {8});
  EXPECT_EQ(testing_support::snapshot(dir / "a"), testing_support::snapshot(dir / "b"));
}

TEST(Ingest, MissingInputIsIoError) {
  TempDir dir;
  try {
    corpus::ingest_files(dir / "nope.ndjson", {}, corpus::SchemaMapping::canonical(), dir / "s");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(Impute, MedianFill) {
  std::vector<Account> accounts(4);
  for (std::size_t i = 0; i < 4; ++i) accounts[i].username = "u" + std::to_string(i);
  accounts[0].followers = 10;
  accounts[1].followers = 500;
  accounts[2].followers = 120;
  for (auto& a : accounts) {
    a.following = 1;
    a.created_at = 7;
  }
  accounts[0].verified = true;
  const auto report = corpus::impute_accounts(accounts);
  EXPECT_EQ(accounts[3].followers, 120);
  EXPECT_EQ(report.imputed.at("followers"), 1u);
  EXPECT_EQ(accounts[1].verified, false);
  EXPECT_EQ(accounts[0].verified, true);
  EXPECT_EQ(accounts[2].bio, "");
  for (const auto& a : accounts) EXPECT_TRUE(a.complete());
  EXPECT_TRUE(report.warnings.empty());
}

TEST(Impute, CompleteAccountUnchanged) {
  std::vector<Account> accounts{testing_support::account("a")};
  const auto before = accounts;
  corpus::impute_accounts(accounts);
  EXPECT_EQ(accounts, before);
}

TEST(Impute, VerifiedMissingEverywhereWarns) {
  std::vector<Account> accounts{testing_support::account("a"), testing_support::account("b")};
  for (auto& a : accounts) a.verified.reset();
  const auto report = corpus::impute_accounts(accounts);
  ASSERT_EQ(report.warnings.size(), 1u);
  for (const auto& a : accounts) EXPECT_EQ(a.verified, false);
}

TEST(Impute, NumericColumnMissingEverywhere) {
  std::vector<Account> accounts{testing_support::account("a")};
  accounts[0].followers.reset();
  try {
    corpus::impute_accounts(accounts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFeatureColumn);
  }
}

TEST(Impute, EvenCountMedian) {
  EXPECT_EQ(corpus::median({1, 2, 3, 4}), 3);
  EXPECT_EQ(corpus::median({4, 1, 2}), 2);
}

TEST(Impute, StoreIsCompletedAndValuesPersisted) {
  const auto& world = testing_support::SmallWorld::get();
  const auto store = corpus::CorpusStore::open(world.store);
  EXPECT_TRUE(store.imputed());
  for (const auto& a : store.accounts()) ASSERT_TRUE(a.complete()) << a.username;
  EXPECT_TRUE(corpus::stored_imputation(store).has_value());
}

class Labels : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ostringstream posts;
    for (int i = 0; i < 5; ++i) posts << post_line(i, "u" + std::to_string(i)) << "\n";
    std::istringstream pin(posts.str()), ain;
    corpus::ingest(pin, ain, corpus::SchemaMapping::canonical(), dir_ / "store");
    store_ = std::make_unique<corpus::CorpusStore>(corpus::CorpusStore::open(dir_ / "store"));
  }
  corpus::LabeledDataset apply(const std::string& csv) {
    std::istringstream in(csv);
    return corpus::apply_labels(*store_, in);
  }
  TempDir dir_;
  std::unique_ptr<corpus::CorpusStore> store_;
};

TEST_F(Labels, Join) {
  const auto ds = apply("username,label\nu0,bot\nu1,bot\nu2,human\nu3,human\nu4,human\n");
  EXPECT_EQ(ds.entries.size(), 5u);
  EXPECT_EQ(ds.count(Label::kBot), 2u);
  EXPECT_EQ(ds.entries[2].username, "u2");
}

TEST_F(Labels, UnknownUserSkippedWithWarning) {
  const auto ds = apply("username,label\nu0,bot\nghost,human\n");
  EXPECT_EQ(ds.entries.size(), 1u);
  ASSERT_EQ(ds.warnings.size(), 1u);
  EXPECT_NE(ds.warnings[0].find("ghost"), std::string::npos);
}

TEST_F(Labels, Conflict) {
  try {
    apply("username,label\nu1,bot\nu1,human\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConflictingLabels);
  }
}

TEST_F(Labels, EmptySet) {
  for (const std::string csv : {"", "username,label\n", "username,label\nghost,bot\n"}) {
    try {
      apply(csv);
      FAIL() << csv;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kEmptyLabelSet);
    }
  }
}

TEST_F(Labels, VerdictCsvIsAccepted) {
  const auto ds = apply("username,score,fired_rules,is_bot\nu0,1.0000,R1;R2,true\nu1,0.0000,,false\n");
  ASSERT_EQ(ds.entries.size(), 2u);
  EXPECT_EQ(ds.entries[0].label, Label::kBot);
  EXPECT_EQ(ds.entries[1].label, Label::kHuman);
}

}  // namespace
