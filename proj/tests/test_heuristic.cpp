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

#include <random>

#include "entendre/heuristic.hpp"
#include "support.hpp"

namespace {

using namespace entendre;
using heuristic::HeuristicConfig;

features::FeatureVector vec(double posts_per_day, double dup = 0.0, double cv = 1.0, double post_count = 0.0) {
  features::FeatureVector fv{"u", std::vector<double>(features::kNumFeatures, 0.0)};
  fv.values[features::kPostsPerDay] = posts_per_day;
  fv.values[features::kDuplicateContentRatio] = dup;
  fv.values[features::kCvInterpostGap] = cv;
  fv.values[features::kPostCount] = post_count;
  return fv;
}

Account raw(std::optional<std::int64_t> followers, std::optional<std::int64_t> following) {
  Account a;
  a.username = "u";
  a.followers = followers;
  a.following = following;
  return a;
}

TEST(Rules, PostsPerDay) {
  const auto c = HeuristicConfig::defaults();
  EXPECT_EQ(heuristic::evaluate_rules(vec(150), raw(0, 0), c), std::vector<std::string>{"R1"});
  EXPECT_TRUE(heuristic::evaluate_rules(vec(100), raw(0, 0), c).empty());
}

TEST(Rules, FollowerRatio) {
  const auto c = HeuristicConfig::defaults();
  EXPECT_EQ(heuristic::evaluate_rules(vec(2), raw(500, 500), c), std::vector<std::string>{"R2"});
  EXPECT_EQ(heuristic::evaluate_rules(vec(2), raw(110, 100), c), std::vector<std::string>{"R2"});
  EXPECT_TRUE(heuristic::evaluate_rules(vec(2), raw(112, 100), c).empty());
  EXPECT_TRUE(heuristic::evaluate_rules(vec(2), raw(5, 5), c).empty());      // following < 10
  EXPECT_TRUE(heuristic::evaluate_rules(vec(2), raw(500, 100), c).empty());  // ratio 5
}

TEST(Rules, UsesRawCountsNotImputedOnes) {
  const auto c = HeuristicConfig::defaults();
  auto fv = vec(2);
  fv.values[features::kFollowers] = 50;
  fv.values[features::kFollowing] = 50;
  EXPECT_EQ(heuristic::evaluate_rules(fv, raw(std::nullopt, std::nullopt), c), std::vector<std::string>{"R2"});
  EXPECT_TRUE(heuristic::evaluate_rules(fv, raw(200, 50), c).empty());
}

TEST(Rules, DuplicatesAndCadence) {
  const auto c = HeuristicConfig::defaults();
  EXPECT_EQ(heuristic::evaluate_rules(vec(2, 0.5), raw(0, 0), c), std::vector<std::string>{"R3"});
  EXPECT_EQ(heuristic::evaluate_rules(vec(2, 0.0, 0.05, 20), raw(0, 0), c), std::vector<std::string>{"R4"});
  EXPECT_TRUE(heuristic::evaluate_rules(vec(2, 0.0, 0.05, 19), raw(0, 0), c).empty());
  EXPECT_TRUE(heuristic::evaluate_rules(vec(2, 0.0, 0.1, 20), raw(0, 0), c).empty());
}

TEST(Score, WeightedFraction) {
  const auto c = HeuristicConfig::defaults();
  EXPECT_DOUBLE_EQ(heuristic::heuristic_score({"R1", "R2", "R3", "R4"}, c), 1.0);
  EXPECT_DOUBLE_EQ(heuristic::heuristic_score({}, c), 0.0);
  const auto half = heuristic::verdict_from_features(vec(150), raw(500, 500), c);
  EXPECT_DOUBLE_EQ(half.score, 0.5);
  EXPECT_TRUE(half.is_bot);
  const auto quarter = heuristic::verdict_from_features(vec(150), raw(0, 0), c);
  EXPECT_FALSE(quarter.is_bot);
}

TEST(Score, MonotoneInFiredRules) {
  auto c = HeuristicConfig::defaults();
  c.rules[0].weight = 3;
  c.rules[2].weight = 0.5;
  std::vector<std::string> ids{"R1", "R2", "R3", "R4"};
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::vector<std::string> fired;
    for (unsigned i = 0; i < 4; ++i)
      if (mask & (1u << i)) fired.push_back(ids[i]);
    const double s = heuristic::heuristic_score(fired, c);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 1.0);
    for (unsigned i = 0; i < 4; ++i) {
      if (mask & (1u << i)) continue;
      auto more = fired;
      more.push_back(ids[i]);
      ASSERT_GE(heuristic::heuristic_score(more, c), s);
    }
  }
}

TEST(Classify, PlantedBotAndQuietHuman) {
  using testing_support::post;
  Account bot = testing_support::account("bot", 500, 500);
  std::vector<Post> bot_posts;
  for (int i = 0; i < 300; ++i)
    bot_posts.push_back(post("b" + std::to_string(i), "bot", i * 576, PostKind::kOriginal, {}, "buy the thing now"));
  const auto v = heuristic::classify(bot, bot_posts);
  EXPECT_EQ(v.fired_rule_ids, (std::vector<std::string>{"R1", "R2", "R3", "R4"}));
  EXPECT_DOUBLE_EQ(v.score, 1.0);
  EXPECT_TRUE(v.is_bot);

  Account human = testing_support::account("h", 250, 50);
  std::vector<Post> human_posts;
  std::mt19937_64 rng(1);
  EpochSeconds t = 0;
  for (int i = 0; i < 20; ++i) {
    t += 3600 + static_cast<EpochSeconds>(rng() % 80000);
    human_posts.push_back(post("h" + std::to_string(i), "h", t, PostKind::kOriginal, {},
                               testing_support::random_text(rng, 60, "abcdefghijklmnop ")));
  }
  const auto hv = heuristic::classify(human, human_posts);
  EXPECT_TRUE(hv.fired_rule_ids.empty());
  EXPECT_FALSE(hv.is_bot);
}

TEST(Classify, PlantedCorpusRecovery) {
  const auto& world = testing_support::SmallWorld::get();
  const auto store = corpus::CorpusStore::open(world.store);
  const auto verdicts = heuristic::classify_store(store);
  std::map<std::string, Label> truth(world.corpus.labels.begin(), world.corpus.labels.end());
  std::size_t flagged = 0, tp = 0;
  for (const auto& v : verdicts) {
    if (!v.is_bot) continue;
    ++flagged;
    if (truth.at(v.username) == Label::kBot) ++tp;
  }
  EXPECT_GE(static_cast<double>(tp) / 20.0, 0.95);
  EXPECT_GE(static_cast<double>(tp) / static_cast<double>(flagged), 0.90);
  EXPECT_NEAR(static_cast<double>(flagged) / 200.0, 0.10, 0.01);
  // Deterministic.
  const auto again = heuristic::classify_store(store);
  for (std::size_t i = 0; i < verdicts.size(); ++i) ASSERT_EQ(again[i].fired_rule_ids, verdicts[i].fired_rule_ids);
}

TEST(Config, FromJson) {
  const auto c = HeuristicConfig::from_json(Json::parse(R"({
    "threshold": 0.6,
    "rules": [
      {"id": "fast", "type": "posts_per_day", "min": 50, "weight": 2},
      {"id": "echo", "type": "feature", "feature": "reply_fraction", "op": ">=", "value": 0.9}
    ]})"));
  ASSERT_EQ(c.rules.size(), 2u);
  EXPECT_DOUBLE_EQ(c.threshold, 0.6);
  auto fv = vec(60);
  fv.values[features::kReplyFraction] = 0.95;
  const auto v = heuristic::verdict_from_features(fv, raw(0, 0), c);
  EXPECT_EQ(v.fired_rule_ids, (std::vector<std::string>{"fast", "echo"}));
  fv.values[features::kPostsPerDay] = 10;
  EXPECT_NEAR(heuristic::verdict_from_features(fv, raw(0, 0), c).score, 1.0 / 3.0, 1e-15);
}

TEST(Config, ShippedFileMatchesDefaults) {
  const auto file = HeuristicConfig::load(std::filesystem::path(ENTENDRE_CONFIG_DIR) / "heuristic.json");
  const auto def = HeuristicConfig::defaults();
  EXPECT_EQ(file.threshold, def.threshold);
  ASSERT_EQ(file.rules.size(), def.rules.size());
  for (std::size_t i = 0; i < def.rules.size(); ++i) {
    const auto &a = file.rules[i], &b = def.rules[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.weight, b.weight);
    EXPECT_EQ(a.min, b.min) << a.id;
    EXPECT_EQ(a.tolerance, b.tolerance);
    EXPECT_EQ(a.min_following, b.min_following);
    EXPECT_EQ(a.max_cv, b.max_cv);
    EXPECT_EQ(a.min_posts, b.min_posts);
  }
}

TEST(Config, Invalid) {
  for (const char* doc : {R"({"rules": []})", R"({"rules": [{"id": "a", "type": "nope"}]})",
                          R"({"rules": [{"id": "a", "type": "posts_per_day"}, {"id": "a", "type": "cadence"}]})",
                          R"({"rules": [{"id": "a", "type": "posts_per_day", "weight": 0}]})",
                          R"({"threshold": 0, "rules": [{"id": "a", "type": "posts_per_day"}]})",
                          R"({"rules": [{"id": "a", "type": "feature", "feature": "nope", "op": ">", "value": 1}]})"}) {
    try {
      HeuristicConfig::from_json(Json::parse(doc));
      FAIL() << doc;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig) << doc;
    }
  }
}

TEST(VerdictCsv, Format) {
  std::ostringstream out;
  heuristic::write_verdicts_csv(out, {{"a", 0.75, {"R1", "R2", "R3"}, true}, {"b", 0.0, {}, false}});
  EXPECT_EQ(out.str(), "username,score,fired_rules,is_bot\na,0.7500,R1;R2;R3,true\nb,0.0000,,false\n");
}

}  // namespace
