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

#include <cstdlib>
#include <sstream>
#include <vector>

#include "entendre/cli.hpp"
#include "support.hpp"

namespace {

using namespace entendre;
namespace fs = std::filesystem;
using testing_support::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "entendre");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const auto d = dir_->path();
    ASSERT_EQ(cli({"synth", "--humans", "150", "--bots", "20", "--seed", "5", "--out", (d / "data").string()}).code, 0);
    const auto r = cli({"ingest", "--posts", (d / "data/posts.ndjson").string(), "--accounts",
                        (d / "data/accounts.ndjson").string(), "--out", (d / "store").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = cli({"train", "--store", (d / "store").string(), "--labels", (d / "data/labels.csv").string(), "--out",
                        (d / "model.json").string(), "--trees", "30", "--seed", "9"});
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string at(const std::string& rel) { return (dir_->path() / rel).string(); }
  static TempDir* dir_;
};
TempDir* Pipeline::dir_ = nullptr;

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"--bogus-flag"}).code, 2);
  EXPECT_EQ(cli({"ingest"}).code, 2);
  EXPECT_EQ(cli({"score", "--user", "x"}).code, 2);
  EXPECT_EQ(cli({"tune", "--store", "s", "--labels", "l", "--out", "o", "--objective", "vibes"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrors) {
  TempDir d;
  const auto r = cli({"flag", "--store", (d / "nowhere").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(cli({"ingest", "--posts", (d / "none.ndjson").string(), "--out", (d / "s").string()}).code, 1);
}

TEST(Cli, ServeWithoutModelFailsFast) {
  TempDir d;
  const auto r = cli({"serve", "--model", (d / "absent.json").string(), "--store", d.path().string(), "--port", "0"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("model"), std::string::npos);
}

TEST(Cli, SynthIsReproducible) {
  TempDir a, b;
  ASSERT_EQ(cli({"synth", "--humans", "40", "--bots", "5", "--seed", "3", "--out", a.path().string()}).code, 0);
  ASSERT_EQ(cli({"synth", "--humans", "40", "--bots", "5", "--seed", "3", "--out", b.path().string()}).code, 0);
  EXPECT_EQ(testing_support::snapshot(a.path()), testing_support::snapshot(b.path()));
  for (const char* f : {"posts.ndjson", "accounts.ndjson", "labels.csv"})
    EXPECT_FALSE(testing_support::read_file(a / f).empty()) << f;
}

TEST_F(Pipeline, FlagCsv) {
  const auto r = cli({"flag", "--store", at("store")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 171u);
  EXPECT_EQ(rows[0], "username,score,fired_rules,is_bot");

  const auto flagged = cli({"flag", "--store", at("store"), "--flagged-only", "--out", at("flagged.csv")});
  ASSERT_EQ(flagged.code, 0);
  const auto written = lines(testing_support::read_file(at("flagged.csv")));
  ASSERT_GE(written.size(), 2u);
  for (std::size_t i = 1; i < written.size(); ++i) EXPECT_EQ(written[i].substr(written[i].rfind(',') + 1), "true");
}

TEST_F(Pipeline, ScoreLines) {
  const auto labels = lines(testing_support::read_file(at("data/labels.csv")));
  const std::string user = labels.at(1).substr(0, labels[1].find(','));
  const auto r = cli({"score", "--user", user, "--model", at("model.json"), "--store", at("store")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 1u);
  std::istringstream in(out[0]);
  std::string name, pct;
  in >> name >> pct;
  EXPECT_EQ(name, user);
  ASSERT_GE(pct.size(), 3u);
  EXPECT_EQ(pct[pct.size() - 2], '.');
  const double v = std::stod(pct);
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 100.0);

  const auto js = cli({"score", "--user", user, "--model", at("model.json"), "--store", at("store"), "--json"});
  ASSERT_EQ(js.code, 0);
  EXPECT_DOUBLE_EQ(Json::parse(js.out)["bot_likelihood_percent"].get<double>(), v);

  const auto missing = cli({"score", "--user", user, "--user", "ghost", "--model", at("model.json"), "--store", at("store")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(lines(missing.out).size(), 1u);
  EXPECT_NE(missing.err.find("ghost"), std::string::npos);
}

TEST_F(Pipeline, TrainReportsImportance) {
  const auto r = cli({"train", "--store", at("store"), "--labels", at("data/labels.csv"), "--out", at("m2.json"),
                      "--trees", "10", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["report"].contains("oob_error"));
  EXPECT_EQ(j["rows"], 170);
  EXPECT_TRUE(fs::exists(at("m2.json")));
}

TEST_F(Pipeline, TuneWritesModelAndReport) {
  const auto r = cli({"tune", "--store", at("store"), "--labels", at("data/labels.csv"), "--out", at("tuned.json"),
                      "--budget", "4", "--initial", "3", "--folds", "3", "--report", at("trials.json"), "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(at("tuned.json")));
  EXPECT_TRUE(fs::exists(at("trials.json")));
  EXPECT_NE(r.out.find("best_objective"), std::string::npos);
  EXPECT_EQ(cli({"tune", "--store", at("store"), "--labels", at("data/labels.csv"), "--out", at("t2.json"), "--budget",
                 "2", "--initial", "3"})
                .code,
            1);
}

TEST_F(Pipeline, NetworkWritesBothFormats) {
  const auto posts = lines(testing_support::read_file(at("data/posts.ndjson")));
  const std::string seed = Json::parse(posts.at(0))["post_id"];
  const auto r = cli({"network", "--store", at("store"), "--seeds", seed, "--depth", "2", "--iterations", "100",
                      "--gexf", at("net.gexf"), "--json-out", at("net.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("nodes ", 0), 0u);
  const auto doc = Json::parse(testing_support::read_file(at("net.json")));
  EXPECT_TRUE(doc["nodes"].is_array());
  EXPECT_NE(testing_support::read_file(at("net.gexf")).find("<gexf"), std::string::npos);
  EXPECT_EQ(cli({"network", "--store", at("store"), "--seeds", "no-such-post"}).code, 1);
}

TEST(CliBinary, ExitCodes) {
  const std::string bin = ENTENDRE_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(bin + " --help"), 0);
  EXPECT_EQ(status(bin + " --bogus-flag"), 2);
  EXPECT_EQ(status(bin + " flag --store /nonexistent/entendre-store"), 1);
}

}  // namespace
