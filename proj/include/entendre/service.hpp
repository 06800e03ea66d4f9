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

// HTTP API over a loaded model bundle and a platform connector.
//
//   GET  /api/v1/accounts/{username}/score
//   POST /api/v1/scores:batch            body: ["u1", "u2", ...]
//   GET  /api/v1/accounts/{username}/insights
//   GET  /api/v1/network?seeds=p1,p2&depth=1&max_nodes=500
//   GET  /api/v1/model
//   GET  /healthz
//
// Errors are {"error": <code>, "message": <text>}. Handlers are plain member
// functions returning a Reply so they can be exercised without a socket.

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "entendre/connector.hpp"
#include "entendre/corpus.hpp"
#include "entendre/export.hpp"
#include "entendre/features.hpp"
#include "entendre/forest.hpp"
#include "entendre/graph.hpp"
#include "entendre/heuristic.hpp"
#include "entendre/layout.hpp"
#include "httplib.h"

namespace entendre::service {

namespace fs = std::filesystem;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path model_path;
  fs::path store_path;
  std::string connector = "archive";
  std::size_t max_batch = 100;
  std::size_t max_network_nodes = 5000;
  std::string cors_origin = "*";
  std::size_t layout_iterations = 300;
  std::size_t barnes_hut_above = 2000;  // node count that switches layout repulsion to Barnes-Hut
  std::uint64_t layout_seed = 1;
  heuristic::HeuristicConfig heuristic = heuristic::HeuristicConfig::defaults();

  /// Overrides from ENTENDRE_PORT, ENTENDRE_MODEL, ENTENDRE_STORE and
  /// ENTENDRE_CONNECTOR when set.
  void apply_env() {
    if (const char* v = std::getenv("ENTENDRE_PORT"); v && *v) {
      try {
        port = std::stoi(v);
      } catch (...) {
        throw Error(ErrorCode::kInvalidConfig, std::string("bad ENTENDRE_PORT: ") + v);
      }
    }
    if (const char* v = std::getenv("ENTENDRE_MODEL"); v && *v) model_path = v;
    if (const char* v = std::getenv("ENTENDRE_STORE"); v && *v) store_path = v;
    if (const char* v = std::getenv("ENTENDRE_CONNECTOR"); v && *v) connector = v;
  }

  void validate() const {
    if (port < 0 || port > 65535) throw Error(ErrorCode::kInvalidConfig, "port out of range");
    if (max_batch == 0 || max_network_nodes == 0) throw Error(ErrorCode::kInvalidConfig, "limits must be positive");
    const auto d = connector::ConnectorDescriptor::parse(connector);
    if (d.kind == connector::ConnectorDescriptor::Kind::kArchive && store_path.empty())
      throw Error(ErrorCode::kInvalidConfig, "archive connector needs a store path");
  }
};

struct Reply {
  int status = 200;
  std::string body;
  std::map<std::string, std::string> headers;
};

/// round(100 * votes / trees, 1), half away from zero, in integer tenths.
inline std::int64_t percent_tenths(std::size_t votes, std::size_t trees) {
  const auto v = static_cast<std::int64_t>(votes), t = static_cast<std::int64_t>(trees);
  return (2000 * v + t) / (2 * t);
}

inline std::string_view http_error_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kAccountNotFound: return "account_not_found";
    case ErrorCode::kUpstreamUnavailable: return "upstream_unavailable";
    default: return "internal";
  }
}

inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kAccountNotFound: return 404;
    case ErrorCode::kUpstreamUnavailable: return 503;
    default: return 500;
  }
}

inline Json error_body(std::string_view code, std::string_view message) {
  return Json{{"error", code}, {"message", message}};
}

class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)) {}

  const ServiceConfig& config() const { return config_; }
  bool ready() const { return ready_.load(); }

  /// Opens the store and connector, then the model. Throws on any failure.
  void load() {
    open_sources();
    load_model();
  }

  /// Store and connector only; enough for insights and network.
  void open_sources() {
    config_.validate();
    if (!config_.store_path.empty())
      store_ = std::make_shared<const corpus::CorpusStore>(corpus::CorpusStore::open(config_.store_path));
    const auto d = connector::ConnectorDescriptor::parse(config_.connector);
    if (d.kind == connector::ConnectorDescriptor::Kind::kArchive)
      connector_ = std::make_unique<connector::ArchiveConnector>(store_);
    else
      connector_ = std::make_unique<connector::RemoteConnector>(d.base_url, d.timeout_seconds);
    if (store_) store_imputation_ = corpus::stored_imputation(*store_);
  }

  void load_model() {
    if (config_.model_path.empty() || !fs::exists(config_.model_path))
      throw Error(ErrorCode::kIoError, "model file not found: " + config_.model_path.string());
    model_ = std::make_unique<forest::ModelBundle>(forest::load(config_.model_path));
    ready_ = true;
  }

  // -------------------------------------------------------------------------
  // Handlers

  Reply healthz() const {
    if (!ready()) return {503, "loading\n", {{"Content-Type", "text/plain"}}};
    return {200, "ok\n", {{"Content-Type", "text/plain"}}};
  }

  Reply model_info() const {
    if (!ready()) return json_reply(503, error_body("model_not_loaded", "model is still loading"));
    return json_reply(200, Json{{"model_version", model_->model_version},
                                {"feature_spec_version", model_->normalizer.spec_version},
                                {"num_trees", model_->forest.trees.size()},
                                {"oob_error", model_->report.oob_error}});
  }

  Reply score(const std::string& username) const {
    if (!ready()) return json_reply(503, error_body("model_not_loaded", "model is still loading"));
    try {
      return json_reply(200, score_document(username));
    } catch (const connector::UpstreamUnavailable& e) {
      Reply r = json_reply(503, error_body("upstream_unavailable", e.what()));
      r.headers["Retry-After"] = std::to_string(e.retry_after_seconds());
      return r;
    } catch (const Error& e) {
      return json_reply(http_status(e.code()), error_body(http_error_code(e.code()), e.what()));
    } catch (const std::exception& e) {
      return json_reply(500, error_body("internal", e.what()));
    }
  }

  /// Body: a JSON array of usernames, or {"usernames": [...]}.
  Reply batch(const std::string& body) const {
    if (!ready()) return json_reply(503, error_body("model_not_loaded", "model is still loading"));
    Json req = Json::parse(body, nullptr, false);
    if (!req.is_discarded() && req.is_object() && req.contains("usernames")) req = req["usernames"];
    if (req.is_discarded() || !req.is_array())
      return json_reply(400, error_body("bad_request", "body must be a list of usernames"));
    if (req.empty()) return json_reply(400, error_body("empty_batch", "batch has no usernames"));
    if (req.size() > config_.max_batch)
      return json_reply(400, error_body("batch_too_large", "batch exceeds " + std::to_string(config_.max_batch)));
    Json out = Json::array();
    for (const auto& u : req) {
      if (!u.is_string()) {
        out.push_back(error_body("bad_request", "username must be a string"));
        continue;
      }
      const std::string name = u.get<std::string>();
      try {
        out.push_back(score_document(name));
      } catch (const Error& e) {
        Json entry = error_body(http_error_code(e.code()), e.what());
        entry["username"] = name;
        out.push_back(std::move(entry));
      } catch (const std::exception& e) {
        Json entry = error_body("internal", e.what());
        entry["username"] = name;
        out.push_back(std::move(entry));
      }
    }
    return json_reply(200, out);
  }

  Reply insights(const std::string& username) const {
    try {
      const auto fetched = fetch(username);
      return json_reply(200, insights_document(username, fetched.posts));
    } catch (const connector::UpstreamUnavailable& e) {
      Reply r = json_reply(503, error_body("upstream_unavailable", e.what()));
      r.headers["Retry-After"] = std::to_string(e.retry_after_seconds());
      return r;
    } catch (const Error& e) {
      return json_reply(http_status(e.code()), error_body(http_error_code(e.code()), e.what()));
    }
  }

  Reply network(const std::string& seeds_param, const std::string& depth_param, const std::string& max_nodes_param) const {
    if (!store_) return json_reply(400, error_body("network_unavailable", "network needs a corpus store"));
    std::vector<std::string> seeds;
    std::size_t start = 0;
    while (start <= seeds_param.size()) {
      const auto comma = seeds_param.find(',', start);
      std::string s(text::trim(std::string_view(seeds_param).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (!s.empty()) seeds.push_back(std::move(s));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (seeds.empty()) return json_reply(400, error_body("bad_seeds", "seeds must list at least one post id"));
    std::size_t depth = 1, max_nodes = config_.max_network_nodes;
    try {
      if (!depth_param.empty()) depth = std::stoul(depth_param);
      if (!max_nodes_param.empty()) max_nodes = std::min<std::size_t>(std::stoul(max_nodes_param), config_.max_network_nodes);
    } catch (...) {
      return json_reply(400, error_body("bad_request", "depth and max_nodes must be non-negative integers"));
    }
    if (max_nodes == 0) return json_reply(400, error_body("bad_request", "max_nodes must be positive"));
    try {
      return json_reply(200, network_document(seeds, depth, max_nodes));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnknownPostId) return json_reply(404, error_body("unknown_seed", e.what()));
      return json_reply(500, error_body("internal", e.what()));
    }
  }

  // -------------------------------------------------------------------------
  // Documents

  connector::FetchResult fetch(const std::string& username) const {
    if (!connector_) throw Error(ErrorCode::kInvalidConfig, "service not loaded");
    return connector_->fetch(username);
  }

  Account complete(Account a) const {
    if (a.complete()) return a;
    if (model_ && model_->imputation) return model_->imputation->complete(std::move(a));
    if (store_imputation_) return store_imputation_->complete(std::move(a));
    return corpus::ImputationValues{}.complete(std::move(a));
  }

  Json score_document(const std::string& username) const {
    const auto fetched = fetch(username);
    const Account account = complete(fetched.account);
    const auto raw = features::extract(account, fetched.posts);
    const auto normalized = features::apply_normalizer(raw, model_->normalizer);
    const std::size_t votes = forest::bot_votes(model_->forest, normalized.values);
    const auto verdict = heuristic::verdict_from_features(raw, fetched.account, config_.heuristic);
    Json feats = Json::object();
    for (std::size_t i = 0; i < features::kNumFeatures; ++i) feats[std::string(features::kFeatureNames[i])] = raw[i];
    return Json{{"username", username},
                {"bot_likelihood_percent",
                 static_cast<double>(percent_tenths(votes, model_->forest.trees.size())) / 10.0},
                {"is_bot_heuristic", verdict.is_bot},
                {"fired_rules", verdict.fired_rule_ids},
                {"model_version", model_->model_version},
                {"features", feats}};
  }

  static Json insights_document(const std::string& username, const std::vector<Post>& posts) {
    Json series = Json::array();
    if (!posts.empty()) {
      std::map<EpochSeconds, std::size_t> per_day;
      for (const auto& p : posts) ++per_day[time::floor_day(p.created_at)];
      for (EpochSeconds d = per_day.begin()->first; d <= per_day.rbegin()->first; d += kSecondsPerDay) {
        auto it = per_day.find(d);
        series.push_back({{"date", time::utc_date(d)}, {"count", it == per_day.end() ? 0 : it->second}});
      }
    }
    std::map<std::string, std::size_t> tags;
    for (const auto& p : posts)
      for (const auto& h : p.hashtags) ++tags[h];
    std::vector<std::pair<std::string, std::size_t>> ranked(tags.begin(), tags.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > 10) ranked.resize(10);
    Json top = Json::array();
    for (const auto& [tag, count] : ranked) top.push_back({{"tag", tag}, {"count", count}});
    return Json{{"username", username}, {"series", series}, {"hashtags", top}, {"post_count", posts.size()}};
  }

  Json network_document(const std::vector<std::string>& seeds, std::size_t depth, std::size_t max_nodes) const {
    const auto& posts = all_posts();
    const auto users = graph::seed_expand(posts, seeds, depth);
    const std::set<std::string> filter(users.begin(), users.end());
    graph::EngagementGraph g = graph::build(posts, &filter);

    std::set<std::string> bots;
    for (const auto& u : g.nodes())
      if (bot_flag(u)) bots.insert(u);
    auto coloring = graph::classify_exposure(g, graph::flags_for(g, bots));
    std::vector<double> centrality;
    if (g.num_edges() > 0) centrality = graph::eigenvector_centrality(g).scores;

    auto slice = graph::keep_most_central(std::move(g), std::move(coloring), std::move(centrality), max_nodes);

    layout::Fa2Params params;
    params.seed = config_.layout_seed;
    params.barnes_hut = slice.graph.num_nodes() > config_.barnes_hut_above;
    const auto positions = layout::layout_fa2(slice.graph, config_.layout_iterations, params);
    exporting::NetworkView view{&slice.graph, &slice.coloring, &positions, &slice.centrality, slice.truncated};
    return exporting::export_json(view);
  }

  // -------------------------------------------------------------------------
  // Serving

  void mount(httplib::Server& server) const {
    auto send = [this](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      for (const auto& [k, v] : r.headers)
        if (k != "Content-Type") res.set_header(k, v);
      auto ct = r.headers.find("Content-Type");
      res.set_content(r.body, ct == r.headers.end() ? "application/json" : ct->second);
      res.set_header("Access-Control-Allow-Origin", config_.cors_origin);
    };
    server.Get("/healthz", [=, this](const httplib::Request&, httplib::Response& res) { send(res, healthz()); });
    server.Get("/api/v1/model", [=, this](const httplib::Request&, httplib::Response& res) { send(res, model_info()); });
    server.Get(R"(/api/v1/accounts/([^/]+)/score)", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, score(req.matches[1]));
    });
    server.Get(R"(/api/v1/accounts/([^/]+)/insights)", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, insights(req.matches[1]));
    });
    server.Post(R"(/api/v1/scores:batch)", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, batch(req.body));
    });
    server.Get("/api/v1/network", [=, this](const httplib::Request& req, httplib::Response& res) {
      send(res, network(req.get_param_value("seeds"), req.get_param_value("depth"), req.get_param_value("max_nodes")));
    });
    server.Options(R"(.*)", [this](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
      res.set_header("Access-Control-Allow-Origin", config_.cors_origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }

  /// Binds, loads everything and serves until `server.stop()`. The model file
  /// is checked before binding so a missing model fails immediately.
  void run(httplib::Server& server, const std::function<void(int)>& on_bound = {}) {
    if (config_.model_path.empty() || !fs::exists(config_.model_path))
      throw Error(ErrorCode::kIoError, "model file not found: " + config_.model_path.string());
    mount(server);
    const int port = config_.port == 0 ? server.bind_to_any_port(config_.host) : config_.port;
    if (config_.port != 0 && !server.bind_to_port(config_.host, config_.port))
      throw Error(ErrorCode::kIoError, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    if (port < 0) throw Error(ErrorCode::kIoError, "cannot bind " + config_.host);
    bound_port_ = port;
    if (on_bound) on_bound(port);
    std::thread loader([&] {
      try {
        load();
      } catch (...) {
        load_error_ = std::current_exception();
        server.wait_until_ready();
        server.stop();
      }
    });
    server.listen_after_bind();
    loader.join();
    if (load_error_) std::rethrow_exception(load_error_);
  }

  int bound_port() const { return bound_port_.load(); }

 private:
  Reply json_reply(int status, const Json& body) const {
    return {status, body.dump() + "\n", {{"Content-Type", "application/json"}}};
  }

  const std::vector<Post>& all_posts() const {
    std::call_once(posts_once_, [this] { posts_ = store_->all_posts(); });
    return posts_;
  }

  bool bot_flag(const std::string& username) const {
    {
      std::lock_guard lock(flags_mu_);
      auto it = flags_.find(username);
      if (it != flags_.end()) return it->second;
    }
    bool flagged = false;
    if (const Account* a = store_->find_account(username)) {
      const auto verdict = heuristic::classify(complete(*a), store_->posts_of(username), config_.heuristic);
      flagged = verdict.is_bot;
    }
    std::lock_guard lock(flags_mu_);
    flags_.emplace(username, flagged);
    return flagged;
  }

  ServiceConfig config_;
  std::shared_ptr<const corpus::CorpusStore> store_;
  std::unique_ptr<connector::Connector> connector_;
  std::unique_ptr<forest::ModelBundle> model_;
  std::optional<corpus::ImputationValues> store_imputation_;
  std::atomic<bool> ready_{false};
  std::atomic<int> bound_port_{0};
  std::exception_ptr load_error_;

  mutable std::once_flag posts_once_;
  mutable std::vector<Post> posts_;
  mutable std::mutex flags_mu_;
  mutable std::unordered_map<std::string, bool> flags_;
};

}  // namespace entendre::service
