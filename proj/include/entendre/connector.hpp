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

// Platform connectors: where the service gets (account, posts) for a user.
//
// Remote contract:
//   GET {base}/accounts/{username}
//     200 {"account": <canonical account>, "posts": [<canonical post>, ...]}
//     404 unknown user
// Anything else (timeouts, 5xx, unreachable host) is upstream unavailability.

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "entendre/corpus.hpp"
#include "entendre/error.hpp"
#include "entendre/records.hpp"
#include "httplib.h"

namespace entendre::connector {

struct FetchResult {
  Account account;
  std::vector<Post> posts;
};

/// Carries the hint the service forwards as Retry-After.
class UpstreamUnavailable : public Error {
 public:
  UpstreamUnavailable(std::string message, int retry_after_seconds)
      : Error(ErrorCode::kUpstreamUnavailable, std::move(message)), retry_after_(retry_after_seconds) {}
  int retry_after_seconds() const { return retry_after_; }

 private:
  int retry_after_;
};

class Connector {
 public:
  virtual ~Connector() = default;
  virtual FetchResult fetch(const std::string& username) const = 0;
  virtual std::string_view kind() const = 0;
};

class ArchiveConnector : public Connector {
 public:
  explicit ArchiveConnector(std::shared_ptr<const corpus::CorpusStore> store) : store_(std::move(store)) {}

  FetchResult fetch(const std::string& username) const override {
    const Account* a = store_->find_account(username);
    if (!a) throw Error(ErrorCode::kAccountNotFound, "no such account: " + username);
    return {*a, store_->posts_of(username)};
  }
  std::string_view kind() const override { return "archive"; }
  const corpus::CorpusStore& store() const { return *store_; }

 private:
  std::shared_ptr<const corpus::CorpusStore> store_;
};

class RemoteConnector : public Connector {
 public:
  static constexpr int kDefaultRetryAfter = 30;

  RemoteConnector(std::string base_url, double timeout_seconds)
      : base_url_(std::move(base_url)), timeout_(timeout_seconds) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  }

  FetchResult fetch(const std::string& username) const override {
    // One client per call keeps the connector safe for concurrent handlers.
    httplib::Client client(base_url_);
    const auto usec = std::chrono::microseconds(static_cast<std::int64_t>(timeout_ * 1e6));
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);
    auto res = client.Get("/accounts/" + username);
    if (!res) throw UpstreamUnavailable("upstream request failed: " + httplib::to_string(res.error()), kDefaultRetryAfter);
    if (res->status == 404) throw Error(ErrorCode::kAccountNotFound, "no such account: " + username);
    if (res->status != 200) {
      int retry = kDefaultRetryAfter;
      if (res->has_header("Retry-After")) {
        try {
          retry = std::stoi(res->get_header_value("Retry-After"));
        } catch (...) {
        }
      }
      throw UpstreamUnavailable("upstream status " + std::to_string(res->status), retry);
    }
    Json doc = Json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("account"))
      throw UpstreamUnavailable("upstream returned an unreadable document", kDefaultRetryAfter);
    FetchResult out;
    out.account = account_from_json(doc["account"]);
    if (doc.contains("posts"))
      for (const auto& p : doc["posts"]) out.posts.push_back(post_from_json(p));
    return out;
  }
  std::string_view kind() const override { return "remote"; }

 private:
  std::string base_url_;
  double timeout_;
};

/// `archive` (uses the configured store) or `remote:<base-url>[,timeout=<seconds>]`.
struct ConnectorDescriptor {
  enum class Kind { kArchive, kRemote } kind = Kind::kArchive;
  std::string base_url;
  double timeout_seconds = 5.0;

  static ConnectorDescriptor parse(std::string_view s) {
    ConnectorDescriptor d;
    if (s.empty() || s == "archive") return d;
    if (s.rfind("remote:", 0) != 0) throw Error(ErrorCode::kInvalidConfig, "unknown connector: " + std::string(s));
    d.kind = Kind::kRemote;
    std::string rest(s.substr(7));
    if (auto comma = rest.find(",timeout="); comma != std::string::npos) {
      try {
        d.timeout_seconds = std::stod(rest.substr(comma + 9));
      } catch (...) {
        throw Error(ErrorCode::kInvalidConfig, "bad connector timeout");
      }
      rest.resize(comma);
    }
    if (rest.empty() || !(d.timeout_seconds > 0.0)) throw Error(ErrorCode::kInvalidConfig, "bad remote connector");
    d.base_url = std::move(rest);
    return d;
  }
};

}  // namespace entendre::connector
