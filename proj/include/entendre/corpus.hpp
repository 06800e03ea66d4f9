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

// Platform dumps -> canonical corpus store.
//
// A store is a directory:
//
//   posts-00000.ndjson ...  canonical posts, in accepted-input order
//   accounts.ndjson         canonical accounts, sorted by username
//   index                   "<username>\t<file>\t<byte offset>" per record
//   meta                    counts and the mapping hash (JSON)
//
// Stores are written into a sibling temporary directory and renamed into
// place, so a crashed ingest never leaves a half-merged store behind.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "entendre/error.hpp"
#include "entendre/records.hpp"
#include "entendre/text.hpp"

namespace entendre::corpus {

namespace fs = std::filesystem;

struct RawRecord {
  std::size_t source_line_number = 0;
  Json payload;  // always a non-empty object
};

enum class TimestampFormat { kEpochSeconds, kEpochMillis, kIso8601 };

inline std::string_view to_string(TimestampFormat f) {
  switch (f) {
    case TimestampFormat::kEpochSeconds: return "epoch_seconds";
    case TimestampFormat::kEpochMillis: return "epoch_millis";
    case TimestampFormat::kIso8601: return "iso8601";
  }
  return "epoch_seconds";
}

// Canonical field names understood by the mapper. Account creation time is
// spelled account_created_at so one field map can serve both streams.
inline const std::set<std::string>& post_fields() {
  static const std::set<std::string> kFields{"post_id", "author",   "body", "created_at", "kind",
                                             "parent_id", "hashtags", "urls", "mentions",   "upvotes"};
  return kFields;
}

inline const std::set<std::string>& account_fields() {
  static const std::set<std::string> kFields{"username", "followers", "following",
                                             "bio",      "verified",  "account_created_at"};
  return kFields;
}

struct SchemaMapping {
  std::map<std::string, std::string> field_map;  // canonical field -> dotted source path
  std::map<std::string, PostKind> kind_map;      // source value -> kind
  TimestampFormat timestamp_format = TimestampFormat::kEpochSeconds;

  /// Identity mapping for dumps already in canonical form.
  static SchemaMapping canonical() {
    SchemaMapping m;
    for (const auto& f : post_fields()) m.field_map[f] = f;
    for (const auto& f : account_fields()) m.field_map[f] = f;
    m.field_map["account_created_at"] = "created_at";
    m.kind_map = {{"original", PostKind::kOriginal}, {"comment", PostKind::kComment}, {"echo", PostKind::kEcho}};
    return m;
  }

  void validate() const {
    for (const char* required : {"post_id", "author", "body", "created_at", "username"}) {
      auto it = field_map.find(required);
      if (it == field_map.end() || it->second.empty())
        throw Error(ErrorCode::kInvalidMapping, std::string("required field not mapped: ") + required);
    }
    for (const auto& [canonical, source] : field_map) {
      if (!post_fields().count(canonical) && !account_fields().count(canonical))
        throw Error(ErrorCode::kInvalidMapping, "unknown canonical field: " + canonical);
      if (source.empty()) throw Error(ErrorCode::kInvalidMapping, "empty source path for " + canonical);
    }
  }

  Json to_json() const {
    Json j;
    j["field_map"] = field_map;
    Json kinds = Json::object();
    for (const auto& [k, v] : kind_map) kinds[k] = std::string(entendre::to_string(v));
    j["kind_map"] = kinds;
    j["timestamp_format"] = std::string(to_string(timestamp_format));
    return j;
  }

  /// Stable identifier of the mapping, recorded in the store meta.
  std::string hash() const { return text::hex64(text::fnv1a(to_json().dump())); }

  static SchemaMapping from_json(const Json& j) {
    SchemaMapping m;
    try {
      if (!j.is_object()) throw Error(ErrorCode::kInvalidMapping, "mapping must be an object");
      m.field_map = j.at("field_map").get<std::map<std::string, std::string>>();
      if (j.contains("kind_map")) {
        for (const auto& [k, v] : j.at("kind_map").items()) {
          auto kind = parse_post_kind(text::to_lower(v.get<std::string>()));
          if (!kind) throw Error(ErrorCode::kInvalidMapping, "unknown kind in kind_map: " + v.get<std::string>());
          m.kind_map[k] = *kind;
        }
      } else {
        m.kind_map = canonical().kind_map;
      }
      const std::string fmt = j.value("timestamp_format", std::string("epoch_seconds"));
      if (fmt == "epoch_seconds") m.timestamp_format = TimestampFormat::kEpochSeconds;
      else if (fmt == "epoch_millis") m.timestamp_format = TimestampFormat::kEpochMillis;
      else if (fmt == "iso8601") m.timestamp_format = TimestampFormat::kIso8601;
      else throw Error(ErrorCode::kInvalidMapping, "unknown timestamp_format: " + fmt);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kInvalidMapping, std::string("bad mapping document: ") + e.what());
    }
    m.validate();
    return m;
  }

  static SchemaMapping load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open mapping " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kInvalidMapping, "mapping is not valid JSON: " + path.string());
    return from_json(j);
  }
};

// ---------------------------------------------------------------------------
// Parsing and mapping

enum class ParseStatus { kRecord, kBlank, kMalformed };

struct ParseOutcome {
  ParseStatus status = ParseStatus::kBlank;
  RawRecord record;
  std::string error;
};

inline ParseOutcome parse_record(std::string_view line, std::size_t line_number) {
  ParseOutcome out;
  if (text::trim(line).empty()) return out;
  Json j = Json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.empty()) {
    out.status = ParseStatus::kMalformed;
    out.error = j.is_discarded() ? "not a JSON document" : "not a non-empty object";
    return out;
  }
  out.status = ParseStatus::kRecord;
  out.record = RawRecord{line_number, std::move(j)};
  return out;
}

namespace detail {

inline const Json* lookup(const Json& payload, std::string_view path) {
  const Json* cur = &payload;
  while (!path.empty()) {
    const auto dot = path.find('.');
    const std::string key(path.substr(0, dot));
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
  }
  return cur->is_null() ? nullptr : cur;
}

inline const Json* mapped(const RawRecord& raw, const SchemaMapping& m, const std::string& canonical) {
  auto it = m.field_map.find(canonical);
  if (it == m.field_map.end()) return nullptr;
  return lookup(raw.payload, it->second);
}

inline const Json& require(const RawRecord& raw, const SchemaMapping& m, const std::string& canonical) {
  const Json* v = mapped(raw, m, canonical);
  if (!v)
    throw Error(ErrorCode::kMissingRequiredField,
                "line " + std::to_string(raw.source_line_number) + ": missing " + canonical);
  return *v;
}

inline std::string as_string(const Json& v, std::string_view field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  throw Error(ErrorCode::kMalformedRecord, std::string("field ") + std::string(field) + " is not a string");
}

inline std::optional<std::int64_t> as_int(const Json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) return std::nullopt;
    return static_cast<std::int64_t>(std::floor(d));
  }
  if (v.is_string()) {
    const std::string s(text::trim(v.get<std::string>()));
    if (s.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
      const long long x = std::stoll(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

inline std::int64_t non_negative(const Json& v, std::string_view field) {
  auto x = as_int(v);
  if (!x || *x < 0)
    throw Error(ErrorCode::kMalformedRecord, std::string("field ") + std::string(field) + " is not a count");
  return *x;
}

inline EpochSeconds as_timestamp(const Json& v, TimestampFormat fmt, std::string_view field) {
  if (fmt == TimestampFormat::kIso8601) {
    if (v.is_string()) {
      if (auto t = time::parse_iso8601(v.get<std::string>())) return *t;
    }
  } else if (auto x = as_int(v)) {
    if (fmt == TimestampFormat::kEpochSeconds) return *x;
    std::int64_t s = *x / 1000;
    if (*x % 1000 < 0) --s;
    return s;
  }
  throw Error(ErrorCode::kMalformedRecord, std::string("field ") + std::string(field) + " is not a timestamp");
}

inline std::vector<std::string> as_string_list(const Json& v, std::string_view field) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(as_string(e, field));
  } else if (v.is_string()) {
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto t = text::trim(item);
      if (!t.empty()) out.emplace_back(t);
    }
  } else {
    throw Error(ErrorCode::kMalformedRecord, std::string("field ") + std::string(field) + " is not a list");
  }
  return out;
}

inline std::optional<bool> as_bool(const Json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>() != 0;
  if (v.is_string()) {
    const std::string s = text::to_lower(text::trim(v.get<std::string>()));
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
  }
  return std::nullopt;
}

}  // namespace detail

/// Maps a raw post record. Hashtags, URLs and mentions that the source does
/// not provide are extracted from the body.
inline Post map_post(const RawRecord& raw, const SchemaMapping& m) {
  using namespace detail;
  try {
    Post p;
    p.post_id = as_string(require(raw, m, "post_id"), "post_id");
    p.author = as_string(require(raw, m, "author"), "author");
    p.body = as_string(require(raw, m, "body"), "body");
    p.created_at = as_timestamp(require(raw, m, "created_at"), m.timestamp_format, "created_at");
    if (p.post_id.empty() || p.author.empty())
      throw Error(ErrorCode::kMissingRequiredField, "empty post_id or author");

    if (const Json* k = mapped(raw, m, "kind")) {
      const std::string value = as_string(*k, "kind");
      auto it = m.kind_map.find(value);
      if (it == m.kind_map.end()) throw Error(ErrorCode::kUnknownKindValue, "unknown kind value: " + value);
      p.kind = it->second;
    }
    if (const Json* parent = mapped(raw, m, "parent_id")) {
      std::string id = as_string(*parent, "parent_id");
      if (!id.empty()) p.parent_id = std::move(id);
    }
    if (p.kind != PostKind::kOriginal && !p.parent_id)
      throw Error(ErrorCode::kMissingRequiredField, "comment/echo without parent_id");

    if (const Json* h = mapped(raw, m, "hashtags")) {
      for (const auto& tag : as_string_list(*h, "hashtags")) {
        auto t = text::normalize_hashtag(tag);
        if (!t.empty()) p.hashtags.push_back(std::move(t));
      }
    } else {
      p.hashtags = text::extract_hashtags(p.body);
    }
    if (const Json* u = mapped(raw, m, "urls")) p.urls = as_string_list(*u, "urls");
    else p.urls = text::extract_urls(p.body);
    if (const Json* men = mapped(raw, m, "mentions")) {
      for (const auto& name : as_string_list(*men, "mentions")) {
        auto n = text::normalize_mention(name);
        if (!n.empty()) p.mentions.push_back(std::move(n));
      }
    } else {
      p.mentions = text::extract_mentions(p.body);
    }
    if (const Json* up = mapped(raw, m, "upvotes")) p.upvotes = non_negative(*up, "upvotes");
    return p;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, e.what());
  }
}

inline Account map_account(const RawRecord& raw, const SchemaMapping& m) {
  using namespace detail;
  Account a;
  a.username = as_string(require(raw, m, "username"), "username");
  if (a.username.empty()) throw Error(ErrorCode::kMissingRequiredField, "empty username");
  if (const Json* v = mapped(raw, m, "followers")) a.followers = non_negative(*v, "followers");
  if (const Json* v = mapped(raw, m, "following")) a.following = non_negative(*v, "following");
  if (const Json* v = mapped(raw, m, "bio")) a.bio = as_string(*v, "bio");
  if (const Json* v = mapped(raw, m, "verified")) {
    a.verified = as_bool(*v);
    if (!a.verified) throw Error(ErrorCode::kMalformedRecord, "field verified is not a boolean");
  }
  if (const Json* v = mapped(raw, m, "account_created_at"))
    a.created_at = as_timestamp(*v, m.timestamp_format, "account_created_at");
  return a;
}

// ---------------------------------------------------------------------------
// Store

struct StreamReport {
  std::size_t total_lines = 0;
  std::size_t blank = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> rejections;  // error code -> count

  Json to_json() const {
    return Json{{"total_lines", total_lines}, {"blank", blank}, {"accepted", accepted},
                {"rejected", rejected},       {"rejections", rejections}};
  }
};

struct IngestReport {
  StreamReport posts;
  StreamReport accounts;
  std::size_t synthesized_accounts = 0;  // post authors with no account record
  std::size_t shards = 0;

  Json to_json() const {
    return Json{{"posts", posts.to_json()},
                {"accounts", accounts.to_json()},
                {"synthesized_accounts", synthesized_accounts},
                {"shards", shards}};
  }
};

struct IngestOptions {
  std::size_t shard_size = 100000;  // posts per shard file
};

inline constexpr int kStoreFormatVersion = 1;

namespace detail {

inline std::string shard_name(std::size_t shard) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "posts-%05zu.ndjson", shard);
  return buf;
}

struct IndexEntry {
  std::string username;
  std::string file;
  std::uint64_t offset = 0;
};

inline void write_accounts(const fs::path& file, const std::vector<Account>& accounts,
                           std::vector<IndexEntry>& index) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + file.string());
  std::uint64_t offset = 0;
  for (const auto& a : accounts) {
    const std::string line = to_json(a).dump() + "\n";
    index.push_back({a.username, "accounts.ndjson", offset});
    out << line;
    offset += line.size();
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + file.string());
}

inline void write_index(const fs::path& file, const std::vector<IndexEntry>& index) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + file.string());
  for (const auto& e : index) out << e.username << '\t' << e.file << '\t' << e.offset << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "index write failed: " + file.string());
}

inline void write_meta(const fs::path& dir, const Json& meta) {
  std::ofstream out(dir / "meta", std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write meta in " + dir.string());
  out << meta.dump(2) << '\n';
}

/// Replaces `target` with the fully written `staging` directory.
inline void commit_directory(const fs::path& staging, const fs::path& target) {
  std::error_code ec;
  if (fs::exists(target)) {
    fs::remove_all(target, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot replace " + target.string() + ": " + ec.message());
  }
  fs::rename(staging, target, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot commit " + target.string() + ": " + ec.message());
}

inline fs::path staging_path(const fs::path& target) {
  fs::path p = target;
  if (!p.has_filename()) p = p.parent_path();
  return p.parent_path() / (p.filename().string() + ".staging");
}

}  // namespace detail

/// Streams both dumps into a fresh store at `out_dir`. Any previous content of
/// `out_dir` is replaced, never merged.
inline IngestReport ingest(std::istream& posts_in, std::istream& accounts_in, const SchemaMapping& mapping,
                           const fs::path& out_dir, const IngestOptions& opts = {}) {
  mapping.validate();
  fs::path target = out_dir;
  if (!target.has_filename()) target = target.parent_path();
  const fs::path staging = detail::staging_path(target);
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + staging.string() + ": " + ec.message());

  IngestReport report;
  std::vector<detail::IndexEntry> post_index;
  std::unordered_set<std::string> post_ids;
  std::set<std::string> authors;

  std::ofstream shard_out;
  std::size_t shard = 0, in_shard = 0;
  std::uint64_t offset = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(posts_in, line)) {
    ++line_no;
    ++report.posts.total_lines;
    auto parsed = parse_record(line, line_no);
    if (parsed.status == ParseStatus::kBlank) {
      ++report.posts.blank;
      continue;
    }
    auto reject = [&](ErrorCode code) {
      ++report.posts.rejected;
      ++report.posts.rejections[std::string(entendre::to_string(code))];
    };
    if (parsed.status == ParseStatus::kMalformed) {
      reject(ErrorCode::kMalformedRecord);
      continue;
    }
    Post post;
    try {
      post = map_post(parsed.record, mapping);
    } catch (const Error& e) {
      reject(e.code());
      continue;
    }
    if (!post_ids.insert(post.post_id).second) {
      reject(ErrorCode::kMalformedRecord);
      continue;
    }
    if (!shard_out.is_open() || in_shard == opts.shard_size) {
      if (shard_out.is_open()) {
        shard_out.close();
        ++shard;
      }
      shard_out.open(staging / detail::shard_name(shard), std::ios::binary);
      if (!shard_out) throw Error(ErrorCode::kIoError, "cannot write shard in " + staging.string());
      in_shard = 0;
      offset = 0;
    }
    const std::string out_line = to_json(post).dump() + "\n";
    post_index.push_back({post.author, detail::shard_name(shard), offset});
    shard_out << out_line;
    offset += out_line.size();
    ++in_shard;
    ++report.posts.accepted;
    authors.insert(post.author);
  }
  if (posts_in.bad()) throw Error(ErrorCode::kIoError, "error reading post stream");
  if (shard_out.is_open()) {
    shard_out.close();
    if (!shard_out) throw Error(ErrorCode::kIoError, "shard write failed");
    ++shard;
  }
  report.shards = shard;

  std::map<std::string, Account> accounts;
  line_no = 0;
  while (std::getline(accounts_in, line)) {
    ++line_no;
    ++report.accounts.total_lines;
    auto parsed = parse_record(line, line_no);
    if (parsed.status == ParseStatus::kBlank) {
      ++report.accounts.blank;
      continue;
    }
    auto reject = [&](ErrorCode code) {
      ++report.accounts.rejected;
      ++report.accounts.rejections[std::string(entendre::to_string(code))];
    };
    if (parsed.status == ParseStatus::kMalformed) {
      reject(ErrorCode::kMalformedRecord);
      continue;
    }
    try {
      Account a = map_account(parsed.record, mapping);
      if (accounts.count(a.username)) {
        reject(ErrorCode::kMalformedRecord);
        continue;
      }
      accounts.emplace(a.username, std::move(a));
      ++report.accounts.accepted;
    } catch (const Error& e) {
      reject(e.code());
    }
  }
  if (accounts_in.bad()) throw Error(ErrorCode::kIoError, "error reading account stream");
  for (const auto& author : authors) {
    if (!accounts.count(author)) {
      accounts.emplace(author, Account{author, {}, {}, {}, {}, {}});
      ++report.synthesized_accounts;
    }
  }

  std::vector<Account> sorted;
  sorted.reserve(accounts.size());
  for (auto& [_, a] : accounts) sorted.push_back(std::move(a));
  std::vector<detail::IndexEntry> index;
  detail::write_accounts(staging / "accounts.ndjson", sorted, index);
  index.insert(index.end(), post_index.begin(), post_index.end());
  detail::write_index(staging / "index", index);

  Json meta{{"format_version", kStoreFormatVersion},
            {"posts", report.posts.accepted},
            {"accounts", sorted.size()},
            {"rejected", report.posts.rejected + report.accounts.rejected},
            {"shards", report.shards},
            {"schema_hash", mapping.hash()},
            {"ingest", report.to_json()},
            {"imputed", false}};
  detail::write_meta(staging, meta);
  detail::commit_directory(staging, target);
  return report;
}

inline IngestReport ingest_files(const fs::path& posts_path, const fs::path& accounts_path,
                                 const SchemaMapping& mapping, const fs::path& out_dir,
                                 const IngestOptions& opts = {}) {
  std::ifstream posts(posts_path, std::ios::binary);
  if (!posts) throw Error(ErrorCode::kIoError, "cannot open " + posts_path.string());
  std::ifstream accounts;
  std::istringstream empty;
  if (!accounts_path.empty()) {
    accounts.open(accounts_path, std::ios::binary);
    if (!accounts) throw Error(ErrorCode::kIoError, "cannot open " + accounts_path.string());
  }
  return ingest(posts, accounts_path.empty() ? static_cast<std::istream&>(empty) : accounts, mapping, out_dir, opts);
}

/// Read-only view of an ingested store. Accounts are held in memory; posts are
/// read on demand through the index. Safe for concurrent readers.
class CorpusStore {
 public:
  struct Location {
    std::string file;
    std::uint64_t offset = 0;
  };

  static CorpusStore open(const fs::path& dir) {
    CorpusStore s;
    s.dir_ = dir;
    {
      std::ifstream in(dir / "meta");
      if (!in) throw Error(ErrorCode::kIoError, "not a corpus store (no meta): " + dir.string());
      s.meta_ = Json::parse(in, nullptr, false);
      if (s.meta_.is_discarded()) throw Error(ErrorCode::kIoError, "corrupt store meta in " + dir.string());
    }
    {
      std::ifstream in(dir / "accounts.ndjson", std::ios::binary);
      if (!in) throw Error(ErrorCode::kIoError, "missing accounts.ndjson in " + dir.string());
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        Account a = account_from_json(Json::parse(line));
        s.account_pos_.emplace(a.username, s.accounts_.size());
        s.accounts_.push_back(std::move(a));
      }
    }
    {
      std::ifstream in(dir / "index", std::ios::binary);
      if (!in) throw Error(ErrorCode::kIoError, "missing index in " + dir.string());
      std::string line;
      while (std::getline(in, line)) {
        const auto t1 = line.find('\t');
        const auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
          throw Error(ErrorCode::kIoError, "corrupt index line in " + dir.string());
        std::string file = line.substr(t1 + 1, t2 - t1 - 1);
        if (file == "accounts.ndjson") continue;
        s.post_locations_[line.substr(0, t1)].push_back(
            {std::move(file), static_cast<std::uint64_t>(std::stoull(line.substr(t2 + 1)))});
      }
    }
    return s;
  }

  const fs::path& directory() const { return dir_; }
  const Json& meta() const { return meta_; }
  std::size_t post_count() const { return meta_.value("posts", std::size_t{0}); }
  bool imputed() const { return meta_.value("imputed", false); }

  const std::vector<Account>& accounts() const { return accounts_; }

  const Account* find_account(const std::string& username) const {
    auto it = account_pos_.find(username);
    return it == account_pos_.end() ? nullptr : &accounts_[it->second];
  }

  /// Posts authored by `username`, in store order.
  std::vector<Post> posts_of(const std::string& username) const {
    std::vector<Post> out;
    auto it = post_locations_.find(username);
    if (it == post_locations_.end()) return out;
    std::ifstream in;
    std::string open_file;
    std::string line;
    for (const auto& loc : it->second) {
      if (loc.file != open_file) {
        in.close();
        in.clear();
        in.open(dir_ / loc.file, std::ios::binary);
        if (!in) throw Error(ErrorCode::kIoError, "missing shard " + loc.file);
        open_file = loc.file;
      }
      in.clear();
      in.seekg(static_cast<std::streamoff>(loc.offset));
      if (!std::getline(in, line)) throw Error(ErrorCode::kIoError, "index points past end of " + loc.file);
      out.push_back(post_from_json(Json::parse(line)));
    }
    return out;
  }

  /// Visits every post in shard order, then line order.
  template <typename Fn>
  void for_each_post(Fn&& fn) const {
    const std::size_t shards = meta_.value("shards", std::size_t{0});
    std::string line;
    for (std::size_t s = 0; s < shards; ++s) {
      std::ifstream in(dir_ / detail::shard_name(s), std::ios::binary);
      if (!in) throw Error(ErrorCode::kIoError, "missing shard " + detail::shard_name(s));
      while (std::getline(in, line)) {
        if (!line.empty()) fn(post_from_json(Json::parse(line)));
      }
    }
  }

  std::vector<Post> all_posts() const {
    std::vector<Post> out;
    out.reserve(post_count());
    for_each_post([&](Post&& p) { out.push_back(std::move(p)); });
    return out;
  }

 private:
  fs::path dir_;
  Json meta_;
  std::vector<Account> accounts_;
  std::unordered_map<std::string, std::size_t> account_pos_;
  std::unordered_map<std::string, std::vector<Location>> post_locations_;
};

// ---------------------------------------------------------------------------
// Imputation

struct ImputationPolicy {
  bool default_verified = false;
  std::string default_bio;
};

/// Values used to fill gaps; persisted in the store meta so accounts fetched
/// from elsewhere can be completed consistently.
struct ImputationValues {
  std::int64_t followers = 0;
  std::int64_t following = 0;
  EpochSeconds created_at = 0;
  bool verified = false;
  std::string bio;

  Json to_json() const {
    return Json{{"followers", followers}, {"following", following}, {"created_at", created_at},
                {"verified", verified},   {"bio", bio}};
  }

  static ImputationValues from_json(const Json& j) {
    ImputationValues v;
    v.followers = j.value("followers", std::int64_t{0});
    v.following = j.value("following", std::int64_t{0});
    v.created_at = j.value("created_at", EpochSeconds{0});
    v.verified = j.value("verified", false);
    v.bio = j.value("bio", std::string{});
    return v;
  }

  Account complete(Account a) const {
    if (!a.followers) a.followers = followers;
    if (!a.following) a.following = following;
    if (!a.created_at) a.created_at = created_at;
    if (!a.verified) a.verified = verified;
    if (!a.bio) a.bio = bio;
    return a;
  }
};

struct ImputationReport {
  std::map<std::string, std::size_t> imputed;  // field -> accounts filled
  ImputationValues values;
  std::vector<std::string> warnings;

  Json to_json() const {
    return Json{{"imputed", imputed}, {"values", values.to_json()}, {"warnings", warnings}};
  }
};

/// Median of the observed values; an even count averages the middle pair and
/// rounds half away from zero.
inline std::int64_t median(std::vector<std::int64_t> values) {
  if (values.empty()) throw Error(ErrorCode::kMissingFeatureColumn, "median of empty column");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const std::int64_t upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const std::int64_t lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return static_cast<std::int64_t>(std::llround((static_cast<double>(lower) + static_cast<double>(upper)) / 2.0));
}

/// Fits fill values on `accounts` and completes them in place.
inline ImputationReport impute_accounts(std::vector<Account>& accounts, const ImputationPolicy& policy = {}) {
  ImputationReport report;
  std::vector<std::int64_t> followers, following, created;
  bool any_verified = false;
  for (const auto& a : accounts) {
    if (a.followers) followers.push_back(*a.followers);
    if (a.following) following.push_back(*a.following);
    if (a.created_at) created.push_back(*a.created_at);
    any_verified = any_verified || a.verified.has_value();
  }
  auto need = [&](const char* name, const std::vector<std::int64_t>& col) {
    const bool missing_somewhere = col.size() < accounts.size();
    if (missing_somewhere && col.empty())
      throw Error(ErrorCode::kMissingFeatureColumn, std::string("field missing for every account: ") + name);
    return missing_somewhere;
  };
  if (need("followers", followers)) report.values.followers = median(followers);
  else if (!followers.empty()) report.values.followers = median(followers);
  if (need("following", following)) report.values.following = median(following);
  else if (!following.empty()) report.values.following = median(following);
  if (need("created_at", created)) report.values.created_at = median(created);
  else if (!created.empty()) report.values.created_at = median(created);
  report.values.verified = policy.default_verified;
  report.values.bio = policy.default_bio;
  if (!accounts.empty() && !any_verified)
    report.warnings.push_back("verified missing for every account; defaulted to " +
                              std::string(policy.default_verified ? "true" : "false"));

  for (auto& a : accounts) {
    if (!a.followers) ++report.imputed["followers"];
    if (!a.following) ++report.imputed["following"];
    if (!a.created_at) ++report.imputed["created_at"];
    if (!a.verified) ++report.imputed["verified"];
    if (!a.bio) ++report.imputed["bio"];
    a = report.values.complete(std::move(a));
  }
  return report;
}

/// Completes every account of the store at `dir`, rewriting the account file,
/// index and meta. Post shards are untouched.
inline ImputationReport impute_missing(const fs::path& dir, const ImputationPolicy& policy = {}) {
  CorpusStore store = CorpusStore::open(dir);
  std::vector<Account> accounts = store.accounts();
  ImputationReport report = impute_accounts(accounts, policy);

  std::vector<detail::IndexEntry> index;
  std::vector<detail::IndexEntry> post_index;
  {
    std::ifstream in(dir / "index", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      const auto t1 = line.find('\t');
      const auto t2 = line.find('\t', t1 + 1);
      std::string file = line.substr(t1 + 1, t2 - t1 - 1);
      if (file == "accounts.ndjson") continue;
      post_index.push_back({line.substr(0, t1), std::move(file), std::stoull(line.substr(t2 + 1))});
    }
  }
  detail::write_accounts(dir / "accounts.ndjson.tmp", accounts, index);
  index.insert(index.end(), post_index.begin(), post_index.end());
  detail::write_index(dir / "index.tmp", index);
  fs::rename(dir / "accounts.ndjson.tmp", dir / "accounts.ndjson");
  fs::rename(dir / "index.tmp", dir / "index");
  Json meta = store.meta();
  meta["imputed"] = true;
  meta["imputation"] = report.to_json();
  detail::write_meta(dir, meta);
  return report;
}

// ---------------------------------------------------------------------------
// Labels

struct LabeledEntry {
  std::string username;
  Label label = Label::kHuman;
};

struct LabeledDataset {
  std::vector<LabeledEntry> entries;  // label-file order
  std::vector<std::string> warnings;

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const LabeledEntry& e) { return e.label == l; }));
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  for (auto& cell : cells) cell = std::string(text::trim(cell));
  return cells;
}

}  // namespace detail

/// Joins a `username,label` CSV against the store's accounts. A flag-verdict
/// CSV (`username,score,fired_rules,is_bot`) is accepted too; its is_bot
/// column is read as the label.
inline LabeledDataset apply_labels(const CorpusStore& store, std::istream& csv) {
  LabeledDataset ds;
  std::string line;
  if (!std::getline(csv, line)) throw Error(ErrorCode::kEmptyLabelSet, "labels file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (text::to_lower(header[i]) == name) return i;
    return std::nullopt;
  };
  const auto user_col = column("username");
  auto label_col = column("label");
  const bool from_verdicts = !label_col;
  if (from_verdicts) label_col = column("is_bot");
  if (!user_col || !label_col)
    throw Error(ErrorCode::kMalformedRecord, "labels header must contain username and label columns");

  std::map<std::string, Label> seen;
  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() <= std::max(*user_col, *label_col))
      throw Error(ErrorCode::kMalformedRecord, "labels line " + std::to_string(line_no) + ": too few columns");
    const std::string& user = cells[*user_col];
    const std::string value = text::to_lower(cells[*label_col]);
    Label label;
    if (value == "bot" || (from_verdicts && (value == "true" || value == "1"))) label = Label::kBot;
    else if (value == "human" || (from_verdicts && (value == "false" || value == "0"))) label = Label::kHuman;
    else throw Error(ErrorCode::kMalformedRecord, "labels line " + std::to_string(line_no) + ": bad label " + value);

    auto [it, inserted] = seen.emplace(user, label);
    if (!inserted) {
      if (it->second != label) throw Error(ErrorCode::kConflictingLabels, "conflicting labels for " + user);
      continue;
    }
    if (!store.find_account(user)) {
      ds.warnings.push_back("label for unknown user skipped: " + user);
      continue;
    }
    ds.entries.push_back({user, label});
  }
  if (ds.entries.empty()) throw Error(ErrorCode::kEmptyLabelSet, "no labeled user matched the store");
  return ds;
}

inline LabeledDataset apply_labels(const CorpusStore& store, const fs::path& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + csv_path.string());
  return apply_labels(store, in);
}

/// Fill values recorded by impute_missing, if the store has been imputed.
inline std::optional<ImputationValues> stored_imputation(const CorpusStore& store) {
  if (!store.meta().contains("imputation")) return std::nullopt;
  return ImputationValues::from_json(store.meta()["imputation"]["values"]);
}

}  // namespace entendre::corpus
