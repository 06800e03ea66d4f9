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

// Command-line entry point. Exit codes: 0 success, 1 runtime error, 2 usage.

#pragma once

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "entendre/corpus.hpp"
#include "entendre/export.hpp"
#include "entendre/features.hpp"
#include "entendre/forest.hpp"
#include "entendre/graph.hpp"
#include "entendre/heuristic.hpp"
#include "entendre/layout.hpp"
#include "entendre/service.hpp"
#include "entendre/smbo.hpp"
#include "entendre/synth.hpp"

namespace entendre::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline httplib::Server* g_server = nullptr;

inline void stop_server(int) {
  if (g_server) g_server->stop();
}

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  f << content;
  if (!f) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

inline features::FeatureMatrix labeled_matrix(const corpus::CorpusStore& store, const fs::path& labels,
                                              std::ostream& err) {
  const auto labeled = corpus::apply_labels(store, labels);
  for (const auto& w : labeled.warnings) err << "warning: " << w << '\n';
  return features::build_dataset(store, labeled);
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Social-bot detection toolkit", "entendre"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");
  std::function<void()> action;

  bool json = false;
  auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", json, "Machine-readable report"); };

  // ingest
  fs::path posts_path, accounts_path, mapping_path, store_dir;
  std::size_t shard_size = corpus::IngestOptions{}.shard_size;
  bool no_impute = false;
  auto* ingest = app.add_subcommand("ingest", "Ingest ndjson dumps into a corpus store");
  ingest->add_option("--posts", posts_path, "Posts ndjson")->required();
  ingest->add_option("--accounts", accounts_path, "Accounts ndjson");
  ingest->add_option("--mapping", mapping_path, "Schema mapping document (default: canonical)");
  ingest->add_option("--out", store_dir, "Store directory")->required();
  ingest->add_option("--shard-size", shard_size, "Posts per shard")->check(CLI::PositiveNumber);
  ingest->add_flag("--no-impute", no_impute, "Leave missing account fields missing");
  json_flag(ingest);
  ingest->callback([&] {
    action = [&] {
      const auto mapping = mapping_path.empty() ? corpus::SchemaMapping::canonical() : corpus::SchemaMapping::load(mapping_path);
      corpus::IngestOptions opts;
      opts.shard_size = shard_size;
      const auto report = corpus::ingest_files(posts_path, accounts_path, mapping, store_dir, opts);
      Json doc{{"ingest", report.to_json()}};
      if (!no_impute) {
        const auto imp = corpus::impute_missing(store_dir);
        for (const auto& w : imp.warnings) err << "warning: " << w << '\n';
        doc["imputation"] = imp.to_json();
      }
      if (json) {
        out << doc.dump() << '\n';
      } else {
        out << "posts accepted " << report.posts.accepted << " rejected " << report.posts.rejected << '\n'
            << "accounts accepted " << report.accounts.accepted << " rejected " << report.accounts.rejected << '\n'
            << "store " << store_dir.string() << '\n';
      }
    };
  });

  // synth
  synth::SyntheticCorpusSpec spec;
  fs::path synth_out;
  bool scale = false;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted bots");
  synth_cmd->add_option("--humans", spec.humans, "Human accounts");
  synth_cmd->add_option("--bots", spec.bots, "Bot accounts");
  synth_cmd->add_option("--seed", spec.seed, "Generator seed");
  synth_cmd->add_option("--bot-posts-per-day", spec.bot_posts_per_day);
  synth_cmd->add_option("--bot-active-days", spec.bot_active_days);
  synth_cmd->add_option("--bot-duplicate-rate", spec.bot_duplicate_rate);
  synth_cmd->add_option("--bot-ratio-target", spec.bot_ratio_target);
  synth_cmd->add_option("--bot-cadence-jitter", spec.bot_cadence_jitter);
  synth_cmd->add_option("--human-posts-mean", spec.human_posts_mean);
  synth_cmd->add_option("--missing-rate", spec.missing_rate);
  synth_cmd->add_flag("--scale", scale, "About 233k posts over 38k users (counts flags are ignored)");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  json_flag(synth_cmd);
  synth_cmd->callback([&] {
    action = [&] {
      if (scale) spec = synth::SyntheticCorpusSpec::scale(spec.seed);
      const auto corpus = synth::generate(spec);
      synth::write(corpus, synth_out);
      if (json)
        out << Json{{"accounts", corpus.accounts.size()}, {"posts", corpus.posts.size()}, {"bots", spec.bots}}.dump()
            << '\n';
      else
        out << "accounts " << corpus.accounts.size() << " posts " << corpus.posts.size() << " bots " << spec.bots
            << '\n';
    };
  });

  // flag
  fs::path heuristic_path, verdicts_path;
  bool flagged_only = false;
  auto* flag = app.add_subcommand("flag", "Heuristic verdicts for every account (review queue)");
  flag->add_option("--store", store_dir, "Store directory")->required();
  flag->add_option("--config", heuristic_path, "Heuristic config document");
  flag->add_option("--out", verdicts_path, "Verdicts CSV (default: stdout)");
  flag->add_flag("--flagged-only", flagged_only, "Only accounts judged bot");
  json_flag(flag);
  flag->callback([&] {
    action = [&] {
      const auto config = heuristic_path.empty() ? heuristic::HeuristicConfig::defaults()
                                                 : heuristic::HeuristicConfig::load(heuristic_path);
      const auto store = corpus::CorpusStore::open(store_dir);
      auto verdicts = heuristic::classify_store(store, config);
      const auto flagged = static_cast<std::size_t>(
          std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.is_bot; }));
      if (flagged_only)
        std::erase_if(verdicts, [](const auto& v) { return !v.is_bot; });
      std::ostringstream csv;
      heuristic::write_verdicts_csv(csv, verdicts);
      if (verdicts_path.empty()) {
        out << csv.str();
      } else {
        detail::write_file(verdicts_path, csv.str());
        if (json)
          out << Json{{"accounts", store.accounts().size()}, {"flagged", flagged}}.dump() << '\n';
        else
          out << "accounts " << store.accounts().size() << " flagged " << flagged << '\n';
      }
    };
  });

  // train
  fs::path labels_path, model_path;
  forest::HyperParams hp;
  std::uint64_t seed = 1;
  std::size_t threads = default_threads();
  auto* train = app.add_subcommand("train", "Train a random-forest model bundle");
  train->add_option("--store", store_dir, "Store directory")->required();
  train->add_option("--labels", labels_path, "Labels CSV (username,label)")->required();
  train->add_option("--out", model_path, "Model bundle path")->required();
  train->add_option("--trees", hp.num_trees)->check(CLI::PositiveNumber);
  train->add_option("--max-depth", hp.max_depth)->check(CLI::PositiveNumber);
  train->add_option("--min-node-size", hp.min_node_size)->check(CLI::PositiveNumber);
  train->add_option("--mtry", hp.mtry_fraction, "Fraction of features tried per split");
  train->add_option("--sample", hp.sample_fraction, "Bootstrap sample fraction");
  train->add_option("--seed", seed);
  train->add_option("--threads", threads)->check(CLI::PositiveNumber);
  json_flag(train);
  train->callback([&] {
    action = [&] {
      hp.validate();
      const auto store = corpus::CorpusStore::open(store_dir);
      const auto matrix = detail::labeled_matrix(store, labels_path, err);
      forest::TrainOptions opts;
      opts.threads = threads;
      const auto bundle = forest::fit_bundle(matrix, hp, seed, opts, corpus::stored_imputation(store));
      forest::save(bundle, model_path);
      if (json) {
        out << Json{{"model", model_path.string()},
                    {"model_version", bundle.model_version},
                    {"rows", matrix.rows.size()},
                    {"report", bundle.report.to_json()}}
                   .dump()
            << '\n';
      } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", bundle.report.oob_error);
        out << "rows " << matrix.rows.size() << " oob_error " << buf << " model_version " << bundle.model_version
            << '\n';
        for (std::size_t i = 0; i < bundle.report.feature_importances.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%.4f", bundle.report.feature_importances[i]);
          out << "importance " << features::kFeatureNames[i] << ' ' << buf << '\n';
        }
      }
    };
  });

  // tune
  std::size_t budget = 50, initial = 10, folds = 5;
  std::string objective = "cv";
  fs::path report_path;
  auto* tune = app.add_subcommand("tune", "Tune hyperparameters and train the best model");
  tune->add_option("--store", store_dir, "Store directory")->required();
  tune->add_option("--labels", labels_path, "Labels CSV")->required();
  tune->add_option("--out", model_path, "Best model bundle path")->required();
  tune->add_option("--budget", budget, "Objective evaluations")->check(CLI::PositiveNumber);
  tune->add_option("--initial", initial, "Initial random design size")->check(CLI::PositiveNumber);
  tune->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  tune->add_option("--objective", objective, "cv or oob")->check(CLI::IsMember({"cv", "oob"}));
  tune->add_option("--report", report_path, "Trial report path");
  tune->add_option("--seed", seed);
  tune->add_option("--threads", threads)->check(CLI::PositiveNumber);
  json_flag(tune);
  tune->callback([&] {
    action = [&] {
      const auto store = corpus::CorpusStore::open(store_dir);
      const auto matrix = detail::labeled_matrix(store, labels_path, err);
      smbo::TuneOptions opts;
      opts.initial_design = initial;
      const auto result = smbo::tune(matrix, smbo::ParamSpace{}, budget, folds, seed, opts,
                                     objective == "oob" ? smbo::ObjectiveKind::kOutOfBag
                                                        : smbo::ObjectiveKind::kCrossValidation);
      forest::TrainOptions topts;
      topts.threads = threads;
      const auto bundle = forest::fit_bundle(matrix, result.best_hp, seed, topts, corpus::stored_imputation(store));
      forest::save(bundle, model_path);
      const std::string report = json ? result.to_json().dump() + "\n" : result.to_table();
      if (!report_path.empty()) detail::write_file(report_path, report);
      if (json) {
        Json doc = result.to_json();
        doc["model"] = model_path.string();
        doc["model_version"] = bundle.model_version;
        out << doc.dump() << '\n';
      } else {
        out << result.to_table();
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", result.best_objective);
        out << "best_objective " << buf << " model_version " << bundle.model_version << '\n';
      }
    };
  });

  // score
  std::vector<std::string> users;
  std::string connector_desc = "archive";
  auto* score = app.add_subcommand("score", "Bot likelihood percent per user");
  score->add_option("--user", users, "Username (repeatable)")->required();
  score->add_option("--model", model_path, "Model bundle")->required();
  score->add_option("--store", store_dir, "Store directory");
  score->add_option("--connector", connector_desc, "archive or remote:<url>[,timeout=<s>]");
  json_flag(score);
  score->callback([&] {
    action = [&] {
      service::ServiceConfig cfg;
      cfg.model_path = model_path;
      cfg.store_path = store_dir;
      cfg.connector = connector_desc;
      service::Service svc(cfg);
      svc.load();
      bool failed = false;
      for (const auto& u : users) {
        try {
          const Json doc = svc.score_document(u);
          if (json) {
            out << doc.dump() << '\n';
          } else {
            const auto tenths = static_cast<std::int64_t>(std::llround(doc["bot_likelihood_percent"].get<double>() * 10));
            out << u << ' ' << tenths / 10 << '.' << tenths % 10 << '\n';
          }
        } catch (const Error& e) {
          failed = true;
          err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        }
      }
      if (failed) throw Error(ErrorCode::kAccountNotFound, "some users could not be scored");
    };
  });

  // network
  std::vector<std::string> seeds;
  std::size_t depth = 1, max_nodes = 5000, iterations = 1000;
  fs::path gexf_path, network_json_path;
  std::string edge_color = "source", centrality_mode = "out";
  bool barnes_hut = false;
  std::uint64_t layout_seed = 1;
  auto* network = app.add_subcommand("network", "Engagement network around seed posts (GEXF + JSON)");
  network->add_option("--store", store_dir, "Store directory")->required();
  network->add_option("--seeds", seeds, "Seed post ids")->delimiter(',');
  network->add_option("--depth", depth, "Expansion hops");
  network->add_option("--max-nodes", max_nodes, "Keep the most central nodes")->check(CLI::PositiveNumber);
  network->add_option("--iterations", iterations, "Layout iterations");
  network->add_option("--edge-color", edge_color, "source or target")->check(CLI::IsMember({"source", "target"}));
  network->add_option("--centrality", centrality_mode, "out, in or undirected")
      ->check(CLI::IsMember({"out", "in", "undirected"}));
  network->add_flag("--barnes-hut", barnes_hut, "Approximate repulsion");
  network->add_option("--seed", layout_seed, "Layout seed");
  network->add_option("--gexf", gexf_path, "GEXF output path");
  network->add_option("--json-out", network_json_path, "JSON output path");
  network->add_option("--config", heuristic_path, "Heuristic config for bot flags");
  network->callback([&] {
    action = [&] {
      const auto store = corpus::CorpusStore::open(store_dir);
      const auto config = heuristic_path.empty() ? heuristic::HeuristicConfig::defaults()
                                                 : heuristic::HeuristicConfig::load(heuristic_path);
      const auto posts = store.all_posts();
      std::set<std::string> filter;
      if (!seeds.empty()) {
        const auto reached = graph::seed_expand(posts, seeds, depth);
        filter.insert(reached.begin(), reached.end());
      }
      auto g = graph::build(posts, seeds.empty() ? nullptr : &filter);

      std::set<std::string> bots;
      const auto verdicts = heuristic::classify_store(store, config);
      for (const auto& v : verdicts)
        if (v.is_bot) bots.insert(v.username);
      const auto edge_source = edge_color == "target" ? graph::EdgeColorSource::kTarget : graph::EdgeColorSource::kSource;
      auto coloring = graph::classify_exposure(g, graph::flags_for(g, bots), edge_source);
      graph::CentralityOptions copts;
      copts.mode = centrality_mode == "in"           ? graph::CentralityMode::kIn
                   : centrality_mode == "undirected" ? graph::CentralityMode::kUndirected
                                                     : graph::CentralityMode::kOut;
      std::vector<double> centrality;
      if (g.num_edges() > 0) {
        auto c = graph::eigenvector_centrality(g, copts);
        if (!c.converged) err << "warning: centrality did not converge (residual " << c.residual << ")\n";
        centrality = std::move(c.scores);
      }
      auto slice = graph::keep_most_central(std::move(g), std::move(coloring), std::move(centrality), max_nodes,
                                            edge_source);
      layout::Fa2Params params;
      params.seed = layout_seed;
      params.barnes_hut = barnes_hut;
      const auto positions = layout::layout_fa2(slice.graph, iterations, params);
      exporting::NetworkView view{&slice.graph, &slice.coloring, &positions, &slice.centrality, slice.truncated};
      if (!gexf_path.empty()) detail::write_file(gexf_path, exporting::export_gexf(view));
      if (!network_json_path.empty()) detail::write_file(network_json_path, exporting::export_json(view).dump() + "\n");
      std::size_t red = 0;
      for (auto c : slice.coloring.nodes) red += c == graph::Color::kRed ? 1 : 0;
      out << "nodes " << slice.graph.num_nodes() << " edges " << slice.graph.num_edges() << " red " << red
          << (slice.truncated ? " truncated" : "") << '\n';
    };
  });

  // serve
  service::ServiceConfig serve_cfg;
  serve_cfg.apply_env();
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--model", serve_cfg.model_path, "Model bundle (ENTENDRE_MODEL)");
  serve->add_option("--store", serve_cfg.store_path, "Store directory (ENTENDRE_STORE)");
  serve->add_option("--connector", serve_cfg.connector, "archive or remote:<url>[,timeout=<s>] (ENTENDRE_CONNECTOR)");
  serve->add_option("--host", serve_cfg.host, "Listen address");
  serve->add_option("--port", serve_cfg.port, "Listen port (ENTENDRE_PORT); 0 picks a free port");
  serve->add_option("--cors-origin", serve_cfg.cors_origin, "Allowed UI origin");
  serve->add_option("--max-batch", serve_cfg.max_batch)->check(CLI::PositiveNumber);
  serve->add_option("--max-network-nodes", serve_cfg.max_network_nodes)->check(CLI::PositiveNumber);
  serve->callback([&] {
    action = [&] {
      service::Service svc(serve_cfg);
      httplib::Server server;
      detail::g_server = &server;
      std::signal(SIGINT, detail::stop_server);
      std::signal(SIGTERM, detail::stop_server);
      try {
        svc.run(server, [&](int port) { err << "listening on " << serve_cfg.host << ':' << port << std::endl; });
      } catch (...) {
        detail::g_server = nullptr;
        throw;
      }
      detail::g_server = nullptr;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (action) action();
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace entendre::cli
