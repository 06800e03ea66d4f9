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

// Network documents: GEXF 1.2 for graph tools, JSON for the web UI.

#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "entendre/graph.hpp"
#include "entendre/layout.hpp"
#include "json.hpp"

namespace entendre::exporting {

using Json = nlohmann::json;

/// Everything a network document needs, one entry per node / edge.
struct NetworkView {
  const graph::EngagementGraph* graph = nullptr;
  const graph::ExposureColoring* coloring = nullptr;
  const layout::LayoutState* layout = nullptr;
  const std::vector<double>* centrality = nullptr;  // may be empty when the graph has no edges
  bool truncated = false;

  void check() const {
    const std::size_t n = graph->num_nodes();
    if (coloring->nodes.size() != n || coloring->edges.size() != graph->num_edges() ||
        layout->positions.size() != n || (!centrality->empty() && centrality->size() != n))
      throw Error(ErrorCode::kInvalidConfig, "network view inputs must cover every node and edge");
  }
  double centrality_of(std::size_t i) const { return centrality->empty() ? 0.0 : (*centrality)[i]; }
};

struct Rgb {
  int r, g, b;
};

inline Rgb rgb(graph::Color c) { return c == graph::Color::kRed ? Rgb{255, 0, 0} : Rgb{0, 0, 255}; }

inline std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Shortest round-trip decimal for a double.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string export_gexf(const NetworkView& v) {
  v.check();
  const auto& g = *v.graph;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<gexf xmlns=\"http://gexf.net/1.2draft\" xmlns:viz=\"http://gexf.net/1.2draft/viz\" "
         "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
         "xsi:schemaLocation=\"http://gexf.net/1.2draft http://gexf.net/1.2draft/gexf.xsd\" version=\"1.2\">\n"
         "  <meta>\n    <creator>entendre</creator>\n  </meta>\n"
         "  <graph mode=\"static\" defaultedgetype=\"directed\">\n"
         "    <attributes class=\"node\">\n"
         "      <attribute id=\"0\" title=\"centrality\" type=\"double\"/>\n"
         "      <attribute id=\"1\" title=\"exposure\" type=\"string\"/>\n"
         "    </attributes>\n"
         "    <nodes>\n";
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const std::string id = xml_escape(g.name(i));
    const Rgb c = rgb(v.coloring->nodes[i]);
    const auto& p = v.layout->positions[i];
    out << "      <node id=\"" << id << "\" label=\"" << id << "\">\n"
        << "        <attvalues>\n"
        << "          <attvalue for=\"0\" value=\"" << fmt_double(v.centrality_of(i)) << "\"/>\n"
        << "          <attvalue for=\"1\" value=\"" << graph::to_string(v.coloring->nodes[i]) << "\"/>\n"
        << "        </attvalues>\n"
        << "        <viz:color r=\"" << c.r << "\" g=\"" << c.g << "\" b=\"" << c.b << "\"/>\n"
        << "        <viz:position x=\"" << fmt_double(p.x) << "\" y=\"" << fmt_double(p.y) << "\" z=\"0.0\"/>\n"
        << "      </node>\n";
  }
  out << "    </nodes>\n    <edges>\n";
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edges()[k];
    const Rgb c = rgb(v.coloring->edges[k]);
    out << "      <edge id=\"" << k << "\" source=\"" << xml_escape(g.name(e.source)) << "\" target=\""
        << xml_escape(g.name(e.target)) << "\" weight=\"" << e.weight << "\">\n"
        << "        <viz:color r=\"" << c.r << "\" g=\"" << c.g << "\" b=\"" << c.b << "\"/>\n"
        << "      </edge>\n";
  }
  out << "    </edges>\n  </graph>\n</gexf>\n";
  return out.str();
}

inline Json export_json(const NetworkView& v) {
  v.check();
  const auto& g = *v.graph;
  Json doc;
  doc["nodes"] = Json::array();
  doc["edges"] = Json::array();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto& p = v.layout->positions[i];
    doc["nodes"].push_back({{"id", g.name(i)},
                            {"color", graph::to_string(v.coloring->nodes[i])},
                            {"x", p.x},
                            {"y", p.y},
                            {"centrality", v.centrality_of(i)}});
  }
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const auto& e = g.edges()[k];
    doc["edges"].push_back({{"source", g.name(e.source)},
                            {"target", g.name(e.target)},
                            {"weight", e.weight},
                            {"color", graph::to_string(v.coloring->edges[k])}});
  }
  doc["truncated"] = v.truncated;
  return doc;
}

}  // namespace entendre::exporting
