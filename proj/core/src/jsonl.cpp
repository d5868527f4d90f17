#include <istream>
#include <sstream>

#include <json.hpp>

#include "backdiff/error.hpp"
#include "backdiff/io.hpp"

namespace backdiff {

namespace {
constexpr const char* kGraphSchema = "backdiff.graph.v1";
}

std::string to_jsonl_line(const Graph& g, std::string_view meta_json) {
  nlohmann::ordered_json j;
  j["schema"] = kGraphSchema;
  j["n"] = g.n();
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i < g.n(); ++i) nodes.push_back(g.node(i));
  j["nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < g.n(); ++i)
    for (int k = i + 1; k < g.n(); ++k)
      if (g.edge(i, k) != kNoEdge) edges.push_back({i, k, g.edge(i, k)});
  j["edges"] = std::move(edges);
  if (!meta_json.empty()) j["meta"] = nlohmann::json::parse(meta_json);
  return j.dump();
}

GraphRecord parse_jsonl_line(std::string_view line, int node_types, int edge_types, std::size_t line_no) {
  const auto bad = [&](const std::string& what) { throw ParseError(ErrorCode::BadRecord, line_no, what); };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("record is not an object");
  if (j.contains("schema") && j["schema"] != kGraphSchema) bad("unsupported schema");
  if (!j.contains("n") || !j["n"].is_number_integer()) bad("missing integer 'n'");
  const auto n64 = j["n"].get<std::int64_t>();
  if (n64 < 0 || n64 > 4096) bad("'n' out of range");
  const int n = static_cast<int>(n64);
  if (!j.contains("nodes") || !j["nodes"].is_array()) bad("missing array 'nodes'");
  const auto& nodes = j["nodes"];
  if (static_cast<std::int64_t>(nodes.size()) != n) bad("'nodes' length differs from 'n'");

  GraphRecord rec;
  rec.graph = Graph(n, node_types, edge_types);
  for (int i = 0; i < n; ++i) {
    const auto& v = nodes[static_cast<std::size_t>(i)];
    if (!v.is_number_integer()) bad("node type is not an integer");
    const auto t = v.get<std::int64_t>();
    if (t < 0 || t >= node_types) bad("node type " + std::to_string(t) + " out of range");
    rec.graph.set_node(i, static_cast<int>(t));
  }
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) bad("'edges' is not an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
          !e[2].is_number_integer()) {
        bad("edge is not an [i, j, type] triple");
      }
      const auto a = e[0].get<std::int64_t>();
      const auto b = e[1].get<std::int64_t>();
      const auto t = e[2].get<std::int64_t>();
      if (!(0 <= a && a < b && b < n)) bad("edge endpoints must satisfy 0 <= i < j < n");
      if (t < 0 || t >= edge_types) bad("edge type " + std::to_string(t) + " out of range");
      if (rec.graph.edge(static_cast<int>(a), static_cast<int>(b)) != kNoEdge) bad("duplicate edge");
      rec.graph.set_edge(static_cast<int>(a), static_cast<int>(b), static_cast<int>(t));
    }
  }
  if (j.contains("meta")) rec.meta_json = j["meta"].dump();
  return rec;
}

std::vector<GraphRecord> read_jsonl(std::istream& in, int node_types, int edge_types) {
  std::vector<GraphRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_jsonl_line(line, node_types, edge_types, line_no));
  }
  return out;
}

std::vector<Graph> read_jsonl_graphs(const std::filesystem::path& path, int node_types, int edge_types) {
  std::istringstream in(read_file(path));
  std::vector<Graph> out;
  for (auto& r : read_jsonl(in, node_types, edge_types)) out.push_back(std::move(r.graph));
  return out;
}

std::string jsonl_text(std::span<const Graph> graphs) {
  std::string out;
  for (const auto& g : graphs) {
    out += to_jsonl_line(g);
    out += '\n';
  }
  return out;
}

}  // namespace backdiff
