#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "backdiff/graph.hpp"
#include "backdiff/valence.hpp"

namespace backdiff {

// ---- JSONL graph records -------------------------------------------------
//
// {"schema": "backdiff.graph.v1", "n": 3, "nodes": [0, 0, 2],
//  "edges": [[0, 1, 1], [1, 2, 2]], "meta": {...}}
// Absent pairs are no-edge; every triple has i < j.

struct GraphRecord {
  Graph graph;
  std::string meta_json;  // serialized "meta" object, empty when absent
};

std::string to_jsonl_line(const Graph& g, std::string_view meta_json = {});
GraphRecord parse_jsonl_line(std::string_view line, int node_types, int edge_types, std::size_t line_no = 1);

std::vector<GraphRecord> read_jsonl(std::istream& in, int node_types, int edge_types);
std::vector<Graph> read_jsonl_graphs(const std::filesystem::path& path, int node_types, int edge_types);
std::string jsonl_text(std::span<const Graph> graphs);

// ---- SDF V2000 subset ----------------------------------------------------

struct SdfSkip {
  std::size_t record = 0;  // 0-based record index
  std::size_t line = 0;    // 1-based line of the problem
  std::string reason;
};

struct SdfResult {
  std::vector<Graph> graphs;
  std::vector<SdfSkip> skipped;
};

struct SdfOptions {
  // Element symbol -> node type comes from the valence table; hydrogens are
  // always dropped. Bond orders 1/2/3/4 map to edge types "single", "double",
  // "triple", "aromatic" when the table has them.
  int edge_types = 4;  // graphs are built with this many edge types
  // Strict: structural damage (bad counts line, truncated block) throws.
  // Lenient: such records are skipped and reported.
  bool strict = true;
};

SdfResult parse_sdf_subset(std::string_view bytes, const ValenceTable& vt, const SdfOptions& options = {});

// ---- Toy molecules -------------------------------------------------------

// Connected, valence-valid molecules over the organic table with sizes in
// [2, max_n] (weighted toward larger graphs) and edge types
// none/single/double/triple.
std::vector<Graph> generate_toy_dataset(int count, int max_n, const ValenceTable& vt, std::uint64_t seed);

bool is_connected(const Graph& g);

// ---- Files ---------------------------------------------------------------

// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace backdiff
