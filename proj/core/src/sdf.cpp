#include <charconv>
#include <string>

#include "backdiff/error.hpp"
#include "backdiff/io.hpp"

namespace backdiff {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Fixed-width field [col, col + width), clipped to the line.
std::string_view field(std::string_view line, std::size_t col, std::size_t width) {
  if (col >= line.size()) return {};
  return line.substr(col, width);
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

struct Lines {
  std::vector<std::string_view> text;
  explicit Lines(std::string_view bytes) {
    std::size_t pos = 0;
    while (pos < bytes.size()) {
      const auto eol = bytes.find('\n', pos);
      if (eol == std::string_view::npos) {
        text.push_back(bytes.substr(pos));
        break;
      }
      text.push_back(bytes.substr(pos, eol - pos));
      pos = eol + 1;
    }
  }
};

struct Skip {
  std::size_t line;
  std::string reason;
};

constexpr int kMaxAtoms = 999;

}  // namespace

SdfResult parse_sdf_subset(std::string_view bytes, const ValenceTable& vt, const SdfOptions& options) {
  const Lines lines(bytes);
  const auto& L = lines.text;
  SdfResult out;

  // Edge type per V2000 bond order 1..4; -1 when unsupported.
  const char* bond_names[] = {"single", "double", "triple", "aromatic"};
  int bond_type[4];
  for (int k = 0; k < 4; ++k) {
    bond_type[k] = -1;
    for (int e = 1; e < std::min(vt.edge_types(), options.edge_types); ++e) {
      if (vt.edge_name(e) == bond_names[k]) bond_type[k] = e;
    }
  }

  std::size_t pos = 0;
  std::size_t record = 0;
  while (pos < L.size()) {
    // Skip blank separator lines between records.
    if (trim(L[pos]).empty()) {
      ++pos;
      continue;
    }
    const std::size_t start = pos;
    std::size_t end = pos;
    while (end < L.size() && trim(L[end]) != "$$$$") ++end;
    const std::size_t next = end < L.size() ? end + 1 : end;

    const auto structural = [&](ErrorCode code, std::size_t line_idx, const std::string& why) {
      if (options.strict) throw ParseError(code, line_idx + 1, why);
      out.skipped.push_back({record, line_idx + 1, why});
    };
    const auto skip = [&](std::size_t line_idx, const std::string& why) {
      out.skipped.push_back({record, line_idx + 1, why});
    };

    [&] {
      const std::size_t counts = start + 3;
      if (counts >= end) {
        structural(ErrorCode::TruncatedBlock, std::min(counts, end == 0 ? 0 : end - 1),
                   "record ends before the counts line");
        return;
      }
      const std::string_view cl = L[counts];
      int atoms = 0, bonds = 0;
      if (!parse_int(field(cl, 0, 3), atoms) || !parse_int(field(cl, 3, 3), bonds) || atoms < 0 || bonds < 0 ||
          atoms > kMaxAtoms || bonds > kMaxAtoms) {
        structural(ErrorCode::MalformedCountsLine, counts, "malformed counts line");
        return;
      }
      if (cl.find("V3000") != std::string_view::npos) {
        skip(counts, "V3000 records are not supported");
        return;
      }
      const std::size_t atom0 = counts + 1;
      const std::size_t bond0 = atom0 + static_cast<std::size_t>(atoms);
      if (bond0 + static_cast<std::size_t>(bonds) > end) {
        structural(ErrorCode::TruncatedBlock, end == 0 ? 0 : end - 1, "atom or bond block truncated");
        return;
      }

      // Heavy-atom index for each atom; -1 for hydrogens.
      std::vector<int> heavy(static_cast<std::size_t>(atoms), -1);
      std::vector<int> types;
      for (int a = 0; a < atoms; ++a) {
        const std::size_t li = atom0 + static_cast<std::size_t>(a);
        const std::string_view sym = trim(field(L[li], 31, 3));
        if (sym.empty()) {
          skip(li, "missing element symbol");
          return;
        }
        if (sym == "H" || sym == "D") continue;
        const int t = vt.node_index(sym);
        if (t < 0) {
          skip(li, "unsupported element '" + std::string(sym) + "'");
          return;
        }
        heavy[static_cast<std::size_t>(a)] = static_cast<int>(types.size());
        types.push_back(t);
      }
      if (types.empty()) {
        skip(atom0, "no heavy atoms");
        return;
      }
      Graph g(static_cast<int>(types.size()), vt.node_types(), options.edge_types);
      for (std::size_t i = 0; i < types.size(); ++i) g.set_node(static_cast<int>(i), types[i]);
      for (int b = 0; b < bonds; ++b) {
        const std::size_t li = bond0 + static_cast<std::size_t>(b);
        int x = 0, y = 0, order = 0;
        if (!parse_int(field(L[li], 0, 3), x) || !parse_int(field(L[li], 3, 3), y) ||
            !parse_int(field(L[li], 6, 3), order)) {
          skip(li, "malformed bond line");
          return;
        }
        if (x < 1 || y < 1 || x > atoms || y > atoms || x == y) {
          skip(li, "bond references a missing atom");
          return;
        }
        const int hx = heavy[static_cast<std::size_t>(x - 1)];
        const int hy = heavy[static_cast<std::size_t>(y - 1)];
        if (hx < 0 || hy < 0) continue;
        if (order < 1 || order > 4 || bond_type[order - 1] < 0) {
          skip(li, "unsupported bond order " + std::to_string(order));
          return;
        }
        if (g.edge(hx, hy) != kNoEdge) {
          skip(li, "duplicate bond");
          return;
        }
        g.set_edge(hx, hy, bond_type[order - 1]);
      }
      out.graphs.push_back(std::move(g));
    }();

    pos = next;
    ++record;
  }
  return out;
}

}  // namespace backdiff
