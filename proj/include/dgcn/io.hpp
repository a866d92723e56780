#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dgcn/dense.hpp"
#include "dgcn/error.hpp"
#include "dgcn/graph.hpp"
#include "dgcn/sparse.hpp"

namespace dgcn {

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline std::size_t parse_index(const std::string& tok, std::size_t line_no) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
  }
  if (pos != tok.size() || tok.empty() || tok[0] == '-')
    throw ParseError("line " + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
  return static_cast<std::size_t>(v);
}

inline double parse_real(const std::string& tok, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": expected number, got '" + tok + "'");
  }
  if (pos != tok.size() || tok.empty())
    throw ParseError("line " + std::to_string(line_no) + ": expected number, got '" + tok + "'");
  return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graph file: first line "# nodes=N"; body "src<TAB>dst[<TAB>weight]",
// weight defaults to 1.0; further lines starting '#' are ignored.
// ---------------------------------------------------------------------------

inline DirectedGraph load_graph(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0].rfind("# nodes=", 0) != 0)
    throw ParseError(path + ": first line must be '# nodes=N'");
  const std::size_t n = detail::parse_index(lines[0].substr(8), 1);
  std::vector<Triplet> triplets;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2 && fields.size() != 3)
      throw ParseError("line " + std::to_string(li + 1) + ": expected 2 or 3 fields, got " +
                       std::to_string(fields.size()));
    const std::size_t src = detail::parse_index(fields[0], li + 1);
    const std::size_t dst = detail::parse_index(fields[1], li + 1);
    if (src >= n || dst >= n)
      throw BoundsError("line " + std::to_string(li + 1) + ": node id >= declared n=" +
                        std::to_string(n));
    const double w = fields.size() == 3 ? detail::parse_real(fields[2], li + 1) : 1.0;
    if (w < 0.0)
      throw DomainError("line " + std::to_string(li + 1) + ": negative weight " +
                        format_double(w));
    triplets.push_back({src, dst, w});
  }
  return DirectedGraph(n, SparseMatrix::from_triplets(n, n, triplets));
}

/// Canonical form: sorted edges, explicit weights at 17 significant digits.
/// extra_header lines (already '#'-prefixed) follow the required first line.
inline void save_graph(const SparseMatrix& m, const std::string& path,
                       const std::vector<std::string>& extra_header = {}) {
  auto out = detail::open_out(path);
  if (m.n_rows != m.n_cols) throw DomainError("save_graph: matrix not square");
  out << "# nodes=" << m.n_rows << "\n";
  for (const std::string& h : extra_header) out << h << "\n";
  for (std::size_t i = 0; i < m.n_rows; ++i)
    for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
      out << i << '\t' << m.col_indices[k] << '\t' << format_double(m.values[k]) << "\n";
}

inline void save_graph(const DirectedGraph& g, const std::string& path,
                       const std::vector<std::string>& extra_header = {}) {
  save_graph(g.adjacency, path, extra_header);
}

// ---------------------------------------------------------------------------
// Feature file: first line "# nodes=N dims=C"; body "node<TAB>dim<TAB>value".
// Unmentioned entries are 0.
// ---------------------------------------------------------------------------

inline DenseMatrix load_features(const std::string& path, std::size_t n_nodes) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0].rfind("# nodes=", 0) != 0)
    throw ParseError(path + ": first line must be '# nodes=N dims=C'");
  std::istringstream hs(lines[0].substr(2));
  std::string nodes_tok, dims_tok;
  hs >> nodes_tok >> dims_tok;
  if (nodes_tok.rfind("nodes=", 0) != 0 || dims_tok.rfind("dims=", 0) != 0)
    throw ParseError(path + ": first line must be '# nodes=N dims=C'");
  const std::size_t n = detail::parse_index(nodes_tok.substr(6), 1);
  const std::size_t dims = detail::parse_index(dims_tok.substr(5), 1);
  if (n != n_nodes)
    throw BoundsError(path + ": header declares " + std::to_string(n) + " nodes, expected " +
                      std::to_string(n_nodes));
  DenseMatrix x(n, dims);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 3)
      throw ParseError("line " + std::to_string(li + 1) + ": expected 3 fields");
    const std::size_t node = detail::parse_index(fields[0], li + 1);
    const std::size_t dim = detail::parse_index(fields[1], li + 1);
    if (node >= n)
      throw BoundsError("line " + std::to_string(li + 1) + ": node id >= " + std::to_string(n));
    if (dim >= dims)
      throw BoundsError("line " + std::to_string(li + 1) + ": dim >= declared dims=" +
                        std::to_string(dims));
    x(node, dim) = detail::parse_real(fields[2], li + 1);
  }
  if (!x.all_finite()) throw DomainError(path + ": non-finite feature value");
  return x;
}

inline void save_features(const DenseMatrix& x, const std::string& path,
                          const std::vector<std::string>& extra_header = {}) {
  auto out = detail::open_out(path);
  out << "# nodes=" << x.n_rows << " dims=" << x.n_cols << "\n";
  for (const std::string& h : extra_header) out << h << "\n";
  for (std::size_t i = 0; i < x.n_rows; ++i)
    for (std::size_t j = 0; j < x.n_cols; ++j)
      if (x(i, j) != 0.0)
        out << i << '\t' << j << '\t' << format_double(x(i, j)) << "\n";
}

// ---------------------------------------------------------------------------
// Label file: "node<TAB>class_id" lines; nodes absent stay unlabeled;
// n_classes = 1 + max class id. Duplicate node lines are a format error.
// ---------------------------------------------------------------------------

inline LabelVector load_labels(const std::string& path, std::size_t n_nodes) {
  const auto lines = detail::read_lines(path);
  LabelVector y;
  y.labels.assign(n_nodes, kUnlabeled);
  int max_class = -1;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2)
      throw ParseError("line " + std::to_string(li + 1) + ": expected 2 fields");
    const std::size_t node = detail::parse_index(fields[0], li + 1);
    const std::size_t cls = detail::parse_index(fields[1], li + 1);
    if (node >= n_nodes)
      throw BoundsError("line " + std::to_string(li + 1) + ": node id >= " +
                        std::to_string(n_nodes));
    if (y.labels[node] != kUnlabeled)
      throw ParseError("line " + std::to_string(li + 1) + ": duplicate label for node " +
                       std::to_string(node));
    y.labels[node] = static_cast<int>(cls);
    max_class = std::max(max_class, static_cast<int>(cls));
  }
  y.n_classes = max_class + 1;
  return y;
}

inline void save_labels(const LabelVector& y, const std::string& path,
                        const std::vector<std::string>& extra_header = {}) {
  auto out = detail::open_out(path);
  for (const std::string& h : extra_header) out << h << "\n";
  for (std::size_t i = 0; i < y.labels.size(); ++i)
    if (y.labels[i] != kUnlabeled) out << i << '\t' << y.labels[i] << "\n";
}

// ---------------------------------------------------------------------------
// Split file: "node<TAB>{train|val|test}" lines.
// ---------------------------------------------------------------------------

enum class SplitPart { train, val, test };

inline void save_split(const std::vector<std::size_t>& train, const std::vector<std::size_t>& val,
                       const std::vector<std::size_t>& test, const std::string& path,
                       const std::vector<std::string>& extra_header = {}) {
  auto out = detail::open_out(path);
  for (const std::string& h : extra_header) out << h << "\n";
  for (std::size_t n : train) out << n << "\ttrain\n";
  for (std::size_t n : val) out << n << "\tval\n";
  for (std::size_t n : test) out << n << "\ttest\n";
}

inline void load_split(const std::string& path, std::vector<std::size_t>& train,
                       std::vector<std::size_t>& val, std::vector<std::size_t>& test) {
  train.clear();
  val.clear();
  test.clear();
  const auto lines = detail::read_lines(path);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2)
      throw ParseError("line " + std::to_string(li + 1) + ": expected 2 fields");
    const std::size_t node = detail::parse_index(fields[0], li + 1);
    if (fields[1] == "train")
      train.push_back(node);
    else if (fields[1] == "val")
      val.push_back(node);
    else if (fields[1] == "test")
      test.push_back(node);
    else
      throw ParseError("line " + std::to_string(li + 1) + ": unknown part '" + fields[1] + "'");
  }
}

// ---------------------------------------------------------------------------
// Dense-matrix export: first line "# rows=R cols=C"; one row per line,
// tab-separated, 17 significant digits.
// ---------------------------------------------------------------------------

inline void save_dense(const DenseMatrix& m, const std::string& path,
                       const std::vector<std::string>& extra_header = {}) {
  auto out = detail::open_out(path);
  out << "# rows=" << m.n_rows << " cols=" << m.n_cols << "\n";
  for (const std::string& h : extra_header) out << h << "\n";
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      if (j) out << '\t';
      out << format_double(m(i, j));
    }
    out << "\n";
  }
}

inline DenseMatrix load_dense(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0].rfind("# rows=", 0) != 0)
    throw ParseError(path + ": first line must be '# rows=R cols=C'");
  std::istringstream hs(lines[0].substr(2));
  std::string rows_tok, cols_tok;
  hs >> rows_tok >> cols_tok;
  if (rows_tok.rfind("rows=", 0) != 0 || cols_tok.rfind("cols=", 0) != 0)
    throw ParseError(path + ": first line must be '# rows=R cols=C'");
  const std::size_t rows = detail::parse_index(rows_tok.substr(5), 1);
  const std::size_t cols = detail::parse_index(cols_tok.substr(5), 1);
  DenseMatrix m(rows, cols);
  std::size_t r = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    if (r >= rows) throw ParseError(path + ": more data rows than declared");
    const auto fields = detail::split_tabs(line);
    if (fields.size() != cols)
      throw ParseError("line " + std::to_string(li + 1) + ": expected " + std::to_string(cols) +
                       " values, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < cols; ++j) m(r, j) = detail::parse_real(fields[j], li + 1);
    ++r;
  }
  if (r != rows) throw ParseError(path + ": fewer data rows than declared");
  return m;
}

// ---------------------------------------------------------------------------
// Checkpoint: "# meta <key=value...>" line, then per-parameter blocks
// "# layer=<name> rows=R cols=C" followed by R dense rows.
// ---------------------------------------------------------------------------

struct NamedMatrix {
  std::string name;
  DenseMatrix m;
};

inline void save_checkpoint(const std::string& meta, const std::vector<NamedMatrix>& blocks,
                            const std::string& path,
                            const std::vector<std::string>& extra_header = {}) {
  auto out = detail::open_out(path);
  for (const std::string& h : extra_header) out << h << "\n";
  out << "# meta " << meta << "\n";
  for (const NamedMatrix& b : blocks) {
    out << "# layer=" << b.name << " rows=" << b.m.n_rows << " cols=" << b.m.n_cols << "\n";
    for (std::size_t i = 0; i < b.m.n_rows; ++i) {
      for (std::size_t j = 0; j < b.m.n_cols; ++j) {
        if (j) out << '\t';
        out << format_double(b.m(i, j));
      }
      out << "\n";
    }
  }
}

struct Checkpoint {
  std::string meta;
  std::vector<NamedMatrix> blocks;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  const auto lines = detail::read_lines(path);
  Checkpoint ck;
  std::size_t li = 0;
  while (li < lines.size()) {
    const std::string& line = lines[li];
    if (line.rfind("# meta ", 0) == 0) {
      ck.meta = line.substr(7);
      ++li;
    } else if (line.rfind("# layer=", 0) == 0) {
      std::istringstream hs(line.substr(2));
      std::string layer_tok, rows_tok, cols_tok;
      hs >> layer_tok >> rows_tok >> cols_tok;
      if (layer_tok.rfind("layer=", 0) != 0 || rows_tok.rfind("rows=", 0) != 0 ||
          cols_tok.rfind("cols=", 0) != 0)
        throw ParseError("line " + std::to_string(li + 1) + ": malformed layer header");
      NamedMatrix b;
      b.name = layer_tok.substr(6);
      const std::size_t rows = detail::parse_index(rows_tok.substr(5), li + 1);
      const std::size_t cols = detail::parse_index(cols_tok.substr(5), li + 1);
      b.m = DenseMatrix(rows, cols);
      ++li;
      for (std::size_t r = 0; r < rows; ++r, ++li) {
        if (li >= lines.size())
          throw ParseError(path + ": truncated block '" + b.name + "'");
        const auto fields = detail::split_tabs(lines[li]);
        if (fields.size() != cols)
          throw ParseError("line " + std::to_string(li + 1) + ": expected " +
                           std::to_string(cols) + " values");
        for (std::size_t j = 0; j < cols; ++j) b.m(r, j) = detail::parse_real(fields[j], li + 1);
      }
      ck.blocks.push_back(std::move(b));
    } else if (line.empty() || line[0] == '#') {
      ++li;
    } else {
      throw ParseError("line " + std::to_string(li + 1) + ": unexpected content");
    }
  }
  return ck;
}

}  // namespace dgcn
