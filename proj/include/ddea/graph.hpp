#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ddea/bitset.hpp"
#include "ddea/rng.hpp"

namespace ddea {

/// Undirected simple graph with per-vertex adjacency bitsets.
/// Immutable after construction; safe to share across threads.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  Graph() = default;

  Graph(int n, std::vector<Edge> edges) : n_(n), words_((n + 63) / 64) {
    if (n < 1) throw std::invalid_argument("Graph: vertex count must be >= 1");
    adj_.assign(static_cast<std::size_t>(n_) * words_, 0);
    degree_.assign(n_, 0);
    edges_.reserve(edges.size());
    for (auto [u, v] : edges) {
      if (u < 0 || u >= n_ || v < 0 || v >= n_)
        throw std::invalid_argument("Graph: vertex index out of range");
      if (u == v) throw std::invalid_argument("Graph: self-loop rejected");
      if (u > v) std::swap(u, v);
      if (has_edge(u, v)) throw std::invalid_argument("Graph: duplicate edge rejected");
      add_edge_unchecked(u, v);
    }
  }

  int num_vertices() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  int words_per_row() const { return words_; }

  bool has_edge(int u, int v) const {
    return (adj_[static_cast<std::size_t>(u) * words_ + (v >> 6)] >> (v & 63)) & 1ULL;
  }

  int degree(int v) const { return degree_[v]; }

  int max_degree() const {
    int d = 0;
    for (int v = 0; v < n_; ++v) d = std::max(d, degree_[v]);
    return d;
  }

  /// Adjacency row of v as a bitset over vertices (words_per_row() words).
  std::span<const std::uint64_t> neighbors(int v) const {
    return {adj_.data() + static_cast<std::size_t>(v) * words_,
            static_cast<std::size_t>(words_)};
  }

  const std::vector<Edge>& edges() const { return edges_; }

 private:
  void add_edge_unchecked(int u, int v) {
    adj_[static_cast<std::size_t>(u) * words_ + (v >> 6)] |= 1ULL << (v & 63);
    adj_[static_cast<std::size_t>(v) * words_ + (u >> 6)] |= 1ULL << (u & 63);
    ++degree_[u];
    ++degree_[v];
    edges_.emplace_back(u, v);
  }

  int n_ = 0;
  int words_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::uint64_t> adj_;
  std::vector<int> degree_;
};

/// Erdős–Rényi G(n, p). Every pair gets exactly one uniform draw, so the
/// edge set is a deterministic function of (n, p, seed).
inline Graph generate_er(int n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_er: n must be >= 1");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("generate_er: p must be in [0,1]");
  Rng rng(derive_seed(seed, Stream::kGraphGen));
  std::vector<Graph::Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.unit() < p) edges.emplace_back(u, v);
  return Graph(n, std::move(edges));
}

/// Parses DIMACS edge format: `p edge <n> <m>`, then `e <u> <v>` with 1-based
/// vertices. Lines starting with 'c' are comments.
inline Graph read_graph(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  int n = -1;
  long long m = -1;
  std::vector<Graph::Edge> edges;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == 'c') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "p") {
      if (n != -1)
        throw std::runtime_error("read_graph: duplicate header at line " + std::to_string(line_no));
      std::string fmt;
      ls >> fmt >> n >> m;
      if (!ls || fmt != "edge" || n < 1 || m < 0)
        throw std::runtime_error("read_graph: malformed header at line " + std::to_string(line_no));
    } else if (tag == "e") {
      if (n == -1) throw std::runtime_error("read_graph: edge before header");
      int u = 0, v = 0;
      ls >> u >> v;
      if (!ls)
        throw std::runtime_error("read_graph: malformed edge at line " + std::to_string(line_no));
      if (u < 1 || u > n || v < 1 || v > n)
        throw std::runtime_error("read_graph: vertex index out of range at line " +
                                 std::to_string(line_no));
      if (u == v)
        throw std::runtime_error("read_graph: self-loop at line " + std::to_string(line_no));
      edges.emplace_back(u - 1, v - 1);
    } else {
      throw std::runtime_error("read_graph: unknown line type '" + tag + "' at line " +
                               std::to_string(line_no));
    }
  }
  if (n == -1) throw std::runtime_error("read_graph: missing header");
  if (static_cast<long long>(edges.size()) != m)
    throw std::runtime_error("read_graph: header declares " + std::to_string(m) +
                             " edges, found " + std::to_string(edges.size()));
  try {
    return Graph(n, std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("read_graph: ") + e.what());
  }
}

inline std::string write_graph(const Graph& g) {
  std::ostringstream out;
  out << "p edge " << g.num_vertices() << ' ' << g.num_edges() << '\n';
  for (auto [u, v] : g.edges()) out << "e " << u + 1 << ' ' << v + 1 << '\n';
  return out.str();
}

inline Graph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_graph_file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_graph(buf.str());
}

inline void save_graph_file(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_graph_file: cannot open " + path);
  out << write_graph(g);
}

}  // namespace ddea
