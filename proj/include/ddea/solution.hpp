#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ddea/bitset.hpp"
#include "ddea/graph.hpp"
#include "ddea/rng.hpp"

namespace ddea {

/// Per-vertex probability vector in [0,1]^n.
struct Heatmap {
  std::vector<double> probs;

  int size() const { return static_cast<int>(probs.size()); }

  void validate() const {
    for (double p : probs)
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw std::invalid_argument("Heatmap: entry outside [0,1]");
  }
};

/// Feasible independent set as an incidence vector with cached size.
class Solution {
 public:
  Solution() = default;
  explicit Solution(Bitset bits) : bits_(std::move(bits)), size_(bits_.count()) {}

  const Bitset& bits() const { return bits_; }
  int size() const { return size_; }
  int num_vertices() const { return bits_.size(); }
  bool contains(int v) const { return bits_.test(v); }
  std::string to_string() const { return bits_.to_string(); }

  static Solution from_string(const std::string& s) { return Solution(Bitset::from_string(s)); }

  friend bool operator==(const Solution& a, const Solution& b) { return a.bits_ == b.bits_; }

 private:
  Bitset bits_;
  int size_ = 0;
};

struct SolutionHash {
  std::size_t operator()(const Solution& s) const { return s.bits().hash(); }
};

inline bool is_independent(const Graph& g, const Bitset& bits) {
  bool ok = true;
  bits.for_each([&](int v) {
    if (ok && bits.intersects(g.neighbors(v))) ok = false;
  });
  return ok;
}

/// Every unselected vertex has a selected neighbor.
inline bool is_maximal(const Graph& g, const Bitset& bits) {
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (bits.test(v)) continue;
    if (!bits.intersects(g.neighbors(v))) return false;
  }
  return true;
}

inline bool is_feasible(const Graph& g, const Solution& s) {
  return s.num_vertices() == g.num_vertices() && is_independent(g, s.bits());
}

/// Greedy decoding: visit vertices in descending probability (ties shuffled by
/// tie_seed), include each still-eligible vertex and mark its neighbors
/// ineligible. Output is always a feasible, maximal independent set.
inline Solution decode(const Graph& g, const Heatmap& p, std::uint64_t tie_seed) {
  const int n = g.num_vertices();
  if (p.size() != n) throw std::invalid_argument("decode: heatmap length mismatch");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng tie(derive_seed(tie_seed, Stream::kTieBreak));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[tie.below(static_cast<std::uint64_t>(i) + 1)]);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return p.probs[a] > p.probs[b]; });

  Bitset eligible(n);
  eligible.set_all();
  Bitset chosen(n);
  for (int v : order) {
    if (!eligible.test(v)) continue;
    chosen.set(v);
    eligible.subtract(g.neighbors(v));
    eligible.reset(v);
  }
  return Solution(std::move(chosen));
}

/// Mutation: selected vertices are deselected with probability p_d (forced to
/// probability 0) or retained (forced to 1); unselected vertices get a fresh
/// U(0,1) entry. The vector is then decoded.
inline Solution mutate(const Graph& g, const Solution& x, double p_d, std::uint64_t seed) {
  const int n = g.num_vertices();
  Rng rng(derive_seed(seed, Stream::kMutation));
  Heatmap q;
  q.probs.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.unit();
    if (x.contains(i))
      q.probs[i] = (u < p_d) ? 0.0 : 1.0;
    else
      q.probs[i] = u;
  }
  return decode(g, q, derive_seed(seed, Stream::kMutation, 1));
}

inline int objective(const Solution& x) { return x.size(); }

/// Percent gap to the best-known solution size.
inline double gap_percent(double sol_size, double bks_size) {
  if (bks_size < 1.0) throw std::invalid_argument("gap_percent: bks_size must be >= 1");
  return 100.0 * (bks_size - sol_size) / bks_size;
}

}  // namespace ddea
