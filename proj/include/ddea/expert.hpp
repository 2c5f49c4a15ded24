#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddea/graph.hpp"
#include "ddea/solution.hpp"

namespace ddea {

/// Number of differing bits between two incidence vectors.
inline int hamming(const Solution& a, const Solution& b) {
  if (a.num_vertices() != b.num_vertices())
    throw std::invalid_argument("hamming: length mismatch");
  return a.bits().hamming_distance(b.bits());
}

struct ExpertParams {
  double lambda = 1.75;
  double time_limit = 15.0;  // seconds, mirrors the 15 s ILP limit
  std::optional<long long> node_limit;
};

enum class SolveStatus { kOptimal, kFeasibleTimeout };

inline std::string to_string(SolveStatus s) {
  return s == SolveStatus::kOptimal ? "optimal" : "feasible-timeout";
}

inline SolveStatus solve_status_from_string(const std::string& s) {
  if (s == "optimal") return SolveStatus::kOptimal;
  if (s == "feasible-timeout") return SolveStatus::kFeasibleTimeout;
  throw std::invalid_argument("unknown solve status: " + s);
}

struct ExpertResult {
  Solution offspring;
  SolveStatus status = SolveStatus::kFeasibleTimeout;
  long long nodes = 0;
};

namespace detail {

// Branch-and-bound over vertex inclusion, maximizing |z| subject to
// independence and (optionally) a combined Hamming distance budget
// h(z,x) + h(z,y) <= budget. Bound: greedy clique cover of the free
// subgraph, intersected with a budget-slack cap. Branching: highest-degree
// free vertex, include branch first.
class MisBnb {
 public:
  MisBnb(const Graph& g, double time_limit, std::optional<long long> node_limit)
      : g_(g),
        n_(g.num_vertices()),
        words_(g.words_per_row()),
        node_limit_(node_limit.value_or(-1)),
        deadline_(std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(time_limit))) {
    cost_in_.assign(n_, 0);
    cost_out_.assign(n_, 0);
    cost_min_.assign(n_, 0);
  }

  void set_budget(const Solution& x, const Solution& y, int budget) {
    budget_mode_ = true;
    budget_ = budget;
    for (int i = 0; i < n_; ++i) {
      const int xi = x.contains(i) ? 1 : 0;
      const int yi = y.contains(i) ? 1 : 0;
      cost_in_[i] = (1 - xi) + (1 - yi);
      cost_out_[i] = xi + yi;
      cost_min_[i] = std::min(cost_in_[i], cost_out_[i]);
    }
  }

  void seed_incumbent(const Bitset& bits) {
    const int sz = bits.count();
    if (!has_incumbent_ || sz > best_size_) {
      best_ = bits;
      best_size_ = sz;
      has_incumbent_ = true;
    }
  }

  ExpertResult run() {
    Bitset free_set(n_);
    free_set.set_all();
    Bitset in(n_);
    int min_rest = 0;
    if (budget_mode_)
      for (int i = 0; i < n_; ++i) min_rest += cost_min_[i];
    branch(free_set, in, 0, 0, min_rest);
    ExpertResult r;
    r.offspring = Solution(best_);
    r.status = (stopped_ || !has_incumbent_) ? SolveStatus::kFeasibleTimeout
                                             : SolveStatus::kOptimal;
    r.nodes = nodes_;
    return r;
  }

  bool found_feasible() const { return has_incumbent_; }

 private:
  bool out_of_time() {
    if (stopped_) return true;
    if ((nodes_ & 1023) == 0 && std::chrono::steady_clock::now() > deadline_) stopped_ = true;
    if (node_limit_ >= 0 && nodes_ > node_limit_) stopped_ = true;
    return stopped_;
  }

  // Greedy clique cover of `mask`: each clique contributes at most one vertex
  // to any independent set.
  int clique_cover(const Bitset& mask) const {
    Bitset uncovered = mask;
    int cliques = 0;
    std::vector<std::uint64_t> cand(words_);
    while (uncovered.any()) {
      int v = first_bit(uncovered);
      uncovered.reset(v);
      ++cliques;
      auto row = g_.neighbors(v);
      auto uw = uncovered.words();
      for (int k = 0; k < words_; ++k) cand[k] = row[k] & uw[k];
      while (true) {
        int u = first_bit_words(cand);
        if (u < 0) break;
        uncovered.reset(u);
        auto urow = g_.neighbors(u);
        cand[u >> 6] &= ~(1ULL << (u & 63));
        for (int k = 0; k < words_; ++k) cand[k] &= urow[k];
      }
    }
    return cliques;
  }

  static int first_bit(const Bitset& b) {
    auto w = b.words();
    for (std::size_t k = 0; k < w.size(); ++k)
      if (w[k]) return static_cast<int>(k << 6) + std::countr_zero(w[k]);
    return -1;
  }

  static int first_bit_words(const std::vector<std::uint64_t>& w) {
    for (std::size_t k = 0; k < w.size(); ++k)
      if (w[k]) return static_cast<int>(k << 6) + std::countr_zero(w[k]);
    return -1;
  }

  int free_degree(int v, const Bitset& free_set) const {
    auto row = g_.neighbors(v);
    auto fw = free_set.words();
    int d = 0;
    for (int k = 0; k < words_; ++k) d += std::popcount(row[k] & fw[k]);
    return d;
  }

  void accept(const Bitset& in, int in_size) {
    if (!has_incumbent_ || in_size > best_size_) {
      best_ = in;
      best_size_ = in_size;
      has_incumbent_ = true;
    }
  }

  // dist: cost of decided vertices; min_rest: sum of per-vertex minimum costs
  // over the free set (lower bound on what the free part must still add).
  void branch(Bitset free_set, Bitset in, int in_size, int dist, int min_rest) {
    ++nodes_;
    if (out_of_time()) return;

    if (!budget_mode_) {
      // dominance folds: isolated free vertices are always taken; a
      // degree-1 vertex can be preferred over its sole neighbor
      bool changed = true;
      while (changed) {
        changed = false;
        for (int v = 0; v < n_ && !changed; ++v) {
          if (!free_set.test(v)) continue;
          const int d = free_degree(v, free_set);
          if (d == 0) {
            in.set(v);
            ++in_size;
            free_set.reset(v);
            changed = true;
          } else if (d == 1) {
            in.set(v);
            ++in_size;
            free_set.reset(v);
            free_set.subtract(g_.neighbors(v));
            changed = true;
          }
        }
      }
    }

    if (free_set.none()) {
      accept(in, in_size);
      return;
    }

    // bound: clique cover of the free subgraph
    int ub = clique_cover(free_set);
    if (budget_mode_) {
      // budget cap: every newly selected vertex outside both parents eats 2
      // units of slack beyond the forced minimum
      const int slack = budget_ - dist - min_rest;
      if (slack < 0) return;
      int n_new = 0, n_other = 0;
      free_set.for_each([&](int v) { (cost_in_[v] == 2 ? n_new : n_other)++; });
      ub = std::min(ub, n_other + std::min(n_new, slack / 2));
    }
    if (has_incumbent_ && in_size + ub <= best_size_) return;

    // branch vertex: highest degree within the free subgraph
    int bv = -1, bd = -1;
    free_set.for_each([&](int v) {
      const int d = free_degree(v, free_set);
      if (d > bd) {
        bd = d;
        bv = v;
      }
    });

    // include bv
    {
      Bitset f2 = free_set;
      f2.reset(bv);
      int d2 = dist;
      int mr2 = min_rest;
      if (budget_mode_) {
        d2 += cost_in_[bv];
        mr2 -= cost_min_[bv];
        auto row = g_.neighbors(bv);
        auto fw = f2.words();
        for (int k = 0; k < words_; ++k) {
          std::uint64_t w = row[k] & fw[k];
          while (w) {
            const int u = (k << 6) + std::countr_zero(w);
            d2 += cost_out_[u];
            mr2 -= cost_min_[u];
            w &= w - 1;
          }
        }
      }
      f2.subtract(g_.neighbors(bv));
      if (!budget_mode_ || d2 + mr2 <= budget_) {
        Bitset in2 = in;
        in2.set(bv);
        branch(std::move(f2), std::move(in2), in_size + 1, d2, mr2);
      }
    }
    if (stopped_) return;

    // exclude bv
    {
      Bitset f2 = free_set;
      f2.reset(bv);
      int d2 = dist;
      int mr2 = min_rest;
      if (budget_mode_) {
        d2 += cost_out_[bv];
        mr2 -= cost_min_[bv];
        if (d2 + mr2 > budget_) return;
      }
      branch(std::move(f2), std::move(in), in_size, d2, mr2);
    }
  }

  const Graph& g_;
  int n_;
  int words_;
  long long node_limit_;
  std::chrono::steady_clock::time_point deadline_;

  bool budget_mode_ = false;
  int budget_ = 0;
  std::vector<int> cost_in_, cost_out_, cost_min_;

  Bitset best_;
  int best_size_ = -1;
  bool has_incumbent_ = false;
  bool stopped_ = false;
  long long nodes_ = 0;
};

}  // namespace detail

/// Effective integer budget floor(lambda * h(x,y)); distances are integral.
inline int distance_budget(double lambda, int h_xy) {
  return static_cast<int>(std::floor(lambda * h_xy));
}

/// Exact maximization of offspring size within the combined-Hamming-distance
/// neighborhood of the two parents. Status is optimal iff the tree was closed
/// within the time/node limits; otherwise the best incumbent (at worst the
/// better parent, which is in budget whenever lambda >= 1) is returned.
inline ExpertResult expert_recombine(const Graph& g, const Solution& x, const Solution& y,
                                     const ExpertParams& params) {
  if (params.lambda < 0) throw std::invalid_argument("expert_recombine: lambda must be >= 0");
  if (params.time_limit <= 0) throw std::invalid_argument("expert_recombine: time_limit must be > 0");
  if (x.num_vertices() != g.num_vertices() || y.num_vertices() != g.num_vertices())
    throw std::invalid_argument("expert_recombine: parent length mismatch");

  const int h_xy = hamming(x, y);
  const int budget = distance_budget(params.lambda, h_xy);
  const Solution& better = x.size() >= y.size() ? x : y;

  detail::MisBnb bnb(g, params.time_limit, params.node_limit);
  bnb.set_budget(x, y, budget);
  if (h_xy <= budget) bnb.seed_incumbent(better.bits());
  ExpertResult r = bnb.run();
  if (!bnb.found_feasible()) {
    // empty neighborhood (possible only for lambda < 1): fall back to the
    // better parent, which is then out of budget, so never mark it optimal
    r.offspring = better;
    r.status = SolveStatus::kFeasibleTimeout;
  }
  return r;
}

/// Exact maximum independent set (the budget constraint made vacuous).
/// Doubles as the BKS oracle.
inline ExpertResult solve_mis_exact(const Graph& g, double time_limit,
                                    std::optional<long long> node_limit = {}) {
  if (time_limit <= 0) throw std::invalid_argument("solve_mis_exact: time_limit must be > 0");
  detail::MisBnb bnb(g, time_limit, node_limit);
  // warm start: degree-guided and a few random decodes
  Heatmap h;
  h.probs.resize(g.num_vertices());
  const double md = g.max_degree() + 1.0;
  for (int v = 0; v < g.num_vertices(); ++v) h.probs[v] = 1.0 - g.degree(v) / md;
  bnb.seed_incumbent(decode(g, h, 0x5eedULL).bits());
  for (std::uint64_t s = 1; s <= 4; ++s) {
    Rng rng(derive_seed(0x5eedULL, Stream::kInit, s));
    Heatmap r;
    r.probs.resize(g.num_vertices());
    for (auto& p : r.probs) p = rng.unit();
    bnb.seed_incumbent(decode(g, r, s).bits());
  }
  return bnb.run();
}

}  // namespace ddea
