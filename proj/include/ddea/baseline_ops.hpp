#pragma once

#include <unordered_set>
#include <utility>
#include <vector>

#include "ddea/ea.hpp"
#include "ddea/graph.hpp"
#include "ddea/rng.hpp"
#include "ddea/solution.hpp"

namespace ddea {

/// Randomized greedy initialization: decode P entrywise-U(0,1) heatmaps.
/// Duplicates are redrawn for up to 5 extra rounds; a remaining shortfall is
/// accepted (the engine pads by mutation).
inline Population rg_init(const Graph& g, int p, std::uint64_t seed) {
  Population out;
  std::unordered_set<Solution, SolutionHash> seen;
  std::uint64_t counter = 0;
  for (int round = 0; round <= 5 && static_cast<int>(out.size()) < p; ++round) {
    const int missing = p - static_cast<int>(out.size());
    for (int j = 0; j < missing; ++j, ++counter) {
      Rng rng(derive_seed(seed, Stream::kInit, counter));
      Heatmap h;
      h.probs.resize(g.num_vertices());
      for (auto& q : h.probs) q = rng.unit();
      Solution s = decode(g, h, derive_seed(seed, Stream::kTieBreak, counter));
      if (seen.insert(s).second) out.push_back(std::move(s));
    }
  }
  return out;
}

/// Consensus-Divergence Crossover. The consensus offspring forces all
/// vertices selected in both parents to probability one; the divergence
/// offspring forces them to zero. Remaining entries are independent U(0,1).
inline std::pair<Solution, Solution> cdx(const Graph& g, const Solution& x, const Solution& y,
                                         std::uint64_t seed) {
  const int n = g.num_vertices();
  const Bitset common = x.bits() & y.bits();
  Rng rc(derive_seed(seed, Stream::kOperator, 0));
  Rng rd(derive_seed(seed, Stream::kOperator, 1));
  Heatmap consensus, divergence;
  consensus.probs.resize(n);
  divergence.probs.resize(n);
  for (int i = 0; i < n; ++i) {
    const double uc = rc.unit();
    const double ud = rd.unit();
    if (common.test(i)) {
      consensus.probs[i] = 1.0;
      divergence.probs[i] = 0.0;
    } else {
      consensus.probs[i] = uc;
      divergence.probs[i] = ud;
    }
  }
  return {decode(g, consensus, derive_seed(seed, Stream::kTieBreak, 0)),
          decode(g, divergence, derive_seed(seed, Stream::kTieBreak, 1))};
}

inline InitFn make_rg_initializer() {
  return [](const Graph& g, int p, std::uint64_t seed) { return rg_init(g, p, seed); };
}

inline RecombFn make_cdx_recombiner() {
  return [](const Graph& g, const Solution& x, const Solution& y, std::uint64_t seed) {
    auto [c, d] = cdx(g, x, y, seed);
    return std::vector<Solution>{std::move(c), std::move(d)};
  };
}

}  // namespace ddea
