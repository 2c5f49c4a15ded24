#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ddea/graph.hpp"
#include "ddea/rng.hpp"
#include "ddea/solution.hpp"

namespace ddea {

using Population = std::vector<Solution>;

struct EaConfig {
  int population_size = 16;       // P
  int generations = 20;           // G
  double mutation_rate = 0.1;     // p_m
  double deselect_rate = 0.05;    // p_d
  std::uint64_t seed = 0;
  int offspring_per_generation = 0;  // 0: one offspring call per parent pair, P pairs

  void validate() const {
    if (population_size < 2) throw std::invalid_argument("EaConfig: P must be >= 2");
    if (generations < 0) throw std::invalid_argument("EaConfig: G must be >= 0");
    if (mutation_rate < 0 || mutation_rate > 1 || deselect_rate < 0 || deselect_rate > 1)
      throw std::invalid_argument("EaConfig: rates must be in [0,1]");
    if (offspring_per_generation < 0)
      throw std::invalid_argument("EaConfig: offspring count must be >= 0");
  }
};

struct TraceEvent {
  double t = 0.0;   // seconds since run start
  int incumbent = 0;
};

struct RunTrace {
  std::vector<TraceEvent> events;
  Solution best;
  int generations_run = 0;
  std::string diagnostic;  // non-empty when the loop stopped on a degenerate population
};

/// Produces an initial population (may fall short of P; the engine pads).
using InitFn = std::function<Population(const Graph&, int, std::uint64_t)>;

/// Produces one or more offspring from two parents.
using RecombFn =
    std::function<std::vector<Solution>(const Graph&, const Solution&, const Solution&, std::uint64_t)>;

/// Binary tournament: each parent is the larger of two uniform draws (with
/// replacement), ties broken by a fair coin. The two tournaments are
/// independent.
inline std::pair<Solution, Solution> tournament_select(const Population& pop, std::uint64_t seed) {
  if (pop.size() < 2) throw std::invalid_argument("tournament_select: population must have >= 2 members");
  Rng rng(seed);
  auto pick = [&]() -> const Solution& {
    const std::size_t i = rng.below(pop.size());
    const std::size_t j = rng.below(pop.size());
    const bool coin = rng.unit() < 0.5;
    if (pop[i].size() != pop[j].size()) return pop[i].size() > pop[j].size() ? pop[i] : pop[j];
    return coin ? pop[i] : pop[j];
  };
  const Solution& a = pick();
  const Solution& b = pick();
  return {a, b};
}

namespace detail {

inline void dedupe_in_place(Population& pop) {
  std::unordered_set<Solution, SolutionHash> seen;
  Population out;
  out.reserve(pop.size());
  for (auto& s : pop)
    if (seen.insert(s).second) out.push_back(std::move(s));
  pop = std::move(out);
}

/// Keep the best P bitwise-distinct solutions; earlier entries win ties.
inline Population replace_elitist(const Population& pop, const Population& offspring, int p) {
  Population cand;
  cand.reserve(pop.size() + offspring.size());
  cand.insert(cand.end(), pop.begin(), pop.end());
  cand.insert(cand.end(), offspring.begin(), offspring.end());
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Solution& a, const Solution& b) { return a.size() > b.size(); });
  Population next;
  next.reserve(p);
  std::unordered_set<Solution, SolutionHash> seen;
  for (auto& s : cand) {
    if (static_cast<int>(next.size()) >= p) break;
    if (seen.insert(s).second) next.push_back(std::move(s));
  }
  return next;
}

inline const Solution& best_member(const Population& pop) {
  const Solution* best = &pop.front();
  for (const auto& s : pop)
    if (s.size() > best->size()) best = &s;
  return *best;
}

}  // namespace detail

/// The evolutionary loop: tournament selection, recombination, probabilistic
/// mutation of offspring, elitist replacement with duplicate rejection, and
/// incumbent tracing. Deterministic per seed (timestamps excluded); the
/// wall-clock deadline is checked between generations only.
inline RunTrace evolve(const Graph& g, const InitFn& init, const RecombFn& recomb,
                       const EaConfig& cfg, std::optional<double> deadline_s = {}) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto now_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  RunTrace trace;
  double last_t = -1.0;
  auto record = [&](const Population& pop) {
    double t = now_s();
    if (t <= last_t) t = last_t + 1e-9;
    last_t = t;
    trace.events.push_back({t, detail::best_member(pop).size()});
  };

  Population pop = init(g, cfg.population_size, derive_seed(cfg.seed, Stream::kInit));
  detail::dedupe_in_place(pop);
  if (pop.empty()) throw std::runtime_error("evolve: initializer produced no solutions");

  // pad a short population with mutated copies
  for (std::uint64_t attempt = 0;
       static_cast<int>(pop.size()) < cfg.population_size && attempt < 64; ++attempt) {
    const Solution& base = pop[attempt % pop.size()];
    Solution m = mutate(g, base, std::max(cfg.deselect_rate, 0.25),
                        derive_seed(cfg.seed, Stream::kPadding, attempt));
    if (std::find(pop.begin(), pop.end(), m) == pop.end()) pop.push_back(std::move(m));
  }

  record(pop);

  if (pop.size() < 2) {
    // degenerate search space (e.g. a single distinct maximal set): stop
    // after initialization rather than spinning on duplicates
    trace.diagnostic = "population degenerate: fewer than 2 distinct solutions after padding";
    trace.best = detail::best_member(pop);
    return trace;
  }

  const int offspring_count =
      cfg.offspring_per_generation > 0 ? cfg.offspring_per_generation : cfg.population_size;

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    if (deadline_s && now_s() >= *deadline_s) break;
    Population offspring;
    offspring.reserve(offspring_count);
    for (int k = 0; k < offspring_count; ++k) {
      const std::uint64_t idx =
          static_cast<std::uint64_t>(gen - 1) * offspring_count + static_cast<std::uint64_t>(k);
      auto [a, b] = tournament_select(pop, derive_seed(cfg.seed, Stream::kSelection, idx));
      std::vector<Solution> kids = recomb(g, a, b, derive_seed(cfg.seed, Stream::kOperator, idx));
      for (std::size_t j = 0; j < kids.size(); ++j) {
        const std::uint64_t kidx = idx * 16 + j;
        Rng gate(derive_seed(cfg.seed, Stream::kMutationGate, kidx));
        if (gate.coin(cfg.mutation_rate))
          kids[j] = mutate(g, kids[j], cfg.deselect_rate, derive_seed(cfg.seed, Stream::kMutation, kidx));
        offspring.push_back(std::move(kids[j]));
      }
    }
    pop = detail::replace_elitist(pop, offspring, cfg.population_size);
    trace.generations_run = gen;
    record(pop);
  }

  trace.best = detail::best_member(pop);
  return trace;
}

/// One JSON object per line: {"t": seconds, "a": incumbent}, closed by a
/// final record carrying the solution bitstring.
inline std::string trace_to_jsonl(const RunTrace& trace) {
  std::ostringstream out;
  out.precision(9);
  for (const auto& e : trace.events)
    out << "{\"t\": " << e.t << ", \"a\": " << e.incumbent << "}\n";
  out << "{\"a\": " << trace.best.size() << ", \"solution\": \"" << trace.best.to_string()
      << "\"}\n";
  return out.str();
}

}  // namespace ddea
