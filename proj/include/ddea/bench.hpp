#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "ddea/baseline_ops.hpp"
#include "ddea/denoise.hpp"
#include "ddea/ea.hpp"
#include "ddea/expert.hpp"
#include "ddea/graph.hpp"
#include "ddea/heatmap_io.hpp"
#include "ddea/metrics.hpp"
#include "ddea/rng.hpp"
#include "ddea/solution.hpp"
#include "ddea/triplets.hpp"

#include <nlohmann/json.hpp>

namespace ddea {

/// Raised for unusable experiment configuration; the CLI maps it to exit
/// code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Datasets

struct DatasetGenSpec {
  int count = 20;
  int n_min = 50;
  int n_max = 100;
  double p = 0.15;
  std::uint64_t seed = 0;

  void validate() const {
    if (count < 0) throw ConfigError("dataset: count must be >= 0");
    if (n_min < 1 || n_max < n_min) throw ConfigError("dataset: need 1 <= n_min <= n_max");
    if (p < 0.0 || p > 1.0) throw ConfigError("dataset: p outside [0, 1]");
  }
};

struct ManifestEntry {
  std::string id;
  std::string file;  // relative to the dataset directory
  int n = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::string name;
  std::string dir;
  std::vector<ManifestEntry> instances;

  std::string instance_path(std::size_t i) const {
    return (std::filesystem::path(dir) / instances[i].file).string();
  }
};

/// Writes count DIMACS instances plus manifest.json into dir. Each instance
/// draws its vertex count uniformly from [n_min, n_max]; graph edges are
/// seeded independently per instance.
inline Manifest generate_dataset(const DatasetGenSpec& spec, const std::string& dir,
                                 std::string name = "") {
  spec.validate();
  std::filesystem::create_directories(dir);
  Manifest man;
  man.dir = dir;
  man.name = name.empty() ? std::filesystem::path(dir).filename().string() : std::move(name);
  const std::uint64_t span = static_cast<std::uint64_t>(spec.n_max - spec.n_min) + 1;
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, Stream::kGraphGen, i));
    ManifestEntry e;
    e.n = spec.n_min + static_cast<int>(rng.below(span));
    e.p = spec.p;
    e.seed = rng();
    char id[32];
    std::snprintf(id, sizeof id, "er_%04d", i);
    e.id = id;
    e.file = e.id + std::string(".dimacs");
    const Graph g = generate_er(e.n, e.p, e.seed);
    save_graph_file(g, (std::filesystem::path(dir) / e.file).string());
    man.instances.push_back(std::move(e));
  }
  nlohmann::json j;
  j["name"] = man.name;
  j["instances"] = nlohmann::json::array();
  for (const auto& e : man.instances)
    j["instances"].push_back(
        {{"id", e.id}, {"file", e.file}, {"n", e.n}, {"p", e.p}, {"seed", e.seed}});
  std::ofstream out(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
  if (!out) throw std::runtime_error("generate_dataset: cannot write manifest in " + dir);
  out << j.dump(2) << '\n';
  return man;
}

inline Manifest load_manifest(const std::string& dir) {
  const auto path = std::filesystem::path(dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("load_manifest: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_manifest: " + path.string() + ": " + e.what());
  }
  Manifest man;
  man.dir = dir;
  try {
    man.name = j.at("name").get<std::string>();
    for (const auto& je : j.at("instances")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.file = je.at("file").get<std::string>();
      e.n = je.at("n").get<int>();
      e.p = je.at("p").get<double>();
      e.seed = je.at("seed").get<std::uint64_t>();
      man.instances.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_manifest: " + path.string() + ": " + e.what());
  }
  return man;
}

// ---------------------------------------------------------------------------
// Best-known solutions

struct BksEntry {
  int size = 0;
  SolveStatus status = SolveStatus::kFeasibleTimeout;
  std::string solution;  // decoder bit string, vertex 0 first
};

using BksTable = std::map<std::string, BksEntry>;

namespace detail {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) on a worker pool; the first exception wins.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const int workers = std::min<std::size_t>(std::max(1, threads), std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;  // drain remaining work
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Exact labels for every manifest instance, solved in parallel. Entries that
/// hit the time limit carry the incumbent and a feasible-timeout status.
inline BksTable compute_bks(const Manifest& man, double time_limit, int threads) {
  std::vector<std::pair<std::string, BksEntry>> entries(man.instances.size());
  detail::parallel_for(man.instances.size(), detail::resolve_threads(threads), [&](std::size_t i) {
    const Graph g = load_graph_file(man.instance_path(i));
    const ExpertResult r = solve_mis_exact(g, time_limit);
    entries[i] = {man.instances[i].id,
                  BksEntry{r.offspring.size(), r.status, r.offspring.to_string()}};
  });
  return BksTable(entries.begin(), entries.end());
}

inline void save_bks(const BksTable& table, const std::string& path) {
  nlohmann::json j;
  j["instances"] = nlohmann::json::object();
  for (const auto& [id, e] : table)
    j["instances"][id] = {
        {"size", e.size}, {"status", to_string(e.status)}, {"solution", e.solution}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_bks: cannot open " + path);
  out << j.dump(2) << '\n';
}

inline BksTable load_bks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_bks: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_bks: " + path + ": " + e.what());
  }
  BksTable table;
  try {
    for (const auto& [id, je] : j.at("instances").items()) {
      BksEntry e;
      e.size = je.at("size").get<int>();
      e.status = solve_status_from_string(je.at("status").get<std::string>());
      e.solution = je.value("solution", std::string());
      table[id] = std::move(e);
    }
  } catch (const std::exception& e) {
    throw ConfigError("load_bks: " + path + ": " + e.what());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Training sets

/// Triplets resolved against their graphs; `triplets` points into `graphs`.
struct TrainingSet {
  std::vector<Graph> graphs;  // one per distinct referenced instance
  std::vector<TrainingTriplet> triplets;
};

inline TrainingSet resolve_triplets(const std::vector<TripletRecord>& records, const Manifest& man,
                                    bool trainable_only = true) {
  std::unordered_map<std::string, std::size_t> manifest_index;
  for (std::size_t i = 0; i < man.instances.size(); ++i)
    manifest_index[man.instances[i].id] = i;

  std::unordered_map<std::string, std::size_t> graph_slot;
  std::vector<std::size_t> load_order;
  auto keep = [&](const TripletRecord& r) { return !trainable_only || is_trainable(r); };
  for (const auto& r : records) {
    if (!keep(r)) continue;
    const auto it = manifest_index.find(r.graph_id);
    if (it == manifest_index.end())
      throw std::runtime_error("resolve_triplets: unknown graph id " + r.graph_id);
    if (graph_slot.emplace(r.graph_id, load_order.size()).second)
      load_order.push_back(it->second);
  }

  TrainingSet set;
  set.graphs.reserve(load_order.size());  // pointers below rely on no reallocation
  for (const std::size_t mi : load_order) set.graphs.push_back(load_graph_file(man.instance_path(mi)));
  for (const auto& r : records) {
    if (!keep(r)) continue;
    const Graph& g = set.graphs[graph_slot.at(r.graph_id)];
    TrainingTriplet t;
    t.graph = &g;
    t.x = Solution::from_string(r.x);
    t.y = Solution::from_string(r.y);
    t.z_star = Solution::from_string(r.z);
    if (t.x.num_vertices() != g.num_vertices() || t.y.num_vertices() != g.num_vertices() ||
        t.z_star.num_vertices() != g.num_vertices())
      throw std::runtime_error("resolve_triplets: solution length mismatch for " + r.graph_id);
    set.triplets.push_back(std::move(t));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Variants

enum class InitKind { kRg, kDiFile, kDiSynthetic };
enum class RecombKind { kCdx, kExpert, kDenoiser };

inline std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::kRg: return "RG";
    case InitKind::kDiFile: return "DI-file";
    case InitKind::kDiSynthetic: return "DI-synthetic";
  }
  throw std::logic_error("bad InitKind");
}

inline std::string to_string(RecombKind k) {
  switch (k) {
    case RecombKind::kCdx: return "CDX";
    case RecombKind::kExpert: return "expert";
    case RecombKind::kDenoiser: return "denoiser";
  }
  throw std::logic_error("bad RecombKind");
}

inline InitKind init_kind_from_string(const std::string& s) {
  if (s == "RG") return InitKind::kRg;
  if (s == "DI-file") return InitKind::kDiFile;
  if (s == "DI-synthetic") return InitKind::kDiSynthetic;
  throw ConfigError("unknown init kind: " + s);
}

inline RecombKind recomb_kind_from_string(const std::string& s) {
  if (s == "CDX") return RecombKind::kCdx;
  if (s == "expert") return RecombKind::kExpert;
  if (s == "denoiser") return RecombKind::kDenoiser;
  throw ConfigError("unknown recombination kind: " + s);
}

struct VariantSpec {
  InitKind init = InitKind::kRg;
  RecombKind recomb = RecombKind::kCdx;
  int population_size = 16;
  int generations = 20;
};

inline std::string variant_name(const VariantSpec& v) {
  return to_string(v.init) + "/" + to_string(v.recomb);
}

/// Parses "INIT/RECOMB", e.g. "DI-synthetic/expert".
inline VariantSpec parse_variant(const std::string& name, int population_size = 16,
                                 int generations = 20) {
  const auto slash = name.find('/');
  if (slash == std::string::npos) throw ConfigError("variant must be INIT/RECOMB: " + name);
  VariantSpec v;
  v.init = init_kind_from_string(name.substr(0, slash));
  v.recomb = recomb_kind_from_string(name.substr(slash + 1));
  v.population_size = population_size;
  v.generations = generations;
  return v;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct ExperimentConfig {
  std::string dataset_dir;
  std::optional<DatasetGenSpec> generate;  // when set, (re)generate into dataset_dir

  std::string bks_mode = "exact";  // "exact" | "file"
  std::string bks_path;            // file mode; default <dataset_dir>/bks.json
  double bks_time_limit = 60.0;

  std::vector<VariantSpec> variants;

  double mutation_rate = 0.1;
  double deselect_rate = 0.05;
  int offspring_per_generation = 0;

  ExpertParams expert;

  std::string denoiser_model;  // model file, required by denoiser variants
  int denoiser_samples = 2;
  int denoiser_t_inf = 50;

  double di_noise = 0.3;  // DI-synthetic
  std::string di_dir;     // DI-file: <di_dir>/<instance>.hmap

  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
  std::optional<double> time_limit;  // per-run evolve deadline, seconds
  std::string out_dir = "out";

  void validate() const {
    if (dataset_dir.empty()) throw ConfigError("config: dataset_dir is required");
    if (bks_mode != "exact" && bks_mode != "file")
      throw ConfigError("config: bks mode must be \"exact\" or \"file\"");
    if (bks_time_limit <= 0) throw ConfigError("config: bks time_limit must be > 0");
    if (variants.empty()) throw ConfigError("config: at least one variant is required");
    if (mutation_rate < 0 || mutation_rate > 1 || deselect_rate < 0 || deselect_rate > 1)
      throw ConfigError("config: rates must be in [0, 1]");
    if (offspring_per_generation < 0) throw ConfigError("config: offspring must be >= 0");
    if (denoiser_samples < 1) throw ConfigError("config: denoiser samples must be >= 1");
    if (denoiser_t_inf < 1) throw ConfigError("config: denoiser t_inf must be >= 1");
    if (di_noise < 0 || di_noise > 1) throw ConfigError("config: di noise outside [0, 1]");
    if (time_limit && *time_limit <= 0) throw ConfigError("config: time_limit must be > 0");
    for (const auto& v : variants) {
      if (v.population_size < 2) throw ConfigError("config: variant P must be >= 2");
      if (v.generations < 0) throw ConfigError("config: variant G must be >= 0");
    }
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const char* what,
                                std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end())
      throw ConfigError(std::string("config: unknown key \"") + key + "\" in " + what);
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown_keys(j, "config",
                              {"dataset_dir", "generate", "bks", "variants", "ea", "expert",
                               "denoiser", "di", "seed", "threads", "time_limit", "out_dir"});
  ExperimentConfig cfg;
  try {
    cfg.dataset_dir = j.value("dataset_dir", std::string());
    if (j.contains("generate")) {
      const auto& jg = j["generate"];
      detail::reject_unknown_keys(jg, "generate", {"count", "n_min", "n_max", "p", "seed"});
      DatasetGenSpec spec;
      spec.count = jg.value("count", spec.count);
      spec.n_min = jg.value("n_min", spec.n_min);
      spec.n_max = jg.value("n_max", spec.n_max);
      spec.p = jg.value("p", spec.p);
      spec.seed = jg.value("seed", spec.seed);
      cfg.generate = spec;
    }
    if (j.contains("bks")) {
      const auto& jb = j["bks"];
      detail::reject_unknown_keys(jb, "bks", {"mode", "path", "time_limit"});
      cfg.bks_mode = jb.value("mode", cfg.bks_mode);
      cfg.bks_path = jb.value("path", cfg.bks_path);
      cfg.bks_time_limit = jb.value("time_limit", cfg.bks_time_limit);
    }
    int default_p = 16, default_g = 20;
    if (j.contains("ea")) {
      const auto& je = j["ea"];
      detail::reject_unknown_keys(
          je, "ea", {"P", "G", "mutation_rate", "deselect_rate", "offspring"});
      default_p = je.value("P", default_p);
      default_g = je.value("G", default_g);
      cfg.mutation_rate = je.value("mutation_rate", cfg.mutation_rate);
      cfg.deselect_rate = je.value("deselect_rate", cfg.deselect_rate);
      cfg.offspring_per_generation = je.value("offspring", cfg.offspring_per_generation);
    }
    if (j.contains("variants")) {
      for (const auto& jv : j["variants"]) {
        if (jv.is_string()) {
          cfg.variants.push_back(parse_variant(jv.get<std::string>(), default_p, default_g));
        } else if (jv.is_object()) {
          detail::reject_unknown_keys(jv, "variant", {"init", "recomb", "P", "G"});
          VariantSpec v;
          v.init = init_kind_from_string(jv.at("init").get<std::string>());
          v.recomb = recomb_kind_from_string(jv.at("recomb").get<std::string>());
          v.population_size = jv.value("P", default_p);
          v.generations = jv.value("G", default_g);
          cfg.variants.push_back(v);
        } else {
          throw ConfigError("config: variant must be a string or object");
        }
      }
    }
    if (j.contains("expert")) {
      const auto& je = j["expert"];
      detail::reject_unknown_keys(je, "expert", {"lambda", "time_limit", "node_limit"});
      cfg.expert.lambda = je.value("lambda", cfg.expert.lambda);
      cfg.expert.time_limit = je.value("time_limit", cfg.expert.time_limit);
      if (je.contains("node_limit")) cfg.expert.node_limit = je["node_limit"].get<long long>();
    }
    if (j.contains("denoiser")) {
      const auto& jd = j["denoiser"];
      detail::reject_unknown_keys(jd, "denoiser", {"model", "samples", "t_inf"});
      cfg.denoiser_model = jd.value("model", cfg.denoiser_model);
      cfg.denoiser_samples = jd.value("samples", cfg.denoiser_samples);
      cfg.denoiser_t_inf = jd.value("t_inf", cfg.denoiser_t_inf);
    }
    if (j.contains("di")) {
      const auto& jd = j["di"];
      detail::reject_unknown_keys(jd, "di", {"noise", "dir"});
      cfg.di_noise = jd.value("noise", cfg.di_noise);
      cfg.di_dir = jd.value("dir", cfg.di_dir);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("time_limit")) cfg.time_limit = j["time_limit"].get<double>();
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Results

struct InstanceRow {
  std::string dataset;
  std::string instance;
  std::string variant;
  int population_size = 0;
  int generations = 0;
  double gap = 0.0;
  double pi = 0.0;
  double runtime_s = 0.0;
  double per_gen_s = 0.0;
  std::string status = "ok";  // "ok" | "skipped"
};

struct VariantAggregate {
  std::string variant;
  int population_size = 0;
  int generations = 0;
  int count = 0;    // rows with status ok
  int skipped = 0;
  double gap_mean = 0.0, gap_std = 0.0;
  double pi_mean = 0.0, pi_std = 0.0;
  double runtime_s_mean = 0.0;
  double per_gen_s_mean = 0.0;
};

struct Report {
  std::string dataset;
  std::vector<InstanceRow> rows;
  std::vector<VariantAggregate> aggregates;
  std::vector<std::string> skipped;  // instance ids lacking a BKS entry
};

namespace detail {

/// Shortest decimal that round-trips the double exactly.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    // try to shorten
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

inline constexpr const char* kCsvHeader =
    "dataset,instance,variant,P,G,gap,pi,runtime_s,per_gen_s,status";

inline std::string rows_to_csv(const std::vector<InstanceRow>& rows) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.instance << ',' << r.variant << ',' << r.population_size << ','
        << r.generations << ',';
    if (r.status == "ok")
      out << detail::fmt_double(r.gap) << ',' << detail::fmt_double(r.pi) << ','
          << detail::fmt_double(r.runtime_s) << ',' << detail::fmt_double(r.per_gen_s);
    else
      out << ",,,";
    out << ',' << r.status << '\n';
  }
  return out.str();
}

inline std::vector<InstanceRow> rows_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("rows_from_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::runtime_error("rows_from_csv: unexpected header: " + line);
  std::vector<InstanceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 10)
      throw std::runtime_error("rows_from_csv: line " + std::to_string(lineno) +
                               ": expected 10 fields");
    InstanceRow r;
    r.dataset = f[0];
    r.instance = f[1];
    r.variant = f[2];
    r.population_size = std::stoi(f[3]);
    r.generations = std::stoi(f[4]);
    r.status = f[9];
    if (r.status == "ok") {
      r.gap = std::stod(f[5]);
      r.pi = std::stod(f[6]);
      r.runtime_s = std::stod(f[7]);
      r.per_gen_s = std::stod(f[8]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Per-variant mean and population standard deviation over the ok rows, in
/// first-appearance order.
inline std::vector<VariantAggregate> aggregate_rows(const std::vector<InstanceRow>& rows) {
  std::vector<VariantAggregate> aggs;
  auto find = [&](const InstanceRow& r) -> VariantAggregate& {
    for (auto& a : aggs)
      if (a.variant == r.variant && a.population_size == r.population_size &&
          a.generations == r.generations)
        return a;
    VariantAggregate a;
    a.variant = r.variant;
    a.population_size = r.population_size;
    a.generations = r.generations;
    aggs.push_back(a);
    return aggs.back();
  };
  for (const auto& r : rows) {
    VariantAggregate& a = find(r);
    if (r.status != "ok") {
      ++a.skipped;
      continue;
    }
    ++a.count;
    a.gap_mean += r.gap;
    a.pi_mean += r.pi;
    a.runtime_s_mean += r.runtime_s;
    a.per_gen_s_mean += r.per_gen_s;
  }
  for (auto& a : aggs) {
    if (a.count == 0) continue;
    a.gap_mean /= a.count;
    a.pi_mean /= a.count;
    a.runtime_s_mean /= a.count;
    a.per_gen_s_mean /= a.count;
  }
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    VariantAggregate& a = find(r);
    a.gap_std += (r.gap - a.gap_mean) * (r.gap - a.gap_mean);
    a.pi_std += (r.pi - a.pi_mean) * (r.pi - a.pi_mean);
  }
  for (auto& a : aggs) {
    if (a.count == 0) continue;
    a.gap_std = std::sqrt(a.gap_std / a.count);
    a.pi_std = std::sqrt(a.pi_std / a.count);
  }
  return aggs;
}

// ---------------------------------------------------------------------------
// Experiment driver

namespace detail {

struct ResolvedOps {
  InitFn init;
  RecombFn recomb;
};

}  // namespace detail

/// Runs the variant matrix over the dataset. Rows are deterministic per
/// config seed except the wall-clock fields (pi, runtime_s, per_gen_s);
/// instances without a BKS entry are skipped and reported. Instances run in
/// parallel; each (instance, variant) run derives its own seed.
inline Report run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Manifest man = cfg.generate ? generate_dataset(*cfg.generate, cfg.dataset_dir)
                                    : load_manifest(cfg.dataset_dir);
  Report report;
  report.dataset = man.name;
  if (man.instances.empty()) return report;

  const int threads = detail::resolve_threads(cfg.threads);
  BksTable bks;
  if (cfg.bks_mode == "exact") {
    bks = compute_bks(man, cfg.bks_time_limit, threads);
  } else {
    const std::string path = cfg.bks_path.empty()
                                 ? (std::filesystem::path(cfg.dataset_dir) / "bks.json").string()
                                 : cfg.bks_path;
    bks = load_bks(path);
  }

  const bool wants_denoiser =
      std::any_of(cfg.variants.begin(), cfg.variants.end(),
                  [](const VariantSpec& v) { return v.recomb == RecombKind::kDenoiser; });
  const bool wants_di_file =
      std::any_of(cfg.variants.begin(), cfg.variants.end(),
                  [](const VariantSpec& v) { return v.init == InitKind::kDiFile; });
  const bool wants_di_synth =
      std::any_of(cfg.variants.begin(), cfg.variants.end(),
                  [](const VariantSpec& v) { return v.init == InitKind::kDiSynthetic; });

  DenoiserModel model;
  DenoiseSchedule sched;
  if (wants_denoiser) {
    if (cfg.denoiser_model.empty())
      throw ConfigError("config: denoiser variants need a model file");
    try {
      model = load_model_file(cfg.denoiser_model);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: denoiser model: ") + e.what());
    }
    sched.t_train = model.t_train;
    sched.t_inf = cfg.denoiser_t_inf;
  }

  // Load graphs and pre-resolve per-instance inputs up front so configuration
  // problems surface before any run starts.
  std::vector<Graph> graphs;
  graphs.reserve(man.instances.size());
  std::vector<const BksEntry*> labels(man.instances.size(), nullptr);
  std::vector<std::vector<Heatmap>> file_heatmaps(man.instances.size());
  for (std::size_t i = 0; i < man.instances.size(); ++i) {
    graphs.push_back(load_graph_file(man.instance_path(i)));
    const auto it = bks.find(man.instances[i].id);
    if (it != bks.end()) labels[i] = &it->second;
    if (labels[i] == nullptr) {
      report.skipped.push_back(man.instances[i].id);
      continue;
    }
    if (wants_di_synth &&
        static_cast<int>(labels[i]->solution.size()) != graphs[i].num_vertices())
      throw ConfigError("config: DI-synthetic needs full BKS solutions; missing or wrong length for " +
                        man.instances[i].id);
    if (wants_di_file) {
      if (cfg.di_dir.empty()) throw ConfigError("config: DI-file variants need di.dir");
      const std::string path =
          (std::filesystem::path(cfg.di_dir) / (man.instances[i].id + ".hmap")).string();
      try {
        file_heatmaps[i] = load_heatmaps_file(path, graphs[i].num_vertices());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: DI-file: ") + e.what());
      }
      if (file_heatmaps[i].empty())
        throw ConfigError("config: DI-file: no heatmaps in " + path);
    }
  }

  const std::size_t nvar = cfg.variants.size();
  report.rows.assign(man.instances.size() * nvar, InstanceRow{});
  detail::parallel_for(report.rows.size(), threads, [&](std::size_t task) {
    const std::size_t i = task / nvar;
    const std::size_t v = task % nvar;
    const VariantSpec& var = cfg.variants[v];
    InstanceRow& row = report.rows[task];
    row.dataset = man.name;
    row.instance = man.instances[i].id;
    row.variant = variant_name(var);
    row.population_size = var.population_size;
    row.generations = var.generations;
    if (labels[i] == nullptr) {
      row.status = "skipped";
      return;
    }
    const Graph& g = graphs[i];
    const BksEntry& label = *labels[i];

    InitFn init;
    switch (var.init) {
      case InitKind::kRg: init = make_rg_initializer(); break;
      case InitKind::kDiFile: init = make_diffusion_initializer(file_heatmaps[i]); break;
      case InitKind::kDiSynthetic:
        init = make_synthetic_initializer(Solution::from_string(label.solution), cfg.di_noise);
        break;
    }
    RecombFn recomb;
    switch (var.recomb) {
      case RecombKind::kCdx: recomb = make_cdx_recombiner(); break;
      case RecombKind::kExpert: recomb = make_expert_recombiner(cfg.expert); break;
      case RecombKind::kDenoiser:
        recomb = make_denoise_recombiner(model, sched, cfg.denoiser_samples);
        break;
    }

    EaConfig ea;
    ea.population_size = var.population_size;
    ea.generations = var.generations;
    ea.mutation_rate = cfg.mutation_rate;
    ea.deselect_rate = cfg.deselect_rate;
    ea.offspring_per_generation = cfg.offspring_per_generation;
    ea.seed = derive_seed(derive_seed(cfg.seed, Stream::kBench, i), Stream::kBench, v);

    const auto t0 = std::chrono::steady_clock::now();
    const RunTrace trace = evolve(g, init, recomb, ea, cfg.time_limit);
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.gap = gap_percent(trace.best.size(), label.size);
    row.pi = primal_integral(trace, label.size);
    row.per_gen_s = row.runtime_s / std::max(1, trace.generations_run);
    row.status = "ok";
  });

  report.aggregates = aggregate_rows(report.rows);
  return report;
}

inline nlohmann::json report_to_json(const Report& report) {
  nlohmann::json j;
  j["dataset"] = report.dataset;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json jr = {{"dataset", r.dataset},
                         {"instance", r.instance},
                         {"variant", r.variant},
                         {"P", r.population_size},
                         {"G", r.generations},
                         {"status", r.status}};
    if (r.status == "ok") {
      jr["gap"] = r.gap;
      jr["pi"] = r.pi;
      jr["runtime_s"] = r.runtime_s;
      jr["per_gen_s"] = r.per_gen_s;
    }
    j["rows"].push_back(std::move(jr));
  }
  j["aggregates"] = nlohmann::json::array();
  for (const auto& a : report.aggregates)
    j["aggregates"].push_back({{"variant", a.variant},
                               {"P", a.population_size},
                               {"G", a.generations},
                               {"count", a.count},
                               {"skipped", a.skipped},
                               {"gap_mean", a.gap_mean},
                               {"gap_std", a.gap_std},
                               {"pi_mean", a.pi_mean},
                               {"pi_std", a.pi_std},
                               {"runtime_s_mean", a.runtime_s_mean},
                               {"per_gen_s_mean", a.per_gen_s_mean}});
  j["skipped"] = report.skipped;
  return j;
}

inline std::string aggregates_to_csv(const std::vector<VariantAggregate>& aggs) {
  std::ostringstream out;
  out << "variant,P,G,count,skipped,gap_mean,gap_std,pi_mean,pi_std,runtime_s_mean,per_gen_s_mean\n";
  for (const auto& a : aggs)
    out << a.variant << ',' << a.population_size << ',' << a.generations << ',' << a.count << ','
        << a.skipped << ',' << detail::fmt_double(a.gap_mean) << ','
        << detail::fmt_double(a.gap_std) << ',' << detail::fmt_double(a.pi_mean) << ','
        << detail::fmt_double(a.pi_std) << ',' << detail::fmt_double(a.runtime_s_mean) << ','
        << detail::fmt_double(a.per_gen_s_mean) << '\n';
  return out.str();
}

/// Writes results.csv, aggregate.csv, and report.json into out_dir.
inline void write_report(const Report& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto dump = [&](const char* name, const std::string& content) {
    const auto path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_report: cannot open " + path.string());
    out << content;
  };
  dump("results.csv", rows_to_csv(report.rows));
  dump("aggregate.csv", aggregates_to_csv(report.aggregates));
  dump("report.json", report_to_json(report).dump(2) + "\n");
}

}  // namespace ddea
