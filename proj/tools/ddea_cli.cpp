// Command-line front end: dataset generation, exact labels, single runs,
// expert recombination, triplet dumps, denoiser training, and the experiment
// matrix. Exit codes: 0 success, 2 unusable configuration, 3 partial results
// (instances skipped), 1 hard failure.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ddea/bench.hpp"

namespace {

struct GlobalFlags {
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool threads_set = false;
  double time_limit = 0.0;
  bool time_limit_set = false;
  std::string config;
};

int run_gen(const GlobalFlags& gf, const std::string& dir, ddea::DatasetGenSpec spec,
            const std::string& name) {
  if (gf.seed_set) spec.seed = gf.seed;
  const ddea::Manifest man = ddea::generate_dataset(spec, dir, name);
  nlohmann::json j{{"dir", man.dir}, {"name", man.name}, {"instances", man.instances.size()}};
  std::cout << j.dump() << '\n';
  return 0;
}

int run_bks(const GlobalFlags& gf, const std::string& dataset, std::string out) {
  const ddea::Manifest man = ddea::load_manifest(dataset);
  if (man.instances.empty()) throw ddea::ConfigError("bks: dataset is empty");
  const double limit = gf.time_limit_set ? gf.time_limit : 60.0;
  const ddea::BksTable table = ddea::compute_bks(man, limit, gf.threads);
  if (out.empty()) out = (std::filesystem::path(dataset) / "bks.json").string();
  ddea::save_bks(table, out);
  int optimal = 0;
  for (const auto& [id, e] : table)
    if (e.status == ddea::SolveStatus::kOptimal) ++optimal;
  nlohmann::json j{{"file", out},
                   {"instances", table.size()},
                   {"optimal", optimal},
                   {"timeout", static_cast<int>(table.size()) - optimal}};
  std::cout << j.dump() << '\n';
  return 0;
}

struct SolveArgs {
  std::string graph_path;
  std::string variant = "RG/CDX";
  int population_size = 16;
  int generations = 20;
  double mutation_rate = 0.1;
  double deselect_rate = 0.05;
  int offspring = 0;
  int bks = 0;  // 0: unknown
  std::string reference;
  std::string heatmaps;
  double lambda = 1.75;
  double expert_time_limit = 15.0;
  double bks_time_limit = 60.0;
  std::string model;
  int samples = 2;
  int t_inf = 50;
  double di_noise = 0.3;
  std::string trace_path;
};

int run_solve(const GlobalFlags& gf, const SolveArgs& a) {
  const ddea::Graph g = ddea::load_graph_file(a.graph_path);
  const ddea::VariantSpec var =
      ddea::parse_variant(a.variant, a.population_size, a.generations);

  int bks = a.bks;
  std::string reference = a.reference;
  if (var.init == ddea::InitKind::kDiSynthetic && reference.empty()) {
    const ddea::ExpertResult exact = ddea::solve_mis_exact(g, a.bks_time_limit);
    reference = exact.offspring.to_string();
    if (bks == 0 && exact.status == ddea::SolveStatus::kOptimal) bks = exact.offspring.size();
  }

  ddea::InitFn init;
  switch (var.init) {
    case ddea::InitKind::kRg: init = ddea::make_rg_initializer(); break;
    case ddea::InitKind::kDiFile: {
      if (a.heatmaps.empty()) throw ddea::ConfigError("solve: DI-file needs --heatmaps");
      auto maps = ddea::load_heatmaps_file(a.heatmaps, g.num_vertices());
      if (maps.empty()) throw ddea::ConfigError("solve: no heatmaps in " + a.heatmaps);
      init = ddea::make_diffusion_initializer(std::move(maps));
      break;
    }
    case ddea::InitKind::kDiSynthetic:
      init = ddea::make_synthetic_initializer(ddea::Solution::from_string(reference), a.di_noise);
      break;
  }

  ddea::RecombFn recomb;
  switch (var.recomb) {
    case ddea::RecombKind::kCdx: recomb = ddea::make_cdx_recombiner(); break;
    case ddea::RecombKind::kExpert:
      recomb = ddea::make_expert_recombiner({a.lambda, a.expert_time_limit, {}});
      break;
    case ddea::RecombKind::kDenoiser: {
      if (a.model.empty()) throw ddea::ConfigError("solve: denoiser needs --model");
      ddea::DenoiserModel model = ddea::load_model_file(a.model);
      ddea::DenoiseSchedule sched;
      sched.t_train = model.t_train;
      sched.t_inf = a.t_inf;
      recomb = ddea::make_denoise_recombiner(std::move(model), sched, a.samples);
      break;
    }
  }

  ddea::EaConfig ea;
  ea.population_size = var.population_size;
  ea.generations = var.generations;
  ea.mutation_rate = a.mutation_rate;
  ea.deselect_rate = a.deselect_rate;
  ea.offspring_per_generation = a.offspring;
  ea.seed = gf.seed;

  std::optional<double> deadline;
  if (gf.time_limit_set) deadline = gf.time_limit;
  const auto t0 = std::chrono::steady_clock::now();
  const ddea::RunTrace trace = ddea::evolve(g, init, recomb, ea, deadline);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!a.trace_path.empty()) {
    std::ofstream out(a.trace_path, std::ios::trunc);
    if (!out) throw std::runtime_error("solve: cannot open " + a.trace_path);
    out << ddea::trace_to_jsonl(trace);
  }

  nlohmann::json j{{"variant", ddea::variant_name(var)},
                   {"size", trace.best.size()},
                   {"solution", trace.best.to_string()},
                   {"generations", trace.generations_run},
                   {"runtime_s", runtime}};
  if (bks > 0) {
    j["bks"] = bks;
    j["gap"] = ddea::gap_percent(trace.best.size(), bks);
    j["pi"] = ddea::primal_integral(trace, bks);
  }
  if (!trace.diagnostic.empty()) j["diagnostic"] = trace.diagnostic;
  std::cout << j.dump() << '\n';
  return 0;
}

int run_expert(const GlobalFlags& gf, const std::string& graph_path, const std::string& x_bits,
               const std::string& y_bits, double lambda) {
  const ddea::Graph g = ddea::load_graph_file(graph_path);
  const ddea::Solution x = ddea::Solution::from_string(x_bits);
  const ddea::Solution y = ddea::Solution::from_string(y_bits);
  ddea::ExpertParams params;
  params.lambda = lambda;
  if (gf.time_limit_set) params.time_limit = gf.time_limit;
  const ddea::ExpertResult r = ddea::expert_recombine(g, x, y, params);
  nlohmann::json j{{"z", r.offspring.to_string()},
                   {"size", r.offspring.size()},
                   {"status", ddea::to_string(r.status)}};
  std::cout << j.dump() << '\n';
  return 0;
}

struct TripletArgs {
  std::string dataset;
  std::string out;
  std::string init = "RG";
  std::string bks_path;
  int population_size = 16;
  int generations = 20;
  double mutation_rate = 0.1;
  double deselect_rate = 0.05;
  double lambda = 1.75;
  double di_noise = 0.3;
};

int run_triplets(const GlobalFlags& gf, const TripletArgs& a) {
  const ddea::Manifest man = ddea::load_manifest(a.dataset);
  if (man.instances.empty()) throw ddea::ConfigError("triplets: dataset is empty");
  const ddea::InitKind init_kind = ddea::init_kind_from_string(a.init);
  if (init_kind == ddea::InitKind::kDiFile)
    throw ddea::ConfigError("triplets: DI-file init is not supported here");

  ddea::BksTable bks;
  if (init_kind == ddea::InitKind::kDiSynthetic) {
    const std::string path = a.bks_path.empty()
                                 ? (std::filesystem::path(a.dataset) / "bks.json").string()
                                 : a.bks_path;
    bks = ddea::load_bks(path);
  }

  ddea::ExpertParams params;
  params.lambda = a.lambda;
  if (gf.time_limit_set) params.time_limit = gf.time_limit;

  ddea::TripletWriter writer(a.out);
  std::atomic<long long> optimal{0};
  ddea::detail::parallel_for(
      man.instances.size(), ddea::detail::resolve_threads(gf.threads), [&](std::size_t i) {
        const ddea::Graph g = ddea::load_graph_file(man.instance_path(i));
        ddea::InitFn init;
        if (init_kind == ddea::InitKind::kRg) {
          init = ddea::make_rg_initializer();
        } else {
          const auto it = bks.find(man.instances[i].id);
          if (it == bks.end() ||
              static_cast<int>(it->second.solution.size()) != g.num_vertices())
            throw ddea::ConfigError("triplets: no BKS solution for " + man.instances[i].id);
          init = ddea::make_synthetic_initializer(
              ddea::Solution::from_string(it->second.solution), a.di_noise);
        }
        // count optimal-status records through a wrapper around the sink
        ddea::RecombFn expert =
            ddea::make_expert_recombiner(params, &writer, man.instances[i].id);
        ddea::EaConfig ea;
        ea.population_size = a.population_size;
        ea.generations = a.generations;
        ea.mutation_rate = a.mutation_rate;
        ea.deselect_rate = a.deselect_rate;
        ea.seed = ddea::derive_seed(gf.seed, ddea::Stream::kBench, i);
        ddea::evolve(g, init, expert, ea);
      });
  writer.flush();
  // separate pass for the trainable count keeps the hot loop simple
  for (const auto& r : ddea::read_triplets(a.out))
    if (ddea::is_trainable(r)) ++optimal;
  nlohmann::json j{{"file", a.out}, {"records", writer.count()}, {"optimal", optimal.load()}};
  std::cout << j.dump() << '\n';
  return 0;
}

struct TrainArgs {
  std::string triplets;
  std::string dataset;
  std::string out;
  int epochs = 30;
  int batch = 64;
  double lr = 0.0002;
  double weight_decay = 0.0001;
  int t_train = 1000;
};

int run_train(const GlobalFlags& gf, const TrainArgs& a) {
  const std::vector<ddea::TripletRecord> records = ddea::read_triplets(a.triplets);
  const ddea::Manifest man = ddea::load_manifest(a.dataset);
  const ddea::TrainingSet set = ddea::resolve_triplets(records, man, /*trainable_only=*/true);
  if (set.triplets.empty()) throw ddea::ConfigError("train: no trainable triplets");

  ddea::DenoiseSchedule sched;
  sched.t_train = a.t_train;
  ddea::TrainHyper hyper;
  hyper.lr = a.lr;
  hyper.epochs = a.epochs;
  hyper.batch = a.batch;
  hyper.weight_decay = a.weight_decay;
  hyper.seed = gf.seed;

  const ddea::TrainResult result = ddea::train(set.triplets, sched, hyper);
  ddea::save_model_file(result.model, a.out);
  nlohmann::json j{{"file", a.out},
                   {"records", records.size()},
                   {"trainable", set.triplets.size()},
                   {"epochs", a.epochs},
                   {"first_loss", result.loss_trace.front()},
                   {"final_loss", result.loss_trace.back()}};
  std::cout << j.dump() << '\n';
  return 0;
}

int run_bench(const GlobalFlags& gf, const std::string& out_override) {
  if (gf.config.empty()) throw ddea::ConfigError("bench: --config is required");
  ddea::ExperimentConfig cfg = ddea::load_config_file(gf.config);
  if (gf.seed_set) cfg.seed = gf.seed;
  if (gf.threads_set) cfg.threads = gf.threads;
  if (gf.time_limit_set) cfg.time_limit = gf.time_limit;
  if (!out_override.empty()) cfg.out_dir = out_override;

  const ddea::Report report = ddea::run_experiment(cfg);
  ddea::write_report(report, cfg.out_dir);

  std::cout << "dataset: " << report.dataset << "  rows: " << report.rows.size() << '\n';
  for (const auto& a : report.aggregates) {
    char line[256];
    std::snprintf(line, sizeof line,
                  "%-24s P=%-3d G=%-3d n=%-3d gap %7.3f ± %6.3f   pi %7.3f   %6.2fs/run",
                  a.variant.c_str(), a.population_size, a.generations, a.count, a.gap_mean,
                  a.gap_std, a.pi_mean, a.runtime_s_mean);
    std::cout << line << '\n';
  }
  if (!report.skipped.empty()) {
    std::cout << "skipped (no BKS):";
    for (const auto& id : report.skipped) std::cout << ' ' << id;
    std::cout << '\n';
  }
  std::cout << "report written to " << cfg.out_dir << '\n';
  if (report.rows.empty()) throw ddea::ConfigError("bench: dataset is empty");
  return report.skipped.empty() ? 0 : 3;
}

int run_report(const std::string& results_path, const std::string& out_dir) {
  std::ifstream in(results_path);
  if (!in) throw ddea::ConfigError("report: cannot open " + results_path);
  std::string csv((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::vector<ddea::InstanceRow> rows = ddea::rows_from_csv(csv);
  const auto aggs = ddea::aggregate_rows(rows);
  if (out_dir.empty()) {
    std::cout << ddea::aggregates_to_csv(aggs);
  } else {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "aggregate.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("report: cannot open " + path.string());
    out << ddea::aggregates_to_csv(aggs);
    std::cout << "aggregate written to " << path.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DDEA: evolutionary maximum-independent-set solver with expert and denoising recombination"};
  app.require_subcommand(1);

  GlobalFlags gf;
  app.add_option("--seed", gf.seed, "Master RNG seed")->each([&](const std::string&) {
    gf.seed_set = true;
  });
  app.add_option("--threads", gf.threads, "Worker threads (0: hardware concurrency)")
      ->each([&](const std::string&) { gf.threads_set = true; });
  app.add_option("--time-limit", gf.time_limit,
                 "Time limit in seconds (per exact solve, expert call, or run)")
      ->each([&](const std::string&) { gf.time_limit_set = true; });
  app.add_option("--config", gf.config, "Experiment configuration (JSON)");

  auto* gen = app.add_subcommand("gen", "Generate an Erdos-Renyi dataset");
  gen->fallthrough();
  std::string gen_dir, gen_name;
  ddea::DatasetGenSpec gen_spec;
  gen->add_option("--out", gen_dir, "Dataset directory")->required();
  gen->add_option("--count", gen_spec.count, "Instance count");
  gen->add_option("--n-min", gen_spec.n_min, "Minimum vertex count");
  gen->add_option("--n-max", gen_spec.n_max, "Maximum vertex count");
  gen->add_option("--p", gen_spec.p, "Edge probability");
  gen->add_option("--name", gen_name, "Dataset name (default: directory basename)");

  auto* bks = app.add_subcommand("bks", "Compute exact best-known solutions for a dataset");
  bks->fallthrough();
  std::string bks_dataset, bks_out;
  bks->add_option("--dataset", bks_dataset, "Dataset directory")->required();
  bks->add_option("--out", bks_out, "Output file (default: <dataset>/bks.json)");

  auto* solve = app.add_subcommand("solve", "Run the evolutionary solver on one instance");
  solve->fallthrough();
  SolveArgs sa;
  solve->add_option("--graph", sa.graph_path, "DIMACS instance")->required();
  solve->add_option("--variant", sa.variant, "INIT/RECOMB, e.g. RG/CDX or DI-synthetic/expert");
  solve->add_option("--P", sa.population_size, "Population size");
  solve->add_option("--G", sa.generations, "Generations");
  solve->add_option("--mutation-rate", sa.mutation_rate, "Offspring mutation probability");
  solve->add_option("--deselect-rate", sa.deselect_rate, "Per-vertex deselection probability");
  solve->add_option("--offspring", sa.offspring, "Recombination calls per generation (0: P)");
  solve->add_option("--bks", sa.bks, "Known best size (enables gap and primal integral)");
  solve->add_option("--reference", sa.reference, "Reference solution bits for DI-synthetic");
  solve->add_option("--heatmaps", sa.heatmaps, "Heatmap file for DI-file");
  solve->add_option("--lambda", sa.lambda, "Expert distance-budget multiplier");
  solve->add_option("--expert-time-limit", sa.expert_time_limit, "Per expert call, seconds");
  solve->add_option("--bks-time-limit", sa.bks_time_limit,
                    "Exact-solve limit when DI-synthetic needs a reference");
  solve->add_option("--model", sa.model, "Denoiser model file");
  solve->add_option("--samples", sa.samples, "Denoiser offspring per recombination");
  solve->add_option("--t-inf", sa.t_inf, "Denoiser inference steps");
  solve->add_option("--di-noise", sa.di_noise, "Synthetic heatmap noise level");
  solve->add_option("--trace", sa.trace_path, "Write incumbent trace (JSON lines)");

  auto* expert = app.add_subcommand("expert", "One expert recombination");
  expert->fallthrough();
  std::string ex_graph, ex_x, ex_y;
  double ex_lambda = 1.75;
  expert->add_option("--graph", ex_graph, "DIMACS instance")->required();
  expert->add_option("--x", ex_x, "Parent x bits")->required();
  expert->add_option("--y", ex_y, "Parent y bits")->required();
  expert->add_option("--lambda", ex_lambda, "Distance-budget multiplier");

  auto* triplets = app.add_subcommand("triplets", "Dump expert triplets from EA runs");
  triplets->fallthrough();
  TripletArgs ta;
  triplets->add_option("--dataset", ta.dataset, "Dataset directory")->required();
  triplets->add_option("--out", ta.out, "Output JSON-lines file")->required();
  triplets->add_option("--init", ta.init, "Initializer: RG or DI-synthetic");
  triplets->add_option("--bks", ta.bks_path, "BKS file for DI-synthetic (default <dataset>/bks.json)");
  triplets->add_option("--P", ta.population_size, "Population size");
  triplets->add_option("--G", ta.generations, "Generations");
  triplets->add_option("--mutation-rate", ta.mutation_rate, "Offspring mutation probability");
  triplets->add_option("--deselect-rate", ta.deselect_rate, "Per-vertex deselection probability");
  triplets->add_option("--lambda", ta.lambda, "Expert distance-budget multiplier");
  triplets->add_option("--di-noise", ta.di_noise, "Synthetic heatmap noise level");

  auto* train = app.add_subcommand("train", "Train the denoising recombination model");
  train->fallthrough();
  TrainArgs tr;
  train->add_option("--triplets", tr.triplets, "Triplet JSON-lines file")->required();
  train->add_option("--dataset", tr.dataset, "Dataset directory the triplets reference")->required();
  train->add_option("--out", tr.out, "Model output file")->required();
  train->add_option("--epochs", tr.epochs, "Training epochs");
  train->add_option("--batch", tr.batch, "Triplets per batch");
  train->add_option("--lr", tr.lr, "Learning rate");
  train->add_option("--weight-decay", tr.weight_decay, "L2 penalty");
  train->add_option("--t-train", tr.t_train, "Forward-process step count");

  auto* bench = app.add_subcommand("bench", "Run the experiment matrix from --config");
  bench->fallthrough();
  std::string bench_out;
  bench->add_option("--out", bench_out, "Output directory (overrides config)");

  auto* report = app.add_subcommand("report", "Re-aggregate a results.csv");
  report->fallthrough();
  std::string rep_results, rep_out;
  report->add_option("--results", rep_results, "results.csv path")->required();
  report->add_option("--out", rep_out, "Directory for aggregate.csv (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return run_gen(gf, gen_dir, gen_spec, gen_name);
    if (bks->parsed()) return run_bks(gf, bks_dataset, bks_out);
    if (solve->parsed()) return run_solve(gf, sa);
    if (expert->parsed()) return run_expert(gf, ex_graph, ex_x, ex_y, ex_lambda);
    if (triplets->parsed()) return run_triplets(gf, ta);
    if (train->parsed()) return run_train(gf, tr);
    if (bench->parsed()) return run_bench(gf, bench_out);
    if (report->parsed()) return run_report(rep_results, rep_out);
  } catch (const ddea::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
