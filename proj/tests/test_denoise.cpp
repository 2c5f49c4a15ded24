#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ddea/denoise.hpp"
#include "ddea/graph.hpp"
#include "ddea/rng.hpp"
#include "ddea/solution.hpp"
#include "support/oracles.hpp"

using ddea::Bitset;
using ddea::DenoiseBatch;
using ddea::DenoiseSchedule;
using ddea::DenoiserModel;
using ddea::Graph;
using ddea::Solution;
using ddea::TrainingTriplet;

TEST_CASE("corruption schedule endpoints and monotonicity", "[denoise]") {
  const DenoiseSchedule sched;
  CHECK(sched.alpha_bar(0.0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(sched.alpha_bar(sched.t_train) < 0.001);
  // half-way survival sits just under one half for the small cosine offset
  CHECK(sched.alpha_bar(sched.t_train / 2.0) > 0.45);
  CHECK(sched.alpha_bar(sched.t_train / 2.0) < 0.50);
  double prev = sched.alpha_bar(0.0);
  for (int t = 1; t <= sched.t_train; ++t) {
    const double a = sched.alpha_bar(t);
    REQUIRE(a < prev);
    prev = a;
  }
  for (int t = 1; t <= sched.t_train; ++t) {
    const double b = sched.beta(t);
    REQUIRE(b > 0.0);
    REQUIRE(b <= 1.0);  // the final step's survival ratio rounds to 0, so beta rounds to 1
  }
  DenoiseSchedule bad;
  bad.t_inf = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("inference grid is cosine spaced and lands on zero", "[denoise]") {
  DenoiseSchedule sched;
  sched.t_inf = 50;
  const std::vector<double> grid = sched.inference_times();
  REQUIRE(grid.size() == 51);
  CHECK(grid.front() == 1000.0);
  CHECK(grid.back() == 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) REQUIRE(grid[i] < grid[i - 1]);
  // cosine spacing compresses early steps and stretches late ones
  CHECK(grid[0] - grid[1] < grid[49] - grid[50]);
}

TEST_CASE("forward corruption keeps bits at the scheduled rate", "[denoise]") {
  const DenoiseSchedule sched;
  const int n = 10000;
  Bitset ones(n);
  ones.set_all();
  CHECK_THROWS(ddea::forward_noise(ones, 0, sched, 1));
  CHECK_THROWS(ddea::forward_noise(ones, sched.t_train + 1, sched, 1));

  for (const int t : {100, 500, 900}) {
    const double abar = sched.alpha_bar(t);
    // from the all-ones state a bit stays 1 with probability abar + (1-abar)/2
    const double p = abar + (1.0 - abar) / 2.0;
    const int kept = ddea::forward_noise(ones, t, sched, 31 + t).count();
    const double sigma = std::sqrt(n * p * (1.0 - p));
    REQUIRE(std::abs(kept - n * p) <= 5.0 * sigma);

    const Bitset zeros(n);
    const double q = (1.0 - abar) / 2.0;  // a 0-bit turns on only by resampling
    const int flipped = ddea::forward_noise(zeros, t, sched, 77 + t).count();
    const double sigma0 = std::sqrt(n * q * (1.0 - q));
    REQUIRE(std::abs(flipped - n * q) <= 5.0 * sigma0);
  }
  CHECK(ddea::forward_noise(ones, 500, sched, 9) == ddea::forward_noise(ones, 500, sched, 9));
}

TEST_CASE("feature rows on a path graph by hand", "[denoise]") {
  const DenoiseSchedule sched;  // t_train = 1000
  const Graph p3(3, {{0, 1}, {1, 2}});
  const Bitset zt = Bitset::from_string("100");
  const Solution x = Solution::from_string("101");
  const Solution y = Solution::from_string("001");
  const std::vector<double> rows = ddea::featurize(p3, zt, x, y, 250.0, sched);
  REQUIRE(rows.size() == 3 * ddea::kFeatureCount);

  const double r2 = std::sqrt(2.0) / 2.0;
  // vertex 0: in state and x, degree 1 of max 2, lone neighbor 1 is empty
  const double* f0 = rows.data();
  CHECK(f0[0] == 1.0);
  CHECK(f0[1] == 1.0);
  CHECK(f0[2] == 0.0);
  CHECK(f0[3] == 0.0);
  CHECK(f0[4] == 0.5);
  CHECK(f0[5] == 0.0);
  CHECK(f0[6] == 0.0);
  CHECK(f0[7] == 0.0);
  CHECK(f0[8] == Catch::Approx(r2).margin(1e-12));   // sin(pi/4)
  CHECK(f0[9] == Catch::Approx(r2).margin(1e-12));   // cos(pi/4)
  CHECK(f0[10] == Catch::Approx(0.0).margin(1e-9));  // sin(pi)
  CHECK(f0[11] == Catch::Approx(-1.0).margin(1e-9)); // cos(pi)
  CHECK(f0[12] == 1.0);

  // vertex 1: empty everywhere, full degree, sees half of zt and all of x
  const double* f1 = rows.data() + ddea::kFeatureCount;
  CHECK(f1[0] == 0.0);
  CHECK(f1[1] == 0.0);
  CHECK(f1[2] == 0.0);
  CHECK(f1[3] == 0.0);
  CHECK(f1[4] == 1.0);
  CHECK(f1[5] == 0.5);
  CHECK(f1[6] == 1.0);
  CHECK(f1[7] == 0.5);

  // vertex 2: in both parents
  const double* f2 = rows.data() + 2 * ddea::kFeatureCount;
  CHECK(f2[1] == 1.0);
  CHECK(f2[2] == 1.0);
  CHECK(f2[3] == 1.0);
  CHECK(f2[4] == 0.5);
  CHECK(f2[5] == 0.0);

  CHECK_THROWS(ddea::featurize(p3, Bitset(2), x, y, 250.0, sched));
}

TEST_CASE("isolated vertices report empty neighborhoods", "[denoise]") {
  const DenoiseSchedule sched;
  const Graph g(3, {{0, 1}});  // vertex 2 isolated
  Bitset zt(3);
  zt.set_all();
  const Solution full = Solution::from_string("111");
  const std::vector<double> rows = ddea::featurize(g, zt, full, full, 10.0, sched);
  const double* f2 = rows.data() + 2 * ddea::kFeatureCount;
  CHECK(f2[4] == 0.0);
  CHECK(f2[5] == 0.0);
  CHECK(f2[6] == 0.0);
  CHECK(f2[7] == 0.0);
}

TEST_CASE("zero weights price every row at log two", "[denoise]") {
  const DenoiseSchedule sched;
  const Graph g = ddea::generate_er(20, 0.25, 3);
  ddea::Rng rng(4);
  TrainingTriplet tr{&g, oracle::random_feasible(g, rng), oracle::random_feasible(g, rng),
                     oracle::random_feasible(g, rng)};
  DenoiseBatch batch;
  ddea::append_training_rows(batch, tr, sched, 5);
  REQUIRE(batch.rows == 20);
  const std::vector<double> zeros(ddea::kFeatureCount, 0.0);
  CHECK(ddea::batch_loss(zeros, batch, 0.0) == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK_THROWS(ddea::batch_loss(zeros, DenoiseBatch{}, 0.0));
}

TEST_CASE("analytic gradient matches central differences", "[denoise]") {
  const DenoiseSchedule sched;
  const Graph g = ddea::generate_er(25, 0.2, 11);
  ddea::Rng rng(21);
  std::vector<TrainingTriplet> data;
  for (int i = 0; i < 3; ++i) {
    TrainingTriplet tr;
    tr.graph = &g;
    tr.x = oracle::random_feasible(g, rng);
    tr.y = oracle::random_feasible(g, rng);
    tr.z_star = oracle::random_feasible(g, rng);
    data.push_back(tr);
  }

  for (int rep = 0; rep < 10; ++rep) {
    DenoiseBatch batch;
    for (const auto& tr : data) ddea::append_training_rows(batch, tr, sched, 100 + rep * 3);
    std::vector<double> w(ddea::kFeatureCount);
    for (auto& v : w) v = 2.0 * rng.unit() - 1.0;
    const double wd = rep % 2 == 0 ? 0.0 : 0.01;

    std::vector<double> grad;
    ddea::batch_loss(w, batch, wd, &grad);
    const double h = 1e-6;
    for (int k = 0; k < ddea::kFeatureCount; ++k) {
      std::vector<double> wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      const double fd = (ddea::batch_loss(wp, batch, wd) - ddea::batch_loss(wm, batch, wd)) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(grad[k])});
      REQUIRE(std::abs(grad[k] - fd) / scale <= 1e-4);
    }
  }
}

TEST_CASE("training memorizes a single demonstration", "[denoise]") {
  const DenoiseSchedule sched;
  const Graph g = ddea::generate_er(20, 0.25, 31);
  ddea::Rng rng(6);
  TrainingTriplet tr;
  tr.graph = &g;
  tr.x = oracle::random_feasible(g, rng);
  tr.y = oracle::random_feasible(g, rng);
  tr.z_star = tr.y;  // the label equals a parent feature column exactly

  ddea::TrainHyper hyper;
  hyper.lr = 0.5;
  hyper.epochs = 2000;
  hyper.batch = 1;
  hyper.weight_decay = 0.0;
  hyper.seed = 7;
  const ddea::TrainResult result = ddea::train({tr}, sched, hyper);
  CHECK(result.model.t_train == sched.t_train);
  REQUIRE(result.loss_trace.size() == 2000);
  CHECK(result.loss_trace.back() < 0.05);
  CHECK(result.loss_trace.back() < result.loss_trace.front());
}

TEST_CASE("training learns the copy rule and transfers to held-out graphs", "[denoise]") {
  const DenoiseSchedule sched;
  std::vector<Graph> graphs;
  graphs.reserve(30);
  std::vector<TrainingTriplet> data;
  ddea::Rng rng(41);
  for (int i = 0; i < 30; ++i) {
    graphs.push_back(ddea::generate_er(20, 0.25, 6000 + i));
    TrainingTriplet tr;
    tr.graph = &graphs.back();
    tr.x = oracle::random_feasible(graphs.back(), rng);
    tr.y = oracle::random_feasible(graphs.back(), rng);
    tr.z_star = tr.x;
    data.push_back(tr);
  }
  ddea::TrainHyper hyper;
  hyper.lr = 0.2;
  hyper.epochs = 300;
  hyper.batch = 8;
  hyper.weight_decay = 0.0;
  hyper.seed = 11;
  const ddea::TrainResult result = ddea::train(data, sched, hyper);

  // held-out instance, never trained on
  const Graph held = ddea::generate_er(20, 0.25, 9999);
  ddea::Rng hr(3);
  const Solution hx = oracle::random_feasible(held, hr);
  const Solution hy = oracle::random_feasible(held, hr);
  int correct = 0, total = 0;
  for (const int t : {50, 400, 800}) {
    const Bitset zt = ddea::forward_noise(hx.bits(), t, sched, 100 + t);
    const std::vector<double> rows = ddea::featurize(held, zt, hx, hy, t, sched);
    for (int v = 0; v < held.num_vertices(); ++v) {
      const double p = result.model.predict(rows.data() + static_cast<std::size_t>(v) * ddea::kFeatureCount);
      if ((p >= 0.5) == hx.contains(v)) ++correct;
      ++total;
    }
  }
  CHECK(correct >= static_cast<int>(0.95 * total));
}

TEST_CASE("training rejects degenerate inputs", "[denoise]") {
  const DenoiseSchedule sched;
  CHECK_THROWS(ddea::train({}, sched, ddea::TrainHyper{}));
  const Graph g(3, {{0, 1}});
  TrainingTriplet tr{&g, Solution::from_string("001"), Solution::from_string("001"),
                     Solution::from_string("001")};
  ddea::TrainHyper bad;
  bad.epochs = 0;
  CHECK_THROWS(ddea::train({tr}, sched, bad));
  bad = ddea::TrainHyper{};
  bad.batch = 0;
  CHECK_THROWS(ddea::train({tr}, sched, bad));
}

TEST_CASE("training is deterministic per seed", "[denoise]") {
  const DenoiseSchedule sched;
  const Graph g = ddea::generate_er(15, 0.3, 51);
  ddea::Rng rng(8);
  std::vector<TrainingTriplet> data;
  for (int i = 0; i < 4; ++i) {
    TrainingTriplet tr;
    tr.graph = &g;
    tr.x = oracle::random_feasible(g, rng);
    tr.y = oracle::random_feasible(g, rng);
    tr.z_star = tr.x;
    data.push_back(tr);
  }
  ddea::TrainHyper hyper;
  hyper.epochs = 5;
  hyper.seed = 13;
  const auto a = ddea::train(data, sched, hyper);
  const auto b = ddea::train(data, sched, hyper);
  REQUIRE(a.model.weights.size() == b.model.weights.size());
  for (std::size_t k = 0; k < a.model.weights.size(); ++k)
    CHECK(a.model.weights[k] == b.model.weights[k]);
  CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("an untrained model denoises to the uniform decode", "[denoise]") {
  // zero weights predict one half everywhere; the last grid point has full
  // survival, so the decoded vector is exactly the all-0.5 heatmap
  const DenoiseSchedule sched;
  const Graph g = ddea::generate_er(30, 0.2, 61);
  ddea::Rng rng(9);
  const Solution x = oracle::random_feasible(g, rng);
  const Solution y = oracle::random_feasible(g, rng);
  const DenoiserModel zero = DenoiserModel::zeros();
  const Solution got = ddea::denoise_recombine(g, x, y, zero, sched, 17);
  ddea::Heatmap flat;
  flat.probs.assign(30, 0.5);
  const Solution want = ddea::decode(g, flat, ddea::derive_seed(17, ddea::Stream::kTieBreak));
  CHECK(got.to_string() == want.to_string());
}

TEST_CASE("denoised offspring are feasible, maximal and deterministic", "[denoise]") {
  const DenoiseSchedule sched;
  const Graph g = ddea::generate_er(140, 0.15, 71);  // larger than any training graph
  ddea::Rng rng(10);
  const Solution x = oracle::random_feasible(g, rng);
  const Solution y = oracle::random_feasible(g, rng);
  DenoiserModel m = DenoiserModel::zeros();
  m.weights[1] = 1.5;  // lean towards parent x
  m.weights[12] = -1.0;
  const Solution a = ddea::denoise_recombine(g, x, y, m, sched, 23);
  const Solution b = ddea::denoise_recombine(g, x, y, m, sched, 23);
  CHECK(a.to_string() == b.to_string());
  CHECK(oracle::is_maximal_matrix(g, a));

  DenoiserModel bad;
  bad.weights.assign(5, 0.0);
  CHECK_THROWS(ddea::denoise_recombine(g, x, y, bad, sched, 1));
  CHECK_THROWS(ddea::make_denoise_recombiner(m, sched, 0));

  const auto kids = ddea::make_denoise_recombiner(m, sched, 2)(g, x, y, 29);
  REQUIRE(kids.size() == 2);
  CHECK(oracle::is_maximal_matrix(g, kids[0]));
  CHECK(oracle::is_maximal_matrix(g, kids[1]));
}

TEST_CASE("model files round trip and reject tampering", "[denoise]") {
  DenoiserModel m = DenoiserModel::zeros(500);
  for (int k = 0; k < ddea::kFeatureCount; ++k) m.weights[k] = 0.125 * k - 0.7;

  const std::string bytes = ddea::serialize_model(m);
  const DenoiserModel back = ddea::deserialize_model(bytes);
  CHECK(back.t_train == 500);
  REQUIRE(back.weights.size() == m.weights.size());
  for (int k = 0; k < ddea::kFeatureCount; ++k) CHECK(back.weights[k] == m.weights[k]);

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH(ddea::deserialize_model(bad), Catch::Matchers::ContainsSubstring("magic"));
  bad = bytes;
  bad[4] = 2;  // version byte
  CHECK_THROWS_WITH(ddea::deserialize_model(bad), Catch::Matchers::ContainsSubstring("version"));
  bad = bytes;
  bad[15] = 'q';  // inside the first feature name
  CHECK_THROWS_WITH(ddea::deserialize_model(bad), Catch::Matchers::ContainsSubstring("feature"));
  CHECK_THROWS_WITH(ddea::deserialize_model(bytes.substr(0, bytes.size() - 3)),
                    Catch::Matchers::ContainsSubstring("truncated"));
  CHECK_THROWS_WITH(ddea::deserialize_model(bytes + "z"),
                    Catch::Matchers::ContainsSubstring("trailing"));

  const oracle::TempDir tmp;
  ddea::save_model_file(m, tmp.file("model.bin"));
  const DenoiserModel loaded = ddea::load_model_file(tmp.file("model.bin"));
  for (int k = 0; k < ddea::kFeatureCount; ++k) CHECK(loaded.weights[k] == m.weights[k]);
  CHECK_THROWS(ddea::load_model_file(tmp.file("absent.bin")));
}
