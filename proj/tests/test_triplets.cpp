#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>

#include "ddea/baseline_ops.hpp"
#include "ddea/ea.hpp"
#include "ddea/graph.hpp"
#include "ddea/triplets.hpp"
#include "support/oracles.hpp"

using ddea::Graph;
using ddea::TripletRecord;

TEST_CASE("writer and reader round trip", "[triplets]") {
  const oracle::TempDir tmp;
  const std::string path = (tmp.path() / "demo.jsonl").string();
  {
    ddea::TripletWriter w(path);
    w.append({"er_0001", "101", "011", "101", "optimal"});
    w.append({"er_0002", "110", "110", "110", "feasible-timeout"});
    CHECK(w.count() == 2);
    w.flush();
  }
  const auto records = ddea::read_triplets(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].graph_id == "er_0001");
  CHECK(records[0].x == "101");
  CHECK(records[0].y == "011");
  CHECK(records[0].z == "101");
  CHECK(records[0].status == "optimal");
  CHECK(records[1].status == "feasible-timeout");
  CHECK(ddea::is_trainable(records[0]));
  CHECK_FALSE(ddea::is_trainable(records[1]));
}

TEST_CASE("reader rejects malformed lines with their line number", "[triplets]") {
  const oracle::TempDir tmp;
  const std::string path = (tmp.path() / "bad.jsonl").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"graph":"g","x":"1","y":"1","z":"1","status":"optimal"})" << "\n";
    out << "{oops\n";
  }
  try {
    ddea::read_triplets(path);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS(ddea::read_triplets((tmp.path() / "absent.jsonl").string()));
}

TEST_CASE("expert operator records every recombination it performs", "[triplets]") {
  const oracle::TempDir tmp;
  const std::string path = (tmp.path() / "run.jsonl").string();
  const Graph g = ddea::generate_er(30, 0.2, 5);

  ddea::ExpertParams params;
  params.lambda = 1.75;
  params.time_limit = 15.0;

  ddea::EaConfig cfg;
  cfg.population_size = 4;
  cfg.generations = 1;
  cfg.seed = 12;

  {
    ddea::TripletWriter sink(path);
    const ddea::RecombFn op = ddea::make_expert_recombiner(params, &sink, "er_0007");
    const ddea::RunTrace trace = ddea::evolve(g, ddea::make_rg_initializer(), op, cfg);
    CHECK(trace.generations_run == 1);
    CHECK(sink.count() == 4);  // one offspring call per population slot per generation
    sink.flush();
  }

  const auto records = ddea::read_triplets(path);
  REQUIRE(records.size() == 4);
  for (const auto& r : records) {
    CHECK(r.graph_id == "er_0007");
    CHECK(r.x.size() == 30);
    CHECK(r.status == "optimal");  // n=30 closes instantly
    // the recorded offspring dominates both recorded parents
    const auto x = ddea::Solution::from_string(r.x);
    const auto y = ddea::Solution::from_string(r.y);
    const auto z = ddea::Solution::from_string(r.z);
    CHECK(z.size() >= std::max(x.size(), y.size()));
    CHECK(ddea::is_independent(g, z.bits()));
  }
}

TEST_CASE("zero generations writes no records", "[triplets]") {
  const oracle::TempDir tmp;
  const std::string path = (tmp.path() / "idle.jsonl").string();
  const Graph g = ddea::generate_er(20, 0.25, 9);
  ddea::TripletWriter sink(path);
  ddea::ExpertParams params;
  ddea::EaConfig cfg;
  cfg.population_size = 4;
  cfg.generations = 0;
  ddea::evolve(g, ddea::make_rg_initializer(), ddea::make_expert_recombiner(params, &sink, "id"), cfg);
  CHECK(sink.count() == 0);
}
