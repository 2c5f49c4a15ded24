#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ddea/expert.hpp"
#include "ddea/graph.hpp"
#include "ddea/heatmap_io.hpp"
#include "ddea/solution.hpp"
#include "support/oracles.hpp"

using ddea::Graph;
using ddea::Heatmap;
using ddea::Population;
using ddea::Solution;

namespace {

std::vector<Heatmap> sample_maps() {
  Heatmap a, b;
  a.probs = {0.0, 0.25, 1.0};
  b.probs = {0.5, 0.125, 0.75};  // exactly representable as float
  return {a, b};
}

}  // namespace

TEST_CASE("binary container round trips byte-exactly", "[heatmap]") {
  const auto maps = sample_maps();
  const std::string bytes = ddea::write_heatmaps(maps, 3);
  const auto back = ddea::read_heatmaps(bytes, 3);
  REQUIRE(back.size() == 2);
  CHECK(back[0].probs == maps[0].probs);
  CHECK(back[1].probs == maps[1].probs);
  CHECK(ddea::write_heatmaps(back, 3) == bytes);

  const std::string empty = ddea::write_heatmaps({}, 7);
  CHECK(ddea::read_heatmaps(empty, 7).empty());
}

TEST_CASE("binary container rejects corruption", "[heatmap]") {
  const std::string bytes = ddea::write_heatmaps(sample_maps(), 3);
  CHECK_THROWS_WITH(ddea::read_heatmaps(bytes, 4), Catch::Matchers::ContainsSubstring("n=3"));
  std::string bad = bytes;
  bad[4] = 9;  // version byte
  CHECK_THROWS_WITH(ddea::read_heatmaps(bad, 3), Catch::Matchers::ContainsSubstring("version"));
  CHECK_THROWS_WITH(ddea::read_heatmaps(bytes.substr(0, bytes.size() - 2), 3),
                    Catch::Matchers::ContainsSubstring("truncated"));
  CHECK_THROWS_WITH(ddea::read_heatmaps(bytes + "xx", 3),
                    Catch::Matchers::ContainsSubstring("trailing"));

  Heatmap out_of_range;
  out_of_range.probs = {0.5, 1.25, 0.0};
  const std::string raw = ddea::write_heatmaps({out_of_range}, 3);  // writer does not clamp
  CHECK_THROWS_WITH(ddea::read_heatmaps(raw, 3),
                    Catch::Matchers::ContainsSubstring("heatmap 0 entry 1"));

  Heatmap short_map;
  short_map.probs = {0.5};
  CHECK_THROWS(ddea::write_heatmaps({short_map}, 3));
}

TEST_CASE("json lines input is accepted as a fallback", "[heatmap]") {
  const std::string jsonl = "[0.0, 0.5, 1.0]\r\n\n[0.25, 0.25, 0.25]\n";
  const auto maps = ddea::read_heatmaps(jsonl, 3);
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].probs == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(maps[1].probs == std::vector<double>{0.25, 0.25, 0.25});

  CHECK_THROWS_WITH(ddea::read_heatmaps("[0.1, 0.2]\n", 3),
                    Catch::Matchers::ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(ddea::read_heatmaps("[0.1, 0.2, 0.3]\n{not json\n", 3),
                    Catch::Matchers::ContainsSubstring("line 2"));
  CHECK_THROWS_WITH(ddea::read_heatmaps("[0.1, \"x\", 0.3]\n", 3),
                    Catch::Matchers::ContainsSubstring("non-numeric"));
  CHECK_THROWS_WITH(ddea::read_heatmaps("[0.1, 1.5, 0.3]\n", 3),
                    Catch::Matchers::ContainsSubstring("outside"));
}

TEST_CASE("heatmap files round trip through disk", "[heatmap]") {
  const oracle::TempDir tmp;
  const auto maps = sample_maps();
  ddea::save_heatmaps_file(maps, 3, tmp.file("maps.hmap"));
  const auto back = ddea::load_heatmaps_file(tmp.file("maps.hmap"), 3);
  REQUIRE(back.size() == 2);
  CHECK(back[1].probs == maps[1].probs);
  CHECK_THROWS(ddea::load_heatmaps_file(tmp.file("absent.hmap"), 3));

  // a JSONL file on disk goes through the same loader
  {
    std::ofstream out(tmp.file("maps.jsonl"), std::ios::binary);
    out << "[1.0, 0.0, 1.0]\n";
  }
  const auto jmaps = ddea::load_heatmaps_file(tmp.file("maps.jsonl"), 3);
  REQUIRE(jmaps.size() == 1);
  CHECK(jmaps[0].probs == std::vector<double>{1.0, 0.0, 1.0});
}

TEST_CASE("externally seeded initialization dedupes and pads", "[heatmap]") {
  const Graph g = ddea::generate_er(40, 0.2, 19);
  Heatmap h;
  h.probs.assign(40, 0.0);
  for (int v = 0; v < 40; v += 3) h.probs[v] = 0.9;
  // three identical heatmaps decode (with distinct tie seeds) to few members
  const Population pop = ddea::diffusion_init(g, {h, h, h}, 8, 5);
  REQUIRE(pop.size() == 8);
  std::set<std::string> seen;
  for (const auto& s : pop) {
    REQUIRE(oracle::is_maximal_matrix(g, s));
    CHECK(seen.insert(s.to_string()).second);
  }

  CHECK_THROWS(ddea::diffusion_init(g, {}, 8, 5));
  CHECK_THROWS(ddea::diffusion_init(g, {h}, 0, 5));
}

TEST_CASE("synthetic heatmaps decode back to their reference", "[heatmap]") {
  // sub-0.5 noise keeps every selected entry above every unselected entry, so
  // the greedy decode reproduces the reference exactly
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = ddea::generate_er(30, 0.2, 2000 + trial);
    const Solution ref = ddea::solve_mis_exact(g, 10.0).offspring;
    const auto maps = ddea::synthetic_heatmaps(g, ref, 4, 0.3, trial);
    REQUIRE(maps.size() == 4);
    for (const auto& m : maps) {
      m.validate();
      const Solution s = ddea::decode(g, m, 99);
      REQUIRE(s.to_string() == ref.to_string());
    }
  }
  const Graph g(3, {{0, 1}});
  CHECK_THROWS(ddea::synthetic_heatmaps(g, Solution::from_string("10"), 2, 0.3, 1));
  CHECK_THROWS(ddea::synthetic_heatmaps(g, Solution::from_string("101"), 2, 1.5, 1));
}

TEST_CASE("guided initial populations beat unguided ones", "[heatmap]") {
  double guided = 0.0, unguided = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Graph g = ddea::generate_er(80, 0.15, 3000 + i);
    const Solution ref = ddea::solve_mis_exact(g, 10.0).offspring;
    const Population dpop = ddea::make_synthetic_initializer(ref, 0.3)(g, 8, i);
    const Population rpop = ddea::rg_init(g, 8, i);
    for (const auto& s : dpop) guided += s.size();
    for (const auto& s : rpop) unguided += s.size();
  }
  CHECK(guided > unguided);
}

TEST_CASE("initializer factories wrap their implementations", "[heatmap]") {
  const Graph g = ddea::generate_er(25, 0.2, 43);
  Heatmap h;
  h.probs.assign(25, 0.5);
  const Population a = ddea::make_diffusion_initializer({h})(g, 4, 9);
  const Population b = ddea::diffusion_init(g, {h}, 4, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].to_string() == b[i].to_string());
}
