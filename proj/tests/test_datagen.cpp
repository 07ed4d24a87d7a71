#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "talloc/datagen.hpp"

using namespace talloc;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE_BEGIN("datagen");

TEST_CASE("cluster generation is deterministic per seed") {
  SyntheticDatasetSpec spec;
  spec.n_points = 3;
  spec.seed = 42;
  const auto a = gen_clusters(spec);
  const auto b = gen_clusters(spec);
  REQUIRE(a.tasks.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(a.tasks[i].category == b.tasks[i].category);
    CHECK(a.tasks[i].features == b.tasks[i].features);
    CHECK(a.gold[i] == b.gold[i]);
  }
}

TEST_CASE("cluster sizes stay near one third of the points") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    SyntheticDatasetSpec spec;
    spec.seed = seed;
    const auto ds = gen_clusters(spec);
    std::array<int, 3> sizes{0, 0, 0};
    for (const Task& t : ds.tasks) sizes[static_cast<size_t>(t.category)]++;
    for (int c = 0; c < 3; ++c) {
      CHECK(sizes[static_cast<size_t>(c)] >= 3100);
      CHECK(sizes[static_cast<size_t>(c)] <= 3567);
    }
  }
}

TEST_CASE("gold labels are balanced") {
  SyntheticDatasetSpec spec;
  spec.seed = 9;
  const auto ds = gen_clusters(spec);
  double ones = 0;
  for (int g : ds.gold) ones += g;
  const double frac = ones / static_cast<double>(ds.gold.size());
  CHECK(frac > 0.47);
  CHECK(frac < 0.53);
}

TEST_CASE("per-cluster sample means land on mu plus the offset") {
  SyntheticDatasetSpec spec;
  spec.seed = 77;
  const auto ds = gen_clusters(spec);
  std::array<std::array<double, 2>, 3> sums{};
  std::array<int, 3> counts{};
  for (const Task& t : ds.tasks) {
    sums[static_cast<size_t>(t.category)][0] += t.features[0];
    sums[static_cast<size_t>(t.category)][1] += t.features[1];
    counts[static_cast<size_t>(t.category)]++;
  }
  const std::array<double, 3> offsets{0.0, 2.5, 5.0};
  for (int c = 0; c < 3; ++c) {
    REQUIRE(counts[static_cast<size_t>(c)] >= 3000);
    for (int d = 0; d < 2; ++d) {
      const double mean =
          sums[static_cast<size_t>(c)][static_cast<size_t>(d)] / counts[static_cast<size_t>(c)];
      CHECK(std::fabs(mean - (ds.mu + offsets[static_cast<size_t>(c)])) < 0.1);
    }
  }
}

TEST_CASE("noisy dSim values") {
  const auto d0 = gen_dsim_noisy(0.0);
  CHECK(d0.at(0, 0) == doctest::Approx(1.0));
  CHECK(d0.at(0, 1) == doctest::Approx(0.0));
  CHECK(d0.at(1, 1) == doctest::Approx(1.0));

  const auto dmax = gen_dsim_noisy(2.0 / 3.0);
  for (int i = 0; i < 3; ++i) {
    for (int z = 0; z < 3; ++z) {
      CHECK(dmax.at(i, z) == doctest::Approx(1.0 / 3.0));
    }
  }

  const auto d3 = gen_dsim_noisy(0.3);
  CHECK(d3.at(2, 2) == doctest::Approx(0.7));
  CHECK(d3.at(2, 0) == doctest::Approx(0.15));

  CHECK_THROWS_AS(gen_dsim_noisy(-0.01), OutOfRangeError);
  CHECK_THROWS_AS(gen_dsim_noisy(0.67), OutOfRangeError);
}

TEST_CASE("noisy dSim rows sum to one for every s") {
  for (double s = 0.0; s <= 2.0 / 3.0 + 1e-12; s += 1.0 / 30.0) {
    const auto d = gen_dsim_noisy(std::min(s, 2.0 / 3.0));
    for (int i = 0; i < d.m; ++i) {
      double row = 0.0;
      for (int z = 0; z < d.categories; ++z) row += d.at(i, z);
      CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("surrogate replay structure") {
  SurrogateReplayConfig cfg;
  cfg.seed = 5;
  cfg.n_tasks = 800;
  const auto ds = gen_surrogate_replay(cfg);
  REQUIRE(ds.n_tasks() == 800);
  CHECK(ds.m() == 90);

  for (int t = 0; t < ds.n_tasks(); ++t) {
    CHECK(ds.annotations[static_cast<size_t>(t)].size() == 15);
    // Subjective gold is the majority of the 5 group-matched labels.
    std::vector<int> matched;
    bool unanimous = true;
    int first = ds.annotations[static_cast<size_t>(t)][0].second;
    for (const auto& [a, l] : ds.annotations[static_cast<size_t>(t)]) {
      if (ds.annotator_category[static_cast<size_t>(a)] ==
          ds.tasks[static_cast<size_t>(t)].category) {
        matched.push_back(l);
      }
      if (l != first) unanimous = false;
    }
    REQUIRE(matched.size() == 5);
    CHECK(majority_vote(matched) == ds.gold_subjective[static_cast<size_t>(t)]);
    if (unanimous) {
      CHECK(ds.gold_objective[static_cast<size_t>(t)] ==
            ds.gold_subjective[static_cast<size_t>(t)]);
    }
  }
}

TEST_CASE("surrogate matched annotators agree with subjective gold about 80%") {
  SurrogateReplayConfig cfg;
  cfg.seed = 11;
  cfg.n_tasks = 2000;  // 10k matched annotations
  const auto ds = gen_surrogate_replay(cfg);
  long agree = 0, total = 0;
  for (int t = 0; t < ds.n_tasks(); ++t) {
    for (const auto& [a, l] : ds.annotations[static_cast<size_t>(t)]) {
      if (ds.annotator_category[static_cast<size_t>(a)] ==
          ds.tasks[static_cast<size_t>(t)].category) {
        ++total;
        if (l == ds.gold_subjective[static_cast<size_t>(t)]) ++agree;
      }
    }
  }
  const double acc = static_cast<double>(agree) / static_cast<double>(total);
  CHECK(acc > 0.77);
  CHECK(acc < 0.83);
}

TEST_CASE("replay files round-trip") {
  SurrogateReplayConfig cfg;
  cfg.seed = 13;
  cfg.n_tasks = 40;
  cfg.annotators_per_group = 8;
  const auto ds = gen_surrogate_replay(cfg);
  const std::string path = temp_path("talloc_replay_roundtrip.txt");
  save_replay(ds, path);
  const auto back = load_replay(path);
  REQUIRE(back.n_tasks() == ds.n_tasks());
  CHECK(back.m() == ds.m());
  CHECK(back.annotations == ds.annotations);
  CHECK(back.gold_objective == ds.gold_objective);
  CHECK(back.gold_subjective == ds.gold_subjective);
  for (int t = 0; t < ds.n_tasks(); ++t) {
    CHECK(back.tasks[static_cast<size_t>(t)].features ==
          ds.tasks[static_cast<size_t>(t)].features);
    CHECK(back.tasks[static_cast<size_t>(t)].category ==
          ds.tasks[static_cast<size_t>(t)].category);
  }
  std::remove(path.c_str());
}

TEST_CASE("replay loader accepts a small well-formed file") {
  const std::string path = temp_path("talloc_replay_ok.txt");
  {
    std::ofstream out(path);
    out << "#tasks\n0,0,1.5,-2.0\n1,1,0.25,0.5\n";
    out << "#annotators\n0,0\n1,1\n";
    out << "#annotations\n0,0,1\n0,1,0\n1,1,1\n";
    out << "#gold_objective\n0,1\n1,1\n";
    out << "#gold_subjective\n0,1\n1,0\n";
  }
  const auto ds = load_replay(path);
  CHECK(ds.n_tasks() == 2);
  CHECK(ds.m() == 2);
  CHECK(ds.annotations[0].size() == 2);
  std::remove(path.c_str());
}

TEST_CASE("replay loader rejects dangling and incomplete references") {
  const std::string base =
      "#tasks\n0,0,1.0\n1,1,2.0\n#annotators\n0,0\n1,1\n";

  SUBCASE("unknown task id in an annotation") {
    const std::string path = temp_path("talloc_replay_bad1.txt");
    std::ofstream(path) << base
                        << "#annotations\n0,0,1\n7,1,0\n1,0,1\n"
                        << "#gold_objective\n0,1\n1,1\n"
                        << "#gold_subjective\n0,1\n1,1\n";
    CHECK_THROWS_AS(load_replay(path), ValidationError);
    std::remove(path.c_str());
  }

  SUBCASE("task without any annotation") {
    const std::string path = temp_path("talloc_replay_bad2.txt");
    std::ofstream(path) << base << "#annotations\n0,0,1\n"
                        << "#gold_objective\n0,1\n1,1\n"
                        << "#gold_subjective\n0,1\n1,1\n";
    CHECK_THROWS_AS(load_replay(path), ValidationError);
    std::remove(path.c_str());
  }

  SUBCASE("parse errors carry the line number") {
    const std::string path = temp_path("talloc_replay_bad3.txt");
    std::ofstream(path) << "#tasks\n0,0,1.0\nnot-a-number,0,1.0\n";
    try {
      load_replay(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line_number == 3);
    }
    std::remove(path.c_str());
  }
}

TEST_SUITE_END();
