#include <doctest.h>

#include <cmath>

#include "talloc/baselines.hpp"

using namespace talloc;

namespace {

BatchSample sample_for(int task_id, std::vector<int> members,
                       std::vector<int> labels, int yhat) {
  BatchSample s;
  s.task.id = task_id;
  s.task.features = {0.0};
  s.members = std::move(members);
  s.labels = std::move(labels);
  s.yhat = yhat;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("baselines");

TEST_CASE("estimate updates track agreement per aggregate value") {
  auto est = AccuracyEstimates::fresh(2);
  CHECK(est.cell(0, 0) == 0.5);  // unseen default
  CHECK(est.cell(1, 1) == 0.5);

  std::vector<BatchSample> batch;
  // Annotator 0 always agrees; annotator 1 agrees 3 of 4 times under yhat=1.
  for (int i = 0; i < 4; ++i) {
    batch.push_back(sample_for(i, {0, 1, 0}, {1, i == 0 ? 0 : 1, 1}, 1));
  }
  goel_update_estimates(est, batch);
  CHECK(est.cell(0, 1) == doctest::Approx(1.0));
  CHECK(est.cell(1, 1) == doctest::Approx(0.75));
  CHECK(est.cell(0, 0) == 0.5);  // still unseen
}

TEST_CASE("goel allocation rule") {
  auto est = AccuracyEstimates::fresh(3);
  // All cells unseen: the 0.5 default falls back to uniform.
  const auto uniform = goel_allocate(est, 0.1);
  for (double v : uniform.p) CHECK(v == doctest::Approx(1.0 / 3.0));

  // One annotator at 1.0, the others at exactly 0.5.
  est = AccuracyEstimates::fresh(3);
  std::vector<BatchSample> exact;
  exact.push_back(sample_for(0, {0, 1, 2}, {1, 1, 1}, 1));
  exact.push_back(sample_for(1, {0, 1, 2}, {1, 0, 0}, 1));
  exact.push_back(sample_for(2, {0, 1, 2}, {0, 0, 0}, 0));
  exact.push_back(sample_for(3, {0, 1, 2}, {0, 1, 1}, 0));
  goel_update_estimates(est, exact);
  CHECK(est.mean_accuracy(0) == doctest::Approx(1.0));
  CHECK(est.mean_accuracy(1) == doctest::Approx(0.5));
  CHECK(est.mean_accuracy(2) == doctest::Approx(0.5));

  const auto d = goel_allocate(est, 0.1);
  CHECK(d.p[0] == doctest::Approx(0.1 / 3.0 + 0.9));
  CHECK(d.p[1] == doctest::Approx(0.1 / 3.0));

  const auto full_smooth = goel_allocate(est, 1.0);
  for (double v : full_smooth.p) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("goel allocation is a simplex for every beta") {
  Rng rng(61);
  for (int rep = 0; rep < 500; ++rep) {
    auto est = AccuracyEstimates::fresh(4);
    for (int i = 0; i < 4; ++i) {
      for (int y = 0; y < 2; ++y) {
        const size_t idx = static_cast<size_t>(i) * 2 + y;
        est.count[idx] = rng.uniform_int(0, 5);
        est.mean[idx] = rng.uniform();
      }
    }
    const double beta = rng.uniform();
    CHECK(is_simplex(goel_allocate(est, beta).p));
  }
}

TEST_CASE("tran greedy assignment respects budgets") {
  // Deterministic query: all three annotators vote, 0 always matches the
  // aggregate, so exploration ranks annotator 0 on top.
  QueryFn query = [](const Task& task, const AllocationDist&, Rng&,
                     std::vector<int>& members, std::vector<int>& labels) {
    members = {0, 1, 2};
    labels = {1, 1, 0};
    (void)task;
  };
  std::vector<Task> train(30), test(6);
  for (int i = 0; i < 30; ++i) train[static_cast<size_t>(i)].id = i;
  for (int i = 0; i < 6; ++i) test[static_cast<size_t>(i)].id = 100 + i;
  Rng rng(62);

  SUBCASE("top annotator takes everything when its budget allows") {
    TranConfig cfg;
    cfg.budget = 10;
    const auto res = tran_run(train, test, query, cfg, 3,
                              [](int, const Task&) { return true; }, rng);
    for (const auto& a : res.assignments) {
      REQUIRE(a.has_value());
      CHECK(*a == 0);
    }
  }

  SUBCASE("unit budgets spread tasks over all annotators") {
    TranConfig cfg;
    cfg.budget = 2;
    const auto res = tran_run(train, test, query, cfg, 3,
                              [](int, const Task&) { return true; }, rng);
    std::vector<int> used(3, 0);
    for (const auto& a : res.assignments) {
      REQUIRE(a.has_value());
      used[static_cast<size_t>(*a)]++;
    }
    for (int u : used) CHECK(u == 2);
  }

  SUBCASE("infeasible total budget throws") {
    TranConfig cfg;
    cfg.budget = 1;
    std::vector<Task> big_test(4);
    CHECK_THROWS_AS(tran_run(train, big_test, query, cfg, 3,
                             [](int, const Task&) { return true; }, rng),
                    BudgetInfeasibleError);
  }
}

TEST_CASE("tran never exceeds the per-annotator budget") {
  Rng label_rng(63);
  QueryFn query = [&label_rng](const Task&, const AllocationDist&, Rng&,
                               std::vector<int>& members,
                               std::vector<int>& labels) {
    members = {0, 1, 2, 3, 4};
    labels.clear();
    for (int i = 0; i < 5; ++i) labels.push_back(label_rng.bernoulli(0.5));
  };
  std::vector<Task> train(100), test(40);
  for (int i = 0; i < 100; ++i) train[static_cast<size_t>(i)].id = i;
  for (int i = 0; i < 40; ++i) test[static_cast<size_t>(i)].id = 1000 + i;
  TranConfig cfg;
  cfg.budget = 9;
  Rng rng(64);
  const auto res = tran_run(train, test, query, cfg, 5,
                            [](int, const Task&) { return true; }, rng);
  std::vector<long> used(5, 0);
  for (const auto& a : res.assignments) {
    if (a) used[static_cast<size_t>(*a)]++;
  }
  for (long u : used) CHECK(u <= cfg.budget);
}

TEST_CASE("the no-prior baseline keeps the biased pool's accuracy gap") {
  // Stylized pool: 7 of 10 annotators biased against group 0. Training from
  // a cold start on the pool's own aggregated labels leaves the expected
  // group-accuracy gap at alpha - 0.5 = 0.2.
  const int m = 10;
  const int trials = 400;
  const int steps = 300;
  std::vector<BiasedAnnotator> pool;
  for (int i = 0; i < m; ++i) pool.push_back(BiasedAnnotator{i < 7 ? 0 : 1});

  double gap_sum = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng world_rng(derive_seed(9090, "biased-pool", static_cast<std::uint64_t>(trial)));
    std::vector<Task> stream(static_cast<size_t>(steps));
    std::vector<int> gold(static_cast<size_t>(steps));
    for (int t = 0; t < steps; ++t) {
      const int z = world_rng.bernoulli(0.5);
      stream[static_cast<size_t>(t)].id = t;
      stream[static_cast<size_t>(t)].category = z;
      stream[static_cast<size_t>(t)].features = {static_cast<double>(z)};
      gold[static_cast<size_t>(t)] = world_rng.bernoulli(0.5);
    }
    QueryFn query = [&](const Task& task, const AllocationDist& dist, Rng& rng,
                        std::vector<int>& members, std::vector<int>& labels) {
      const Committee c = sample_committee(dist, 1, rng);
      members = c.members;
      labels = {biased_label(pool[static_cast<size_t>(members[0])],
                             task.category, gold[static_cast<size_t>(task.id)],
                             rng)};
    };
    TrainConfig cfg;
    cfg.k = 1;
    cfg.batch = 10;
    cfg.eta = 0.1;
    Rng rng(derive_seed(9091, "biased-run", static_cast<std::uint64_t>(trial)));
    const RunResult res = keswani_run(stream, query, cfg, m, 1, rng);

    // Expected accuracy of the final allocation on each group, in closed
    // form: a biased annotator is a coin flip on its biased group.
    double acc[2];
    for (int z = 0; z < 2; ++z) {
      Task probe;
      probe.category = z;
      probe.features = {static_cast<double>(z)};
      const AllocationDist dist = normalize(alloc_scores(res.model, probe));
      acc[z] = 0.0;
      for (int i = 0; i < m; ++i) {
        const bool coin = pool[static_cast<size_t>(i)].biased_against == z;
        acc[z] += dist.p[static_cast<size_t>(i)] * (coin ? 0.5 : 1.0);
      }
    }
    gap_sum += acc[1] - acc[0];
  }
  const double mean_gap = gap_sum / trials;
  CHECK(mean_gap == doctest::Approx(0.2).epsilon(0.25));  // 0.2 +/- 0.05
}

TEST_CASE("the no-prior baseline is bit-identical to smooth with mu pinned 0") {
  SyntheticDatasetSpec spec;
  spec.n_points = 300;
  spec.seed = 65;
  const auto data = gen_clusters(spec);
  std::vector<ClusterExpert> experts{{0}, {1}, {2}};
  Rng lrng(66);
  const LabelTable labels(experts, data.tasks, data.gold, lrng);

  TrainConfig cfg;
  cfg.k = 3;
  cfg.batch = 10;
  cfg.eta = 0.1;
  cfg.T_d = 1e4;
  const QueryFn query = make_sampled_query(labels, cfg.k);

  Rng rng_a(7);
  const auto a = keswani_run(data.tasks, query, cfg, 3, 2, rng_a);

  TrainConfig pinned = cfg;
  pinned.mu_always_zero = true;
  const auto dsim = gen_dsim_noisy(0.3);
  Rng rng_b(7);
  const auto b = smooth_matching_run(data.tasks, query, dsim, pinned, 2, rng_b);

  CHECK(a.model.weights == b.model.weights);
  CHECK(a.history.to_csv() == b.history.to_csv());
}

TEST_SUITE_END();
