#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "talloc/allocation.hpp"
#include "talloc/datagen.hpp"

using namespace talloc;

namespace {

Task make_task(std::vector<double> features, int category = 0, int id = 0) {
  Task t;
  t.id = id;
  t.category = category;
  t.features = std::move(features);
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("allocation");

TEST_CASE("alloc scores") {
  auto model = LogisticAllocator::zeros(3, 2);
  const Task t = make_task({1.0, -2.0});
  for (double v : alloc_scores(model, t)) CHECK(v == doctest::Approx(0.5));

  model.row(1)[2] = 10.0;  // bias only
  const auto s = alloc_scores(model, t);
  CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-4));

  const auto again = alloc_scores(model, make_task({1.0, -2.0}, 2, 9));
  CHECK(s == again);

  CHECK_THROWS_AS(alloc_scores(model, make_task({1.0})),
                  DimensionMismatchError);
}

TEST_CASE("dSim prior distribution") {
  const auto d0 = gen_dsim_noisy(0.0);
  const auto blue = dsim_prior_dist(d0, 1);
  CHECK(blue.p[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(blue.p[0] == doctest::Approx(0.0).epsilon(1e-9));

  const auto dmax = gen_dsim_noisy(2.0 / 3.0);
  for (double v : dsim_prior_dist(dmax, 2).p) {
    CHECK(v == doctest::Approx(1.0 / 3.0));
  }

  // Two-level scores: 1 for unbiased annotators, 0.5 for biased ones.
  DSimMatrix two_level;
  two_level.m = 10;
  two_level.categories = 1;
  two_level.scores.assign(10, 1.0);
  for (int i = 0; i < 6; ++i) two_level.scores[static_cast<size_t>(i)] = 0.5;
  const auto dist = dsim_prior_dist(two_level, 0);
  const double total = 6 * 0.5 + 4 * 1.0;
  for (int i = 0; i < 6; ++i) CHECK(dist.p[static_cast<size_t>(i)] == doctest::Approx(0.5 / total));
  for (int i = 6; i < 10; ++i) CHECK(dist.p[static_cast<size_t>(i)] == doctest::Approx(1.0 / total));
}

TEST_CASE("dSim prior is invariant to positive rescaling of the column") {
  DSimMatrix a;
  a.m = 4;
  a.categories = 1;
  a.scores = {0.9, 0.1, 0.4, 0.2};
  DSimMatrix b = a;
  for (double& v : b.scores) v *= 0.37;
  const auto da = dsim_prior_dist(a, 0);
  const auto db = dsim_prior_dist(b, 0);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(da.p[i] == doctest::Approx(db.p[i]).epsilon(1e-9));
  }
}

TEST_CASE("pretraining encodes the prior ranking") {
  SyntheticDatasetSpec spec;
  spec.seed = 400;
  spec.n_points = 2000;
  const auto ds = gen_clusters(spec);
  const auto dsim = gen_dsim_noisy(0.0);
  std::vector<Task> head(ds.tasks.begin(), ds.tasks.begin() + 500);

  Rng rng(8);
  auto model = pretrain_to_dsim(LogisticAllocator::zeros(3, 2), head, dsim, 0.5,
                                1000, rng);
  long agree = 0, total = 0;
  for (size_t i = 500; i < ds.tasks.size(); ++i) {
    const auto s = alloc_scores(model, ds.tasks[i]);
    ++total;
    if (argmax_index(s) == ds.tasks[i].category) ++agree;
  }
  CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.9);
}

TEST_CASE("zero pretraining iterations leave the model unchanged") {
  SyntheticDatasetSpec spec;
  spec.seed = 401;
  spec.n_points = 10;
  const auto ds = gen_clusters(spec);
  Rng rng(9);
  const auto model = pretrain_to_dsim(LogisticAllocator::zeros(3, 2), ds.tasks,
                                      gen_dsim_noisy(0.3), 0.5, 0, rng);
  for (double w : model.weights) CHECK(w == 0.0);
}

TEST_CASE("uniform targets pull the scores together") {
  SyntheticDatasetSpec spec;
  spec.seed = 402;
  spec.n_points = 500;
  const auto ds = gen_clusters(spec);
  Rng rng(10);
  const auto model = pretrain_to_dsim(LogisticAllocator::zeros(3, 2), ds.tasks,
                                      gen_dsim_noisy(2.0 / 3.0), 0.5, 200, rng);
  for (const Task& t : ds.tasks) {
    const auto s = alloc_scores(model, t);
    const double lo = *std::min_element(s.begin(), s.end());
    const double hi = *std::max_element(s.begin(), s.end());
    CHECK(hi - lo < 0.1);
  }
}

TEST_CASE("pretraining MSE gradient matches finite differences") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto model = LogisticAllocator::zeros(3, 2);
    for (double& w : model.weights) w = rng.uniform(-1.0, 1.0);
    const Task t = make_task({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
    const std::vector<double> targets = {rng.uniform(), rng.uniform(),
                                         rng.uniform()};
    const auto g = pretrain_mse_grad(model, t, targets);
    const double h = 1e-5;
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < model.weights.size(); ++j) {
      auto plus = model;
      auto minus = model;
      plus.weights[j] += h;
      minus.weights[j] -= h;
      const double fd =
          (pretrain_mse(plus, t, targets) - pretrain_mse(minus, t, targets)) /
          (2.0 * h);
      num += (fd - g[j]) * (fd - g[j]);
      den += fd * fd;
    }
    CHECK(std::sqrt(num) <= 1e-4 * std::max(1.0, std::sqrt(den)));
  }
}

TEST_CASE("smooth combine") {
  AllocationDist prior{{1.0, 0.0}};
  AllocationDist learned{{0.0, 1.0}};
  CHECK(smooth_combine(prior, learned, 1.0).p == prior.p);
  CHECK(smooth_combine(prior, learned, 0.0).p == learned.p);
  const auto mid = smooth_combine(prior, learned, 0.5);
  CHECK(mid.p[0] == doctest::Approx(0.5));
  CHECK(mid.p[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(smooth_combine(prior, learned, 1.5), MuOutOfRangeError);
  CHECK_THROWS_AS(smooth_combine(prior, learned, -0.1), MuOutOfRangeError);
}

TEST_CASE("smooth combine preserves the simplex for random inputs") {
  Rng rng(12);
  for (int rep = 0; rep < 10000; ++rep) {
    const int n = rng.uniform_int(2, 6);
    std::vector<double> a(static_cast<size_t>(n)), b(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<size_t>(i)] = rng.uniform();
      b[static_cast<size_t>(i)] = rng.uniform();
    }
    const auto out =
        smooth_combine(normalize(a), normalize(b), rng.uniform());
    CHECK(is_simplex(out.p));
  }
}

TEST_CASE("mu schedule") {
  CHECK(mu_schedule(10000, 1e4) == doctest::Approx(0.5));
  CHECK(mu_schedule(1, 1e4) == doctest::Approx(10000.0 / 10001.0));
  double prev = 1.0;
  for (long t = 1; t <= 100000; t *= 10) {
    const double mu = mu_schedule(t, 1e4);
    CHECK(mu < prev);
    prev = mu;
  }
  CHECK(mu_schedule(1000000000L, 1e4) < 1e-4);
}

TEST_CASE("tabular update rewards and renormalizes") {
  auto tab = TabularAllocator::uniform(1, 3);
  std::vector<char> rewarded{0, 1, 0};
  const auto next = tabular_update(tab, 0, rewarded, 0.1);
  CHECK(next.row(0)[1] == doctest::Approx(1.0 / 3.0 + 0.1));
  CHECK(next.row(0)[0] == doctest::Approx(1.0 / 3.0 - 0.05));
  CHECK(next.row(0)[2] == doctest::Approx(1.0 / 3.0 - 0.05));
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += next.row(0)[i];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  const auto same = tabular_update(tab, 0, rewarded, 0.0);
  CHECK(same.w == tab.w);
}

TEST_CASE("tabular update keeps the row an exact simplex under clipping") {
  Rng rng(13);
  auto tab = TabularAllocator::uniform(2, 5);
  for (int step = 0; step < 5000; ++step) {
    const int z = rng.bernoulli(0.5);
    std::vector<char> rewarded(5, 0);
    const int n_rewarded = rng.uniform_int(1, 4);
    for (int i = 0; i < n_rewarded; ++i) {
      rewarded[static_cast<size_t>(rng.uniform_int(0, 4))] = 1;
    }
    tab = tabular_update(tab, z, rewarded, rng.uniform(0.0, 0.2));
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
      CHECK(tab.row(z)[i] >= 0.0);
      sum += tab.row(z)[i];
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("checkpoints round-trip bit exactly") {
  Rng rng(14);
  auto model = LogisticAllocator::zeros(4, 3);
  for (double& w : model.weights) w = rng.normal(0.0, 2.0);
  const std::string path =
      (std::filesystem::temp_directory_path() / "talloc_ckpt.txt").string();
  save_checkpoint(model, path);
  const auto back = load_checkpoint(path);
  CHECK(back.m == model.m);
  CHECK(back.dim == model.dim);
  REQUIRE(back.weights.size() == model.weights.size());
  for (size_t i = 0; i < model.weights.size(); ++i) {
    CHECK(back.weights[i] == model.weights[i]);
  }
  std::remove(path.c_str());
}

TEST_SUITE_END();
