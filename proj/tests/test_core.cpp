#include <doctest.h>

#include <cmath>

#include "talloc/core.hpp"
#include "talloc/rng.hpp"

using namespace talloc;

TEST_SUITE_BEGIN("core");

TEST_CASE("normalize divides by the sum") {
  const auto d = normalize({0.5, 0.5, 1.0});
  CHECK(d.p[0] == doctest::Approx(0.25));
  CHECK(d.p[1] == doctest::Approx(0.25));
  CHECK(d.p[2] == doctest::Approx(0.5));
}

TEST_CASE("normalize resolves all-zero input to uniform via the floor") {
  const auto d = normalize({0.0, 0.0, 0.0});
  for (double v : d.p) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("normalize keeps ratios of sub-floor weights after flooring") {
  const auto d = normalize({2e-12, 1e-12});
  CHECK(d.p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(d.p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("normalize rejects an empty vector only") {
  CHECK_THROWS_AS(normalize({}), AllZeroError);
}

TEST_CASE("normalize output sums to one and is scale invariant") {
  Rng rng(20240);
  for (int rep = 0; rep < 10000; ++rep) {
    const int n = rng.uniform_int(1, 8);
    std::vector<double> w(static_cast<size_t>(n));
    for (double& v : w) v = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.0, 5.0);
    const auto d = normalize(w);
    CHECK(is_simplex(d.p));

    const double c = rng.uniform(1e-3, 1e3);
    std::vector<double> scaled = w;
    for (double& v : scaled) v *= c;
    const auto d2 = normalize(scaled);
    for (size_t i = 0; i < d.p.size(); ++i) {
      // Scaling can pull entries across the floor; away from it the two
      // normalizations agree.
      if (w[i] > 1e-9 || (w[i] == 0.0 && c >= 1.0)) {
        CHECK(std::fabs(d.p[i] - d2.p[i]) < 1e-9);
      }
    }
  }
}

TEST_CASE("majority vote basics") {
  CHECK(majority_vote({1}) == 1);
  CHECK(majority_vote({1, 0, 1}) == 1);
  CHECK(majority_vote({0, 0, 1, 0, 1}) == 0);
}

TEST_CASE("majority vote rejects even committees") {
  CHECK_THROWS_AS(majority_vote({1, 0}), EvenCommitteeError);
  CHECK_THROWS_AS(majority_vote({}), EvenCommitteeError);
}

TEST_CASE("majority vote is permutation invariant and flips with its inputs") {
  Rng rng(555);
  for (int rep = 0; rep < 2000; ++rep) {
    const int n = 2 * rng.uniform_int(0, 3) + 1;
    std::vector<int> labels(static_cast<size_t>(n));
    for (int& b : labels) b = rng.bernoulli(0.5);
    const int ref = majority_vote(labels);

    std::vector<int> shuffled = labels;
    for (int i = n - 1; i > 0; --i) {
      std::swap(shuffled[static_cast<size_t>(i)],
                shuffled[static_cast<size_t>(rng.uniform_int(0, i))]);
    }
    CHECK(majority_vote(shuffled) == ref);

    std::vector<int> flipped = labels;
    for (int& b : flipped) b = 1 - b;
    CHECK(majority_vote(flipped) == 1 - ref);
  }
}

TEST_SUITE_END();
