#include "talloc/theory.hpp"

#include <cmath>

#include "talloc/annotators.hpp"

namespace talloc {

namespace {

// Closed-form accuracy of a weight row against the stylized pool: annotator
// i is right on group z with probability 1 when unbiased for z, else 0.5.
double row_accuracy(const double* row, int m, int n_biased_against_0, int z) {
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const bool biased_here = (i < n_biased_against_0) ? (z == 0) : (z == 1);
    acc += row[i] * (biased_here ? 0.5 : 1.0);
  }
  return acc;
}

int sample_from_row(const double* row, int m, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    acc += row[i];
    if (u < acc) return i;
  }
  return m - 1;
}

}  // namespace

std::vector<double> disparity_persistence_trajectory(const StylizedPool& pool,
                                                     int steps, int trials,
                                                     double delta,
                                                     std::uint64_t seed) {
  const int m = pool.m;
  const int n_biased0 = static_cast<int>(std::lround(pool.alpha * m));
  std::vector<double> mean_gap(static_cast<size_t>(steps) + 1, 0.0);

  std::vector<char> rewarded(static_cast<size_t>(m), 0);
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, "disparity-persistence", static_cast<std::uint64_t>(trial)));
    TabularAllocator tab = TabularAllocator::uniform(2, m);
    mean_gap[0] += row_accuracy(tab.row(1), m, n_biased0, 1) -
                   row_accuracy(tab.row(0), m, n_biased0, 0);
    for (int step = 1; step <= steps; ++step) {
      const int z = rng.bernoulli(0.5);
      const int chosen = sample_from_row(tab.row(z), m, rng);
      // k = 1: the chosen annotator always matches the aggregate (itself),
      // so it is rewarded regardless of correctness.
      std::fill(rewarded.begin(), rewarded.end(), 0);
      rewarded[static_cast<size_t>(chosen)] = 1;
      tab = tabular_update(tab, z, rewarded, delta);
      mean_gap[static_cast<size_t>(step)] +=
          row_accuracy(tab.row(1), m, n_biased0, 1) -
          row_accuracy(tab.row(0), m, n_biased0, 0);
    }
  }
  for (double& g : mean_gap) g /= static_cast<double>(trials);
  return mean_gap;
}

DisparityBounds dsim_disparity_bounds(double alpha, double gamma) {
  if (alpha <= 0.5 || alpha >= 1.0) {
    throw OutOfRangeError("alpha must lie in (0.5, 1)");
  }
  if (gamma < 0.0 || gamma > 1.0) {
    throw OutOfRangeError("gamma must lie in [0, 1]");
  }
  DisparityBounds out;
  // Error excess on each group when one annotator is drawn proportionally
  // to dSim: biased annotators hold mass alpha*gamma against (1-alpha) on
  // group 0, and (1-alpha)*gamma against alpha on group 1.
  const double err0 = 0.5 * (alpha * gamma) / ((1.0 - alpha) + alpha * gamma);
  const double err1 =
      0.5 * ((1.0 - alpha) * gamma) / ((1.0 - alpha) * gamma + alpha);
  out.disc = err0 - err1;
  out.lower = gamma / 2.0;
  out.upper = alpha / (1.0 - alpha) * gamma / 2.0;
  return out;
}

GainStats exploitation_gain(double beta, int m, double delta, long trials,
                            std::uint64_t seed) {
  if (beta < 0.0 || beta > 1.0) throw OutOfRangeError("beta must lie in [0,1]");
  if (m < 2) throw OutOfRangeError("need at least 2 annotators");

  // Target annotator takes (1+beta)/2 of the row; the others split the rest
  // evenly, so the target's margin over the runner-up is at least beta.
  std::vector<double> row(static_cast<size_t>(m),
                          (1.0 - (1.0 + beta) / 2.0) / (m - 1));
  row[0] = (1.0 + beta) / 2.0;

  const double penalty_share = delta / static_cast<double>(m - 1);
  double sum = 0.0, sumsq = 0.0;
  Rng rng(seed);
  for (long trial = 0; trial < trials; ++trial) {
    const int chosen = sample_from_row(row.data(), m, rng);
    // Annotator 0 is always correct, everyone else always wrong. A correct
    // selection is rewarded delta (others each pay delta/(m-1)); a wrong
    // selection pays delta with the complement rewarded delta/(m-1) each.
    const double change = (chosen == 0) ? delta : penalty_share;
    sum += change;
    sumsq += change * change;
  }
  GainStats g;
  g.trials = trials;
  g.mean = sum / static_cast<double>(trials);
  const double var =
      (sumsq - sum * sum / static_cast<double>(trials)) /
      static_cast<double>(trials - 1);
  g.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(trials));
  return g;
}

double exploration_threshold(int k, int m) {
  if (k < 1 || k % 2 == 0) throw OutOfRangeError("k must be odd and >= 1");
  if (m < 1) throw OutOfRangeError("m must be >= 1");
  return 1.0 - std::pow(1.0 - static_cast<double>(k) / (2.0 * m),
                        1.0 / static_cast<double>(k));
}

GainStats exploration_weight_change(double eps, int k, int m, long trials,
                                    std::uint64_t seed, double delta_penalty) {
  if (eps < 0.0 || eps > 1.0) throw OutOfRangeError("eps must lie in [0,1]");
  if (m < 3) throw OutOfRangeError("need at least 3 annotators");

  // Row layout: target (perfect accuracy) at eps, one strong accurate
  // annotator at 0.6 so that correct votes dominate, the rest (coin-flip
  // annotators on this group) share what is left.
  const double accurate_mass = 0.6;
  if (eps > 1.0 - accurate_mass) {
    throw OutOfRangeError("eps leaves no mass for the rest of the pool");
  }
  std::vector<double> row(static_cast<size_t>(m),
                          (1.0 - accurate_mass - eps) / (m - 2));
  row[0] = eps;
  row[1] = accurate_mass;

  const double delta_reward = (2.0 * m / static_cast<double>(k) - 1.0) * delta_penalty;

  std::vector<int> members(static_cast<size_t>(k));
  std::vector<int> votes(static_cast<size_t>(k));
  double sum = 0.0, sumsq = 0.0;
  Rng rng(seed);
  for (long trial = 0; trial < trials; ++trial) {
    const int y = rng.bernoulli(0.5);
    for (int j = 0; j < k; ++j) {
      members[static_cast<size_t>(j)] = sample_from_row(row.data(), m, rng);
      const bool accurate = members[static_cast<size_t>(j)] <= 1;
      votes[static_cast<size_t>(j)] =
          accurate ? y : (rng.bernoulli(0.5) ? y : 1 - y);
    }
    const int yhat = majority_vote(votes);
    bool target_rewarded = false;
    for (int j = 0; j < k; ++j) {
      if (members[static_cast<size_t>(j)] == 0 &&
          votes[static_cast<size_t>(j)] == yhat) {
        target_rewarded = true;
        break;
      }
    }
    const double raw = target_rewarded ? delta_reward : -delta_penalty;
    // Weight floor at zero mirrors the clipping rule of the tabular model.
    const double change = target_rewarded ? raw : std::max(raw, -eps);
    sum += change;
    sumsq += change * change;
  }
  GainStats g;
  g.trials = trials;
  g.mean = sum / static_cast<double>(trials);
  const double var =
      (sumsq - sum * sum / static_cast<double>(trials)) /
      static_cast<double>(trials - 1);
  g.stderr_ = std::sqrt(std::max(0.0, var) / static_cast<double>(trials));
  return g;
}

}  // namespace talloc
