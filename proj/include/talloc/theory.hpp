#pragma once

#include <cstdint>
#include <vector>

#include "talloc/allocation.hpp"
#include "talloc/rng.hpp"

namespace talloc {

// Stylized annotator pool for the closed-form checks: a binary group
// attribute, alpha fraction of the pool biased against group 0 and the rest
// biased against group 1. A biased annotator is always right on the other
// group and a coin flip on its biased group.
struct StylizedPool {
  int m = 10;
  double alpha = 0.7;   // fraction biased against z = 0
  double gamma = 0.5;   // dSim score given to biased annotators
};

// Runs the tabular closed loop (k = 1, uniform start, the sampled annotator
// is rewarded and the rest absorb the normalization penalty) and returns,
// per step, the mean over trials of the closed-form accuracy gap between
// the two groups (group 1 minus group 0). Entry 0 is the gap before any
// update, which equals alpha - 0.5 exactly.
std::vector<double> disparity_persistence_trajectory(const StylizedPool& pool,
                                                     int steps, int trials,
                                                     double delta,
                                                     std::uint64_t seed);

struct DisparityBounds {
  double disc;   // closed-form accuracy gap of the dSim-induced allocation
  double lower;  // gamma / 2
  double upper;  // alpha / (1 - alpha) * gamma / 2
};

// Closed-form gap between group accuracies when a single annotator is drawn
// from the allocation induced by dSim(unbiased) = 1, dSim(biased) = gamma.
DisparityBounds dsim_disparity_bounds(double alpha, double gamma);

struct GainStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  long trials = 0;
};

// One-step expected weight change of the most-accurate annotator when the
// weight row is seeded with a dSim gap of at least beta: row = (1+beta)/2
// for the target and the remainder split evenly. A correct selection earns
// the target +delta (others pay delta/(m-1)); selecting one of the
// always-wrong others penalizes it by delta with the complement rewarded
// delta/(m-1) each. The advertised lower bound on the mean gain is
// 2*beta*delta.
GainStats exploitation_gain(double beta, int m, double delta, long trials,
                            std::uint64_t seed);

// Closed-form discovery threshold: a perfectly accurate annotator holding
// weight eps sees a positive expected weight change iff
// eps > 1 - (1 - k/(2m))^(1/k).
double exploration_threshold(int k, int m);

// Monte-Carlo mean of the one-step raw weight change of the target
// annotator at weight eps, with committee size k. Majority-side committee
// members are rewarded (2m/k - 1) * delta_penalty each and everyone else
// pays delta_penalty; the change is measured without renormalization, which
// is the regime the threshold formula describes.
GainStats exploration_weight_change(double eps, int k, int m, long trials,
                                    std::uint64_t seed,
                                    double delta_penalty = 0.01);

}  // namespace talloc
