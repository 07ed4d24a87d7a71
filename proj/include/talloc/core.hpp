#pragma once

#include <vector>

#include "talloc/errors.hpp"

namespace talloc {

// Floor applied to nonnegative weights before normalization. Guards
// degenerate all-zero rows (they resolve to the uniform distribution).
constexpr double kProbFloor = 1e-12;
constexpr double kSimplexTol = 1e-9;

// One unit of allocation: a feature vector plus a single category id.
struct Task {
  int id = 0;
  std::vector<double> features;
  int category = 0;
};

// Probability distribution over the m annotators.
struct AllocationDist {
  std::vector<double> p;
  int size() const { return static_cast<int>(p.size()); }
};

// Prior similarity scores in [0,1], one row per annotator, one column per
// category.
struct DSimMatrix {
  int m = 0;
  int categories = 0;
  std::vector<double> scores;  // row-major, m x categories

  double at(int annotator, int category) const {
    return scores[static_cast<size_t>(annotator) * categories + category];
  }
  double& at(int annotator, int category) {
    return scores[static_cast<size_t>(annotator) * categories + category];
  }
};

// k annotator indices sampled with replacement; k is odd so majority vote
// never ties.
struct Committee {
  std::vector<int> members;
  int size() const { return static_cast<int>(members.size()); }
};

// Floors entries at kProbFloor and divides by the sum.
// Throws AllZeroError only for an empty vector; an all-zero input resolves
// to uniform thanks to the floor.
AllocationDist normalize(const std::vector<double>& weights);

// Majority vote over binary labels; requires odd length.
int majority_vote(const std::vector<int>& labels);

bool is_simplex(const std::vector<double>& p, double tol = kSimplexTol);

int argmax_index(const std::vector<double>& v);

}  // namespace talloc
