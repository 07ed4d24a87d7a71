#include "talloc/core.hpp"

#include <algorithm>
#include <cmath>

namespace talloc {

AllocationDist normalize(const std::vector<double>& weights) {
  if (weights.empty()) {
    throw AllZeroError("cannot normalize an empty weight vector");
  }
  AllocationDist d;
  d.p.resize(weights.size());
  double sum = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double v = std::max(weights[i], kProbFloor);
    d.p[i] = v;
    sum += v;
  }
  for (double& v : d.p) v /= sum;
  return d;
}

int majority_vote(const std::vector<int>& labels) {
  if (labels.empty() || labels.size() % 2 == 0) {
    throw EvenCommitteeError("majority vote needs an odd number of labels, got " +
                             std::to_string(labels.size()));
  }
  long ones = 0;
  for (int b : labels) ones += b;
  return (2 * ones > static_cast<long>(labels.size())) ? 1 : 0;
}

bool is_simplex(const std::vector<double>& p, double tol) {
  double sum = 0.0;
  for (double v : p) {
    if (v < -tol || v > 1.0 + tol || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::fabs(sum - 1.0) <= tol;
}

int argmax_index(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace talloc
