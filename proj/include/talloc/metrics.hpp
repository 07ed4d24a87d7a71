#pragma once

#include <optional>
#include <string>
#include <vector>

#include "talloc/errors.hpp"

namespace talloc {

// Per-trial evaluation record.
struct TrialReport {
  std::uint64_t seed = 0;
  std::string method;
  double label_accuracy = 0.0;
  std::optional<double> assignment_accuracy;
  std::optional<double> auc;
};

// Fraction of exact matches. Throws LengthMismatchError on unequal sizes.
double label_accuracy(const std::vector<int>& preds,
                      const std::vector<int>& gold);

// Rank-based AUC (Mann-Whitney), ties contribute 1/2.
// Throws SingleClassError if gold is constant.
double auc(const std::vector<double>& scores, const std::vector<int>& gold);

struct MeanStderr {
  double mean;
  double stderr_;
};

// Sample mean and stderr = sample std / sqrt(n). Needs at least 2 values.
MeanStderr mean_stderr(const std::vector<double>& values);

}  // namespace talloc
