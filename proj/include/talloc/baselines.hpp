#pragma once

#include <optional>
#include <vector>

#include "talloc/training.hpp"

namespace talloc {

// Running agreement-with-aggregate estimates per annotator, bucketed by the
// aggregated label value. Unseen cells read as 0.5.
struct AccuracyEstimates {
  int m = 0;
  std::vector<double> mean;  // m x 2
  std::vector<long> count;   // m x 2

  static AccuracyEstimates fresh(int m);
  double cell(int annotator, int y) const;
  double mean_accuracy(int annotator) const;  // average over the two buckets
};

void goel_update_estimates(AccuracyEstimates& est,
                           const std::vector<BatchSample>& batch);

// Input-independent allocation from the estimates: beta/m smoothing plus
// (1-beta) spread over the positive parts of (mean accuracy - 0.5),
// uniform when no annotator clears 0.5.
AllocationDist goel_allocate(const AccuracyEstimates& est, double beta);

struct GoelResult {
  AllocationDist dist;
  AccuracyEstimates est;
};

// Closed-loop run: committees come from the current (single) allocation,
// estimates accumulate against the committee majority, and the allocation
// is refreshed every `batch` samples.
GoelResult goel_run(const std::vector<Task>& stream, const QueryFn& query,
                    int batch, double beta, int m, Rng& rng);

struct TranConfig {
  double explore_frac = 0.1;
  long budget = 1000;
  int k = 3;  // exploration committee size (simulated pools)
};

struct TranResult {
  AccuracyEstimates est;
  // Per test task: assigned annotator, or nullopt when availability and
  // budgets left no feasible annotator.
  std::vector<std::optional<int>> assignments;
};

// Availability hook: returns true when the annotator can label the task.
using AvailabilityFn = std::function<bool(int annotator, const Task& task)>;

// Uniform exploration to estimate annotator agreement with the aggregate,
// then greedy budget-limited assignment of test tasks to the best estimate.
TranResult tran_run(const std::vector<Task>& train_stream,
                    const std::vector<Task>& test_tasks, const QueryFn& query,
                    const TranConfig& cfg, int m,
                    const AvailabilityFn& available, Rng& rng);

// The no-prior baseline: smooth-matching with the prior weight pinned to 0.
RunResult keswani_run(const std::vector<Task>& stream, const QueryFn& query,
                      const TrainConfig& cfg, int m, int feature_dim, Rng& rng);

}  // namespace talloc
