#pragma once

#include <optional>
#include <vector>

#include "talloc/core.hpp"
#include "talloc/datagen.hpp"
#include "talloc/rng.hpp"

namespace talloc {

// Perfect oracle on its own category, acc_out elsewhere.
struct ClusterExpert {
  int expert_color = 0;
  double acc_in = 1.0;
  double acc_out = 0.2;
};

int cluster_expert_label(const ClusterExpert& e, const Task& task, int gold,
                         Rng& rng);

// Always correct on group 1-j, a coin flip on group j.
struct BiasedAnnotator {
  int biased_against = 0;
};

int biased_label(const BiasedAnnotator& a, int task_group, int gold, Rng& rng);

// Labels are realized once per (annotator, task) pair and cached, so an
// annotator answers the same task identically no matter how often it is
// queried within a trial.
class LabelTable {
 public:
  LabelTable(const std::vector<ClusterExpert>& experts,
             const std::vector<Task>& tasks, const std::vector<int>& gold,
             Rng& rng);

  int label(int annotator, int task_index) const {
    return labels_[static_cast<size_t>(annotator) * n_tasks_ + task_index];
  }
  int m() const { return m_; }

 private:
  int m_ = 0;
  size_t n_tasks_ = 0;
  std::vector<signed char> labels_;
};

// Recorded label, or nullopt when the annotator never labeled the task.
std::optional<int> replay_label(const ReplayDataset& ds, int annotator,
                                int task_index);

struct RankedLabel {
  int annotator;
  int label;
};

// Walks annotators by descending dist score (ties by ascending id) and
// collects labels from available annotators until `want` labels are
// gathered or the pool is exhausted.
std::vector<RankedLabel> ranked_available_query(const ReplayDataset& ds,
                                                int task_index,
                                                const AllocationDist& dist,
                                                int want);

}  // namespace talloc
