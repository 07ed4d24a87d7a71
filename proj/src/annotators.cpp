#include "talloc/annotators.hpp"

#include <algorithm>
#include <numeric>

namespace talloc {

int cluster_expert_label(const ClusterExpert& e, const Task& task, int gold,
                         Rng& rng) {
  const double acc = (task.category == e.expert_color) ? e.acc_in : e.acc_out;
  return rng.bernoulli(acc) ? gold : 1 - gold;
}

int biased_label(const BiasedAnnotator& a, int task_group, int gold, Rng& rng) {
  if (task_group == 1 - a.biased_against) return gold;
  return rng.bernoulli(0.5) ? gold : 1 - gold;
}

LabelTable::LabelTable(const std::vector<ClusterExpert>& experts,
                       const std::vector<Task>& tasks,
                       const std::vector<int>& gold, Rng& rng)
    : m_(static_cast<int>(experts.size())), n_tasks_(tasks.size()) {
  labels_.resize(static_cast<size_t>(m_) * n_tasks_);
  for (int a = 0; a < m_; ++a) {
    for (size_t t = 0; t < n_tasks_; ++t) {
      labels_[static_cast<size_t>(a) * n_tasks_ + t] = static_cast<signed char>(
          cluster_expert_label(experts[static_cast<size_t>(a)], tasks[t],
                               gold[t], rng));
    }
  }
}

std::optional<int> replay_label(const ReplayDataset& ds, int annotator,
                                int task_index) {
  const auto& ann = ds.annotations[static_cast<size_t>(task_index)];
  auto it = std::lower_bound(
      ann.begin(), ann.end(), std::make_pair(annotator, -1));
  if (it != ann.end() && it->first == annotator) return it->second;
  return std::nullopt;
}

std::vector<RankedLabel> ranked_available_query(const ReplayDataset& ds,
                                                int task_index,
                                                const AllocationDist& dist,
                                                int want) {
  std::vector<int> order(static_cast<size_t>(dist.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist.p[static_cast<size_t>(a)] != dist.p[static_cast<size_t>(b)]) {
      return dist.p[static_cast<size_t>(a)] > dist.p[static_cast<size_t>(b)];
    }
    return a < b;
  });
  std::vector<RankedLabel> out;
  for (int annot : order) {
    if (static_cast<int>(out.size()) >= want) break;
    if (auto l = replay_label(ds, annot, task_index)) {
      out.push_back({annot, *l});
    }
  }
  return out;
}

}  // namespace talloc
