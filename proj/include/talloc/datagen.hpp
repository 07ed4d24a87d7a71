#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "talloc/core.hpp"
#include "talloc/rng.hpp"

namespace talloc {

// 2D three-cluster dataset: one shared mean draw and one shared diagonal
// covariance per dataset, clusters shifted by fixed offsets along both axes.
struct SyntheticDatasetSpec {
  int n_points = 10000;
  int n_clusters = 3;
  std::array<double, 3> cluster_offsets{0.0, 2.5, 5.0};
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  std::vector<Task> tasks;  // category = cluster index
  std::vector<int> gold;    // Bernoulli(0.5), independent of features
  double mu = 0.0;
  std::array<double, 2> variances{0.0, 0.0};
};

SyntheticDataset gen_clusters(const SyntheticDatasetSpec& spec);

// dSim with noise s in [0, 2/3]: 1-s on the annotator's own category,
// s/2 elsewhere. Rows sum to 1 exactly for every s.
DSimMatrix gen_dsim_noisy(double s, int category_count = 3, int m = 3);

// Availability-constrained annotation log: every task carries its recorded
// annotations plus two gold readings (majority over everyone vs majority
// over the group-matched annotators).
struct ReplayDataset {
  std::vector<Task> tasks;
  std::vector<int> annotator_category;  // size m
  // per task (by index): (annotator id, label), sorted by annotator id
  std::vector<std::vector<std::pair<int, int>>> annotations;
  std::vector<int> gold_objective;
  std::vector<int> gold_subjective;
  std::unordered_map<int, int> task_index_by_id;

  int m() const { return static_cast<int>(annotator_category.size()); }
  int n_tasks() const { return static_cast<int>(tasks.size()); }
};

struct SurrogateReplayConfig {
  std::uint64_t seed = 0;
  int n_tasks = 3000;
  int annotators_per_group = 30;
  int n_groups = 3;
  int feature_dim = 8;
  int annotations_per_group = 5;
  double p_match = 0.80;  // accuracy of group-matched annotators vs latent label
  double p_other = 0.65;
};

// Synthetic stand-in for an annotation log with demographic structure:
// every task gets annotations_per_group labels from each group; annotators
// matching the task's group are more accurate than the rest.
ReplayDataset gen_surrogate_replay(const SurrogateReplayConfig& cfg);

// Line-oriented text format with sections #tasks / #annotators /
// #annotations / #gold_objective / #gold_subjective.
ReplayDataset load_replay(const std::string& path);
void save_replay(const ReplayDataset& ds, const std::string& path);

// Validates referential integrity; throws ValidationError naming the
// violated invariant. Called by load_replay.
void validate_replay(const ReplayDataset& ds);

}  // namespace talloc
