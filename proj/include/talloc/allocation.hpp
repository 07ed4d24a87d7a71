#pragma once

#include <string>
#include <vector>

#include "talloc/core.hpp"
#include "talloc/rng.hpp"

namespace talloc {

// Per-annotator linear scorer with a trailing bias weight; the score for
// annotator i is sigmoid(w_i . [x; 1]).
struct LogisticAllocator {
  int m = 0;
  int dim = 0;                  // feature dimension (bias excluded)
  std::vector<double> weights;  // row-major, m x (dim+1)

  static LogisticAllocator zeros(int m, int dim);

  double* row(int i) { return weights.data() + static_cast<size_t>(i) * (dim + 1); }
  const double* row(int i) const {
    return weights.data() + static_cast<size_t>(i) * (dim + 1);
  }
};

double sigmoid(double z);

// Raw per-annotator confidences in (0,1). Throws DimensionMismatchError if
// the task's feature dimension differs from the model's.
std::vector<double> alloc_scores(const LogisticAllocator& model,
                                 const Task& task);

// Normalized dSim column for the category. The probability floor resolves
// all-zero columns to uniform.
AllocationDist dsim_prior_dist(const DSimMatrix& dsim, int category);

// Targets are clamped this far away from {0,1} during pretraining so the
// squared-error gradient through the sigmoid cannot vanish at saturation.
constexpr double kPretrainTargetClamp = 0.05;

// Fits the scorers to the dSim targets of each task's category by SGD on
// squared error; `iters` counts shuffled passes over the sample set. The
// regression runs on standardized features and the affine map is folded
// back into the returned weights, so the model's contract is unchanged.
LogisticAllocator pretrain_to_dsim(LogisticAllocator model,
                                   const std::vector<Task>& tasks,
                                   const DSimMatrix& dsim, double lr,
                                   int iters, Rng& rng);

// Squared-error objective used by pretraining, exposed for gradient checks.
double pretrain_mse(const LogisticAllocator& model, const Task& task,
                    const std::vector<double>& targets);
std::vector<double> pretrain_mse_grad(const LogisticAllocator& model,
                                      const Task& task,
                                      const std::vector<double>& targets);

// mu * prior + (1 - mu) * learned. Throws MuOutOfRangeError outside [0,1].
AllocationDist smooth_combine(const AllocationDist& prior,
                              const AllocationDist& learned, double mu);

// Prior weight at step t: T_d / (t + T_d).
double mu_schedule(long t, double T_d);

// Per-category weight rows over annotators, each row a simplex.
struct TabularAllocator {
  int categories = 0;
  int m = 0;
  std::vector<double> w;  // row-major, categories x m

  static TabularAllocator uniform(int categories, int m);
  double* row(int z) { return w.data() + static_cast<size_t>(z) * m; }
  const double* row(int z) const {
    return w.data() + static_cast<size_t>(z) * m;
  }
};

// Rewarded annotators gain delta each; the rest lose their normalization
// share |R| * delta / (m - |R|). Entries are clipped at zero and the row is
// renormalized to an exact simplex.
TabularAllocator tabular_update(const TabularAllocator& model, int category,
                                const std::vector<char>& rewarded,
                                double delta);

// Raw reward/penalty application with explicit magnitudes; no clipping
// compensation beyond the zero floor and no renormalization. Used by the
// one-step theory checks where the measured quantity is the raw change.
void apply_reward_penalty(std::vector<double>& row,
                          const std::vector<char>& rewarded,
                          double delta_reward, double delta_penalty);

// Text checkpoint: "m dim" header then m rows of dim+1 weights at 17
// significant digits (bit-exact round trip).
void save_checkpoint(const LogisticAllocator& model, const std::string& path);
LogisticAllocator load_checkpoint(const std::string& path);

}  // namespace talloc
