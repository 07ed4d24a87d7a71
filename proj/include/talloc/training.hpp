#pragma once

#include <functional>
#include <string>
#include <vector>

#include "talloc/allocation.hpp"
#include "talloc/annotators.hpp"
#include "talloc/core.hpp"
#include "talloc/datagen.hpp"
#include "talloc/rng.hpp"

namespace talloc {

struct TrainConfig {
  int k = 3;          // committee size, odd
  int batch = 10;     // B
  double eta = 0.001;
  double T_d = 1e4;   // prior horizon (smooth only)
  bool pretrain = true;  // strict only
  int pretrain_samples = 500;
  double pretrain_lr = 0.5;
  int pretrain_iters = 1000;
  bool mu_always_zero = false;  // pins mu to 0 (the no-prior baseline)

  void validate() const;
};

// One buffered observation: the committee queried for a task, the member
// labels (aligned with members) and their aggregated vote.
struct BatchSample {
  Task task;
  std::vector<int> members;
  std::vector<int> labels;
  int yhat = 0;
};

struct StepRecord {
  long step = 0;
  double mu = -1.0;  // negative = not applicable
  std::vector<int> committee;
  int yhat = 0;
  double loss = -1.0;  // batch loss at update steps, negative otherwise
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::string to_csv() const;  // step,mu,committee,yhat,loss
};

// Queries labels for one task given the sampling distribution. Fills
// members/labels; the two backends are committee sampling against a
// simulated pool and the ranked walk over a replay log.
using QueryFn = std::function<void(const Task& task, const AllocationDist& dist,
                                   Rng& rng, std::vector<int>& members,
                                   std::vector<int>& labels)>;

QueryFn make_sampled_query(const LabelTable& table, int k);
QueryFn make_replay_query(const ReplayDataset& ds, int want);

// k i.i.d. draws from dist (with replacement).
Committee sample_committee(const AllocationDist& dist, int k, Rng& rng);

// Mean over the batch of the per-committee mean binary cross-entropy
// between each member's confidence d_j(x) and the agreement indicator
// 1[yhat == e_j(x)]. Confidences are clamped to [1e-7, 1-1e-7] inside the
// logs.
double agreement_loss(const LogisticAllocator& model,
                      const std::vector<BatchSample>& batch);

// Gradient of agreement_loss in the model's weight layout.
std::vector<double> agreement_loss_grad(const LogisticAllocator& model,
                                        const std::vector<BatchSample>& batch);

// One full-batch gradient step; only rows of annotators that appear in some
// committee change.
LogisticAllocator sgd_step(LogisticAllocator model,
                           const std::vector<BatchSample>& batch, double eta);

struct RunResult {
  LogisticAllocator model;
  TrainHistory history;
  double final_mu = 0.0;  // mu at the last training step (smooth runs)
};

// Encodes the prior into the model by pretraining, then streams tasks:
// normalize scores -> committee -> aggregate vote -> buffer; one gradient
// step per full batch.
RunResult strict_matching_run(const std::vector<Task>& stream,
                              const QueryFn& query, const DSimMatrix& dsim,
                              const TrainConfig& cfg, int feature_dim,
                              Rng& rng);

// Starts from zero weights and mixes the prior distribution with the
// learned one, with the prior weight decaying as T_d / (t + T_d).
RunResult smooth_matching_run(const std::vector<Task>& stream,
                              const QueryFn& query, const DSimMatrix& dsim,
                              const TrainConfig& cfg, int feature_dim,
                              Rng& rng);

}  // namespace talloc
