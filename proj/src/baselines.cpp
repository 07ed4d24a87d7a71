#include "talloc/baselines.hpp"

#include <algorithm>
#include <numeric>

namespace talloc {

AccuracyEstimates AccuracyEstimates::fresh(int m_) {
  AccuracyEstimates e;
  e.m = m_;
  e.mean.assign(static_cast<size_t>(m_) * 2, 0.0);
  e.count.assign(static_cast<size_t>(m_) * 2, 0);
  return e;
}

double AccuracyEstimates::cell(int annotator, int y) const {
  const size_t idx = static_cast<size_t>(annotator) * 2 + y;
  return count[idx] > 0 ? mean[idx] : 0.5;
}

double AccuracyEstimates::mean_accuracy(int annotator) const {
  return 0.5 * (cell(annotator, 0) + cell(annotator, 1));
}

void goel_update_estimates(AccuracyEstimates& est,
                           const std::vector<BatchSample>& batch) {
  if (batch.empty()) throw ValidationError("estimate update needs a batch");
  for (const BatchSample& s : batch) {
    for (size_t j = 0; j < s.members.size(); ++j) {
      const size_t idx = static_cast<size_t>(s.members[j]) * 2 + s.yhat;
      const double agree = (s.labels[j] == s.yhat) ? 1.0 : 0.0;
      est.count[idx] += 1;
      est.mean[idx] += (agree - est.mean[idx]) / static_cast<double>(est.count[idx]);
    }
  }
}

AllocationDist goel_allocate(const AccuracyEstimates& est, double beta) {
  if (beta < 0.0 || beta > 1.0) {
    throw OutOfRangeError("beta must lie in [0,1], got " + std::to_string(beta));
  }
  std::vector<double> pos(static_cast<size_t>(est.m), 0.0);
  double pos_sum = 0.0;
  for (int i = 0; i < est.m; ++i) {
    pos[static_cast<size_t>(i)] = std::max(0.0, est.mean_accuracy(i) - 0.5);
    pos_sum += pos[static_cast<size_t>(i)];
  }
  AllocationDist d;
  d.p.resize(static_cast<size_t>(est.m));
  if (pos_sum <= 0.0) {
    for (double& v : d.p) v = 1.0 / est.m;
    return d;
  }
  for (int i = 0; i < est.m; ++i) {
    d.p[static_cast<size_t>(i)] =
        beta / est.m + (1.0 - beta) * pos[static_cast<size_t>(i)] / pos_sum;
  }
  return d;
}

GoelResult goel_run(const std::vector<Task>& stream, const QueryFn& query,
                    int batch, double beta, int m, Rng& rng) {
  GoelResult out;
  out.est = AccuracyEstimates::fresh(m);
  std::vector<double> uniform(static_cast<size_t>(m), 1.0 / m);
  out.dist.p = uniform;

  std::vector<BatchSample> buffer;
  buffer.reserve(static_cast<size_t>(batch));
  for (const Task& task : stream) {
    BatchSample s;
    s.task = task;
    query(task, out.dist, rng, s.members, s.labels);
    s.yhat = majority_vote(s.labels);
    buffer.push_back(std::move(s));
    if (static_cast<int>(buffer.size()) == batch) {
      goel_update_estimates(out.est, buffer);
      out.dist = goel_allocate(out.est, beta);
      buffer.clear();
    }
  }
  return out;
}

TranResult tran_run(const std::vector<Task>& train_stream,
                    const std::vector<Task>& test_tasks, const QueryFn& query,
                    const TranConfig& cfg, int m,
                    const AvailabilityFn& available, Rng& rng) {
  if (cfg.budget < 1) throw ConfigError("tran budget must be >= 1");
  if (cfg.budget * m < static_cast<long>(test_tasks.size())) {
    throw BudgetInfeasibleError(
        "total budget " + std::to_string(cfg.budget * m) +
        " is smaller than the test set (" + std::to_string(test_tasks.size()) +
        ")");
  }
  TranResult out;
  out.est = AccuracyEstimates::fresh(m);

  // Exploration: uniform committees scored against their own majority.
  const size_t n_explore = static_cast<size_t>(
      cfg.explore_frac * static_cast<double>(train_stream.size()));
  AllocationDist uniform;
  uniform.p.assign(static_cast<size_t>(m), 1.0 / m);
  std::vector<BatchSample> one(1);
  for (size_t i = 0; i < n_explore && i < train_stream.size(); ++i) {
    BatchSample& s = one[0];
    s.task = train_stream[i];
    query(s.task, uniform, rng, s.members, s.labels);
    s.yhat = majority_vote(s.labels);
    goel_update_estimates(out.est, one);
  }

  // Greedy exploitation with per-annotator budgets.
  std::vector<int> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ea = out.est.mean_accuracy(a);
    const double eb = out.est.mean_accuracy(b);
    if (ea != eb) return ea > eb;
    return a < b;
  });
  std::vector<long> left(static_cast<size_t>(m), cfg.budget);
  out.assignments.reserve(test_tasks.size());
  for (const Task& task : test_tasks) {
    std::optional<int> pick;
    for (int a : order) {
      if (left[static_cast<size_t>(a)] > 0 && available(a, task)) {
        pick = a;
        left[static_cast<size_t>(a)] -= 1;
        break;
      }
    }
    out.assignments.push_back(pick);
  }
  return out;
}

RunResult keswani_run(const std::vector<Task>& stream, const QueryFn& query,
                      const TrainConfig& cfg, int m, int feature_dim,
                      Rng& rng) {
  TrainConfig no_prior = cfg;
  no_prior.mu_always_zero = true;
  // The prior is never consulted when mu is pinned to 0; a uniform stand-in
  // keeps the dimensions consistent.
  DSimMatrix flat;
  flat.m = m;
  flat.categories = 1;
  flat.scores.assign(static_cast<size_t>(m), 1.0);
  return smooth_matching_run(stream, query, flat, no_prior, feature_dim, rng);
}

}  // namespace talloc
