#include "talloc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace talloc {

void TrainConfig::validate() const {
  if (k < 1 || k % 2 == 0) {
    throw ConfigError("committee size k must be odd and >= 1, got " +
                      std::to_string(k));
  }
  if (batch < 1) throw ConfigError("batch size B must be >= 1");
  if (eta <= 0.0) throw ConfigError("learning rate eta must be positive");
  if (T_d <= 0.0) throw ConfigError("T_d must be positive");
  if (pretrain_samples < 1) throw ConfigError("pretrain_samples must be >= 1");
  if (pretrain_iters < 0) throw ConfigError("pretrain_iters must be >= 0");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  char buf[64];
  out << "step,mu,committee,yhat,loss\n";
  for (const StepRecord& r : steps) {
    out << r.step << ',';
    if (r.mu >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.mu);
      out << buf;
    }
    out << ',';
    for (size_t i = 0; i < r.committee.size(); ++i) {
      if (i) out << ';';
      out << r.committee[i];
    }
    out << ',' << r.yhat << ',';
    if (r.loss >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.loss);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

Committee sample_committee(const AllocationDist& dist, int k, Rng& rng) {
  if (k < 1 || k % 2 == 0) {
    throw EvenCommitteeError("committee size must be odd, got " +
                             std::to_string(k));
  }
  Committee c;
  c.members.reserve(static_cast<size_t>(k));
  for (int draw = 0; draw < k; ++draw) {
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = dist.size() - 1;
    for (int i = 0; i < dist.size(); ++i) {
      acc += dist.p[static_cast<size_t>(i)];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    c.members.push_back(pick);
  }
  return c;
}

QueryFn make_sampled_query(const LabelTable& table, int k) {
  return [&table, k](const Task& task, const AllocationDist& dist, Rng& rng,
                     std::vector<int>& members, std::vector<int>& labels) {
    const Committee c = sample_committee(dist, k, rng);
    members = c.members;
    labels.clear();
    labels.reserve(members.size());
    for (int a : members) labels.push_back(table.label(a, task.id));
  };
}

QueryFn make_replay_query(const ReplayDataset& ds, int want) {
  return [&ds, want](const Task& task, const AllocationDist& dist, Rng&,
                     std::vector<int>& members, std::vector<int>& labels) {
    auto got = ranked_available_query(ds, ds.task_index_by_id.at(task.id),
                                      dist, want);
    // On shortfall keep an odd prefix so the vote cannot tie.
    if (got.size() % 2 == 0 && !got.empty()) got.pop_back();
    members.clear();
    labels.clear();
    for (const RankedLabel& rl : got) {
      members.push_back(rl.annotator);
      labels.push_back(rl.label);
    }
  };
}

namespace {
constexpr double kLogClamp = 1e-7;

double clamped(double p) {
  return std::min(1.0 - kLogClamp, std::max(kLogClamp, p));
}
}  // namespace

double agreement_loss(const LogisticAllocator& model,
                      const std::vector<BatchSample>& batch) {
  double total = 0.0;
  for (const BatchSample& s : batch) {
    const auto d = alloc_scores(model, s.task);
    double per_committee = 0.0;
    for (size_t j = 0; j < s.members.size(); ++j) {
      const double dj = clamped(d[static_cast<size_t>(s.members[j])]);
      per_committee += (s.labels[j] == s.yhat) ? -std::log(dj)
                                               : -std::log(1.0 - dj);
    }
    total += per_committee / static_cast<double>(s.members.size());
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> agreement_loss_grad(const LogisticAllocator& model,
                                        const std::vector<BatchSample>& batch) {
  std::vector<double> g(model.weights.size(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const BatchSample& s : batch) {
    const auto d = alloc_scores(model, s.task);
    const double inv_k = 1.0 / static_cast<double>(s.members.size());
    for (size_t j = 0; j < s.members.size(); ++j) {
      const int a = s.members[j];
      const double agree = (s.labels[j] == s.yhat) ? 1.0 : 0.0;
      const double coef =
          inv_batch * inv_k * (d[static_cast<size_t>(a)] - agree);
      double* gr = g.data() + static_cast<size_t>(a) * (model.dim + 1);
      for (int f = 0; f < model.dim; ++f) {
        gr[f] += coef * s.task.features[static_cast<size_t>(f)];
      }
      gr[model.dim] += coef;
    }
  }
  return g;
}

LogisticAllocator sgd_step(LogisticAllocator model,
                           const std::vector<BatchSample>& batch, double eta) {
  if (batch.empty()) throw ValidationError("sgd_step needs a nonempty batch");
  const auto g = agreement_loss_grad(model, batch);
  for (size_t i = 0; i < model.weights.size(); ++i) {
    model.weights[i] -= eta * g[i];
  }
  return model;
}

namespace {

// Shared streaming loop. dist_fn maps (task, step) to the committee
// sampling distribution; mu_fn reports the recorded mu (negative = none).
RunResult run_stream(const std::vector<Task>& stream, const QueryFn& query,
                     const TrainConfig& cfg, LogisticAllocator model,
                     const std::function<AllocationDist(
                         const LogisticAllocator&, const Task&, long)>& dist_fn,
                     const std::function<double(long)>& mu_fn, Rng& rng) {
  RunResult out;
  out.history.steps.reserve(stream.size());
  std::vector<BatchSample> buffer;
  buffer.reserve(static_cast<size_t>(cfg.batch));

  long t = 0;
  for (const Task& task : stream) {
    ++t;
    const AllocationDist dist = dist_fn(model, task, t);
    BatchSample sample;
    sample.task = task;
    query(task, dist, rng, sample.members, sample.labels);
    sample.yhat = majority_vote(sample.labels);

    StepRecord rec;
    rec.step = t;
    rec.mu = mu_fn(t);
    rec.committee = sample.members;
    rec.yhat = sample.yhat;

    buffer.push_back(std::move(sample));
    if (static_cast<int>(buffer.size()) == cfg.batch) {
      rec.loss = agreement_loss(model, buffer);
      model = sgd_step(std::move(model), buffer, cfg.eta);
      buffer.clear();
    }
    out.history.steps.push_back(std::move(rec));
  }
  out.model = std::move(model);
  out.final_mu = stream.empty() ? mu_fn(1) : mu_fn(t);
  return out;
}

}  // namespace

RunResult strict_matching_run(const std::vector<Task>& stream,
                              const QueryFn& query, const DSimMatrix& dsim,
                              const TrainConfig& cfg, int feature_dim,
                              Rng& rng) {
  cfg.validate();
  LogisticAllocator model = LogisticAllocator::zeros(dsim.m, feature_dim);
  if (cfg.pretrain && !stream.empty() && cfg.pretrain_iters > 0) {
    const size_t n_pre = std::min<size_t>(
        stream.size(), static_cast<size_t>(cfg.pretrain_samples));
    std::vector<Task> head(stream.begin(),
                           stream.begin() + static_cast<long>(n_pre));
    model = pretrain_to_dsim(std::move(model), head, dsim, cfg.pretrain_lr,
                             cfg.pretrain_iters, rng);
  }
  auto dist_fn = [](const LogisticAllocator& mdl, const Task& task, long) {
    return normalize(alloc_scores(mdl, task));
  };
  auto mu_fn = [](long) { return -1.0; };
  return run_stream(stream, query, cfg, std::move(model), dist_fn, mu_fn, rng);
}

RunResult smooth_matching_run(const std::vector<Task>& stream,
                              const QueryFn& query, const DSimMatrix& dsim,
                              const TrainConfig& cfg, int feature_dim,
                              Rng& rng) {
  cfg.validate();
  LogisticAllocator model = LogisticAllocator::zeros(dsim.m, feature_dim);
  auto mu_fn = [&cfg](long t) {
    return cfg.mu_always_zero ? 0.0 : mu_schedule(t, cfg.T_d);
  };
  auto dist_fn = [&dsim, &mu_fn](const LogisticAllocator& mdl, const Task& task,
                                 long t) {
    const double mu = mu_fn(t);
    AllocationDist learned = normalize(alloc_scores(mdl, task));
    if (mu == 0.0) return learned;
    const AllocationDist prior = dsim_prior_dist(dsim, task.category);
    return smooth_combine(prior, learned, mu);
  };
  return run_stream(stream, query, cfg, std::move(model), dist_fn, mu_fn, rng);
}

}  // namespace talloc
