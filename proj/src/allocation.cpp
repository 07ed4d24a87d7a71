#include "talloc/allocation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace talloc {

LogisticAllocator LogisticAllocator::zeros(int m, int dim) {
  LogisticAllocator a;
  a.m = m;
  a.dim = dim;
  a.weights.assign(static_cast<size_t>(m) * (dim + 1), 0.0);
  return a;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> alloc_scores(const LogisticAllocator& model,
                                 const Task& task) {
  if (static_cast<int>(task.features.size()) != model.dim) {
    throw DimensionMismatchError(
        "task features have dimension " + std::to_string(task.features.size()) +
        ", model expects " + std::to_string(model.dim));
  }
  std::vector<double> s(static_cast<size_t>(model.m));
  for (int i = 0; i < model.m; ++i) {
    const double* w = model.row(i);
    double z = w[model.dim];  // bias
    for (int d = 0; d < model.dim; ++d) z += w[d] * task.features[static_cast<size_t>(d)];
    s[static_cast<size_t>(i)] = sigmoid(z);
  }
  return s;
}

AllocationDist dsim_prior_dist(const DSimMatrix& dsim, int category) {
  std::vector<double> col(static_cast<size_t>(dsim.m));
  for (int i = 0; i < dsim.m; ++i) col[static_cast<size_t>(i)] = dsim.at(i, category);
  return normalize(col);
}

double pretrain_mse(const LogisticAllocator& model, const Task& task,
                    const std::vector<double>& targets) {
  const auto s = alloc_scores(model, task);
  double mse = 0.0;
  for (int i = 0; i < model.m; ++i) {
    const double e = s[static_cast<size_t>(i)] - targets[static_cast<size_t>(i)];
    mse += e * e;
  }
  return mse;
}

std::vector<double> pretrain_mse_grad(const LogisticAllocator& model,
                                      const Task& task,
                                      const std::vector<double>& targets) {
  const auto s = alloc_scores(model, task);
  std::vector<double> g(model.weights.size(), 0.0);
  for (int i = 0; i < model.m; ++i) {
    const double si = s[static_cast<size_t>(i)];
    const double coef =
        2.0 * (si - targets[static_cast<size_t>(i)]) * si * (1.0 - si);
    double* gr = g.data() + static_cast<size_t>(i) * (model.dim + 1);
    for (int d = 0; d < model.dim; ++d) gr[d] = coef * task.features[static_cast<size_t>(d)];
    gr[model.dim] = coef;
  }
  return g;
}

LogisticAllocator pretrain_to_dsim(LogisticAllocator model,
                                   const std::vector<Task>& tasks,
                                   const DSimMatrix& dsim, double lr, int iters,
                                   Rng& rng) {
  if (tasks.empty()) throw ValidationError("pretraining needs at least one task");
  const int m = model.m;
  const int dim = model.dim;

  // Standardized coordinates keep the per-sample steps bounded no matter how
  // the raw feature scale varies; the affine map is folded back at the end.
  std::vector<double> fmean(static_cast<size_t>(dim), 0.0);
  std::vector<double> fstd(static_cast<size_t>(dim), 0.0);
  for (const Task& t : tasks) {
    for (int d = 0; d < dim; ++d) {
      fmean[static_cast<size_t>(d)] +=
          t.features[static_cast<size_t>(d)] / static_cast<double>(tasks.size());
    }
  }
  for (const Task& t : tasks) {
    for (int d = 0; d < dim; ++d) {
      const double e = t.features[static_cast<size_t>(d)] - fmean[static_cast<size_t>(d)];
      fstd[static_cast<size_t>(d)] += e * e / static_cast<double>(tasks.size());
    }
  }
  for (int d = 0; d < dim; ++d) {
    fstd[static_cast<size_t>(d)] = std::max(1e-8, std::sqrt(fstd[static_cast<size_t>(d)]));
  }

  std::vector<size_t> order(tasks.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> xs(static_cast<size_t>(dim));
  // Targets are clamped away from {0,1}: a saturated score has a vanishing
  // MSE gradient, which would freeze a model that overshoots.
  for (int epoch = 0; epoch < iters; ++epoch) {
    for (size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
    }
    for (size_t idx : order) {
      const Task& task = tasks[idx];
      for (int d = 0; d < dim; ++d) {
        xs[static_cast<size_t>(d)] =
            (task.features[static_cast<size_t>(d)] - fmean[static_cast<size_t>(d)]) /
            fstd[static_cast<size_t>(d)];
      }
      for (int i = 0; i < m; ++i) {
        const double target =
            std::min(1.0 - kPretrainTargetClamp,
                     std::max(kPretrainTargetClamp, dsim.at(i, task.category)));
        double* w = model.row(i);
        double z = w[dim];
        for (int d = 0; d < dim; ++d) z += w[d] * xs[static_cast<size_t>(d)];
        const double si = sigmoid(z);
        const double coef = 2.0 * (si - target) * si * (1.0 - si);
        for (int d = 0; d < dim; ++d) w[d] -= lr * coef * xs[static_cast<size_t>(d)];
        w[dim] -= lr * coef;
      }
    }
  }

  if (iters > 0) {
    for (int i = 0; i < m; ++i) {
      double* w = model.row(i);
      double bias = w[dim];
      for (int d = 0; d < dim; ++d) {
        const double raw = w[d] / fstd[static_cast<size_t>(d)];
        bias -= w[d] * fmean[static_cast<size_t>(d)] / fstd[static_cast<size_t>(d)];
        w[d] = raw;
      }
      w[dim] = bias;
    }
  }
  return model;
}

AllocationDist smooth_combine(const AllocationDist& prior,
                              const AllocationDist& learned, double mu) {
  if (mu < 0.0 || mu > 1.0) {
    throw MuOutOfRangeError("mu must lie in [0,1], got " + std::to_string(mu));
  }
  if (prior.size() != learned.size()) {
    throw DimensionMismatchError("prior and learned distributions differ in size");
  }
  AllocationDist out;
  out.p.resize(prior.p.size());
  for (size_t i = 0; i < prior.p.size(); ++i) {
    out.p[i] = mu * prior.p[i] + (1.0 - mu) * learned.p[i];
  }
  return out;
}

double mu_schedule(long t, double T_d) {
  if (T_d <= 0.0) throw OutOfRangeError("T_d must be positive");
  return T_d / (static_cast<double>(t) + T_d);
}

TabularAllocator TabularAllocator::uniform(int categories, int m) {
  TabularAllocator a;
  a.categories = categories;
  a.m = m;
  a.w.assign(static_cast<size_t>(categories) * m, 1.0 / m);
  return a;
}

void apply_reward_penalty(std::vector<double>& row,
                          const std::vector<char>& rewarded,
                          double delta_reward, double delta_penalty) {
  for (size_t i = 0; i < row.size(); ++i) {
    row[i] += rewarded[i] ? delta_reward : -delta_penalty;
    if (row[i] < 0.0) row[i] = 0.0;
  }
}

TabularAllocator tabular_update(const TabularAllocator& model, int category,
                                const std::vector<char>& rewarded,
                                double delta) {
  if (delta < 0.0) throw OutOfRangeError("delta must be nonnegative");
  if (static_cast<int>(rewarded.size()) != model.m) {
    throw DimensionMismatchError("rewarded flags size differs from m");
  }
  int n_rewarded = 0;
  for (char c : rewarded) n_rewarded += c ? 1 : 0;

  TabularAllocator out = model;
  if (delta == 0.0 || n_rewarded == 0 || n_rewarded == model.m) return out;

  const double penalty =
      delta * n_rewarded / static_cast<double>(model.m - n_rewarded);
  std::vector<double> row(out.row(category), out.row(category) + out.m);
  apply_reward_penalty(row, rewarded, delta, penalty);
  double sum = 0.0;
  for (double v : row) sum += v;
  double* dst = out.row(category);
  for (int i = 0; i < out.m; ++i) dst[i] = row[static_cast<size_t>(i)] / sum;
  return out;
}

void save_checkpoint(const LogisticAllocator& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write checkpoint: " + path);
  out << model.m << ' ' << model.dim << '\n';
  char buf[64];
  for (int i = 0; i < model.m; ++i) {
    const double* w = model.row(i);
    for (int d = 0; d <= model.dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", w[d]);
      out << buf << (d == model.dim ? '\n' : ' ');
    }
  }
}

LogisticAllocator load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  int m = 0, dim = 0;
  if (!(in >> m >> dim) || m <= 0 || dim < 0) {
    throw ParseError("bad checkpoint header", 1);
  }
  LogisticAllocator model = LogisticAllocator::zeros(m, dim);
  for (size_t j = 0; j < model.weights.size(); ++j) {
    if (!(in >> model.weights[j])) {
      throw ParseError("truncated checkpoint weights", 2);
    }
  }
  return model;
}

}  // namespace talloc
