#include "talloc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>

namespace talloc {

const std::vector<std::string> kAllMethods = {"smooth", "strict", "goel",
                                              "tran", "keswani"};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (methods.empty()) throw ConfigError("methods must not be empty");
  for (const auto& m : methods) {
    if (std::find(kAllMethods.begin(), kAllMethods.end(), m) ==
        kAllMethods.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  if (kind == ExperimentKind::Synthetic || kind == ExperimentKind::Sweep) {
    if (s < 0.0 || s > 2.0 / 3.0) throw ConfigError("s must lie in [0, 2/3]");
    if (n_points < 10) throw ConfigError("n_points must be >= 10");
  }
  if (kind == ExperimentKind::Sweep) {
    if (s_values.empty()) throw ConfigError("s_values must not be empty");
    for (double v : s_values) {
      if (v < 0.0 || v > 2.0 / 3.0) {
        throw ConfigError("s_values entries must lie in [0, 2/3]");
      }
    }
  }
  if (kind == ExperimentKind::Replay && replay_path.empty()) {
    throw ConfigError("replay experiments need replay_path");
  }
  if (train_frac <= 0.0 || train_frac >= 1.0) {
    throw ConfigError("train_frac must lie in (0, 1)");
  }
  strict_cfg.validate();
  smooth_cfg.validate();
  if (goel_beta < 0.0 || goel_beta > 1.0) {
    throw ConfigError("goel_beta must lie in [0, 1]");
  }
  if (tran_cfg.budget < 1) throw ConfigError("tran budget must be >= 1");
  if (tran_cfg.explore_frac <= 0.0 || tran_cfg.explore_frac >= 1.0) {
    throw ConfigError("tran explore_frac must lie in (0, 1)");
  }
}

ExperimentConfig synthetic_defaults() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Synthetic;
  cfg.trials = 50;
  cfg.strict_cfg = TrainConfig{};
  // With three annotators, a 13-draw committee reads out the weighted
  // majority vote of the allocation distribution with little sampling noise.
  cfg.strict_cfg.k = 13;
  cfg.strict_cfg.batch = 10;
  cfg.strict_cfg.eta = 0.001;
  cfg.strict_cfg.pretrain = true;
  cfg.strict_cfg.pretrain_samples = 500;
  cfg.strict_cfg.pretrain_iters = 1000;
  cfg.smooth_cfg = cfg.strict_cfg;
  cfg.smooth_cfg.eta = 0.1;
  cfg.smooth_cfg.T_d = 1e4;
  cfg.smooth_cfg.pretrain = false;
  cfg.tran_cfg.budget = 1000;
  cfg.tran_cfg.explore_frac = 0.1;
  cfg.tran_cfg.k = cfg.strict_cfg.k;
  return cfg;
}

ExperimentConfig sweep_defaults() {
  ExperimentConfig cfg = synthetic_defaults();
  cfg.kind = ExperimentKind::Sweep;
  cfg.trials = 20;
  cfg.methods = {"smooth", "strict"};
  return cfg;
}

ExperimentConfig replay_defaults() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Replay;
  cfg.trials = 25;
  cfg.strict_cfg.k = 7;
  cfg.strict_cfg.batch = 1000;
  cfg.strict_cfg.eta = 0.25;
  cfg.strict_cfg.pretrain = true;
  cfg.strict_cfg.pretrain_samples = 500;
  cfg.strict_cfg.pretrain_iters = 500;
  cfg.smooth_cfg = cfg.strict_cfg;
  cfg.smooth_cfg.T_d = 1e6;
  cfg.smooth_cfg.pretrain = false;
  cfg.tran_cfg.budget = 25;
  cfg.tran_cfg.explore_frac = 0.1;
  cfg.tran_cfg.k = 7;
  return cfg;
}

ExperimentConfig theory_defaults() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Theory;
  cfg.trials = 1;
  cfg.theory_trials = 0;
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  try {
    if (key == "trials") {
      cfg.trials = std::stoi(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "threads") {
      cfg.threads = std::stoi(value);
    } else if (key == "s") {
      cfg.s = std::stod(value);
    } else if (key == "s_values") {
      cfg.s_values.clear();
      for (const auto& v : split_list(value)) cfg.s_values.push_back(std::stod(v));
    } else if (key == "n_points") {
      cfg.n_points = std::stoi(value);
    } else if (key == "train_frac") {
      cfg.train_frac = std::stod(value);
    } else if (key == "methods") {
      cfg.methods = split_list(value);
    } else if (key == "replay") {
      cfg.replay_path = value;
    } else if (key == "gold") {
      if (value == "objective") {
        cfg.gold = GoldMode::Objective;
      } else if (value == "subjective") {
        cfg.gold = GoldMode::Subjective;
      } else {
        throw ConfigError("gold must be 'objective' or 'subjective'");
      }
    } else if (key == "k") {
      cfg.strict_cfg.k = cfg.smooth_cfg.k = cfg.tran_cfg.k = std::stoi(value);
    } else if (key == "batch") {
      cfg.strict_cfg.batch = cfg.smooth_cfg.batch = std::stoi(value);
    } else if (key == "eta_strict") {
      cfg.strict_cfg.eta = std::stod(value);
    } else if (key == "eta_smooth") {
      cfg.smooth_cfg.eta = std::stod(value);
    } else if (key == "T_d") {
      cfg.smooth_cfg.T_d = std::stod(value);
    } else if (key == "pretrain_samples") {
      cfg.strict_cfg.pretrain_samples = cfg.smooth_cfg.pretrain_samples =
          std::stoi(value);
    } else if (key == "pretrain_iters") {
      cfg.strict_cfg.pretrain_iters = cfg.smooth_cfg.pretrain_iters =
          std::stoi(value);
    } else if (key == "pretrain_lr") {
      cfg.strict_cfg.pretrain_lr = cfg.smooth_cfg.pretrain_lr = std::stod(value);
    } else if (key == "goel_beta") {
      cfg.goel_beta = std::stod(value);
    } else if (key == "tran_budget") {
      cfg.tran_cfg.budget = std::stol(value);
    } else if (key == "tran_explore_frac") {
      cfg.tran_cfg.explore_frac = std::stod(value);
    } else if (key == "theory_trials") {
      cfg.theory_trials = std::stol(value);
    } else if (key == "history") {
      cfg.history_path = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for config key '" + key + "': " + value);
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not key=value: " + t);
    }
    apply_config_line(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

std::uint64_t trial_dataset_seed(const ExperimentConfig& cfg, int trial) {
  return derive_seed(cfg.seed, "dataset", static_cast<std::uint64_t>(trial));
}
std::uint64_t trial_labels_seed(const ExperimentConfig& cfg, int trial) {
  return derive_seed(cfg.seed, "labels", static_cast<std::uint64_t>(trial));
}
std::uint64_t trial_split_seed(const ExperimentConfig& cfg, int trial) {
  return derive_seed(cfg.seed, "split", static_cast<std::uint64_t>(trial));
}
std::uint64_t trial_method_seed(const ExperimentConfig& cfg,
                                const std::string& method, int trial) {
  return derive_seed(cfg.seed, "method:" + method,
                     static_cast<std::uint64_t>(trial));
}

namespace {

using DistFn = std::function<AllocationDist(const Task&)>;

int modal_member(const std::vector<int>& members, const AllocationDist& dist) {
  std::vector<int> count(dist.p.size(), 0);
  for (int a : members) count[static_cast<size_t>(a)] += 1;
  int best = -1, best_count = 0;
  bool tie = false;
  for (size_t i = 0; i < count.size(); ++i) {
    if (count[i] > best_count) {
      best = static_cast<int>(i);
      best_count = count[i];
      tie = false;
    } else if (count[i] == best_count && count[i] > 0) {
      tie = true;
    }
  }
  if (tie) return argmax_index(dist.p);
  return best;
}

struct EvalOut {
  double label_acc = 0.0;
  double assign_acc = 0.0;
};

EvalOut eval_committee_method(const DistFn& dist_fn,
                              const std::vector<Task>& test,
                              const LabelTable& labels,
                              const std::vector<int>& gold, int k, Rng& rng) {
  long label_hits = 0, assign_hits = 0;
  std::vector<int> votes;
  for (const Task& task : test) {
    const AllocationDist dist = dist_fn(task);
    const Committee c = sample_committee(dist, k, rng);
    votes.clear();
    for (int a : c.members) votes.push_back(labels.label(a, task.id));
    if (majority_vote(votes) == gold[static_cast<size_t>(task.id)]) ++label_hits;
    if (modal_member(c.members, dist) == task.category) ++assign_hits;
  }
  EvalOut out;
  out.label_acc = static_cast<double>(label_hits) / test.size();
  out.assign_acc = static_cast<double>(assign_hits) / test.size();
  return out;
}

struct SyntheticTrialContext {
  SyntheticDataset data;
  DSimMatrix dsim;
  std::vector<Task> train, test;
  LabelTable labels;
};

// Features are standardized against the training split before any model
// sees them (fit on train, applied everywhere). The allocation models are
// scale-sensitive SGD learners; the experts and dSim only look at the
// category, so labels and priors are untouched.
void standardize_features(std::vector<Task>& tasks, size_t n_train) {
  if (tasks.empty()) return;
  const size_t dim = tasks.front().features.size();
  const double n = static_cast<double>(n_train);
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (size_t i = 0; i < n_train; ++i) {
    for (size_t d = 0; d < dim; ++d) mean[d] += tasks[i].features[d] / n;
  }
  for (size_t i = 0; i < n_train; ++i) {
    for (size_t d = 0; d < dim; ++d) {
      const double e = tasks[i].features[d] - mean[d];
      sd[d] += e * e / n;
    }
  }
  for (size_t d = 0; d < dim; ++d) sd[d] = std::max(1e-8, std::sqrt(sd[d]));
  for (Task& t : tasks) {
    for (size_t d = 0; d < dim; ++d) {
      t.features[d] = (t.features[d] - mean[d]) / sd[d];
    }
  }
}

SyntheticTrialContext make_synthetic_trial(const ExperimentConfig& cfg,
                                           double s, int trial) {
  SyntheticDatasetSpec spec;
  spec.n_points = cfg.n_points;
  spec.seed = trial_dataset_seed(cfg, trial);
  SyntheticDataset data = gen_clusters(spec);

  std::vector<ClusterExpert> experts;
  for (int i = 0; i < 3; ++i) experts.push_back(ClusterExpert{i, 1.0, 0.2});
  Rng label_rng(trial_labels_seed(cfg, trial));
  LabelTable labels(experts, data.tasks, data.gold, label_rng);

  const size_t n_train =
      static_cast<size_t>(cfg.train_frac * static_cast<double>(data.tasks.size()));
  standardize_features(data.tasks, n_train);
  SyntheticTrialContext ctx{std::move(data), gen_dsim_noisy(s), {}, {},
                            std::move(labels)};
  ctx.train.assign(ctx.data.tasks.begin(),
                   ctx.data.tasks.begin() + static_cast<long>(n_train));
  ctx.test.assign(ctx.data.tasks.begin() + static_cast<long>(n_train),
                  ctx.data.tasks.end());
  return ctx;
}

TrialReport run_synthetic_method(const ExperimentConfig& cfg,
                                 const SyntheticTrialContext& ctx,
                                 const std::string& method, int trial) {
  TrialReport rep;
  rep.method = method;
  rep.seed = trial_method_seed(cfg, method, trial);
  Rng rng(rep.seed);
  const int m = ctx.dsim.m;
  const int dim = 2;
  const QueryFn query = make_sampled_query(ctx.labels, cfg.strict_cfg.k);
  const int eval_k = cfg.strict_cfg.k;

  EvalOut ev;
  if (method == "strict" || method == "smooth" || method == "keswani") {
    RunResult res;
    if (method == "strict") {
      res = strict_matching_run(ctx.train, query, ctx.dsim, cfg.strict_cfg, dim,
                                rng);
    } else if (method == "smooth") {
      res = smooth_matching_run(ctx.train, query, ctx.dsim, cfg.smooth_cfg, dim,
                                rng);
    } else {
      res = keswani_run(ctx.train, query, cfg.smooth_cfg, m, dim, rng);
    }
    const LogisticAllocator model = res.model;
    const double final_mu = (method == "smooth") ? res.final_mu : 0.0;
    const DSimMatrix& dsim = ctx.dsim;
    DistFn dist_fn = [&model, &dsim, final_mu](const Task& t) {
      AllocationDist learned = normalize(alloc_scores(model, t));
      if (final_mu == 0.0) return learned;
      return smooth_combine(dsim_prior_dist(dsim, t.category), learned,
                            final_mu);
    };
    ev = eval_committee_method(dist_fn, ctx.test, ctx.labels, ctx.data.gold,
                               eval_k, rng);
  } else if (method == "goel") {
    const GoelResult res = goel_run(ctx.train, query, cfg.strict_cfg.batch,
                                    cfg.goel_beta, m, rng);
    DistFn dist_fn = [&res](const Task&) { return res.dist; };
    ev = eval_committee_method(dist_fn, ctx.test, ctx.labels, ctx.data.gold,
                               eval_k, rng);
  } else {  // tran
    const TranResult res =
        tran_run(ctx.train, ctx.test, query, cfg.tran_cfg, m,
                 [](int, const Task&) { return true; }, rng);
    long label_hits = 0, assign_hits = 0;
    for (size_t i = 0; i < ctx.test.size(); ++i) {
      const Task& task = ctx.test[i];
      const int gold = ctx.data.gold[static_cast<size_t>(task.id)];
      if (res.assignments[i].has_value()) {
        const int a = *res.assignments[i];
        if (ctx.labels.label(a, task.id) == gold) ++label_hits;
        if (a == task.category) ++assign_hits;
      }
    }
    ev.label_acc = static_cast<double>(label_hits) / ctx.test.size();
    ev.assign_acc = static_cast<double>(assign_hits) / ctx.test.size();
  }
  rep.label_accuracy = ev.label_acc;
  rep.assignment_accuracy = ev.assign_acc;
  return rep;
}

// Runs trial workers in waves sized by the thread budget; outputs land in
// trial order so aggregation is scheduling-independent.
template <typename Fn>
std::vector<std::vector<TrialReport>> run_trials(int trials, int threads,
                                                 Fn&& worker) {
  std::vector<std::vector<TrialReport>> out(static_cast<size_t>(trials));
  int budget = threads > 0 ? threads
                           : static_cast<int>(std::thread::hardware_concurrency());
  if (budget < 1) budget = 1;
  int next = 0;
  while (next < trials) {
    const int wave_end = std::min(trials, next + budget);
    std::vector<std::future<std::vector<TrialReport>>> futs;
    for (int t = next; t < wave_end; ++t) {
      futs.push_back(std::async(std::launch::async, worker, t));
    }
    for (int t = next; t < wave_end; ++t) {
      out[static_cast<size_t>(t)] = futs[static_cast<size_t>(t - next)].get();
    }
    next = wave_end;
  }
  return out;
}

std::vector<MethodStats> aggregate_reports(
    const std::vector<TrialReport>& reports,
    const std::vector<std::string>& methods) {
  std::vector<MethodStats> stats;
  auto add_metric = [&](const std::string& method, const std::string& metric,
                        const std::vector<double>& values) {
    if (values.empty()) return;
    MethodStats st;
    st.method = method;
    st.metric = metric;
    st.trials = static_cast<int>(values.size());
    if (values.size() == 1) {
      st.mean = values[0];
      st.stderr_ = -1.0;
    } else {
      const MeanStderr ms = mean_stderr(values);
      st.mean = ms.mean;
      st.stderr_ = ms.stderr_;
    }
    stats.push_back(std::move(st));
  };
  for (const std::string& method : methods) {
    std::vector<double> label, assign, aucs;
    for (const TrialReport& r : reports) {
      if (r.method != method) continue;
      label.push_back(r.label_accuracy);
      if (r.assignment_accuracy) assign.push_back(*r.assignment_accuracy);
      if (r.auc) aucs.push_back(*r.auc);
    }
    add_metric(method, "label_accuracy", label);
    add_metric(method, "assignment_accuracy", assign);
    add_metric(method, "auc", aucs);
  }
  return stats;
}

std::string stats_csv(const std::vector<MethodStats>& stats) {
  std::ostringstream out;
  out << "method,metric,mean,stderr,trials\n";
  for (const MethodStats& st : stats) {
    out << st.method << ',' << st.metric << ',' << format_double(st.mean) << ',';
    if (st.stderr_ >= 0.0) out << format_double(st.stderr_);
    out << ',' << st.trials << '\n';
  }
  return out.str();
}

void manifest_header(std::ostringstream& out, const ExperimentConfig& cfg,
                     const char* kind) {
  out << "kind=" << kind << '\n';
  out << "master_seed=" << cfg.seed << '\n';
  out << "trials=" << cfg.trials << '\n';
  out << "methods=";
  for (size_t i = 0; i < cfg.methods.size(); ++i) {
    if (i) out << ',';
    out << cfg.methods[i];
  }
  out << '\n';
  out << "train_frac=" << format_double(cfg.train_frac) << '\n';
  out << "k=" << cfg.strict_cfg.k << '\n';
  out << "batch=" << cfg.strict_cfg.batch << '\n';
  out << "eta_strict=" << format_double(cfg.strict_cfg.eta) << '\n';
  out << "eta_smooth=" << format_double(cfg.smooth_cfg.eta) << '\n';
  out << "T_d=" << format_double(cfg.smooth_cfg.T_d) << '\n';
  out << "pretrain_samples=" << cfg.strict_cfg.pretrain_samples << '\n';
  out << "pretrain_iters=" << cfg.strict_cfg.pretrain_iters << '\n';
  out << "pretrain_lr=" << format_double(cfg.strict_cfg.pretrain_lr) << '\n';
  out << "goel_beta=" << format_double(cfg.goel_beta) << '\n';
  out << "tran_budget=" << cfg.tran_cfg.budget << '\n';
  out << "tran_explore_frac=" << format_double(cfg.tran_cfg.explore_frac)
      << '\n';
}

void manifest_trial_seeds(std::ostringstream& out, const ExperimentConfig& cfg,
                          bool with_split) {
  for (int t = 0; t < cfg.trials; ++t) {
    out << "trial=" << t << " dataset_seed=" << trial_dataset_seed(cfg, t)
        << " labels_seed=" << trial_labels_seed(cfg, t);
    if (with_split) out << " split_seed=" << trial_split_seed(cfg, t);
    for (const std::string& m : cfg.methods) {
      out << " seed[" << m << "]=" << trial_method_seed(cfg, m, t);
    }
    out << '\n';
  }
}

ExperimentResult run_synthetic_at(const ExperimentConfig& cfg, double s) {
  auto worker = [&cfg, s](int trial) {
    const SyntheticTrialContext ctx = make_synthetic_trial(cfg, s, trial);
    std::vector<TrialReport> reps;
    reps.reserve(cfg.methods.size());
    for (const std::string& method : cfg.methods) {
      reps.push_back(run_synthetic_method(cfg, ctx, method, trial));
    }
    return reps;
  };
  const auto per_trial = run_trials(cfg.trials, cfg.threads, worker);

  ExperimentResult out;
  for (const std::string& method : cfg.methods) {
    for (int t = 0; t < cfg.trials; ++t) {
      for (const TrialReport& r : per_trial[static_cast<size_t>(t)]) {
        if (r.method == method) out.reports.push_back(r);
      }
    }
  }
  out.stats = aggregate_reports(out.reports, cfg.methods);
  out.results_csv = stats_csv(out.stats);
  return out;
}

}  // namespace

namespace {

// Re-runs trial 0 of the first trainable method and writes its history.
void dump_history_synthetic(const ExperimentConfig& cfg) {
  for (const std::string& method : cfg.methods) {
    if (method != "smooth" && method != "strict" && method != "keswani") {
      continue;
    }
    const SyntheticTrialContext ctx = make_synthetic_trial(cfg, cfg.s, 0);
    Rng rng(trial_method_seed(cfg, method, 0));
    const QueryFn query = make_sampled_query(ctx.labels, cfg.strict_cfg.k);
    RunResult res;
    if (method == "strict") {
      res = strict_matching_run(ctx.train, query, ctx.dsim, cfg.strict_cfg, 2,
                                rng);
    } else if (method == "smooth") {
      res = smooth_matching_run(ctx.train, query, ctx.dsim, cfg.smooth_cfg, 2,
                                rng);
    } else {
      res = keswani_run(ctx.train, query, cfg.smooth_cfg, ctx.dsim.m, 2, rng);
    }
    std::ofstream out(cfg.history_path);
    if (!out) throw ConfigError("cannot write history file: " + cfg.history_path);
    out << res.history.to_csv();
    return;
  }
  throw ConfigError("history export needs a trainable method (smooth, strict or keswani)");
}

}  // namespace

ExperimentResult run_synthetic(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult out = run_synthetic_at(cfg, cfg.s);
  if (!cfg.history_path.empty()) dump_history_synthetic(cfg);
  std::ostringstream man;
  manifest_header(man, cfg, "synthetic");
  man << "s=" << format_double(cfg.s) << '\n';
  man << "n_points=" << cfg.n_points << '\n';
  manifest_trial_seeds(man, cfg, false);
  out.manifest = man.str();
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepResult out;
  std::ostringstream csv;
  csv << "s,method,metric,mean,stderr,trials\n";
  for (double s : cfg.s_values) {
    ExperimentResult res = run_synthetic_at(cfg, s);
    for (const MethodStats& st : res.stats) {
      csv << format_double(s) << ',' << st.method << ',' << st.metric << ','
          << format_double(st.mean) << ',';
      if (st.stderr_ >= 0.0) csv << format_double(st.stderr_);
      csv << ',' << st.trials << '\n';
    }
    out.per_s.emplace_back(s, std::move(res));
  }
  out.results_csv = csv.str();
  std::ostringstream man;
  manifest_header(man, cfg, "sweep");
  man << "n_points=" << cfg.n_points << '\n';
  man << "s_values=";
  for (size_t i = 0; i < cfg.s_values.size(); ++i) {
    if (i) man << ',';
    man << format_double(cfg.s_values[i]);
  }
  man << '\n';
  manifest_trial_seeds(man, cfg, false);
  out.manifest = man.str();
  return out;
}

namespace {

struct ReplayTrialContext {
  const ReplayDataset* ds = nullptr;
  DSimMatrix dsim;
  std::vector<Task> train, test;
  const std::vector<int>* gold = nullptr;
};

ReplayTrialContext make_replay_trial(const ExperimentConfig& cfg,
                                     const ReplayDataset& ds,
                                     const DSimMatrix& dsim, int trial) {
  ReplayTrialContext ctx;
  ctx.ds = &ds;
  ctx.dsim = dsim;
  ctx.gold = (cfg.gold == GoldMode::Objective) ? &ds.gold_objective
                                               : &ds.gold_subjective;
  std::vector<int> order(static_cast<size_t>(ds.n_tasks()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(trial_split_seed(cfg, trial));
  for (int i = ds.n_tasks() - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, i);
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  const size_t n_train =
      static_cast<size_t>(cfg.train_frac * static_cast<double>(order.size()));
  for (size_t i = 0; i < order.size(); ++i) {
    const Task& t = ds.tasks[static_cast<size_t>(order[i])];
    (i < n_train ? ctx.train : ctx.test).push_back(t);
  }
  return ctx;
}

TrialReport run_replay_method(const ExperimentConfig& cfg,
                              const ReplayTrialContext& ctx,
                              const std::string& method, int trial) {
  TrialReport rep;
  rep.method = method;
  rep.seed = trial_method_seed(cfg, method, trial);
  Rng rng(rep.seed);
  const ReplayDataset& ds = *ctx.ds;
  const int m = ds.m();
  const int dim = static_cast<int>(ds.tasks.front().features.size());
  const QueryFn query = make_replay_query(ds, cfg.strict_cfg.k);

  std::vector<int> preds;
  std::vector<double> scores;
  preds.reserve(ctx.test.size());
  scores.reserve(ctx.test.size());

  auto eval_dist_based = [&](const LogisticAllocator& model, double final_mu) {
    for (const Task& task : ctx.test) {
      AllocationDist dist = normalize(alloc_scores(model, task));
      if (final_mu > 0.0) {
        dist = smooth_combine(dsim_prior_dist(ctx.dsim, task.category), dist,
                              final_mu);
      }
      const int idx = ds.task_index_by_id.at(task.id);
      const auto got = ranked_available_query(ds, idx, dist, 1);
      const int a = got.front().annotator;
      const int label = got.front().label;
      const double d = alloc_scores(model, task)[static_cast<size_t>(a)];
      preds.push_back(label);
      scores.push_back(label == 1 ? d : 1.0 - d);
    }
  };

  if (method == "strict") {
    const RunResult res = strict_matching_run(ctx.train, query, ctx.dsim,
                                              cfg.strict_cfg, dim, rng);
    eval_dist_based(res.model, 0.0);
  } else if (method == "smooth") {
    const RunResult res = smooth_matching_run(ctx.train, query, ctx.dsim,
                                              cfg.smooth_cfg, dim, rng);
    eval_dist_based(res.model, res.final_mu);
  } else if (method == "keswani") {
    const RunResult res =
        keswani_run(ctx.train, query, cfg.smooth_cfg, m, dim, rng);
    eval_dist_based(res.model, 0.0);
  } else if (method == "goel") {
    const GoelResult res = goel_run(ctx.train, query, cfg.strict_cfg.batch,
                                    cfg.goel_beta, m, rng);
    for (const Task& task : ctx.test) {
      const int idx = ds.task_index_by_id.at(task.id);
      const auto got = ranked_available_query(ds, idx, res.dist, 1);
      const int a = got.front().annotator;
      const int label = got.front().label;
      const double d = res.est.mean_accuracy(a);
      preds.push_back(label);
      scores.push_back(label == 1 ? d : 1.0 - d);
    }
  } else {  // tran
    const AvailabilityFn avail = [&ds](int a, const Task& t) {
      return replay_label(ds, a, ds.task_index_by_id.at(t.id)).has_value();
    };
    const TranResult res =
        tran_run(ctx.train, ctx.test, query, cfg.tran_cfg, m, avail, rng);
    for (size_t i = 0; i < ctx.test.size(); ++i) {
      const Task& task = ctx.test[i];
      const int idx = ds.task_index_by_id.at(task.id);
      if (res.assignments[i].has_value()) {
        const int a = *res.assignments[i];
        const int label = *replay_label(ds, a, idx);
        const double d = res.est.mean_accuracy(a);
        preds.push_back(label);
        scores.push_back(label == 1 ? d : 1.0 - d);
      } else {
        const int gold = (*ctx.gold)[static_cast<size_t>(idx)];
        preds.push_back(1 - gold);  // unassignable counts as an error
        scores.push_back(0.5);
      }
    }
  }

  std::vector<int> gold_test;
  gold_test.reserve(ctx.test.size());
  for (const Task& task : ctx.test) {
    gold_test.push_back(
        (*ctx.gold)[static_cast<size_t>(ds.task_index_by_id.at(task.id))]);
  }
  rep.label_accuracy = label_accuracy(preds, gold_test);
  rep.auc = auc(scores, gold_test);
  return rep;
}

}  // namespace

ExperimentResult run_replay(const ExperimentConfig& cfg) {
  cfg.validate();
  const ReplayDataset ds = load_replay(cfg.replay_path);
  int n_groups = 0;
  for (int c : ds.annotator_category) n_groups = std::max(n_groups, c + 1);
  for (const Task& t : ds.tasks) n_groups = std::max(n_groups, t.category + 1);
  DSimMatrix dsim;
  dsim.m = ds.m();
  dsim.categories = n_groups;
  dsim.scores.assign(static_cast<size_t>(dsim.m) * n_groups, 0.0);
  for (int a = 0; a < dsim.m; ++a) {
    dsim.at(a, ds.annotator_category[static_cast<size_t>(a)]) = 1.0;
  }

  auto worker = [&](int trial) {
    const ReplayTrialContext ctx = make_replay_trial(cfg, ds, dsim, trial);
    std::vector<TrialReport> reps;
    for (const std::string& method : cfg.methods) {
      reps.push_back(run_replay_method(cfg, ctx, method, trial));
    }
    return reps;
  };
  const auto per_trial = run_trials(cfg.trials, cfg.threads, worker);

  ExperimentResult out;
  for (const std::string& method : cfg.methods) {
    for (int t = 0; t < cfg.trials; ++t) {
      for (const TrialReport& r : per_trial[static_cast<size_t>(t)]) {
        if (r.method == method) out.reports.push_back(r);
      }
    }
  }
  out.stats = aggregate_reports(out.reports, cfg.methods);
  out.results_csv = stats_csv(out.stats);
  std::ostringstream man;
  manifest_header(man, cfg, "replay");
  man << "replay=" << cfg.replay_path << '\n';
  man << "gold=" << (cfg.gold == GoldMode::Objective ? "objective" : "subjective")
      << '\n';
  manifest_trial_seeds(man, cfg, true);
  out.manifest = man.str();
  return out;
}

namespace {

std::string json_kv(std::initializer_list<std::pair<const char*, std::string>> kv) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) out += ";";
    first = false;
    out += std::string(k) + ":" + v;
  }
  out += "}";
  return out;
}

}  // namespace

TheoryResult run_theory(const ExperimentConfig& cfg) {
  cfg.validate();
  TheoryResult out;

  // Underpowered runs get doubled bands and a warning note.
  auto powered = [&](long default_trials, long* trials_out, double* widen,
                     std::string* warning) {
    long trials = cfg.theory_trials > 0 ? cfg.theory_trials : default_trials;
    *trials_out = trials;
    if (trials < default_trials / 2) {
      *widen = 2.0;
      *warning = "low_trials";
    } else {
      *widen = 1.0;
      warning->clear();
    }
  };

  {  // Persistence of the group-accuracy gap under uniform-start training.
    TheoryRow row;
    row.check = "disparity_persistence";
    const StylizedPool pool{10, 0.7, 0.0};
    long trials;
    double widen;
    powered(2000, &trials, &widen, &row.warning);
    const int steps = 100;
    const double delta = 0.01;
    const auto gaps = disparity_persistence_trajectory(
        pool, steps, static_cast<int>(trials), delta,
        derive_seed(cfg.seed, "theory:persistence", 0));
    double max_dev = 0.0;
    for (double g : gaps) max_dev = std::max(max_dev, std::fabs(g - (pool.alpha - 0.5)));
    row.param_json = json_kv({{"alpha", format_double(pool.alpha)},
                              {"m", std::to_string(pool.m)},
                              {"k", "1"},
                              {"steps", std::to_string(steps)},
                              {"trials", std::to_string(trials)},
                              {"delta", format_double(delta)}});
    row.bound = 0.03 * widen;
    row.observed = max_dev;
    row.pass = max_dev <= row.bound;
    out.rows.push_back(std::move(row));
  }

  {  // Interval check for the dSim-induced allocation gap.
    TheoryRow row;
    row.check = "disparity_bounds";
    double worst_margin = 1.0;
    int cells = 0, failing = 0;
    for (int ai = 0; ai < 9; ++ai) {
      for (int gi = 1; gi <= 10; ++gi) {
        const double alpha = 0.55 + 0.05 * ai;
        const double gamma = 0.1 * gi;
        const DisparityBounds b = dsim_disparity_bounds(alpha, gamma);
        const double margin = std::min(b.disc - b.lower, b.upper - b.disc);
        worst_margin = std::min(worst_margin, margin);
        ++cells;
        if (margin < 0.0) ++failing;
      }
    }
    row.param_json = json_kv(
        {{"alpha_grid", "0.55..0.95"},
         {"gamma_grid", "0.1..1.0"},
         {"cells", std::to_string(cells)},
         {"failing", std::to_string(failing)}});
    row.observed = worst_margin;
    row.bound = 0.0;
    row.pass = worst_margin >= 0.0;
    out.rows.push_back(std::move(row));
  }

  {  // One-step gain of the dSim-favored annotator vs the 2*beta*delta bound.
    TheoryRow row;
    row.check = "exploitation_gain";
    long trials;
    double widen;
    powered(5000, &trials, &widen, &row.warning);
    double worst = 1.0;
    std::uint64_t counter = 0;
    for (double beta : {0.1, 0.2, 0.3}) {
      for (int m : {2, 5, 10}) {
        for (double delta : {0.05, 0.1}) {
          const GainStats g = exploitation_gain(
              beta, m, delta, trials,
              derive_seed(cfg.seed, "theory:exploitation", counter++));
          const double margin =
              g.mean - (2.0 * beta * delta - 3.0 * widen * g.stderr_);
          worst = std::min(worst, margin);
        }
      }
    }
    row.param_json = json_kv({{"beta_grid", "0.1;0.2;0.3"},
                              {"m_grid", "2;5;10"},
                              {"delta_grid", "0.05;0.1"},
                              {"trials", std::to_string(trials)}});
    row.observed = worst;
    row.bound = 0.0;
    row.pass = worst >= 0.0;
    out.rows.push_back(std::move(row));
  }

  {  // Discovery threshold: sign of the expected change flips at the formula.
    TheoryRow row;
    row.check = "exploration_threshold";
    long trials;
    double widen;
    powered(5000, &trials, &widen, &row.warning);
    double worst = 1.0;
    std::uint64_t counter = 0;
    for (int k : {1, 3, 5}) {
      for (int m : {3, 5, 10}) {
        const double thr = exploration_threshold(k, m);
        const GainStats hi = exploration_weight_change(
            thr + 0.05, k, m, trials,
            derive_seed(cfg.seed, "theory:exploration", counter++));
        const GainStats lo = exploration_weight_change(
            std::max(0.0, thr - 0.05), k, m, trials,
            derive_seed(cfg.seed, "theory:exploration", counter++));
        // Above threshold: certified positive. Below: certified non-positive.
        const double margin_hi = hi.mean - 3.0 * widen * hi.stderr_;
        const double margin_lo = -(lo.mean + 3.0 * widen * lo.stderr_);
        worst = std::min({worst, margin_hi, margin_lo});
      }
    }
    row.param_json = json_kv({{"k_grid", "1;3;5"},
                              {"m_grid", "3;5;10"},
                              {"eps_offset", "0.05"},
                              {"trials", std::to_string(trials)}});
    row.observed = worst;
    row.bound = 0.0;
    row.pass = worst >= 0.0;
    out.rows.push_back(std::move(row));
  }

  out.all_pass = true;
  std::ostringstream csv;
  csv << "check,param_json,observed,bound,pass,warning\n";
  for (const TheoryRow& row : out.rows) {
    out.all_pass = out.all_pass && row.pass;
    csv << row.check << ',' << row.param_json << ','
        << format_double(row.observed) << ',' << format_double(row.bound) << ','
        << (row.pass ? "true" : "false") << ',' << row.warning << '\n';
  }
  out.results_csv = csv.str();
  std::ostringstream man;
  man << "kind=theory\n";
  man << "master_seed=" << cfg.seed << '\n';
  man << "theory_trials=" << cfg.theory_trials << '\n';
  out.manifest = man.str();
  return out;
}

}  // namespace talloc
