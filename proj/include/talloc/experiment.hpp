#pragma once

#include <string>
#include <vector>

#include "talloc/baselines.hpp"
#include "talloc/datagen.hpp"
#include "talloc/metrics.hpp"
#include "talloc/theory.hpp"
#include "talloc/training.hpp"

namespace talloc {

enum class ExperimentKind { Synthetic, Sweep, Replay, Theory };
enum class GoldMode { Objective, Subjective };

extern const std::vector<std::string> kAllMethods;  // smooth strict goel tran keswani

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Synthetic;
  std::vector<std::string> methods = kAllMethods;
  int trials = 50;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  // synthetic / sweep
  double s = 0.3;
  std::vector<double> s_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  int n_points = 10000;
  double train_frac = 0.7;

  // replay
  std::string replay_path;
  GoldMode gold = GoldMode::Subjective;

  // When set, trial 0 of the first listed trainable method is re-run and
  // its per-step history is written here as step,mu,committee,yhat,loss.
  std::string history_path;

  TrainConfig strict_cfg;
  TrainConfig smooth_cfg;
  double goel_beta = 0.1;
  TranConfig tran_cfg;

  // theory (0 = per-check defaults)
  long theory_trials = 0;

  void validate() const;
};

// Track presets matching the published experiment settings.
ExperimentConfig synthetic_defaults();
ExperimentConfig sweep_defaults();
ExperimentConfig replay_defaults();
ExperimentConfig theory_defaults();

// Plain-text key=value config file; unknown keys are rejected.
void apply_config_file(ExperimentConfig& cfg, const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value);

struct MethodStats {
  std::string method;
  std::string metric;
  double mean = 0.0;
  double stderr_ = -1.0;  // negative = absent (single trial)
  int trials = 0;
};

struct ExperimentResult {
  std::vector<TrialReport> reports;     // one per (method, trial)
  std::vector<MethodStats> stats;       // aggregated
  std::string results_csv;
  std::string manifest;
};

ExperimentResult run_synthetic(const ExperimentConfig& cfg);

struct SweepResult {
  std::vector<std::pair<double, ExperimentResult>> per_s;
  std::string results_csv;  // with leading s column
  std::string manifest;
};

SweepResult run_sweep(const ExperimentConfig& cfg);

ExperimentResult run_replay(const ExperimentConfig& cfg);

struct TheoryRow {
  std::string check;
  std::string param_json;
  double observed = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string warning;
};

struct TheoryResult {
  std::vector<TheoryRow> rows;
  bool all_pass = false;
  std::string results_csv;
  std::string manifest;
};

TheoryResult run_theory(const ExperimentConfig& cfg);

// Seed lineage used by the runners; exposed so the manifest and tests can
// reproduce any trial in isolation.
std::uint64_t trial_dataset_seed(const ExperimentConfig& cfg, int trial);
std::uint64_t trial_labels_seed(const ExperimentConfig& cfg, int trial);
std::uint64_t trial_split_seed(const ExperimentConfig& cfg, int trial);
std::uint64_t trial_method_seed(const ExperimentConfig& cfg,
                                const std::string& method, int trial);

std::string format_double(double v);  // %.17g, stable across runs

}  // namespace talloc
