// Experiment runner CLI: synthetic, sweep, replay, theory, gen-replay.
// Exit codes: 0 ok, 2 config/validation error, 3 failed theory checks.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "talloc/experiment.hpp"

namespace fs = std::filesystem;
using namespace talloc;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + path.string());
  out << content;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "results";
  std::vector<std::string> overrides;  // key=value pairs from flags
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "key=value config file (flags override it)");
  cmd->add_option("--out", flags.out_dir, "output directory");
}

// Flags funnel through the same key=value channel as the config file so the
// precedence rule (defaults < file < flags) is a one-liner.
void add_override(CLI::App* cmd, CommonFlags& flags, const char* flag,
                  const char* key, const char* help) {
  cmd->add_option_function<std::string>(
      flag,
      [&flags, key](const std::string& v) {
        flags.overrides.push_back(std::string(key) + "=" + v);
      },
      help);
}

ExperimentConfig resolve(ExperimentConfig cfg, const CommonFlags& flags) {
  if (!flags.config_path.empty()) apply_config_file(cfg, flags.config_path);
  for (const std::string& kv : flags.overrides) {
    const size_t eq = kv.find('=');
    apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void add_train_flags(CLI::App* cmd, CommonFlags& flags) {
  add_override(cmd, flags, "--trials", "trials", "number of trials");
  add_override(cmd, flags, "--seed", "seed", "master seed");
  add_override(cmd, flags, "--threads", "threads", "worker threads (0 = auto)");
  add_override(cmd, flags, "--methods", "methods", "comma-separated methods");
  add_override(cmd, flags, "--k", "k", "committee size (odd)");
  add_override(cmd, flags, "--batch", "batch", "SGD batch size B");
  add_override(cmd, flags, "--eta-strict", "eta_strict", "strict learning rate");
  add_override(cmd, flags, "--eta-smooth", "eta_smooth", "smooth learning rate");
  add_override(cmd, flags, "--Td", "T_d", "prior horizon T_d");
  add_override(cmd, flags, "--pretrain-samples", "pretrain_samples",
               "samples used to encode the prior");
  add_override(cmd, flags, "--pretrain-iters", "pretrain_iters",
               "pretraining SGD iterations");
  add_override(cmd, flags, "--goel-beta", "goel_beta", "goel smoothing beta");
  add_override(cmd, flags, "--tran-budget", "tran_budget",
               "per-annotator test budget");
  add_override(cmd, flags, "--tran-explore-frac", "tran_explore_frac",
               "fraction of the stream used for exploration");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop task allocation experiments"};
  app.require_subcommand(1);

  CommonFlags syn_flags, sweep_flags, replay_flags, theory_flags;

  CLI::App* syn = app.add_subcommand("synthetic", "three-cluster experiment");
  add_common(syn, syn_flags);
  add_train_flags(syn, syn_flags);
  add_override(syn, syn_flags, "--s", "s", "dSim noise in [0, 2/3]");
  add_override(syn, syn_flags, "--n-points", "n_points", "points per trial");
  add_override(syn, syn_flags, "--dump-history", "history",
               "write trial 0's step history CSV to this path");

  CLI::App* sweep = app.add_subcommand("sweep", "accuracy vs dSim noise");
  add_common(sweep, sweep_flags);
  add_train_flags(sweep, sweep_flags);
  add_override(sweep, sweep_flags, "--s-values", "s_values",
               "comma-separated noise grid");
  add_override(sweep, sweep_flags, "--n-points", "n_points", "points per trial");

  CLI::App* replay = app.add_subcommand("replay", "annotation log experiment");
  add_common(replay, replay_flags);
  add_train_flags(replay, replay_flags);
  add_override(replay, replay_flags, "--replay", "replay", "replay file path");
  add_override(replay, replay_flags, "--gold", "gold",
               "objective | subjective");

  CLI::App* theory = app.add_subcommand("theory", "run the closed-form checks");
  add_common(theory, theory_flags);
  add_override(theory, theory_flags, "--seed", "seed", "master seed");
  add_override(theory, theory_flags, "--trials", "theory_trials",
               "trials per Monte-Carlo check (0 = per-check defaults)");

  // gen-replay has its own flags (it does not run an experiment).
  CLI::App* gen = app.add_subcommand("gen-replay", "write a surrogate replay file");
  SurrogateReplayConfig gen_cfg;
  std::string gen_out = "replay.txt";
  gen->add_option("--out", gen_out, "output path");
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  gen->add_option("--tasks", gen_cfg.n_tasks, "number of tasks");
  gen->add_option("--annotators-per-group", gen_cfg.annotators_per_group,
                  "pool size per group");
  gen->add_option("--dim", gen_cfg.feature_dim, "feature dimension");
  gen->add_option("--p-match", gen_cfg.p_match, "matched-group accuracy");
  gen->add_option("--p-other", gen_cfg.p_other, "other-group accuracy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (syn->parsed()) {
      const ExperimentConfig cfg = resolve(synthetic_defaults(), syn_flags);
      const ExperimentResult res = run_synthetic(cfg);
      write_file(fs::path(syn_flags.out_dir) / "synthetic_results.csv",
                 res.results_csv);
      write_file(fs::path(syn_flags.out_dir) / "manifest.txt", res.manifest);
      std::cout << res.results_csv;
      return 0;
    }
    if (sweep->parsed()) {
      const ExperimentConfig cfg = resolve(sweep_defaults(), sweep_flags);
      const SweepResult res = run_sweep(cfg);
      write_file(fs::path(sweep_flags.out_dir) / "sweep_results.csv",
                 res.results_csv);
      write_file(fs::path(sweep_flags.out_dir) / "manifest.txt", res.manifest);
      std::cout << res.results_csv;
      return 0;
    }
    if (replay->parsed()) {
      const ExperimentConfig cfg = resolve(replay_defaults(), replay_flags);
      const ExperimentResult res = run_replay(cfg);
      write_file(fs::path(replay_flags.out_dir) / "replay_results.csv",
                 res.results_csv);
      write_file(fs::path(replay_flags.out_dir) / "manifest.txt", res.manifest);
      std::cout << res.results_csv;
      return 0;
    }
    if (theory->parsed()) {
      const ExperimentConfig cfg = resolve(theory_defaults(), theory_flags);
      const TheoryResult res = run_theory(cfg);
      write_file(fs::path(theory_flags.out_dir) / "theory_results.csv",
                 res.results_csv);
      write_file(fs::path(theory_flags.out_dir) / "manifest.txt", res.manifest);
      std::cout << res.results_csv;
      if (!res.all_pass) {
        std::cerr << "one or more checks failed\n";
        return 3;
      }
      return 0;
    }
    if (gen->parsed()) {
      const ReplayDataset ds = gen_surrogate_replay(gen_cfg);
      save_replay(ds, gen_out);
      std::cout << "wrote " << ds.n_tasks() << " tasks, " << ds.m()
                << " annotators to " << gen_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
