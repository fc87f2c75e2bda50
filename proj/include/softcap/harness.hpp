#pragma once

// Run orchestration behind the `softcap` CLI: configuration files, training
// with checkpoint/resume, evaluation, matched-seed tactile comparison and
// trace export.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "softcap/env.hpp"
#include "softcap/sac.hpp"

namespace softcap::harness {

namespace fs = std::filesystem;
using nlohmann::json;

/// Any user-facing failure: bad configuration, unreadable files, mismatched
/// checkpoints. The message is meant to be printed as-is.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { kTrain, kEval, kCompare, kReplayExport };

std::string to_string(Mode m);

struct RunConfig {
  Mode mode = Mode::kTrain;
  EnvConfig env;
  sac::TrainConfig train;
  int eval_episodes = 20;
  std::uint64_t eval_seed = 20240;
  int checkpoint_every = 100;
  fs::path out_dir = "runs/default";
  std::vector<fs::path> checkpoints;
  fs::path trace_file;

  void validate() const;
};

json env_to_json(const EnvConfig& c);
EnvConfig env_from_json(const json& j);
json train_to_json(const sac::TrainConfig& c);
sac::TrainConfig train_from_json(const json& j);

/// {"env": {...}, "train": {...}, "run": {...}}. Missing keys keep their
/// defaults; unknown keys and wrongly typed values are rejected.
RunConfig config_from_json(const json& j);
RunConfig load_config(const fs::path& path);
json config_to_json(const RunConfig& c);
/// Pretty-printed, key-sorted; identical configs give identical bytes.
std::string config_snapshot(const RunConfig& c);

// -------------------------------------------------------------- checkpoint --

/// "SCCK", u32 version, length-prefixed JSON {"env", "train"}, then the
/// trainer state.
void save_checkpoint(const fs::path& path, const sac::Trainer& trainer, const EnvConfig& env,
                     const sac::TrainConfig& train);

struct LoadedCheckpoint {
  EnvConfig env;
  sac::TrainConfig train;
  std::unique_ptr<sac::Trainer> trainer;
};

LoadedCheckpoint load_checkpoint(const fs::path& path);

// ------------------------------------------------------------------- runs --

struct TrainSummary {
  int episodes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
};

/// Trains to config.train.episodes, writing metrics.csv, checkpoint.bin and
/// manifest.json under out_dir. A checkpoint in config.checkpoints resumes.
TrainSummary run_train(const RunConfig& config, std::ostream& log);

struct EvalSummary {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  RewardTerms mean_terms;
};

/// Deterministic-action evaluation of a policy over seeded episodes,
/// collecting traces into trace_dir when given.
EvalSummary evaluate_policy(const sac::PolicyNet& policy, const EnvConfig& env, int episodes,
                            std::uint64_t eval_seed, const std::optional<fs::path>& trace_dir);

EvalSummary run_eval(const RunConfig& config, std::ostream& log);

struct CompareRow {
  std::string arm;
  bool tactile = false;
  EvalSummary eval;
};

std::vector<CompareRow> run_compare(const RunConfig& config, std::ostream& log);
std::string compare_table(const std::vector<CompareRow>& rows);

struct ExportResult {
  fs::path output;
  std::size_t rows = 0;
  int longest_streak = 0;
  bool success = false;
};

/// Reads a per-timestep trace (or a previous export) and writes
/// <stem>.export.csv with reward terms, poses and the longest streak flagged.
ExportResult run_replay_export(const fs::path& trace, const std::optional<fs::path>& out_dir, double threshold,
                               int streak_length, std::ostream& log);

std::string eval_summary_header();
std::string eval_summary_row(const std::string& label, const EvalSummary& s);

}  // namespace softcap::harness
