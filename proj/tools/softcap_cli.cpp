// softcap: train, evaluate, compare and export runs of the capture task.

#include <CLI11.hpp>

#include <iostream>

#include "softcap/harness.hpp"

namespace {

using namespace softcap::harness;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tactile;
  std::optional<int> episodes;
  std::optional<int> eval_episodes;
  std::optional<int> checkpoint_every;
  std::vector<std::string> checkpoints;
  std::string out;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--tactile", f.tactile, "Tactile observation channel")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--episodes", f.episodes, "Training episodes")->check(CLI::PositiveNumber);
  cmd->add_option("--eval-episodes", f.eval_episodes, "Evaluation episodes")->check(CLI::NonNegativeNumber);
  cmd->add_option("--checkpoint-every", f.checkpoint_every, "Episodes between checkpoints")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory")->required();
}

RunConfig resolve(Mode mode, const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  c.mode = mode;
  if (f.seed) c.train.seed = *f.seed;
  if (f.tactile) c.env.tactile_enabled = *f.tactile == "on";
  if (f.episodes) c.train.episodes = *f.episodes;
  if (f.eval_episodes) c.eval_episodes = *f.eval_episodes;
  if (f.checkpoint_every) c.checkpoint_every = *f.checkpoint_every;
  for (const auto& p : f.checkpoints) c.checkpoints.emplace_back(p);
  c.out_dir = f.out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft capture of free-floating targets with a tactile three-finger gripper"};
  app.set_version_flag("--version", SOFTCAP_VERSION_STRING);
  app.require_subcommand(1);

  Flags train_f, eval_f, compare_f;
  auto* train = app.add_subcommand("train", "Train an agent; --checkpoint resumes");
  add_common(train, train_f);
  train->add_option("--checkpoint", train_f.checkpoints, "Checkpoint to resume from")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with the deterministic policy");
  add_common(eval, eval_f);
  eval->add_option("--checkpoint", eval_f.checkpoints, "Checkpoint to evaluate")->required()->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare", "Tactile vs. non-tactile under matched seeds");
  add_common(compare, compare_f);
  compare->add_option("--checkpoint", compare_f.checkpoints, "Two checkpoints; omit to train both arms")
      ->check(CLI::ExistingFile);

  std::string trace, export_out;
  double threshold = 2.0;
  int streak = 200;
  auto* exporter = app.add_subcommand("replay-export", "Per-timestep series from a trace, longest streak flagged");
  exporter->add_option("trace", trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  exporter->add_option("--out", export_out, "Output directory (default: next to the trace)");
  exporter->add_option("--threshold", threshold, "Per-step reward threshold");
  exporter->add_option("--streak", streak, "Streak length counted as success")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto s = run_train(resolve(Mode::kTrain, train_f), std::cout);
      std::cout << "trained " << s.episodes << " episodes, success rate " << s.success_rate << ", mean return "
                << s.mean_return << "\n";
    } else if (*eval) {
      run_eval(resolve(Mode::kEval, eval_f), std::cout);
    } else if (*compare) {
      run_compare(resolve(Mode::kCompare, compare_f), std::cout);
    } else if (*exporter) {
      std::optional<std::filesystem::path> out;
      if (!export_out.empty()) out = export_out;
      run_replay_export(trace, out, threshold, streak, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "softcap: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
