#include "softcap/harness.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "softcap/binary_io.hpp"

#ifndef SOFTCAP_VERSION
#define SOFTCAP_VERSION "dev"
#endif

namespace softcap::harness {

namespace {

// Strict reader over one JSON object: typed getters, and finish() rejects
// any key nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw RunError(where_ + ": expected an object");
  }

  const json* take(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(key, "expected a finite number");
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      if (std::is_unsigned_v<Int> && v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)
        fail(key, "expected a non-negative integer");
      out = v->get<Int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void vec3(const std::string& key, Vec3& out) {
    if (const json* v = take(key)) out = parse_vec3(*v, key);
  }

  void range3(const std::string& key, Range3& out) {
    if (const json* v = take(key)) {
      Fields r(*v, where_ + "." + key);
      r.vec3("min", out.min);
      r.vec3("max", out.max);
      r.finish();
    }
  }

  void quat(const std::string& key, Quat& out) {
    if (const json* v = take(key)) {
      if (!v->is_array() || v->size() != 4) fail(key, "expected [w, x, y, z]");
      double c[4];
      for (int i = 0; i < 4; ++i) {
        if (!(*v)[i].is_number()) fail(key, "expected [w, x, y, z]");
        c[i] = (*v)[i].get<double>();
      }
      out = Quat{c[0], c[1], c[2], c[3]};
    }
  }

  void sizes(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "expected an array of positive integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) fail(key, "expected an array of positive integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }

  Fields object(const std::string& key) {
    static const json kEmpty = json::object();
    const json* v = take(key);
    return Fields(v ? *v : kEmpty, where_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw RunError(where_ + ": unknown key '" + k + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw RunError(where_ + "." + key + ": " + what);
  }

  Vec3 parse_vec3(const json& v, const std::string& key) const {
    if (!v.is_array() || v.size() != 3) fail(key, "expected [x, y, z]");
    for (const auto& e : v)
      if (!e.is_number()) fail(key, "expected [x, y, z]");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json range(const Range3& r) { return {{"min", vec(r.min)}, {"max", vec(r.max)}}; }

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RunError("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw RunError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out | std::ios::trunc) {
  std::ofstream f(path, mode | std::ios::binary);
  if (!f) throw RunError("cannot write " + path.string());
  return f;
}

void write_text(const fs::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  if (!f) throw RunError("failed writing " + path.string());
}

// Writes manifest.json exactly once, whether `body` returns or throws.
template <typename Fn>
auto with_manifest(const RunConfig& config, const fs::path& out_dir, Fn&& body) {
  json manifest;
  manifest["mode"] = to_string(config.mode);
  manifest["version"] = SOFTCAP_VERSION;
  manifest["seed"] = config.train.seed;
  manifest["config"] = config_to_json(config);
  manifest["started_at"] = utc_now();
  auto finish = [&](const std::string& status, json summary, const std::string& error) {
    manifest["finished_at"] = utc_now();
    manifest["status"] = status;
    manifest["summary"] = std::move(summary);
    if (!error.empty()) manifest["error"] = error;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream f(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (f) f << manifest.dump(2) << '\n';
  };
  try {
    auto [result, summary] = body();
    finish("ok", std::move(summary), "");
    return result;
  } catch (const std::exception& e) {
    finish("failed", json::object(), e.what());
    throw;
  }
}

json summary_json(const EvalSummary& s) {
  return {{"episodes", s.episodes},
          {"successes", s.successes},
          {"success_rate", s.success_rate},
          {"mean_return", s.mean_return},
          {"mean_r_dist", s.mean_terms.dist},
          {"mean_r_align", s.mean_terms.align},
          {"mean_r_surr", s.mean_terms.surr},
          {"mean_r_contact", s.mean_terms.contact}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kTrain: return "train";
    case Mode::kEval: return "eval";
    case Mode::kCompare: return "compare";
    case Mode::kReplayExport: return "replay-export";
  }
  return "unknown";
}

void RunConfig::validate() const {
  try {
    env.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw RunError(e.what());
  }
  if (eval_episodes < 0) throw RunError("run.eval_episodes must be >= 0");
  if (checkpoint_every < 1) throw RunError("run.checkpoint_every must be >= 1");
  if (mode == Mode::kEval && checkpoints.size() != 1) throw RunError("eval needs exactly one --checkpoint");
  if (mode == Mode::kCompare && !(checkpoints.empty() || checkpoints.size() == 2))
    throw RunError("compare takes either two --checkpoint values or none (train both arms)");
  if (mode == Mode::kTrain && checkpoints.size() > 1) throw RunError("train resumes from at most one --checkpoint");
  if (mode == Mode::kReplayExport && trace_file.empty()) throw RunError("replay-export needs a trace file");
}

// ------------------------------------------------------------------ json --

json env_to_json(const EnvConfig& c) {
  const auto& r = c.randomization;
  return {
      {"tactile_enabled", c.tactile_enabled},
      {"episode_length", c.episode_length},
      {"control_dt", c.control_dt},
      {"physics_substeps", c.physics_substeps},
      {"action_limits",
       {{"max_translation_step", c.action_limits.max_translation_step},
        {"max_rotation_step", c.action_limits.max_rotation_step}}},
      {"randomization",
       {{"target_position", range(r.target_position)},
        {"gripper_orientation", range(r.gripper_orientation)},
        {"target_lin_vel", range(r.target_lin_vel)},
        {"target_ang_vel", range(r.target_ang_vel)},
        {"target_mass_min", r.target_mass_min},
        {"target_mass_max", r.target_mass_max},
        {"obs_position_noise", r.obs_position_noise},
        {"obs_velocity_noise", r.obs_velocity_noise}}},
      {"containment_margin", c.containment_margin},
      {"success_reward_threshold", c.success_reward_threshold},
      {"success_streak_length", c.success_streak_length},
      {"action_noise_fraction", c.action_noise_fraction},
      {"target_half_extents", vec(c.target_half_extents)},
      {"gripper_start", vec(c.gripper_start)},
      {"goal_orientation_offset",
       json::array({c.goal_orientation_offset.w, c.goal_orientation_offset.x, c.goal_orientation_offset.y,
                    c.goal_orientation_offset.z})},
      {"gripper",
       {{"finger_clearance", c.gripper.finger_clearance},
        {"finger_radius", c.gripper.finger_radius},
        {"palm_radius", c.gripper.palm_radius},
        {"finger_span", c.gripper.finger_span},
        {"palm_offset", c.gripper.palm_offset}}},
      {"solver", {{"passes", c.solver.passes}, {"baumgarte", c.solver.baumgarte}}},
      {"translation_only", c.translation_only},
  };
}

EnvConfig env_from_json(const json& j) {
  EnvConfig c;
  Fields f(j, "env");
  f.boolean("tactile_enabled", c.tactile_enabled);
  f.integer("episode_length", c.episode_length);
  f.number("control_dt", c.control_dt);
  f.integer("physics_substeps", c.physics_substeps);
  {
    Fields a = f.object("action_limits");
    a.number("max_translation_step", c.action_limits.max_translation_step);
    a.number("max_rotation_step", c.action_limits.max_rotation_step);
    a.finish();
  }
  {
    auto& r = c.randomization;
    Fields rf = f.object("randomization");
    rf.range3("target_position", r.target_position);
    rf.range3("gripper_orientation", r.gripper_orientation);
    rf.range3("target_lin_vel", r.target_lin_vel);
    rf.range3("target_ang_vel", r.target_ang_vel);
    rf.number("target_mass_min", r.target_mass_min);
    rf.number("target_mass_max", r.target_mass_max);
    rf.number("obs_position_noise", r.obs_position_noise);
    rf.number("obs_velocity_noise", r.obs_velocity_noise);
    rf.finish();
  }
  f.number("containment_margin", c.containment_margin);
  f.number("success_reward_threshold", c.success_reward_threshold);
  f.integer("success_streak_length", c.success_streak_length);
  f.number("action_noise_fraction", c.action_noise_fraction);
  f.vec3("target_half_extents", c.target_half_extents);
  f.vec3("gripper_start", c.gripper_start);
  f.quat("goal_orientation_offset", c.goal_orientation_offset);
  {
    Fields g = f.object("gripper");
    g.number("finger_clearance", c.gripper.finger_clearance);
    g.number("finger_radius", c.gripper.finger_radius);
    g.number("palm_radius", c.gripper.palm_radius);
    g.number("finger_span", c.gripper.finger_span);
    g.number("palm_offset", c.gripper.palm_offset);
    g.finish();
  }
  {
    Fields s = f.object("solver");
    s.integer("passes", c.solver.passes);
    s.number("baumgarte", c.solver.baumgarte);
    s.finish();
  }
  f.boolean("translation_only", c.translation_only);
  f.finish();
  return c;
}

json train_to_json(const sac::TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"tau", c.tau},
          {"batch_size", c.batch_size},
          {"train_freq", c.train_freq},
          {"gradient_steps", c.gradient_steps},
          {"lr", c.lr},
          {"episodes", c.episodes},
          {"warmup_steps", c.warmup_steps},
          {"seed", c.seed},
          {"hidden", c.hidden},
          {"buffer_capacity", c.buffer_capacity},
          {"target_entropy", c.target_entropy},
          {"initial_log_alpha", c.initial_log_alpha},
          {"log_std_min", c.log_std_min},
          {"log_std_max", c.log_std_max}};
}

sac::TrainConfig train_from_json(const json& j) {
  sac::TrainConfig c;
  Fields f(j, "train");
  f.number("gamma", c.gamma);
  f.number("tau", c.tau);
  f.integer("batch_size", c.batch_size);
  f.integer("train_freq", c.train_freq);
  f.integer("gradient_steps", c.gradient_steps);
  f.number("lr", c.lr);
  f.integer("episodes", c.episodes);
  f.integer("warmup_steps", c.warmup_steps);
  f.integer("seed", c.seed);
  f.sizes("hidden", c.hidden);
  f.integer("buffer_capacity", c.buffer_capacity);
  f.number("target_entropy", c.target_entropy);
  f.number("initial_log_alpha", c.initial_log_alpha);
  f.number("log_std_min", c.log_std_min);
  f.number("log_std_max", c.log_std_max);
  f.finish();
  return c;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Fields f(j, "config");
  if (const json* e = f.take("env")) c.env = env_from_json(*e);
  if (const json* t = f.take("train")) c.train = train_from_json(*t);
  Fields r = f.object("run");
  r.integer("eval_episodes", c.eval_episodes);
  r.integer("eval_seed", c.eval_seed);
  r.integer("checkpoint_every", c.checkpoint_every);
  r.finish();
  f.finish();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw RunError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw RunError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& c) {
  return {{"env", env_to_json(c.env)},
          {"train", train_to_json(c.train)},
          {"run", {{"eval_episodes", c.eval_episodes}, {"eval_seed", c.eval_seed}, {"checkpoint_every", c.checkpoint_every}}}};
}

std::string config_snapshot(const RunConfig& c) { return config_to_json(c).dump(2) + "\n"; }

// ------------------------------------------------------------ checkpoint --

void save_checkpoint(const fs::path& path, const sac::Trainer& trainer, const EnvConfig& env,
                     const sac::TrainConfig& train) {
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    auto f = open_out(tmp);
    f.write("SCCK", 4);
    io::write_u32(f, 1);
    io::write_string(f, json{{"env", env_to_json(env)}, {"train", train_to_json(train)}}.dump());
    trainer.save_state(f);
    if (!f) throw RunError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw RunError("cannot move checkpoint into place: " + ec.message());
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RunError("cannot open checkpoint " + path.string());
  try {
    io::expect_magic(f, "SCCK");
    if (io::read_u32(f) != 1) throw io::FormatError("unsupported checkpoint version");
    const json meta = json::parse(io::read_string(f, 1 << 24));
    LoadedCheckpoint out;
    out.env = env_from_json(meta.at("env"));
    out.train = train_from_json(meta.at("train"));
    out.trainer = std::make_unique<sac::Trainer>(out.env, out.train);
    out.trainer->load_state(f);
    return out;
  } catch (const RunError& e) {
    throw RunError("corrupt checkpoint " + path.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw RunError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

// ----------------------------------------------------------------- train --

TrainSummary run_train(const RunConfig& config, std::ostream& log) {
  return with_manifest(config, config.out_dir, [&]() -> std::pair<TrainSummary, json> {
    config.validate();
    ensure_writable_dir(config.out_dir);
    write_text(config.out_dir / "config.json", config_snapshot(config));
    const fs::path metrics_path = config.out_dir / "metrics.csv";
    const fs::path ckpt_path = config.out_dir / "checkpoint.bin";
    std::unique_ptr<sac::Trainer> trainer;
    TrainSummary summary;
    double return_sum = 0.0;
    int successes = 0;
    std::ofstream metrics;

    if (!config.checkpoints.empty()) {
      LoadedCheckpoint ck = load_checkpoint(config.checkpoints.front());
      json a = env_to_json(ck.env), b = env_to_json(config.env);
      if (a != b) throw RunError("checkpoint environment config differs from the configured one; refusing to resume");
      json ta = train_to_json(ck.train), tb = train_to_json(config.train);
      ta.erase("episodes");
      tb.erase("episodes");
      if (ta != tb) throw RunError("checkpoint training config differs from the configured one; refusing to resume");
      trainer = std::move(ck.trainer);

      // Keep exactly the rows the checkpoint has already produced.
      const int done = trainer->episodes_done();
      std::ifstream old(metrics_path);
      if (!old) throw RunError("cannot resume: " + metrics_path.string() + " is missing");
      std::vector<std::string> lines;
      for (std::string line; std::getline(old, line);) lines.push_back(line);
      old.close();
      if (lines.size() < static_cast<std::size_t>(done) + 1 || lines.front() != sac::metrics_header())
        throw RunError("cannot resume: metrics.csv has fewer rows than the checkpoint's " + std::to_string(done) +
                       " episodes");
      metrics = open_out(metrics_path);
      metrics << lines.front() << '\n';
      for (int i = 1; i <= done; ++i) {
        metrics << lines[static_cast<std::size_t>(i)] << '\n';
        const auto cells = split_csv(lines[static_cast<std::size_t>(i)]);
        double ret = 0.0;
        if (cells.size() > 8 && parse_double(cells[2], ret)) return_sum += ret;
        if (cells.size() > 8 && cells[8] == "1") ++successes;
      }
      log << "resuming from episode " << done << "\n";
    } else {
      trainer = std::make_unique<sac::Trainer>(config.env, config.train);
      metrics = open_out(metrics_path);
      metrics << sac::metrics_header() << '\n';
    }

    try {
      while (trainer->episodes_done() < config.train.episodes) {
        const sac::EpisodeMetrics m = trainer->run_episode();
        metrics << sac::metrics_row(m) << '\n';
        metrics.flush();
        return_sum += m.episode_return;
        successes += m.success ? 1 : 0;
        log << "episode " << m.episode << " return " << m.episode_return << " streak " << m.longest_streak
            << " alpha " << m.alpha << "\n";
        if (trainer->episodes_done() % config.checkpoint_every == 0)
          save_checkpoint(ckpt_path, *trainer, config.env, config.train);
      }
    } catch (const nn::NonFiniteError& e) {
      throw RunError(std::string("training halted: ") + e.what());
    }
    save_checkpoint(ckpt_path, *trainer, config.env, config.train);

    summary.episodes = trainer->episodes_done();
    if (summary.episodes > 0) {
      summary.success_rate = static_cast<double>(successes) / summary.episodes;
      summary.mean_return = return_sum / summary.episodes;
    }
    return {summary, json{{"episodes", summary.episodes},
                          {"success_rate", summary.success_rate},
                          {"mean_return", summary.mean_return}}};
  });
}

// ------------------------------------------------------------------ eval --

EvalSummary evaluate_policy(const sac::PolicyNet& policy, const EnvConfig& env_config, int episodes,
                            std::uint64_t eval_seed, const std::optional<fs::path>& trace_dir) {
  if (policy.net.in_dim() != env_config.obs_dim()) {
    throw RunError("policy expects " + std::to_string(policy.net.in_dim()) +
                   "-dimensional observations but the environment produces " +
                   std::to_string(env_config.obs_dim()) + " (tactile " + (env_config.tactile_enabled ? "on" : "off") +
                   "); check --tactile");
  }
  if (trace_dir) ensure_writable_dir(*trace_dir);
  SoftCaptureEnv env(env_config);
  EvalSummary s;
  s.episodes = episodes;
  for (int e = 0; e < episodes; ++e) {
    Observation obs = env.reset(sac::episode_seed(eval_seed, e));
    std::vector<TraceRecord> trace;
    std::vector<double> rewards;
    while (!env.done()) {
      const std::vector<double> action = deterministic_action(policy, obs);
      StepResult r = env.step(action);
      TraceRecord rec;
      rec.step = env.step_count();
      std::copy(action.begin(), action.end(), rec.raw_action.begin());
      rec.applied_action = r.applied_action;
      rec.terms = r.terms;
      rec.reward = r.reward;
      rec.contact_force = r.contact_force;
      rec.gripper = env.world().gripper.pose;
      rec.target = env.world().target.pose;
      trace.push_back(rec);
      rewards.push_back(r.reward);
      s.mean_return += r.reward;
      s.mean_terms.dist += r.terms.dist;
      s.mean_terms.align += r.terms.align;
      s.mean_terms.surr += r.terms.surr;
      s.mean_terms.contact += r.terms.contact;
      obs = std::move(r.obs);
    }
    if (is_success(rewards, env_config.success_reward_threshold, env_config.success_streak_length)) ++s.successes;
    if (trace_dir) {
      char name[64];
      std::snprintf(name, sizeof name, "episode_%04d.csv", e + 1);
      auto f = open_out(*trace_dir / name);
      write_trace(f, trace);
    }
  }
  if (episodes > 0) {
    const double n = episodes;
    s.success_rate = s.successes / n;
    s.mean_return /= n;
    s.mean_terms = {s.mean_terms.dist / n, s.mean_terms.align / n, s.mean_terms.surr / n, s.mean_terms.contact / n};
  }
  return s;
}

std::string eval_summary_header() {
  return "arm,tactile,episodes,successes,success_rate,mean_return,mean_r_dist,mean_r_align,mean_r_surr,mean_r_contact";
}

std::string eval_summary_row(const std::string& label, const EvalSummary& s) {
  return label + "," + std::to_string(s.episodes) + "," + std::to_string(s.successes) + "," + fmt(s.success_rate) +
         "," + fmt(s.mean_return) + "," + fmt(s.mean_terms.dist) + "," + fmt(s.mean_terms.align) + "," +
         fmt(s.mean_terms.surr) + "," + fmt(s.mean_terms.contact);
}

EvalSummary run_eval(const RunConfig& config, std::ostream& log) {
  return with_manifest(config, config.out_dir, [&]() -> std::pair<EvalSummary, json> {
    config.validate();
    ensure_writable_dir(config.out_dir);
    const LoadedCheckpoint ck = load_checkpoint(config.checkpoints.front());
    const EvalSummary s = evaluate_policy(ck.trainer->agent().policy, config.env, config.eval_episodes,
                                          config.eval_seed, config.out_dir / "traces");
    write_text(config.out_dir / "eval_summary.csv",
               eval_summary_header() + "\n" +
                   eval_summary_row(std::string("eval,") + (config.env.tactile_enabled ? "1" : "0"), s) + "\n");
    log << "success rate " << s.success_rate << " over " << s.episodes << " episodes, mean return "
        << s.mean_return << "\n";
    return {s, summary_json(s)};
  });
}

// --------------------------------------------------------------- compare --

std::vector<CompareRow> run_compare(const RunConfig& config, std::ostream& log) {
  return with_manifest(config, config.out_dir, [&]() -> std::pair<std::vector<CompareRow>, json> {
    config.validate();
    ensure_writable_dir(config.out_dir);
    std::vector<std::pair<std::string, fs::path>> arms;
    if (config.checkpoints.size() == 2) {
      arms = {{"A", config.checkpoints[0]}, {"B", config.checkpoints[1]}};
    } else {
      for (bool tactile : {true, false}) {
        RunConfig arm = config;
        arm.mode = Mode::kTrain;
        arm.checkpoints.clear();
        arm.env.tactile_enabled = tactile;
        arm.out_dir = config.out_dir / (tactile ? "tactile" : "no_tactile");
        log << "training " << (tactile ? "tactile" : "no_tactile") << " arm\n";
        run_train(arm, log);
        arms.emplace_back(tactile ? "tactile" : "no_tactile", arm.out_dir / "checkpoint.bin");
      }
    }

    std::vector<LoadedCheckpoint> loaded;
    for (const auto& [label, path] : arms) loaded.push_back(load_checkpoint(path));
    json e0 = env_to_json(loaded[0].env), e1 = env_to_json(loaded[1].env);
    e0.erase("tactile_enabled");
    e1.erase("tactile_enabled");
    if (e0 != e1) throw RunError("the two arms' environment configs differ beyond the tactile flag; refusing to compare");

    std::vector<CompareRow> rows;
    json summary = json::array();
    for (std::size_t i = 0; i < arms.size(); ++i) {
      const EnvConfig& env = loaded[i].env;
      CompareRow row{arms[i].first, env.tactile_enabled,
                     evaluate_policy(loaded[i].trainer->agent().policy, env, config.eval_episodes, config.eval_seed,
                                     config.out_dir / ("traces_" + arms[i].first))};
      json js = summary_json(row.eval);
      js["arm"] = row.arm;
      js["tactile"] = row.tactile;
      summary.push_back(js);
      rows.push_back(row);
    }
    std::string csv = eval_summary_header() + "\n";
    for (const auto& r : rows) csv += eval_summary_row(r.arm + "," + (r.tactile ? "1" : "0"), r.eval) + "\n";
    write_text(config.out_dir / "compare.csv", csv);
    log << compare_table(rows);
    return {rows, summary};
  });
}

std::string compare_table(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "arm" << std::setw(9) << "tactile" << std::setw(10) << "episodes"
     << std::setw(14) << "success_rate" << "mean_return\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.arm << std::setw(9) << (r.tactile ? "on" : "off") << std::setw(10)
       << r.eval.episodes << std::setw(14) << r.eval.success_rate << r.eval.mean_return << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------- replay export --

ExportResult run_replay_export(const fs::path& trace, const std::optional<fs::path>& out_dir, double threshold,
                               int streak_length, std::ostream& log) {
  static const std::vector<std::string> kColumns = {
      "step",  "r_dist", "r_align", "r_surr", "r_contact", "reward", "contact_force", "g_px", "g_py", "g_pz",
      "g_qw",  "g_qx",   "g_qy",    "g_qz",   "t_px",      "t_py",   "t_pz",          "t_qw", "t_qx", "t_qy",
      "t_qz"};
  std::ifstream in(trace);
  if (!in) throw RunError("cannot open trace " + trace.string());

  const fs::path dir = out_dir ? *out_dir : trace.parent_path();
  if (!dir.empty()) ensure_writable_dir(dir);
  ExportResult result;
  result.output = dir / (trace.stem().string() + ".export.csv");

  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> column_of;
  std::size_t width = 0;
  if (!header.empty()) {
    const auto names = split_csv(header);
    width = names.size();
    for (const auto& c : kColumns) {
      auto it = std::find(names.begin(), names.end(), c);
      if (it == names.end()) throw RunError(trace.string() + ":1: missing column '" + c + "'");
      column_of.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    std::size_t line_no = 1;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != width)
        throw RunError(trace.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " fields, found " + std::to_string(cells.size()));
      std::vector<double> values;
      for (std::size_t k = 0; k < kColumns.size(); ++k) {
        double v = 0.0;
        if (!parse_double(cells[column_of[k]], v))
          throw RunError(trace.string() + ":" + std::to_string(line_no) + ": column '" + kColumns[k] +
                         "' is not a number: '" + cells[column_of[k]] + "'");
        values.push_back(v);
      }
      rows.push_back(std::move(values));
    }
  }

  auto out = open_out(result.output);
  result.rows = rows.size();
  if (rows.empty()) {
    log << "warning: " << trace.string() << " has no timesteps; wrote an empty export\n";
    return result;
  }

  // Locate the first longest run of reward > threshold.
  std::vector<double> rewards;
  for (const auto& r : rows) rewards.push_back(r[5]);
  result.longest_streak = longest_streak(rewards, threshold);
  result.success = result.longest_streak >= streak_length;
  std::size_t streak_begin = rows.size(), run = 0;
  for (std::size_t i = 0; i < rewards.size() && result.longest_streak > 0; ++i) {
    run = rewards[i] > threshold ? run + 1 : 0;
    if (static_cast<int>(run) == result.longest_streak) {
      streak_begin = i + 1 - run;
      break;
    }
  }

  for (std::size_t k = 0; k < kColumns.size(); ++k) out << (k ? "," : "") << kColumns[k];
  out << ",in_longest_streak\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << static_cast<long long>(rows[i][0]);
    for (std::size_t k = 1; k < kColumns.size(); ++k) out << ',' << fmt(rows[i][k]);
    const bool in_streak = i >= streak_begin && i < streak_begin + static_cast<std::size_t>(result.longest_streak);
    out << ',' << (in_streak ? 1 : 0) << '\n';
  }
  log << "longest streak " << result.longest_streak << (result.success ? " (success)" : "") << " -> "
      << result.output.string() << "\n";
  return result;
}

}  // namespace softcap::harness
