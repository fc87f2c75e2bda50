#pragma once

// The soft-capture task as an episodic MDP: a kinematic gripper must close
// in on a tumbling box and hold it inside its finger region without touching
// it. Observations are flat 39-vectors (40 with the tactile channel).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "softcap/dynamics.hpp"
#include "softcap/spatial.hpp"

namespace softcap {

inline constexpr std::size_t kActionDim = 6;
inline constexpr std::size_t kBaseObsDim = 39;

struct Range3 {
  Vec3 min;
  Vec3 max;
};

struct RandomizationSpec {
  Range3 target_position{{-0.2, -0.2, 0.4}, {0.2, 0.2, 0.8}};
  Range3 gripper_orientation{{-0.2618, -0.2618, -0.2618}, {0.2618, 0.2618, 0.2618}};  // +-15 deg
  Range3 target_lin_vel{{-0.02, -0.02, -0.02}, {0.02, 0.02, 0.02}};
  Range3 target_ang_vel{{-0.09, -0.09, -0.09}, {0.09, 0.09, 0.09}};
  double target_mass_min = 0.5;
  double target_mass_max = 2.0;
  double obs_position_noise = 0.005;
  double obs_velocity_noise = 0.005;
};

struct EnvConfig {
  bool tactile_enabled = false;
  int episode_length = 500;
  double control_dt = 1.0 / 60.0;
  int physics_substeps = 4;
  ActionLimits action_limits;
  RandomizationSpec randomization;
  double containment_margin = 0.005;
  double success_reward_threshold = 2.0;
  int success_streak_length = 200;
  double action_noise_fraction = 0.10;
  Vec3 target_half_extents{0.03, 0.03, 0.04};
  Vec3 gripper_start{0.0, 0.0, 0.0};
  Quat goal_orientation_offset;
  GripperGeometry gripper;
  SolverParams solver;
  /// Diagnostic mode: rotation action components are ignored.
  bool translation_only = false;

  std::size_t obs_dim() const { return tactile_enabled ? kBaseObsDim + 1 : kBaseObsDim; }
  /// Throws std::invalid_argument describing the first broken invariant.
  void validate() const;
};

/// Translation-only variant with orientation randomization and target spin
/// switched off, so the alignment term stays at its maximum.
EnvConfig diagnostic_translation_config();

struct RewardTerms {
  double dist = 0.0;
  double align = 0.0;
  double surr = 0.0;
  double contact = 0.0;

  double total() const { return dist + align + surr + contact; }
};

struct WorldState {
  GripperBody gripper;
  RigidBody target;
  Vec3 target_half_extents;
  double contact_force = 0.0;  // N, this control step

  Obb target_box() const { return {target.pose, target_half_extents}; }
};

/// 1 - tanh(x) written as 2 / (1 + e^{2x}) so it stays positive for large x.
double one_minus_tanh(double x);

RewardTerms compute_reward(const WorldState& world, const EnvConfig& config);

/// Longest run of consecutive entries strictly above `threshold`.
int longest_streak(std::span<const double> rewards, double threshold);
bool is_success(std::span<const double> rewards, double threshold, int streak_length);

/// Per-axis |delta| of the globally closest (sphere surface, box surface)
/// pair. Zero when any sphere penetrates the box.
Vec3 min_axis_distance(const GripperBody& gripper, const Obb& target);

using Observation = std::vector<double>;

struct ObservationNoise {
  double position = 0.0;
  double velocity = 0.0;
};

/// Layout: gripper pose/vel, target pose/vel, differences, min distance, [force].
Observation assemble_observation(const WorldState& world, const EnvConfig& config,
                                 std::mt19937_64& noise_rng);

struct StepResult {
  Observation obs;
  double reward = 0.0;
  RewardTerms terms;
  bool done = false;
  int success_streak = 0;
  double contact_force = 0.0;
  std::array<double, kActionDim> applied_action{};
};

class SoftCaptureEnv {
 public:
  explicit SoftCaptureEnv(EnvConfig config);

  Observation reset(std::uint64_t seed);
  /// Throws ContractViolation when called on a finished episode.
  StepResult step(std::span<const double> action);

  /// Replaces the world wholesale; used by tests to stage configurations.
  void set_world(const WorldState& world) { world_ = world; }
  Observation observe();

  const EnvConfig& config() const { return config_; }
  const WorldState& world() const { return world_; }
  int step_count() const { return step_; }
  bool done() const { return step_ >= config_.episode_length; }
  std::size_t obs_dim() const { return config_.obs_dim(); }

 private:
  EnvConfig config_;
  WorldState world_;
  GripperBody gripper_template_;
  std::mt19937_64 rng_;
  int step_ = 0;
  int streak_ = 0;
  bool started_ = false;
};

/// One row of an episode trace.
struct TraceRecord {
  int step = 0;
  std::array<double, kActionDim> raw_action{};
  std::array<double, kActionDim> applied_action{};
  RewardTerms terms;
  double reward = 0.0;
  double contact_force = 0.0;
  Pose gripper;
  Pose target;
};

std::string trace_header();
void write_trace(std::ostream& os, std::span<const TraceRecord> records);

}  // namespace softcap
