#include "softcap/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace softcap {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return lo + (hi - lo) * unit(rng);
}

Vec3 uniform(std::mt19937_64& rng, const Range3& r) {
  const double x = uniform(rng, r.min.x, r.max.x);
  const double y = uniform(rng, r.min.y, r.max.y);
  const double z = uniform(rng, r.min.z, r.max.z);
  return {x, y, z};
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("EnvConfig: ") + what);
}

bool ordered(const Range3& r) {
  return r.min.x <= r.max.x && r.min.y <= r.max.y && r.min.z <= r.max.z && is_finite(r.min) &&
         is_finite(r.max);
}

void put(Observation& obs, std::size_t at, const Vec3& v) {
  obs[at] = v.x;
  obs[at + 1] = v.y;
  obs[at + 2] = v.z;
}

}  // namespace

void EnvConfig::validate() const {
  require(episode_length >= 1, "episode_length must be positive");
  require(success_streak_length >= 1, "success_streak_length must be positive");
  require(episode_length >= success_streak_length, "episode_length must be >= success_streak_length");
  require(action_noise_fraction >= 0.0 && action_noise_fraction < 1.0, "action_noise_fraction must be in [0, 1)");
  require(control_dt > 0.0 && std::isfinite(control_dt), "control_dt must be positive");
  require(physics_substeps >= 1, "physics_substeps must be >= 1");
  require(action_limits.max_translation_step > 0.0, "max_translation_step must be positive");
  require(action_limits.max_rotation_step > 0.0, "max_rotation_step must be positive");
  require(containment_margin >= 0.0, "containment_margin must be >= 0");
  require(target_half_extents.x > 0.0 && target_half_extents.y > 0.0 && target_half_extents.z > 0.0,
          "target_half_extents must be positive");
  const auto& r = randomization;
  require(ordered(r.target_position), "target_position range min > max");
  require(ordered(r.gripper_orientation), "gripper_orientation range min > max");
  require(ordered(r.target_lin_vel), "target_lin_vel range min > max");
  require(ordered(r.target_ang_vel), "target_ang_vel range min > max");
  require(r.target_mass_min > 0.0 && r.target_mass_min <= r.target_mass_max, "target mass range invalid");
  require(r.obs_position_noise >= 0.0 && r.obs_velocity_noise >= 0.0, "observation noise must be >= 0");
  require(solver.passes >= 1 && solver.baumgarte >= 0.0, "solver parameters invalid");
  require(std::abs(goal_orientation_offset.norm() - 1.0) < 1e-6, "goal_orientation_offset must be unit");
}

EnvConfig diagnostic_translation_config() {
  EnvConfig c;
  c.translation_only = true;
  c.randomization.gripper_orientation = {{0, 0, 0}, {0, 0, 0}};
  c.randomization.target_ang_vel = {{0, 0, 0}, {0, 0, 0}};
  return c;
}

double one_minus_tanh(double x) { return 2.0 / (1.0 + std::exp(2.0 * x)); }

RewardTerms compute_reward(const WorldState& world, const EnvConfig& config) {
  RewardTerms t;
  const Pose& g = world.gripper.pose;
  const Pose& target = world.target.pose;
  t.dist = one_minus_tanh(norm(g.position - target.position));
  const Quat goal = quat_mul(target.orientation, config.goal_orientation_offset);
  t.align = one_minus_tanh(norm(orientation_error(g.orientation, goal)));
  const auto corners = world.target_box().corners_world();
  const bool surrounded = std::any_of(corners.begin(), corners.end(), [&](const Vec3& c) {
    return contains_point(world.gripper.finger_region, g, c, config.containment_margin);
  });
  t.surr = surrounded ? 1.0 : 0.0;
  t.contact = world.contact_force > 0.0 ? -1.0 : 0.0;
  return t;
}

int longest_streak(std::span<const double> rewards, double threshold) {
  int best = 0, run = 0;
  for (double r : rewards) {
    run = r > threshold ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

bool is_success(std::span<const double> rewards, double threshold, int streak_length) {
  return longest_streak(rewards, threshold) >= streak_length;
}

Vec3 min_axis_distance(const GripperBody& gripper, const Obb& target) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 delta;
  for (const auto& s : gripper.collision_spheres) {
    const Vec3 c = gripper.sphere_center_world(s);
    const auto q = sphere_obb_query(c, s.radius, target);
    if (q.signed_distance <= 0.0) return {};
    if (q.signed_distance < best) {
      best = q.signed_distance;
      const Vec3 toward = (q.closest_point - c) / norm(q.closest_point - c);
      const Vec3 surface = c + toward * s.radius;
      const Vec3 d = q.closest_point - surface;
      delta = {std::abs(d.x), std::abs(d.y), std::abs(d.z)};
    }
  }
  return delta;
}

Observation assemble_observation(const WorldState& world, const EnvConfig& config,
                                 std::mt19937_64& noise_rng) {
  Observation obs(config.obs_dim(), 0.0);
  const auto& g = world.gripper;
  const auto& t = world.target;
  const auto& rs = config.randomization;

  // Nine draws regardless of the widths so the stream stays aligned.
  std::array<double, 9> n;
  for (auto& v : n) v = uniform(noise_rng, -1.0, 1.0);
  const Vec3 t_pos = t.pose.position + Vec3{n[0], n[1], n[2]} * rs.obs_position_noise;
  const Vec3 t_lin = t.lin_vel + Vec3{n[3], n[4], n[5]} * rs.obs_velocity_noise;
  const Vec3 t_ang = t.ang_vel_world() + Vec3{n[6], n[7], n[8]} * rs.obs_velocity_noise;

  put(obs, 0, g.pose.position);
  put(obs, 3, quat_to_euler_xyz(g.pose.orientation).as_vec());
  put(obs, 6, g.lin_vel);
  put(obs, 9, g.ang_vel);
  put(obs, 12, t_pos);
  put(obs, 15, quat_to_euler_xyz(t.pose.orientation).as_vec());
  put(obs, 18, t_lin);
  put(obs, 21, t_ang);
  put(obs, 24, t_pos - g.pose.position);
  put(obs, 27, orientation_error(g.pose.orientation, quat_mul(t.pose.orientation, config.goal_orientation_offset)));
  put(obs, 30, t_lin - g.lin_vel);
  put(obs, 33, t_ang - g.ang_vel);
  put(obs, 36, min_axis_distance(g, world.target_box()));
  if (config.tactile_enabled) obs[39] = world.contact_force;
  return obs;
}

SoftCaptureEnv::SoftCaptureEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  gripper_template_ = make_gripper(config_.gripper);
  world_.gripper = gripper_template_;
  world_.target_half_extents = config_.target_half_extents;
}

Observation SoftCaptureEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const auto& rs = config_.randomization;

  const Vec3 target_pos = uniform(rng_, rs.target_position);
  const Vec3 gripper_euler = uniform(rng_, rs.gripper_orientation);
  const Vec3 lin_vel = uniform(rng_, rs.target_lin_vel);
  const Vec3 ang_vel = uniform(rng_, rs.target_ang_vel);
  const double mass = uniform(rng_, rs.target_mass_min, rs.target_mass_max);

  world_ = WorldState{};
  world_.gripper = gripper_template_;
  world_.gripper.pose = {config_.gripper_start, euler_xyz_to_quat(EulerXYZ::from_vec(gripper_euler))};
  world_.target.pose = {target_pos, Quat::identity()};
  world_.target.lin_vel = lin_vel;
  world_.target.ang_vel = ang_vel;
  world_.target.mass = mass;
  world_.target.inertia_diag = box_inertia(mass, config_.target_half_extents);
  world_.target_half_extents = config_.target_half_extents;
  world_.contact_force = 0.0;

  step_ = 0;
  streak_ = 0;
  started_ = true;
  return observe();
}

Observation SoftCaptureEnv::observe() { return assemble_observation(world_, config_, rng_); }

StepResult SoftCaptureEnv::step(std::span<const double> action) {
  if (!started_) throw ContractViolation("SoftCaptureEnv::step: reset() was never called");
  if (done()) throw ContractViolation("SoftCaptureEnv::step: episode is done");
  if (action.size() != kActionDim) throw ContractViolation("SoftCaptureEnv::step: expected 6 action components");

  StepResult out;
  std::array<double, kActionDim> a{};
  for (std::size_t i = 0; i < kActionDim; ++i) {
    if (!std::isfinite(action[i])) throw ContractViolation("SoftCaptureEnv::step: non-finite action");
    const double jitter = uniform(rng_, -1.0, 1.0) * config_.action_noise_fraction * std::abs(action[i]);
    a[i] = std::clamp(action[i] + jitter, -1.0, 1.0);
  }
  if (config_.translation_only) a[3] = a[4] = a[5] = 0.0;
  out.applied_action = a;

  const int substeps = config_.physics_substeps;
  const double dt = config_.control_dt / substeps;
  const ActionLimits per_substep{config_.action_limits.max_translation_step / substeps,
                                 config_.action_limits.max_rotation_step / substeps};
  SolverParams solver = config_.solver;
  solver.lock_rotation = config_.translation_only;
  double impulse = 0.0;
  for (int k = 0; k < substeps; ++k) {
    world_.gripper = apply_gripper_action(world_.gripper, a, per_substep, dt);
    const Obb box = world_.target_box();
    const auto contacts = detect_contacts(world_.gripper, box);
    if (!contacts.empty()) {
      const GripperBody& g = world_.gripper;
      auto [target, result] = resolve_contacts(
          world_.target, box, contacts, [&g](const Vec3& p) { return g.velocity_at(p); }, dt, solver);
      world_.target = target;
      impulse += result.total_normal_impulse;
    }
    world_.target = step_free_body(world_.target, dt);
  }
  world_.contact_force = impulse / config_.control_dt;

  out.terms = compute_reward(world_, config_);
  out.reward = out.terms.total();
  out.contact_force = world_.contact_force;
  ++step_;
  streak_ = out.reward > config_.success_reward_threshold ? streak_ + 1 : 0;
  out.success_streak = streak_;
  out.done = done();
  out.obs = observe();
  return out;
}

std::string trace_header() {
  std::string h = "step";
  for (int i = 0; i < 6; ++i) h += ",raw_a" + std::to_string(i);
  for (int i = 0; i < 6; ++i) h += ",a" + std::to_string(i);
  h += ",r_dist,r_align,r_surr,r_contact,reward,contact_force";
  h += ",g_px,g_py,g_pz,g_qw,g_qx,g_qy,g_qz,t_px,t_py,t_pz,t_qw,t_qx,t_qy,t_qz";
  return h;
}

void write_trace(std::ostream& os, std::span<const TraceRecord> records) {
  os << trace_header() << '\n';
  const auto old_precision = os.precision(17);
  for (const auto& r : records) {
    os << r.step;
    for (double v : r.raw_action) os << ',' << v;
    for (double v : r.applied_action) os << ',' << v;
    os << ',' << r.terms.dist << ',' << r.terms.align << ',' << r.terms.surr << ',' << r.terms.contact << ','
       << r.reward << ',' << r.contact_force;
    for (const Pose* p : {&r.gripper, &r.target}) {
      os << ',' << p->position.x << ',' << p->position.y << ',' << p->position.z << ',' << p->orientation.w << ','
         << p->orientation.x << ',' << p->orientation.y << ',' << p->orientation.z;
    }
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace softcap
