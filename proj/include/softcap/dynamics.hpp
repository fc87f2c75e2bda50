#pragma once

// Free-floating target integration, kinematic gripper motion and a
// sequential-impulse contact solver. The gripper has infinite mass: contacts
// change the target's velocity only.

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "softcap/spatial.hpp"

namespace softcap {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct RigidBody {
  Pose pose;
  Vec3 lin_vel;       // world frame, m/s
  Vec3 ang_vel;       // body frame, rad/s
  double mass = 1.0;  // kg
  Vec3 inertia_diag{1.0, 1.0, 1.0};

  Vec3 angular_momentum_world() const;
  double rotational_energy() const;
  Vec3 ang_vel_world() const { return quat_rotate(pose.orientation, ang_vel); }
};

/// Solid-box principal inertia for the given half-extents.
Vec3 box_inertia(double mass, const Vec3& half_extents);

struct CollisionSphere {
  Vec3 center_body;
  double radius = 0.0;
};

struct GripperGeometry {
  // Surface-to-surface gap between neighbouring finger chains.
  double finger_clearance = 0.16;
  double finger_radius = 0.012;
  double palm_radius = 0.045;
  double finger_span = 0.12;  // length of each chain along the approach axis
  double palm_offset = 0.12;  // palm sphere center behind the grasp center
};

struct GripperBody {
  Pose pose;         // origin at the grasp center, +z is the approach axis
  Vec3 lin_vel;      // world frame
  Vec3 ang_vel;      // world frame
  std::vector<CollisionSphere> collision_spheres;
  ConvexRegion finger_region;  // body frame

  Vec3 sphere_center_world(const CollisionSphere& s) const { return pose.to_world(s.center_body); }
  Vec3 velocity_at(const Vec3& p_world) const { return lin_vel + cross(ang_vel, p_world - pose.position); }
};

/// Open three-finger gripper: three chains of three finger spheres around the
/// approach axis plus one palm sphere behind them. The finger region is the
/// hull of the nine finger-sphere centers and three palm points.
GripperBody make_gripper(const GripperGeometry& geometry = {});

struct ActionLimits {
  double max_translation_step = 0.01;  // m per control step
  double max_rotation_step = 0.035;    // rad per control step
};

struct ContactResult {
  std::vector<Contact> contacts;
  std::vector<double> impulses;  // per contact, N s
  double total_normal_impulse = 0.0;
  double total_normal_force = 0.0;  // impulse / dt
};

struct SolverParams {
  int passes = 10;
  double baumgarte = 0.2;
  /// Treat the target as a point mass: impulses change only its linear
  /// velocity.
  bool lock_rotation = false;
};

/// RK4 on the torque-free Euler equations and quaternion kinematics.
RigidBody step_free_body(const RigidBody& body, double dt);

/// Moves the gripper by a body-frame displacement. The action must already be
/// clipped to [-1, 1]; anything else throws ContractViolation.
GripperBody apply_gripper_action(const GripperBody& g, std::span<const double> action,
                                 const ActionLimits& limits, double dt);

std::vector<Contact> detect_contacts(const GripperBody& g, const Obb& target);

using PointVelocity = std::function<Vec3(const Vec3&)>;

/// Sequential impulses with accumulated clamping. Each contact converges to
/// a separating normal velocity of at least baumgarte * depth / dt.
std::pair<RigidBody, ContactResult> resolve_contacts(const RigidBody& target, const Obb& target_box,
                                                     std::span<const Contact> contacts,
                                                     const PointVelocity& gripper_vel_at, double dt,
                                                     const SolverParams& params = {});

}  // namespace softcap
