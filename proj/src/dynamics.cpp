#include "softcap/dynamics.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace softcap {

namespace {

struct SpinState {
  Quat q;
  Vec3 w;
};

SpinState spin_derivative(const SpinState& s, const Vec3& inertia) {
  const Vec3 iw = hadamard(inertia, s.w);
  const Vec3 torque_free = cross(iw, s.w);
  const Vec3 wdot{torque_free.x / inertia.x, torque_free.y / inertia.y, torque_free.z / inertia.z};
  const Quat qdot = quat_mul_raw(s.q, Quat{0.0, s.w.x, s.w.y, s.w.z});
  return {Quat{0.5 * qdot.w, 0.5 * qdot.x, 0.5 * qdot.y, 0.5 * qdot.z}, wdot};
}

SpinState axpy(const SpinState& s, const SpinState& d, double h) {
  return {Quat{s.q.w + h * d.q.w, s.q.x + h * d.q.x, s.q.y + h * d.q.y, s.q.z + h * d.q.z}, s.w + d.w * h};
}

Vec3 inv_inertia_times(const Vec3& inertia, const Vec3& v) {
  return {v.x / inertia.x, v.y / inertia.y, v.z / inertia.z};
}

}  // namespace

Vec3 RigidBody::angular_momentum_world() const {
  return quat_rotate(pose.orientation, hadamard(inertia_diag, ang_vel));
}

double RigidBody::rotational_energy() const { return 0.5 * dot(ang_vel, hadamard(inertia_diag, ang_vel)); }

Vec3 box_inertia(double mass, const Vec3& h) {
  const double a = 2 * h.x, b = 2 * h.y, c = 2 * h.z;
  return {mass / 12.0 * (b * b + c * c), mass / 12.0 * (a * a + c * c), mass / 12.0 * (a * a + b * b)};
}

GripperBody make_gripper(const GripperGeometry& geo) {
  GripperBody g;
  // Neighbouring chains sit on an equilateral triangle with circumradius R;
  // center distance R*sqrt(3) = clearance + 2 * finger radius.
  const double circumradius = (geo.finger_clearance + 2 * geo.finger_radius) / std::numbers::sqrt3;
  std::vector<Vec3> hull_points;
  for (int f = 0; f < 3; ++f) {
    const double angle = std::numbers::pi / 2 + f * 2 * std::numbers::pi / 3;
    for (int k = 0; k < 3; ++k) {
      const double z = -0.5 * geo.finger_span + k * 0.5 * geo.finger_span;
      const Vec3 c{circumradius * std::cos(angle), circumradius * std::sin(angle), z};
      g.collision_spheres.push_back({c, geo.finger_radius});
      hull_points.push_back(c);
    }
  }
  // Palm points close the region behind the chain bases, between the fingers.
  const double palm_z = -0.5 * geo.finger_span - 0.25 * geo.finger_span;
  for (int f = 0; f < 3; ++f) {
    const double angle = -std::numbers::pi / 2 + f * 2 * std::numbers::pi / 3;
    hull_points.push_back({0.3 * circumradius * std::cos(angle), 0.3 * circumradius * std::sin(angle), palm_z});
  }
  g.collision_spheres.push_back({Vec3{0.0, 0.0, -geo.palm_offset}, geo.palm_radius});
  g.finger_region = ConvexRegion::hull_of(hull_points);
  return g;
}

RigidBody step_free_body(const RigidBody& body, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("step_free_body: dt must be positive");
  RigidBody out = body;
  out.pose.position = body.pose.position + body.lin_vel * dt;

  const SpinState s0{body.pose.orientation, body.ang_vel};
  const SpinState k1 = spin_derivative(s0, body.inertia_diag);
  const SpinState k2 = spin_derivative(axpy(s0, k1, 0.5 * dt), body.inertia_diag);
  const SpinState k3 = spin_derivative(axpy(s0, k2, 0.5 * dt), body.inertia_diag);
  const SpinState k4 = spin_derivative(axpy(s0, k3, dt), body.inertia_diag);
  const double h6 = dt / 6.0;
  Quat q{s0.q.w + h6 * (k1.q.w + 2 * k2.q.w + 2 * k3.q.w + k4.q.w),
         s0.q.x + h6 * (k1.q.x + 2 * k2.q.x + 2 * k3.q.x + k4.q.x),
         s0.q.y + h6 * (k1.q.y + 2 * k2.q.y + 2 * k3.q.y + k4.q.y),
         s0.q.z + h6 * (k1.q.z + 2 * k2.q.z + 2 * k3.q.z + k4.q.z)};
  out.pose.orientation = q.normalized();
  out.ang_vel = s0.w + (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w) * h6;
  return out;
}

GripperBody apply_gripper_action(const GripperBody& g, std::span<const double> action,
                                 const ActionLimits& limits, double dt) {
  if (action.size() != 6) throw ContractViolation("apply_gripper_action: expected 6 action components");
  for (double a : action) {
    if (!(a >= -1.0 && a <= 1.0)) throw ContractViolation("apply_gripper_action: action outside [-1, 1]");
  }
  if (!(dt > 0.0)) throw ContractViolation("apply_gripper_action: dt must be positive");

  GripperBody out = g;
  const Vec3 step_body = Vec3{action[0], action[1], action[2]} * limits.max_translation_step;
  const Vec3 step_world = quat_rotate(g.pose.orientation, step_body);
  const EulerXYZ turn{action[3] * limits.max_rotation_step, action[4] * limits.max_rotation_step,
                      action[5] * limits.max_rotation_step};
  const Quat delta = euler_xyz_to_quat(turn);

  out.pose.position = g.pose.position + step_world;
  out.pose.orientation = quat_mul(g.pose.orientation, delta);
  out.lin_vel = step_world / dt;
  out.ang_vel = quat_rotate(g.pose.orientation, delta.to_rotation_vector()) / dt;
  return out;
}

std::vector<Contact> detect_contacts(const GripperBody& g, const Obb& target) {
  std::vector<Contact> out;
  for (const auto& s : g.collision_spheres) {
    auto q = sphere_obb_query(g.sphere_center_world(s), s.radius, target);
    if (q.contact) out.push_back(*q.contact);
  }
  return out;
}

std::pair<RigidBody, ContactResult> resolve_contacts(const RigidBody& target, const Obb& target_box,
                                                     std::span<const Contact> contacts,
                                                     const PointVelocity& gripper_vel_at, double dt,
                                                     const SolverParams& params) {
  if (!(dt > 0.0)) throw ContractViolation("resolve_contacts: dt must be positive");
  (void)target_box;
  RigidBody body = target;
  ContactResult result;
  result.contacts.assign(contacts.begin(), contacts.end());
  result.impulses.assign(contacts.size(), 0.0);
  if (contacts.empty()) return {body, result};

  const Quat& q = body.pose.orientation;
  struct Row {
    Vec3 r;        // world lever arm
    Vec3 n;        // world normal
    Vec3 gv;       // gripper point velocity
    double mass_n;  // effective mass along n
    double bias;
  };
  std::vector<Row> rows;
  rows.reserve(contacts.size());
  for (const auto& c : contacts) {
    Row row;
    row.r = c.point - body.pose.position;
    row.n = c.normal;
    row.gv = gripper_vel_at(c.point);
    double inv_mass = 1.0 / body.mass;
    if (!params.lock_rotation) {
      const Vec3 rn_body = quat_rotate_inv(q, cross(row.r, row.n));
      const Vec3 ang = quat_rotate(q, inv_inertia_times(body.inertia_diag, rn_body));
      inv_mass += dot(cross(ang, row.r), row.n);
    }
    row.mass_n = 1.0 / inv_mass;
    row.bias = params.baumgarte * c.depth / dt;
    rows.push_back(row);
  }

  for (int pass = 0; pass < params.passes; ++pass) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& row = rows[i];
      const Vec3 w_world = quat_rotate(q, body.ang_vel);
      const Vec3 v_point = body.lin_vel + cross(w_world, row.r);
      const double vn = dot(v_point - row.gv, row.n);
      const double lambda = row.mass_n * (row.bias - vn);
      const double accumulated = std::max(0.0, result.impulses[i] + lambda);
      const double applied = accumulated - result.impulses[i];
      result.impulses[i] = accumulated;
      if (applied == 0.0) continue;
      const Vec3 impulse = row.n * applied;
      body.lin_vel += impulse / body.mass;
      if (!params.lock_rotation)
        body.ang_vel += inv_inertia_times(body.inertia_diag, quat_rotate_inv(q, cross(row.r, impulse)));
    }
  }
  for (double j : result.impulses) result.total_normal_impulse += j;
  result.total_normal_force = result.total_normal_impulse / dt;
  return {body, result};
}

}  // namespace softcap
