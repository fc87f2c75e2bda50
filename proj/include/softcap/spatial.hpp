#pragma once

// Quaternion/pose algebra and the small amount of geometry the capture task
// needs: convex half-space containment and sphere-vs-oriented-box proximity.
// Everything here is a pure function over value types.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace softcap {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Unit quaternion (w, x, y, z), Hamilton convention. `normalized()` also
/// canonicalizes the sign to w >= 0 so that equal rotations compare equal.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static constexpr Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3& axis, double angle);
  /// Exponential map of a rotation vector (axis * angle).
  static Quat from_rotation_vector(const Vec3& rv);

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const;
  constexpr Quat conjugate() const { return {w, -x, -y, -z}; }
  constexpr Vec3 vec() const { return {x, y, z}; }
  /// Log map; returns a rotation vector with angle in [0, pi].
  Vec3 to_rotation_vector() const;

  friend constexpr bool operator==(const Quat&, const Quat&) = default;
};

/// Hamilton product, renormalized.
Quat quat_mul(const Quat& a, const Quat& b);
/// Raw Hamilton product without renormalization (used inside integrators).
constexpr Quat quat_mul_raw(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}
Vec3 quat_rotate(const Quat& q, const Vec3& v);
inline Vec3 quat_rotate_inv(const Quat& q, const Vec3& v) { return quat_rotate(q.conjugate(), v); }

/// Roll/pitch/yaw for the intrinsic X-Y-Z sequence, R = Rx(roll) Ry(pitch) Rz(yaw).
struct EulerXYZ {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Vec3 as_vec() const { return {roll, pitch, yaw}; }
  static EulerXYZ from_vec(const Vec3& v) { return {v.x, v.y, v.z}; }
};

/// At gimbal lock (|pitch| = pi/2) roll is fixed to 0 and the whole
/// residual rotation is assigned to yaw.
EulerXYZ quat_to_euler_xyz(const Quat& q);
Quat euler_xyz_to_quat(const EulerXYZ& e);

/// Euler-XYZ angles of the relative rotation q_a^-1 * q_b. Invariant under
/// the sign of either quaternion.
Vec3 orientation_error(const Quat& q_a, const Quat& q_b);

struct Pose {
  Vec3 position;
  Quat orientation;

  Vec3 to_world(const Vec3& p_body) const { return position + quat_rotate(orientation, p_body); }
  Vec3 to_body(const Vec3& p_world) const { return quat_rotate_inv(orientation, p_world - position); }
};

struct HalfSpace {
  Vec3 normal;  // unit, outward
  double offset = 0.0;
};

/// Bounded convex polytope given as an intersection of half-spaces
/// normal . p <= offset, expressed in some body frame.
class ConvexRegion {
 public:
  ConvexRegion() = default;
  /// Throws std::invalid_argument on fewer than 4 half-spaces, non-unit
  /// normals, or an unbounded intersection.
  explicit ConvexRegion(std::vector<HalfSpace> half_spaces);

  /// Half-space form of the convex hull of `points` (brute-force facet
  /// enumeration, meant for a dozen points computed once).
  static ConvexRegion hull_of(std::span<const Vec3> points);

  const std::vector<HalfSpace>& half_spaces() const { return half_spaces_; }
  bool contains_local(const Vec3& p, double margin) const;

 private:
  std::vector<HalfSpace> half_spaces_;
};

bool contains_point(const ConvexRegion& region, const Pose& region_pose, const Vec3& p_world,
                    double margin);

struct Obb {
  Pose pose;
  Vec3 half_extents;

  std::array<Vec3, 8> corners_world() const;
};

struct Contact {
  Vec3 point;   // world
  Vec3 normal;  // world, unit, from gripper into target
  double depth = 0.0;
};

struct SphereBoxQuery {
  Vec3 closest_point;
  double signed_distance = 0.0;
  std::optional<Contact> contact;
};

/// Distance from a sphere to a box. A sphere whose center lies inside the box
/// clamps to its own center (signed distance -radius) and takes its normal
/// from the box center.
SphereBoxQuery sphere_obb_query(const Vec3& center, double radius, const Obb& box);

}  // namespace softcap
