#include "softcap/spatial.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace softcap {

namespace {

constexpr double kUnitTol = 1e-9;

// Rotation matrix entries needed for XYZ extraction, row-major.
std::array<double, 9> to_matrix(const Quat& q) {
  const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  return {ww + xx - yy - zz, 2 * (xy - wz),     2 * (xz + wy),
          2 * (xy + wz),     ww - xx + yy - zz, 2 * (yz - wx),
          2 * (xz - wy),     2 * (yz + wx),     ww - xx - yy + zz};
}

double wrap_half_open(double a) {
  // atan2 may return exactly -pi; the canonical range is (-pi, pi].
  return a <= -std::numbers::pi ? a + 2 * std::numbers::pi : a;
}

}  // namespace

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const double n = softcap::norm(axis);
  if (n == 0.0) return identity();
  const double s = std::sin(0.5 * angle) / n;
  return Quat{std::cos(0.5 * angle), axis.x * s, axis.y * s, axis.z * s}.normalized();
}

Quat Quat::from_rotation_vector(const Vec3& rv) {
  const double angle = softcap::norm(rv);
  if (angle < 1e-12) return Quat{1.0, 0.5 * rv.x, 0.5 * rv.y, 0.5 * rv.z}.normalized();
  return from_axis_angle(rv, angle);
}

Quat Quat::normalized() const {
  const double n = norm();
  Quat q{w / n, x / n, y / n, z / n};
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  return q;
}

Vec3 Quat::to_rotation_vector() const {
  Quat q = normalized();
  const double s = softcap::norm(q.vec());
  if (s < 1e-12) return q.vec() * 2.0;
  const double angle = 2.0 * std::atan2(s, q.w);
  return q.vec() * (angle / s);
}

Quat quat_mul(const Quat& a, const Quat& b) { return quat_mul_raw(a, b).normalized(); }

Vec3 quat_rotate(const Quat& q, const Vec3& v) {
  // v' = v + 2 u x (u x v + w v)
  const Vec3 u = q.vec();
  const Vec3 t = cross(u, v) + v * q.w;
  return v + 2.0 * cross(u, t);
}

EulerXYZ quat_to_euler_xyz(const Quat& q) {
  const auto m = to_matrix(q.normalized());
  const double s = std::clamp(m[2], -1.0, 1.0);
  EulerXYZ e;
  if (std::abs(s) > 1.0 - 1e-12) {
    e.pitch = std::copysign(std::numbers::pi / 2, s);
    e.roll = 0.0;
    e.yaw = wrap_half_open(std::atan2(m[3], m[4]));
    return e;
  }
  e.pitch = std::asin(s);
  e.roll = wrap_half_open(std::atan2(-m[5], m[8]));
  e.yaw = wrap_half_open(std::atan2(-m[1], m[0]));
  return e;
}

Quat euler_xyz_to_quat(const EulerXYZ& e) {
  const Quat qx{std::cos(0.5 * e.roll), std::sin(0.5 * e.roll), 0.0, 0.0};
  const Quat qy{std::cos(0.5 * e.pitch), 0.0, std::sin(0.5 * e.pitch), 0.0};
  const Quat qz{std::cos(0.5 * e.yaw), 0.0, 0.0, std::sin(0.5 * e.yaw)};
  return quat_mul_raw(quat_mul_raw(qx, qy), qz).normalized();
}

Vec3 orientation_error(const Quat& q_a, const Quat& q_b) {
  return quat_to_euler_xyz(quat_mul_raw(q_a.conjugate(), q_b)).as_vec();
}

ConvexRegion::ConvexRegion(std::vector<HalfSpace> half_spaces) : half_spaces_(std::move(half_spaces)) {
  if (half_spaces_.size() < 4) throw std::invalid_argument("ConvexRegion: need at least 4 half-spaces");
  for (const auto& h : half_spaces_) {
    if (std::abs(norm(h.normal) - 1.0) > kUnitTol || !std::isfinite(h.offset))
      throw std::invalid_argument("ConvexRegion: half-space normals must be unit length");
  }
  // Bounded iff no direction d has n . d <= 0 for every normal. Extreme rays of
  // that cone are +-(n_i x n_j); a degenerate cone is caught by -n_i.
  auto supported = [&](const Vec3& d) {
    return std::any_of(half_spaces_.begin(), half_spaces_.end(),
                       [&](const HalfSpace& h) { return dot(h.normal, d) > 1e-9; });
  };
  for (std::size_t i = 0; i < half_spaces_.size(); ++i) {
    if (!supported(-half_spaces_[i].normal)) throw std::invalid_argument("ConvexRegion: region is unbounded");
    for (std::size_t j = i + 1; j < half_spaces_.size(); ++j) {
      const Vec3 c = cross(half_spaces_[i].normal, half_spaces_[j].normal);
      const double len = norm(c);
      if (len < 1e-12) continue;
      if (!supported(c / len) || !supported(-c / len))
        throw std::invalid_argument("ConvexRegion: region is unbounded");
    }
  }
}

ConvexRegion ConvexRegion::hull_of(std::span<const Vec3> points) {
  const std::size_t n = points.size();
  if (n < 4) throw std::invalid_argument("ConvexRegion::hull_of: need at least 4 points");
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, norm(p));
  const double eps = 1e-9 * std::max(scale, 1.0);

  std::vector<HalfSpace> faces;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        Vec3 nrm = cross(points[b] - points[a], points[c] - points[a]);
        const double len = norm(nrm);
        if (len < eps) continue;
        nrm = nrm / len;
        double off = dot(nrm, points[a]);
        bool any_above = false, any_below = false;
        for (const auto& p : points) {
          const double s = dot(nrm, p) - off;
          if (s > eps) any_above = true;
          if (s < -eps) any_below = true;
        }
        if (any_above && any_below) continue;
        if (any_above) {
          nrm = -nrm;
          off = -off;
        }
        const bool dup = std::any_of(faces.begin(), faces.end(), [&](const HalfSpace& f) {
          return norm(f.normal - nrm) < 1e-9 && std::abs(f.offset - off) < eps;
        });
        if (!dup) faces.push_back({nrm, off});
      }
  return ConvexRegion(std::move(faces));
}

bool ConvexRegion::contains_local(const Vec3& p, double margin) const {
  return std::all_of(half_spaces_.begin(), half_spaces_.end(),
                     [&](const HalfSpace& h) { return dot(h.normal, p) <= h.offset - margin; });
}

bool contains_point(const ConvexRegion& region, const Pose& region_pose, const Vec3& p_world,
                    double margin) {
  return region.contains_local(region_pose.to_body(p_world), margin);
}

std::array<Vec3, 8> Obb::corners_world() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local{(i & 1) ? half_extents.x : -half_extents.x, (i & 2) ? half_extents.y : -half_extents.y,
                     (i & 4) ? half_extents.z : -half_extents.z};
    out[i] = pose.to_world(local);
  }
  return out;
}

SphereBoxQuery sphere_obb_query(const Vec3& center, double radius, const Obb& box) {
  const Vec3 local = box.pose.to_body(center);
  const Vec3 clamped{std::clamp(local.x, -box.half_extents.x, box.half_extents.x),
                     std::clamp(local.y, -box.half_extents.y, box.half_extents.y),
                     std::clamp(local.z, -box.half_extents.z, box.half_extents.z)};
  const Vec3 offset = local - clamped;
  const double gap = norm(offset);

  SphereBoxQuery out;
  out.closest_point = box.pose.to_world(clamped);
  out.signed_distance = gap - radius;
  if (out.signed_distance >= 0.0) return out;

  // Outward direction from the box toward the sphere center.
  Vec3 outward;
  if (gap > 0.0) {
    outward = quat_rotate(box.pose.orientation, offset / gap);
  } else {
    const double len = norm(local);
    outward = len > 0.0 ? quat_rotate(box.pose.orientation, local / len)
                        : quat_rotate(box.pose.orientation, Vec3{1.0, 0.0, 0.0});
  }
  out.contact = Contact{out.closest_point, -outward, -out.signed_distance};
  return out;
}

}  // namespace softcap
