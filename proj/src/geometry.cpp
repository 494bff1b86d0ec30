#include "coedit/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace coedit {

namespace {

constexpr double kUnitTolerance = 1e-6;
// Below this |from + to| the pair is treated as exactly antipodal.
constexpr double kAntipodalTolerance = 1e-12;

Vec3 checked_unit(const Vec3 &d, const char *what) {
  const double n = norm(d);
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitTolerance) {
    throw DomainError(std::string(what) + " is not unit length: " + to_string(d));
  }
  return d / n;
}

double canonical_angle(double a) { return a <= -std::numbers::pi ? std::numbers::pi : a; }

} // namespace

Vec3 normalized(const Vec3 &v) {
  const double n = norm(v);
  if (n == 0.0 || !std::isfinite(n)) {
    throw DomainError("cannot normalize " + to_string(v));
  }
  return v / n;
}

bool is_finite(const Vec3 &v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

Quat Quat::from_axis_angle(const Vec3 &axis, double angle) {
  const Vec3 a = normalized(axis);
  const double s = std::sin(angle / 2.0);
  return normalized(Quat{a.x * s, a.y * s, a.z * s, std::cos(angle / 2.0)});
}

Quat normalized(const Quat &q) {
  const double n = norm(q);
  if (n == 0.0 || !std::isfinite(n)) {
    throw DomainError("cannot normalize a zero quaternion");
  }
  return {q.x / n, q.y / n, q.z / n, q.w / n};
}

Quat conjugate(const Quat &q) { return {-q.x, -q.y, -q.z, q.w}; }

Quat operator*(const Quat &a, const Quat &b) {
  return normalized(Quat{
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
      a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
  });
}

Vec3 rotate(const Quat &q, const Vec3 &v) {
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 t = 2.0 * cross(u, v);
  return v + q.w * t + cross(u, t);
}

double angle(const Quat &q) {
  const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  return 2.0 * std::atan2(s, std::abs(q.w));
}

EulerDecomposition euler_decompose(const Quat &q) {
  const double sin_pitch = std::clamp(2.0 * (q.w * q.y - q.z * q.x), -1.0, 1.0);
  const double pitch = std::asin(sin_pitch);
  EulerDecomposition out;
  if (std::abs(pitch) > std::numbers::pi / 2.0 - kGimbalMargin) {
    // Only yaw - roll (or yaw + roll) is observable here; pin roll to 0.
    out.near_gimbal = true;
    const double r01 = 2.0 * (q.x * q.y - q.w * q.z);
    const double r11 = 1.0 - 2.0 * (q.x * q.x + q.z * q.z);
    out.angles = {0.0, pitch, canonical_angle(std::atan2(-r01, r11))};
    return out;
  }
  const double roll = std::atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y));
  const double yaw = std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
  out.angles = {canonical_angle(roll), pitch, canonical_angle(yaw)};
  return out;
}

Quat euler_compose(const Vec3 &e) {
  const double cr = std::cos(e.x / 2.0), sr = std::sin(e.x / 2.0);
  const double cp = std::cos(e.y / 2.0), sp = std::sin(e.y / 2.0);
  const double cy = std::cos(e.z / 2.0), sy = std::sin(e.z / 2.0);
  return normalized(Quat{
      sr * cp * cy - cr * sp * sy,
      cr * sp * cy + sr * cp * sy,
      cr * cp * sy - sr * sp * cy,
      cr * cp * cy + sr * sp * sy,
  });
}

TransformDelta TransformDelta::translate(const Vec3 &t) {
  TransformDelta d;
  d.translation = t;
  return d;
}

TransformDelta TransformDelta::rotate(const Quat &q) {
  TransformDelta d;
  d.rotation = normalized(q);
  d.euler = euler_decompose(d.rotation).angles;
  return d;
}

TransformDelta TransformDelta::uniform_scale(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError("scale factor must be positive and finite");
  }
  TransformDelta d;
  d.scale = s;
  return d;
}

bool TransformDelta::is_identity() const {
  return translation == Vec3{} && std::abs(rotation.w) == 1.0 && scale == 1.0;
}

Vec3 centroid(std::span<const Vec3> positions) {
  if (positions.empty()) {
    throw DomainError("centroid of an empty vertex set");
  }
  Vec3 sum;
  for (const Vec3 &p : positions) {
    sum += p;
  }
  return sum / static_cast<double>(positions.size());
}

Vec3 centroid(const PositionMap &positions) {
  if (positions.empty()) {
    throw DomainError("centroid of an empty vertex set");
  }
  Vec3 sum;
  for (const auto &[id, p] : positions) {
    sum += p;
  }
  return sum / static_cast<double>(positions.size());
}

Quat minimal_arc_rotation(const Vec3 &from, const Vec3 &to) {
  const Vec3 a = checked_unit(from, "rotation source direction");
  const Vec3 b = checked_unit(to, "rotation target direction");

  // With s = a + b: a × s = a × b and |s|²/2 = 1 + a·b, both free of the
  // cancellation that 1 + a·b suffers near the antipode.
  const Vec3 s = a + b;
  const double s_norm = norm(s);
  if (s_norm < kAntipodalTolerance) {
    const Vec3 reference = std::abs(a.x) > 0.99 ? Vec3{0.0, 1.0, 0.0} : Vec3{1.0, 0.0, 0.0};
    const Vec3 axis = normalized(cross(a, reference));
    return {axis.x, axis.y, axis.z, 0.0};
  }
  const Vec3 v = cross(a, s);
  return normalized(Quat{v.x, v.y, v.z, 0.5 * s_norm * s_norm});
}

Vec3 translation_delta(const Vec3 &handle_prev, const Vec3 &handle_now) {
  return handle_now - handle_prev;
}

Quat rotation_delta(const Vec3 &grabbed_prev, const Vec3 &grabbed_now, const Vec3 &pivot) {
  const Vec3 r0 = grabbed_prev - pivot;
  const Vec3 r1 = grabbed_now - pivot;
  if (norm(r0) <= kPivotEpsilon || norm(r1) <= kPivotEpsilon) {
    throw DegeneratePivotError("rotation grab within " + std::to_string(kPivotEpsilon) +
                               " m of the pivot");
  }
  return minimal_arc_rotation(normalized(r0), normalized(r1));
}

double scale_delta(const Vec3 &grabbed_prev, const Vec3 &grabbed_now, const Vec3 &pivot) {
  const double d0 = distance(grabbed_prev, pivot);
  if (d0 <= kPivotEpsilon) {
    throw DegeneratePivotError("scale grab within " + std::to_string(kPivotEpsilon) +
                               " m of the pivot");
  }
  return std::clamp(distance(grabbed_now, pivot) / d0, kMinScale, kMaxScale);
}

Vec3 apply_delta(const Vec3 &p, const Vec3 &pivot, const TransformDelta &delta) {
  if (delta.scale == 1.0 && delta.rotation == Quat::identity()) {
    return p + delta.translation;
  }
  return pivot + delta.scale * rotate(delta.rotation, p - pivot) + delta.translation;
}

PositionMap apply_delta(const PositionMap &positions, const Vec3 &pivot,
                        const TransformDelta &delta) {
  PositionMap out;
  for (const auto &[id, p] : positions) {
    out.emplace_hint(out.end(), id, apply_delta(p, pivot, delta));
  }
  return out;
}

PositionMap snap_back(const PositionMap &group_positions, VertexId grabbed, const Vec3 &grab_start,
                      const Vec3 &pivot, double scale) {
  PositionMap out = group_positions;
  if (auto it = out.find(grabbed); it != out.end()) {
    it->second = pivot + scale * (grab_start - pivot);
  }
  return out;
}

std::string to_string(const Vec3 &v) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
  return os.str();
}

} // namespace coedit
