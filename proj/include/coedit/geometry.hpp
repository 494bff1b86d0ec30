#pragma once

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

namespace coedit {

/// Raised when an input falls outside an operation's mathematical domain
/// (empty centroid input, non-unit direction, mismatched vertex ids).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A rotate/scale grab whose sample lies within kPivotEpsilon of the pivot.
class DegeneratePivotError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Minimum grab distance from the pivot for rotation and scaling, meters.
inline constexpr double kPivotEpsilon = 1e-4;
inline constexpr double kMinScale = 0.01;
inline constexpr double kMaxScale = 100.0;

using VertexId = int;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 &operator+=(const Vec3 &o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3 &operator-=(const Vec3 &o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3 &operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3 &b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3 &b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3 &a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(const Vec3 &a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(const Vec3 &, const Vec3 &) = default;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double &operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
};

constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3 &a, const Vec3 &b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

/// Throws DomainError on a zero vector.
Vec3 normalized(const Vec3 &v);

bool is_finite(const Vec3 &v);

/// Unit quaternion, Hamilton convention, scalar last.
struct Quat {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;

  static constexpr Quat identity() { return {}; }
  static Quat from_axis_angle(const Vec3 &axis, double angle);

  friend constexpr bool operator==(const Quat &, const Quat &) = default;
};

inline double norm(const Quat &q) { return std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z + q.w * q.w); }
Quat normalized(const Quat &q);
Quat conjugate(const Quat &q);

/// Hamilton product; the result is renormalized so composition keeps unit norm.
Quat operator*(const Quat &a, const Quat &b);

/// q ⊗ v ⊗ q*, evaluated with the two-cross-product form.
Vec3 rotate(const Quat &q, const Vec3 &v);

/// Rotation angle in [0, π].
double angle(const Quat &q);

/// Tait-Bryan angles, intrinsic yaw(z) then pitch(y) then roll(x).
/// Stored as {x = roll, y = pitch, z = yaw}, each in (-π, π].
struct EulerDecomposition {
  Vec3 angles;
  /// |pitch| within kGimbalMargin of π/2; roll is then pinned to 0 and the
  /// remaining freedom is folded into yaw.
  bool near_gimbal = false;
};

inline constexpr double kGimbalMargin = 1e-3;

EulerDecomposition euler_decompose(const Quat &q);
Quat euler_compose(const Vec3 &roll_pitch_yaw);

/// One tick's worth of a single user's decomposed input.
struct TransformDelta {
  Vec3 translation;
  Quat rotation;
  Vec3 euler;
  double scale = 1.0;

  static TransformDelta identity() { return {}; }
  static TransformDelta translate(const Vec3 &t);
  static TransformDelta rotate(const Quat &q);
  static TransformDelta uniform_scale(double s);

  bool is_identity() const;
};

using PositionMap = std::map<VertexId, Vec3>;

/// Arithmetic mean. Throws DomainError on empty input.
Vec3 centroid(std::span<const Vec3> positions);
Vec3 centroid(const PositionMap &positions);

/// Smallest-angle rotation taking unit direction `from` onto unit direction `to`.
/// Antipodal inputs rotate by π about normalize(from × x̂), or about
/// normalize(from × ŷ) when |from·x̂| > 0.99.
/// Throws DomainError when either input deviates from unit length by more than 1e-6.
Quat minimal_arc_rotation(const Vec3 &from, const Vec3 &to);

Vec3 translation_delta(const Vec3 &handle_prev, const Vec3 &handle_now);

/// Rotation of the pivot-relative direction of the grabbed point between two samples.
/// Throws DegeneratePivotError if either sample is within kPivotEpsilon of the pivot.
Quat rotation_delta(const Vec3 &grabbed_prev, const Vec3 &grabbed_now, const Vec3 &pivot);

/// Ratio of pivot distances, clamped to [kMinScale, kMaxScale].
/// Throws DegeneratePivotError if grabbed_prev is within kPivotEpsilon of the pivot.
double scale_delta(const Vec3 &grabbed_prev, const Vec3 &grabbed_now, const Vec3 &pivot);

/// p ↦ pivot + scale · (rotation ⊗ (p − pivot)) + translation
Vec3 apply_delta(const Vec3 &p, const Vec3 &pivot, const TransformDelta &delta);
PositionMap apply_delta(const PositionMap &positions, const Vec3 &pivot,
                        const TransformDelta &delta);

/// Puts the grabbed vertex back on its scaled locus pivot + scale · (start − pivot)
/// once a scale grab ends; every other entry is returned unchanged.
PositionMap snap_back(const PositionMap &group_positions, VertexId grabbed, const Vec3 &grab_start,
                      const Vec3 &pivot, double scale);

std::string to_string(const Vec3 &v);

} // namespace coedit
