#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <string>

namespace demoaug {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rotation of R^3, stored as an orthonormal matrix with det = +1.
///
/// Euler angles throughout the library use the intrinsic X-Y-Z convention
/// (roll, pitch, yaw): R = Rx(roll) * Ry(pitch) * Rz(yaw). At gimbal lock
/// (pitch = +-90 deg) the yaw component is reported as 0 and the remaining
/// freedom is folded into roll.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return {}; }
  /// Accepts a matrix that is orthonormal with det = +1 to within 1e-6.
  /// Throws std::invalid_argument otherwise.
  static Rotation from_matrix(const Mat3& m);
  /// Closest rotation in the Frobenius sense (SVD projection).
  static Rotation nearest(const Mat3& m);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation about_axis(const Vec3& axis, double angle_rad);
  static Rotation about_x(double angle_rad) { return about_axis(Vec3::UnitX(), angle_rad); }
  static Rotation about_y(double angle_rad) { return about_axis(Vec3::UnitY(), angle_rad); }
  static Rotation about_z(double angle_rad) { return about_axis(Vec3::UnitZ(), angle_rad); }
  /// Exponential map of a rotation vector (axis * angle).
  static Rotation from_rotation_vector(const Vec3& v);
  static Rotation from_euler_deg(const Vec3& roll_pitch_yaw_deg);

  const Mat3& matrix() const { return m_; }
  Eigen::Quaterniond quaternion() const;
  Vec3 euler_deg() const;
  /// Logarithm map; angle in [0, pi].
  Vec3 rotation_vector() const;
  double angle() const;
  /// Heading of the rotated x-axis in the world xy-plane.
  double yaw() const;

  Rotation inverse() const { return Rotation(m_.transpose(), Trusted{}); }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_, Trusted{}); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool operator==(const Rotation& o) const { return m_ == o.m_; }

 private:
  struct Trusted {};
  Rotation(const Mat3& m, Trusted) : m_(m) {}

  Mat3 m_;
};

/// Geodesic distance between two rotations, radians.
double angle_between(const Rotation& a, const Rotation& b);

/// Rigid pose of an end-effector or object. Positions are meters.
struct Pose {
  Vec3 position = Vec3::Zero();
  Rotation rotation;

  bool operator==(const Pose& o) const {
    return position == o.position && rotation == o.rotation;
  }
};

/// Similarity transform p -> scale * R * p + translation. Rigid when scale == 1.
struct RigidTransform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  static RigidTransform identity() { return {}; }
  static RigidTransform translate(const Vec3& t) { return {Rotation{}, t, 1.0}; }

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  RigidTransform inverse() const;
};

/// (compose(a, b))(p) == a(b(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

/// position' = s R position + t, rotation' = R rotation.
Pose apply(const RigidTransform& t, const Pose& p);

/// home^-1 * r: end-effector rotation expressed relative to the home pose.
Rotation relative_rotation_from_home(const Rotation& r, const Rotation& home);

inline Vec3 euler_deg(const Rotation& r) { return r.euler_deg(); }
inline Rotation from_euler_deg(const Vec3& deg) { return Rotation::from_euler_deg(deg); }

/// Text rendering used in prompts and reports: position in mm with three
/// decimals, rotation as intrinsic X-Y-Z Euler degrees with two decimals.
/// When `home` is given the rotation is reported as home^-1 * r.
std::string format_pose(const Pose& p, const std::optional<Rotation>& home = std::nullopt);
std::string format_vec(const Vec3& v, int decimals);

/// Inverse of the text convention: mm / Euler-deg back to an SI pose. When
/// `home` is given the Euler angles are taken as relative to it.
Pose pose_from_mm_deg(const Vec3& pos_mm, const Vec3& euler_deg,
                      const std::optional<Rotation>& home = std::nullopt);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace demoaug
