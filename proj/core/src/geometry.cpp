#include "demoaug/geometry.hpp"

#include <Eigen/SVD>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace demoaug {

Rotation Rotation::from_matrix(const Mat3& m) {
  const double ortho_err = (m * m.transpose() - Mat3::Identity()).norm();
  if (!m.allFinite() || ortho_err > 1e-6 || std::abs(m.determinant() - 1.0) > 1e-6) {
    throw std::invalid_argument("matrix is not a proper rotation");
  }
  return Rotation(m, Trusted{});
}

Rotation Rotation::nearest(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return Rotation(svd.matrixU() * d * svd.matrixV().transpose(), Trusted{});
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.normalized().toRotationMatrix(), Trusted{});
}

Rotation Rotation::about_axis(const Vec3& axis, double angle_rad) {
  return Rotation(Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), Trusted{});
}

Rotation Rotation::from_rotation_vector(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-300) return {};
  return about_axis(v / angle, angle);
}

Rotation Rotation::from_euler_deg(const Vec3& deg) {
  return about_x(deg_to_rad(deg.x())) * about_y(deg_to_rad(deg.y())) *
         about_z(deg_to_rad(deg.z()));
}

Eigen::Quaterniond Rotation::quaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  return q;
}

Vec3 Rotation::euler_deg() const {
  // R = Rx(a) Ry(b) Rz(c):
  //   R02 = sin b, R12 = -sin a cos b, R22 = cos a cos b,
  //   R01 = -cos b sin c, R00 = cos b cos c.
  const double sb = std::clamp(m_(0, 2), -1.0, 1.0);
  const double b = std::asin(sb);
  double a = 0.0;
  double c = 0.0;
  const double cb = std::hypot(m_(0, 0), m_(0, 1));
  if (cb > 1e-9) {
    a = std::atan2(-m_(1, 2), m_(2, 2));
    c = std::atan2(-m_(0, 1), m_(0, 0));
  } else if (sb > 0) {
    // Ry(+90): R10 = sin(a + c), R11 = cos(a + c); yaw fixed to 0.
    a = std::atan2(m_(1, 0), m_(1, 1));
  } else {
    // Ry(-90): R10 = sin(c - a), R11 = cos(c - a).
    a = std::atan2(-m_(1, 0), m_(1, 1));
  }
  return {rad_to_deg(a), rad_to_deg(b), rad_to_deg(c)};
}

Vec3 Rotation::rotation_vector() const {
  Eigen::AngleAxisd aa(quaternion());
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > kPi) {
    angle = 2.0 * kPi - angle;
    axis = -axis;
  }
  return axis * angle;
}

double Rotation::angle() const {
  const double c = std::clamp((m_.trace() - 1.0) * 0.5, -1.0, 1.0);
  // acos loses precision near 0; use the quaternion form there.
  if (c > 0.999) {
    const Eigen::Quaterniond q = quaternion();
    return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
  }
  return std::acos(c);
}

double Rotation::yaw() const { return std::atan2(m_(1, 0), m_(0, 0)); }

double angle_between(const Rotation& a, const Rotation& b) {
  return (a.inverse() * b).angle();
}

RigidTransform RigidTransform::inverse() const {
  const Rotation rinv = rotation.inverse();
  const double sinv = 1.0 / scale;
  return {rinv, -sinv * (rinv * translation), sinv};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.scale * (a.rotation * b.translation) + a.translation,
          a.scale * b.scale};
}

Pose apply(const RigidTransform& t, const Pose& p) {
  return {t.apply(p.position), t.rotation * p.rotation};
}

Rotation relative_rotation_from_home(const Rotation& r, const Rotation& home) {
  return home.inverse() * r;
}

std::string format_vec(const Vec3& v, int decimals) {
  auto fix = [](double x) { return x == 0.0 ? 0.0 : x; };  // no "-0.000"
  const double scale = std::pow(10.0, decimals);
  auto r = [&](double x) { return fix(std::round(x * scale) / scale); };
  return fmt::format("[{:.{}f}, {:.{}f}, {:.{}f}]", r(v.x()), decimals, r(v.y()), decimals,
                     r(v.z()), decimals);
}

std::string format_pose(const Pose& p, const std::optional<Rotation>& home) {
  const Rotation r = home ? relative_rotation_from_home(p.rotation, *home) : p.rotation;
  return "pos_mm=" + format_vec(p.position * 1000.0, 3) + " euler_deg=" +
         format_vec(r.euler_deg(), 2);
}

Pose pose_from_mm_deg(const Vec3& pos_mm, const Vec3& euler, const std::optional<Rotation>& home) {
  Rotation r = Rotation::from_euler_deg(euler);
  if (home) r = *home * r;
  return {pos_mm / 1000.0, r};
}

}  // namespace demoaug
