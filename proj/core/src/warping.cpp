#include "demoaug/warping.hpp"

#include "demoaug/errors.hpp"

#include <cmath>
#include <string>

namespace demoaug {

namespace {

Mat3 cross_matrix(const Vec3& n) {
  Mat3 k;
  k << 0, -n.z(), n.y(), n.z(), 0, -n.x(), -n.y(), n.x(), 0;
  return k;
}

// Free angle about `axis` maximizing z^T Rot(axis, phi) R0 z, with the
// minimum-rotation tie-break when the objective does not depend on phi.
double best_free_angle(const Vec3& axis, const Mat3& r0) {
  const Vec3 z = Vec3::UnitZ();
  const Vec3 w = r0 * z;
  // z^T Rot(n, phi) w = a cos(phi) + b sin(phi) + const
  const double a = z.dot(w) - axis.z() * axis.dot(w);
  const double b = z.dot(axis.cross(w));
  if (std::hypot(a, b) > 1e-12) return std::atan2(b, a);

  // trace(Rot(n, phi) R0) = A cos(phi) + B sin(phi) + const
  const double ta = r0.trace() - axis.dot(r0 * axis);
  const double tb = (cross_matrix(axis) * r0).trace();
  if (std::hypot(ta, tb) > 1e-12) return std::atan2(tb, ta);
  return 0.0;
}

}  // namespace

RigidTransform compute_warp(const Pose& old_start, const Pose& old_end, const Pose& new_start,
                            const Pose& new_end) {
  const Vec3 u = old_end.position - old_start.position;
  const Vec3 v = new_end.position - new_start.position;
  const double lu = u.norm();
  const double lv = v.norm();

  if (lu <= kChordEpsilon) {
    if (lv > kChordEpsilon) {
      throw DegenerateChord("old chord has zero length but new chord does not");
    }
    return RigidTransform::translate(new_start.position - old_start.position);
  }

  RigidTransform t;
  if (lv > 0.0) {
    const Vec3 uhat = u / lu;
    const Vec3 vhat = v / lv;
    const Mat3 r0 = Eigen::Quaterniond::FromTwoVectors(uhat, vhat).toRotationMatrix();
    const double phi = best_free_angle(vhat, r0);
    t.rotation = Rotation::about_axis(vhat, phi) * Rotation::nearest(r0);
    t.scale = lv / lu;
  } else {
    // The new chord collapses to a point; keep orientation and shrink.
    t.scale = 1e-12;
  }
  t.translation = new_start.position - t.scale * (t.rotation * old_start.position);
  return t;
}

TrajectorySegment warp_positions(const TrajectorySegment& seg, const RigidTransform& t) {
  TrajectorySegment out = seg;
  for (auto& p : out.poses) p.position = t.apply(p.position);
  return out;
}

TrajectorySegment warp_rotations(const TrajectorySegment& seg, const Rotation& new_start_rot,
                                 const Rotation& new_end_rot) {
  if (seg.size() < 2) throw Error("warp_rotations needs a segment of length >= 2");
  const Rotation delta0 = new_start_rot * seg.poses.front().rotation.inverse();
  const Rotation delta_t = new_end_rot * seg.poses.back().rotation.inverse();
  const Eigen::Quaterniond rel = (delta0.inverse() * delta_t).quaternion();
  const Eigen::Quaterniond unit = Eigen::Quaterniond::Identity();

  TrajectorySegment out = seg;
  const std::size_t last = seg.size() - 1;
  for (std::size_t i = 1; i < last; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(last);
    const Rotation delta = delta0 * Rotation::from_quaternion(unit.slerp(s, rel));
    out.poses[i].rotation = delta * seg.poses[i].rotation;
  }
  out.poses.front().rotation = new_start_rot;
  out.poses.back().rotation = new_end_rot;
  return out;
}

TrajectorySegment demo_trajectory(const Demonstration& demo) {
  TrajectorySegment seg;
  seg.poses.reserve(demo.size());
  seg.gripper.reserve(demo.size());
  for (std::size_t t = 0; t < demo.size(); ++t) {
    seg.poses.push_back(demo.observations[t].robot);
    seg.gripper.push_back(demo.actions[t].gripper);
  }
  return seg;
}

TrajectorySegment warp_trajectory_by_keyposes(const Demonstration& demo,
                                              const std::vector<TimedPose>& old_keyposes,
                                              const std::vector<TimedPose>& new_keyposes) {
  validate(demo);
  const int last_t = demo.last_timestep();
  if (old_keyposes.size() != new_keyposes.size() || old_keyposes.size() < 2) {
    throw KeyposeMismatch("keypose lists must have equal length >= 2");
  }
  for (std::size_t i = 0; i < old_keyposes.size(); ++i) {
    const int t = old_keyposes[i].t;
    if (t != new_keyposes[i].t) {
      throw KeyposeMismatch("keypose " + std::to_string(i) + " timesteps differ");
    }
    if (t < 0 || t > last_t) {
      throw KeyposeMismatch("keypose timestep " + std::to_string(t) + " outside demo");
    }
    if (i > 0 && t <= old_keyposes[i - 1].t) {
      throw KeyposeMismatch("keypose timesteps must be strictly increasing");
    }
  }
  if (old_keyposes.front().t != 0 || old_keyposes.back().t != last_t) {
    throw KeyposeMismatch("keyposes must start at t=0 and end at t=T");
  }

  const TrajectorySegment full = demo_trajectory(demo);
  TrajectorySegment out = full;
  for (std::size_t k = 0; k + 1 < old_keyposes.size(); ++k) {
    const int t0 = old_keyposes[k].t;
    const int t1 = old_keyposes[k + 1].t;
    TrajectorySegment seg;
    seg.poses.assign(full.poses.begin() + t0, full.poses.begin() + t1 + 1);
    seg.gripper.assign(full.gripper.begin() + t0, full.gripper.begin() + t1 + 1);

    const RigidTransform warp = compute_warp(old_keyposes[k].pose, old_keyposes[k + 1].pose,
                                             new_keyposes[k].pose, new_keyposes[k + 1].pose);
    seg = warp_positions(seg, warp);
    seg = warp_rotations(seg, new_keyposes[k].pose.rotation, new_keyposes[k + 1].pose.rotation);
    for (int t = t0 + 1; t < t1; ++t) out.poses[t] = seg.poses[t - t0];
  }
  for (const auto& kp : new_keyposes) out.poses[kp.t] = kp.pose;
  return out;
}

}  // namespace demoaug
