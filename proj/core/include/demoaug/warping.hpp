#pragma once

#include "demoaug/demonstration.hpp"
#include "demoaug/geometry.hpp"

#include <vector>

namespace demoaug {

/// Ordered end-effector poses with gripper commands aligned 1:1.
struct TrajectorySegment {
  std::vector<Pose> poses;
  std::vector<Gripper> gripper;

  std::size_t size() const { return poses.size(); }
};

struct TimedPose {
  int t = 0;
  Pose pose;
};

/// Chords shorter than this are treated as a single point.
constexpr double kChordEpsilon = 1e-6;

/// Similarity transform that maps old_start -> new_start and old_end -> new_end
/// (positions only) and, among all such transforms, maximizes z^T R z.
///
/// scale = |new chord| / |old chord|. When both chords are degenerate the
/// transform is the pure translation aligning the start points. When the
/// objective is flat in the free angle (chord parallel to z) the angle with
/// the smallest total rotation is taken. Throws DegenerateChord when only the
/// old chord is degenerate.
RigidTransform compute_warp(const Pose& old_start, const Pose& old_end, const Pose& new_start,
                            const Pose& new_end);

/// Maps positions through `t`; rotations and gripper commands are untouched.
TrajectorySegment warp_positions(const TrajectorySegment& seg, const RigidTransform& t);

/// Left-multiplies each rotation by a delta interpolated (slerp) between
/// new_start * R_0^-1 and new_end * R_T^-1. Endpoints land exactly on the
/// requested rotations.
TrajectorySegment warp_rotations(const TrajectorySegment& seg, const Rotation& new_start_rot,
                                 const Rotation& new_end_rot);

/// Robot-pose trajectory of a demonstration with gripper commands taken from
/// its actions.
TrajectorySegment demo_trajectory(const Demonstration& demo);

/// Piecewise warp: each sub-trajectory between consecutive keyposes is warped
/// independently so its endpoints land on the new keyposes. Shared keypose
/// timesteps take the new keypose pose exactly. Output length equals the demo
/// length.
TrajectorySegment warp_trajectory_by_keyposes(const Demonstration& demo,
                                              const std::vector<TimedPose>& old_keyposes,
                                              const std::vector<TimedPose>& new_keyposes);

}  // namespace demoaug
