#pragma once

#include "demoaug/demonstration.hpp"
#include "demoaug/geometry.hpp"
#include "demoaug/random.hpp"

#include <vector>

namespace demoaug::testing {

Vec3 random_vec(Rng& rng, double lo, double hi);
Rotation random_rotation(Rng& rng);
Pose random_pose(Rng& rng, double extent = 0.5);

/// Rz built entry by entry, independent of the library's rotation code.
Mat3 rz_matrix(double rad);
Mat3 rx_matrix(double rad);
Mat3 ry_matrix(double rad);

/// Synthetic demonstration with random poses, objects and gripper flips.
Demonstration random_demo(Rng& rng, int length, const std::string& id);

bool same_demo(const Demonstration& a, const Demonstration& b);

}  // namespace demoaug::testing
