#include "demoaug/geometry.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

using namespace demoaug;
using namespace demoaug::testing;

namespace {

bool near(const Vec3& a, const Vec3& b, double tol) { return (a - b).norm() <= tol; }
bool near(const Mat3& a, const Mat3& b, double tol) { return (a - b).norm() <= tol; }

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("compose") {
    const RigidTransform id = compose(RigidTransform::identity(), RigidTransform::identity());
    CHECK(near(id.rotation.matrix(), Mat3::Identity(), 0.0));
    CHECK(id.translation.isZero());
    CHECK(id.scale == 1.0);

    Rng rng(1);
    const RigidTransform t{random_rotation(rng), random_vec(rng, -1, 1), 1.7};
    const RigidTransform c = compose(t, t.inverse());
    CHECK(near(c.rotation.matrix(), Mat3::Identity(), 1e-9));
    CHECK(near(c.translation, Vec3::Zero(), 1e-9));
    CHECK(c.scale == doctest::Approx(1.0).epsilon(1e-12));

    const RigidTransform tr = compose(RigidTransform::translate({1, 0, 0}), RigidTransform::translate({0, 2, 0}));
    CHECK(near(tr.translation, Vec3(1, 2, 0), 0.0));
  }

  TEST_CASE("compose matches nested application and is associative") {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      const RigidTransform a{random_rotation(rng), random_vec(rng, -1, 1), 0.5 + (i % 3)};
      const RigidTransform b{random_rotation(rng), random_vec(rng, -1, 1), 1.0};
      const RigidTransform c{random_rotation(rng), random_vec(rng, -1, 1), 0.25};
      const Vec3 p = random_vec(rng, -1, 1);
      CHECK(near(compose(a, b).apply(p), a.apply(b.apply(p)), 1e-9));
      const RigidTransform l = compose(compose(a, b), c);
      const RigidTransform r = compose(a, compose(b, c));
      CHECK(near(l.rotation.matrix(), r.rotation.matrix(), 1e-9));
      CHECK(near(l.translation, r.translation, 1e-9));
      CHECK(l.scale == doctest::Approx(r.scale));
    }
  }

  TEST_CASE("apply") {
    Rng rng(3);
    const Pose p = random_pose(rng);
    const Pose same = apply(RigidTransform::identity(), p);
    CHECK(same == p);

    const RigidTransform rz{Rotation::about_z(kPi / 2), Vec3::Zero(), 1.0};
    CHECK(near(apply(rz, Pose{{1, 0, 0}, {}}).position, Vec3(0, 1, 0), 1e-9));
    CHECK(near(apply(rz, p).rotation.matrix(), rz_matrix(kPi / 2) * p.rotation.matrix(), 1e-12));

    const RigidTransform s{Rotation{}, Vec3::Zero(), 2.0};
    CHECK(near(apply(s, Pose{{1, 1, 1}, {}}).position, Vec3(2, 2, 2), 0.0));
  }

  TEST_CASE("rigid transforms preserve distances") {
    Rng rng(4);
    for (int i = 0; i < 500; ++i) {
      const RigidTransform t{random_rotation(rng), random_vec(rng, -2, 2), 1.0};
      const Vec3 p = random_vec(rng, -1, 1);
      const Vec3 q = random_vec(rng, -1, 1);
      CHECK(std::abs((t.apply(p) - t.apply(q)).norm() - (p - q).norm()) <= 1e-9);
    }
  }

  TEST_CASE("relative rotation from home") {
    Rng rng(5);
    const Rotation home = random_rotation(rng);
    CHECK(near(relative_rotation_from_home(home, home).matrix(), Mat3::Identity(), 1e-12));
    const Rotation r = random_rotation(rng);
    CHECK(near(relative_rotation_from_home(r, Rotation{}).matrix(), r.matrix(), 0.0));

    const Mat3 expected = rz_matrix(deg_to_rad(30)).transpose() * rz_matrix(deg_to_rad(90));
    const Rotation got = relative_rotation_from_home(Rotation::about_z(deg_to_rad(90)), Rotation::about_z(deg_to_rad(30)));
    CHECK(near(got.matrix(), expected, 1e-9));
    CHECK(near(got.matrix(), rz_matrix(deg_to_rad(60)), 1e-9));

    for (int i = 0; i < 200; ++i) {
      const Rotation h = random_rotation(rng);
      const Rotation x = random_rotation(rng);
      CHECK(near(relative_rotation_from_home(h * x, h).matrix(), x.matrix(), 1e-9));
    }
  }

  TEST_CASE("euler angles are intrinsic XYZ") {
    CHECK(near(Rotation{}.euler_deg(), Vec3::Zero(), 0.0));
    CHECK(near(from_euler_deg({90, 0, 0}).euler_deg(), Vec3(90, 0, 0), 1e-6));

    const Mat3 oracle = rx_matrix(deg_to_rad(10)) * ry_matrix(deg_to_rad(20)) * rz_matrix(deg_to_rad(30));
    CHECK(near(from_euler_deg({10, 20, 30}).matrix(), oracle, 1e-9));

    Rng rng(6);
    std::uniform_real_distribution<double> ang(-179.0, 179.0);
    std::uniform_real_distribution<double> pitch(-89.4, 89.4);
    for (int i = 0; i < 2000; ++i) {
      const double r = ang(rng);
      const double p = pitch(rng);
      const double y = ang(rng);
      const Vec3 e(r, p, y);
      CHECK(near(from_euler_deg(e).euler_deg(), e, 1e-6));
    }
  }

  TEST_CASE("gimbal lock gives a canonical representative") {
    for (double pitch : {90.0, -90.0}) {
      const Rotation r = from_euler_deg({25, pitch, 40});
      const Vec3 e = r.euler_deg();
      CHECK(e.z() == 0.0);
      CHECK(e.y() == doctest::Approx(pitch));
      CHECK(near(from_euler_deg(e).matrix(), r.matrix(), 1e-9));
    }
  }

  TEST_CASE("rotations stay orthonormal") {
    Rng rng(7);
    Rotation acc;
    for (int i = 0; i < 1000; ++i) {
      acc = acc * random_rotation(rng);
      const Mat3& m = acc.matrix();
      CHECK(std::abs(m.determinant() - 1.0) <= 1e-9);
      CHECK(near(Mat3(m * m.transpose()), Mat3::Identity(), 1e-9));
    }
    CHECK_THROWS_AS(Rotation::from_matrix(2.0 * Mat3::Identity()), std::invalid_argument);
    Mat3 reflect = Mat3::Identity();
    reflect(2, 2) = -1;
    CHECK_THROWS_AS(Rotation::from_matrix(reflect), std::invalid_argument);
    CHECK(Rotation::nearest(reflect).matrix().determinant() == doctest::Approx(1.0));
  }

  TEST_CASE("rotation vector and angle") {
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
      const Rotation r = random_rotation(rng);
      CHECK(near(Rotation::from_rotation_vector(r.rotation_vector()).matrix(), r.matrix(), 1e-9));
      CHECK(r.angle() == doctest::Approx(r.rotation_vector().norm()).epsilon(1e-9));
    }
    CHECK(angle_between(Rotation::about_z(0.3), Rotation::about_z(-0.2)) == doctest::Approx(0.5));
    CHECK(Rotation::about_z(0.7).yaw() == doctest::Approx(0.7));
  }

  TEST_CASE("text format is mm and degrees") {
    const Pose p{{0.1, -0.0254, 0.0}, from_euler_deg({0, 0, 45})};
    CHECK(format_pose(p) == "pos_mm=[100.000, -25.400, 0.000] euler_deg=[0.00, 0.00, 45.00]");
    CHECK(format_pose(p, from_euler_deg({0, 0, 45})) == "pos_mm=[100.000, -25.400, 0.000] euler_deg=[0.00, 0.00, 0.00]");
    const Pose back = pose_from_mm_deg({100, -25.4, 0}, {0, 0, 45});
    CHECK(near(back.position, p.position, 1e-12));
    CHECK(near(back.rotation.matrix(), p.rotation.matrix(), 1e-12));
    const Rotation home = from_euler_deg({180, 0, 0});
    CHECK(near(pose_from_mm_deg({0, 0, 0}, {0, 0, 0}, home).rotation.matrix(), home.matrix(), 0.0));
  }
}
