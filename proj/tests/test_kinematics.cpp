#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mopt/kinematics.hpp"
#include "mopt/rng.hpp"

using namespace mopt;
using namespace mopt::kin;

namespace {
const double kPi = 3.14159265358979323846;
}

TEST_CASE("fk matches hand-computed two-link poses") {
  PlanarArm arm;
  arm.link_lengths = {1.0, 1.0};
  auto r = fk(arm, {0.0, 0.0});
  CHECK(r.joints.back()[0] == doctest::Approx(2.0));
  CHECK(r.joints.back()[1] == doctest::Approx(0.0));

  r = fk(arm, {kPi / 2.0, 0.0});
  CHECK(r.joints.back()[0] == doctest::Approx(0.0));
  CHECK(r.joints.back()[1] == doctest::Approx(2.0));

  RngStream rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec q{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
    const auto chain = fk(arm, q);
    const double dist = std::hypot(chain.joints.back()[0] - arm.base[0],
                                   chain.joints.back()[1] - arm.base[1]);
    CHECK(dist <= arm.reach() + 1e-12);
  }
}

TEST_CASE("fk is 2pi-periodic per joint") {
  PlanarArm arm;
  arm.link_lengths = {0.8, 1.2, 0.5};
  RngStream rng(7);
  const Vec q{rng.normal(), rng.normal(), rng.normal()};
  for (std::size_t j = 0; j < 3; ++j) {
    Vec q2 = q;
    q2[j] += 2.0 * kPi;
    const auto a = fk(arm, q);
    const auto b = fk(arm, q2);
    CHECK(a.joints.back()[0] == doctest::Approx(b.joints.back()[0]));
    CHECK(a.joints.back()[1] == doctest::Approx(b.joints.back()[1]));
  }
}

TEST_CASE("jacobian columns and finite differences agree") {
  PlanarArm arm;
  arm.link_lengths = {1.0};
  const Matrix j0 = jacobian(arm, {0.0});
  CHECK(j0(0, 0) == doctest::Approx(0.0));
  CHECK(j0(1, 0) == doctest::Approx(1.0));

  arm.link_lengths = {1.0, 0.7, 1.3};
  RngStream rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    Vec q{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi),
          rng.uniform(-kPi, kPi)};
    const Matrix jac = jacobian(arm, q);
    const double h = 1e-7;
    for (std::size_t k = 0; k < 3; ++k) {
      Vec qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      const auto fp = fk(arm, qp).joints.back();
      const auto fm = fk(arm, qm).joints.back();
      CHECK(std::fabs(jac(0, k) - (fp[0] - fm[0]) / (2 * h)) <= 1e-7 + 1e-6 * std::fabs(jac(0,k)));
      CHECK(std::fabs(jac(1, k) - (fp[1] - fm[1]) / (2 * h)) <= 1e-7 + 1e-6 * std::fabs(jac(1,k)));
    }
  }
}

TEST_CASE("fully folded arm zeroes the wrist column") {
  PlanarArm arm;
  arm.link_lengths = {1.0, 1.0};
  // q2 = pi folds the second link back onto the first: ee sits at the base
  // joint, so the base column loses its lever arm
  const Matrix j = jacobian(arm, {0.3, kPi});
  CHECK(std::fabs(j(0, 0)) < 1e-12);
  CHECK(std::fabs(j(1, 0)) < 1e-12);
}

TEST_CASE("ik reaches reachable targets and wraps angles") {
  PlanarArm arm;
  arm.link_lengths = {1.0, 1.0};
  const Vec q = ik(arm, {2.0, 0.0}, {0.1, 0.1});
  const auto r = fk(arm, q);
  CHECK(std::hypot(r.joints.back()[0] - 2.0, r.joints.back()[1]) <= 1e-6);
  for (double a : q) {
    CHECK(a > -kPi - 1e-12);
    CHECK(a <= kPi + 1e-12);
  }

  // folded solution for the origin: q2 = +-pi
  const Vec qf = ik(arm, {0.0, 0.0}, {0.3, 2.5});
  const auto rf = fk(arm, qf);
  CHECK(std::hypot(rf.joints.back()[0], rf.joints.back()[1]) <= 1e-6);
  CHECK(std::fabs(std::fabs(qf[1]) - kPi) < 1e-3);

  CHECK_THROWS_AS((void)ik(arm, {3.0, 0.0}, {0.0, 0.0}), IkFailure);
}

TEST_CASE("ik success round-trips through fk on random targets") {
  PlanarArm arm;
  arm.link_lengths = {1.2, 0.9, 0.6};
  RngStream rng(13);
  for (int rep = 0; rep < 25; ++rep) {
    const double ang = rng.uniform(0.0, 2.0 * kPi);
    const double rad = rng.uniform(0.3, 0.9 * arm.reach());
    const Point2 target{rad * std::cos(ang), rad * std::sin(ang)};
    const Vec q = ik(arm, target, {0.1, -0.2, 0.3});
    const auto r = fk(arm, q);
    CHECK(std::hypot(r.joints.back()[0] - target[0],
                     r.joints.back()[1] - target[1]) <= 1e-6);
  }
}

TEST_CASE("body points sample links at the requested spacing") {
  PlanarArm arm;
  arm.link_lengths = {1.0};
  const auto pts = body_points(arm, {0.0}, 0.5);
  CHECK(pts.size() == 3);
  CHECK(pts[0][0] == doctest::Approx(0.0));
  CHECK(pts[1][0] == doctest::Approx(0.5));
  CHECK(pts[2][0] == doctest::Approx(1.0));

  // spacing >= length gives the two endpoints per link
  const auto coarse = body_points(arm, {0.0}, 5.0);
  CHECK(coarse.size() == 2);

  // all points lie on the segments between consecutive joints
  arm.link_lengths = {1.0, 0.8};
  RngStream rng(17);
  const Vec q{rng.normal(), rng.normal()};
  const auto chain = fk(arm, q);
  for (const auto& p : body_points(arm, q, 0.13)) {
    double best = 1e9;
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& a = chain.joints[k];
      const auto& b = chain.joints[k + 1];
      const double vx = b[0] - a[0], vy = b[1] - a[1];
      const double t = std::clamp(
          ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / (vx * vx + vy * vy), 0.0,
          1.0);
      best = std::min(best, std::hypot(p[0] - (a[0] + t * vx),
                                       p[1] - (a[1] + t * vy)));
    }
    CHECK(best < 1e-12);
  }
}
