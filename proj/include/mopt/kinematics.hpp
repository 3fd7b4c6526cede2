#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mopt/matrix.hpp"

namespace mopt::kin {

using Point2 = std::array<double, 2>;

struct IkFailure : std::runtime_error {
  IkFailure(double residual_norm);
  double residual;
};

// Planar serial chain with revolute joints.
struct PlanarArm {
  std::vector<double> link_lengths;
  Point2 base{0.0, 0.0};
  double base_heading = 0.0;

  std::size_t n_joints() const { return link_lengths.size(); }
  double reach() const;
};

struct FkResult {
  std::vector<Point2> joints;  // n+1 points, base first, end effector last
  double ee_heading = 0.0;
};

FkResult fk(const PlanarArm& arm, const Vec& q);

// 2 x n Jacobian of the end effector position.
Matrix jacobian(const PlanarArm& arm, const Vec& q);

// Jacobian of an arbitrary point rigidly attached after joint `link_index`
// (0-based link). Columns for joints beyond the link are zero.
Matrix point_jacobian(const PlanarArm& arm, const FkResult& chain,
                      const Point2& point, std::size_t link_index);

struct IkOptions {
  std::size_t max_iters = 200;
  double tol = 1e-6;
  double damping = 1e-2;
  double step_clamp = 0.39269908169872414;  // pi/8 per joint per iteration
};

// Damped least squares IK; angles wrapped to (-pi, pi].
Vec ik(const PlanarArm& arm, const Point2& target, const Vec& q_init,
       const IkOptions& opts = {});

// Points sampled along each link at intervals <= spacing, endpoints included.
std::vector<Point2> body_points(const PlanarArm& arm, const Vec& q,
                                double spacing);

// Bookkeeping variant: link index per sampled point, for jacobian pullback.
struct BodyPoints {
  std::vector<Point2> points;
  std::vector<std::size_t> link_index;
};
BodyPoints body_points_indexed(const PlanarArm& arm, const FkResult& chain,
                               double spacing);

double wrap_angle(double a);

}  // namespace mopt::kin
