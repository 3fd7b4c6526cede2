#include "mopt/kinematics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mopt::kin {

IkFailure::IkFailure(double residual_norm)
    : std::runtime_error("ik failed, residual " + std::to_string(residual_norm)),
      residual(residual_norm) {}

double PlanarArm::reach() const {
  double r = 0.0;
  for (double l : link_lengths) r += l;
  return r;
}

double wrap_angle(double a) {
  const double two_pi = 6.28318530717958647692;
  a = std::fmod(a, two_pi);
  if (a <= -3.14159265358979323846) a += two_pi;
  if (a > 3.14159265358979323846) a -= two_pi;
  return a;
}

FkResult fk(const PlanarArm& arm, const Vec& q) {
  if (q.size() != arm.n_joints())
    throw std::invalid_argument("fk: joint vector size mismatch");
  FkResult out;
  out.joints.reserve(arm.n_joints() + 1);
  out.joints.push_back(arm.base);
  double heading = arm.base_heading;
  Point2 p = arm.base;
  for (std::size_t k = 0; k < arm.n_joints(); ++k) {
    heading += q[k];
    p[0] += arm.link_lengths[k] * std::cos(heading);
    p[1] += arm.link_lengths[k] * std::sin(heading);
    out.joints.push_back(p);
  }
  out.ee_heading = heading;
  return out;
}

Matrix jacobian(const PlanarArm& arm, const Vec& q) {
  const FkResult chain = fk(arm, q);
  const std::size_t n = arm.n_joints();
  Matrix j(2, n);
  const Point2& ee = chain.joints.back();
  for (std::size_t k = 0; k < n; ++k) {
    // column k = rot90(ee - joint_k)
    j(0, k) = -(ee[1] - chain.joints[k][1]);
    j(1, k) = ee[0] - chain.joints[k][0];
  }
  return j;
}

Matrix point_jacobian(const PlanarArm& arm, const FkResult& chain,
                      const Point2& point, std::size_t link_index) {
  const std::size_t n = arm.n_joints();
  Matrix j(2, n);
  for (std::size_t k = 0; k <= link_index && k < n; ++k) {
    j(0, k) = -(point[1] - chain.joints[k][1]);
    j(1, k) = point[0] - chain.joints[k][0];
  }
  return j;
}

namespace {

Vec ik_attempt(const PlanarArm& arm, const Point2& target, Vec q,
               const IkOptions& opts, double& res_norm) {
  const std::size_t n = arm.n_joints();
  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    const FkResult chain = fk(arm, q);
    const Point2& ee = chain.joints.back();
    const double ex = target[0] - ee[0];
    const double ey = target[1] - ee[1];
    res_norm = std::sqrt(ex * ex + ey * ey);
    if (res_norm <= opts.tol) {
      for (double& a : q) a = wrap_angle(a);
      return q;
    }
    const Matrix j = jacobian(arm, q);
    // dq = J^T (J J^T + damping^2 I)^{-1} e, 2x2 solve in closed form
    double a = opts.damping * opts.damping, b = 0.0, c = 0.0,
           d = opts.damping * opts.damping;
    for (std::size_t k = 0; k < n; ++k) {
      a += j(0, k) * j(0, k);
      b += j(0, k) * j(1, k);
      d += j(1, k) * j(1, k);
    }
    c = b;
    const double det = a * d - b * c;
    const double wx = (d * ex - b * ey) / det;
    const double wy = (-c * ex + a * ey) / det;
    for (std::size_t k = 0; k < n; ++k) {
      double dq = j(0, k) * wx + j(1, k) * wy;
      if (dq > opts.step_clamp) dq = opts.step_clamp;
      if (dq < -opts.step_clamp) dq = -opts.step_clamp;
      q[k] += dq;
    }
  }
  return {};
}

}  // namespace

Vec ik(const PlanarArm& arm, const Point2& target, const Vec& q_init,
       const IkOptions& opts) {
  const std::size_t n = arm.n_joints();
  if (q_init.size() != n) throw std::invalid_argument("ik: q_init size mismatch");
  // damped least squares can lock in a folded configuration; retry from a
  // small fixed set of seeds before reporting failure
  const double kPi = 3.14159265358979323846;
  const Vec offsets = {0.0, kPi / 3.0, -kPi / 3.0, 2.0 * kPi / 3.0,
                       -2.0 * kPi / 3.0};
  double best_residual = std::numeric_limits<double>::infinity();
  for (double off : offsets) {
    Vec seed = q_init;
    for (std::size_t k = 0; k < n; ++k)
      seed[k] += off * (k % 2 == 0 ? 1.0 : -1.0);
    double res = 0.0;
    Vec q = ik_attempt(arm, target, std::move(seed), opts, res);
    if (!q.empty()) return q;
    best_residual = std::min(best_residual, res);
  }
  throw IkFailure(best_residual);
}

BodyPoints body_points_indexed(const PlanarArm& arm, const FkResult& chain,
                               double spacing) {
  if (!(spacing > 0.0))
    throw std::invalid_argument("body_points: spacing must be positive");
  BodyPoints out;
  for (std::size_t k = 0; k < arm.n_joints(); ++k) {
    const Point2& p0 = chain.joints[k];
    const Point2& p1 = chain.joints[k + 1];
    const double len = arm.link_lengths[k];
    const auto segments =
        static_cast<std::size_t>(std::ceil(len / spacing - 1e-12));
    const std::size_t n_seg = segments == 0 ? 1 : segments;
    const std::size_t first = k == 0 ? 0 : 1;  // avoid duplicating joints
    for (std::size_t s = first; s <= n_seg; ++s) {
      const double f = static_cast<double>(s) / static_cast<double>(n_seg);
      out.points.push_back(
          {p0[0] + f * (p1[0] - p0[0]), p0[1] + f * (p1[1] - p0[1])});
      out.link_index.push_back(k);
    }
  }
  return out;
}

std::vector<Point2> body_points(const PlanarArm& arm, const Vec& q,
                                double spacing) {
  const FkResult chain = fk(arm, q);
  return body_points_indexed(arm, chain, spacing).points;
}

}  // namespace mopt::kin
