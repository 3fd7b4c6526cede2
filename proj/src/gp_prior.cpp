#include "mopt/gp_prior.hpp"

#include <cmath>
#include <stdexcept>

#include "mopt/kernels.hpp"

namespace mopt::gp {

namespace {

void check_config(const GPConfig& c) {
  if (!(c.sigma_start > 0.0) || !(c.sigma_goal > 0.0) || !(c.q_c > 0.0))
    throw std::invalid_argument("gp config: sigmas and q_c must be positive");
  if (!(c.grid.dt > 0.0) || c.grid.n_steps < 1)
    throw std::invalid_argument("gp config: invalid grid");
}

// 2x2 per-dimension blocks of Q^{-1} for step dt: closed-form inverse of
// [[dt^3/3, dt^2/2], [dt^2/2, dt]] * q_c.
struct QInv {
  double qq, qv, vv;
};

QInv q_inverse(double dt, double q_c) {
  return {12.0 / (dt * dt * dt * q_c), -6.0 / (dt * dt * q_c),
          4.0 / (dt * q_c)};
}

}  // namespace

TransitionMatrices transition_matrices(double dt, double q_c,
                                       std::size_t dim) {
  if (!(dt > 0.0)) throw std::invalid_argument("transition: dt must be positive");
  if (!(q_c > 0.0)) throw std::invalid_argument("transition: q_c must be positive");
  const std::size_t n = 2 * dim;
  TransitionMatrices out{Matrix(n, n), Matrix(n, n)};
  const double q3 = dt * dt * dt / 3.0 * q_c;
  const double q2 = dt * dt / 2.0 * q_c;
  const double q1 = dt * q_c;
  for (std::size_t d = 0; d < dim; ++d) {
    out.phi(d, d) = 1.0;
    out.phi(d, dim + d) = dt;
    out.phi(dim + d, dim + d) = 1.0;
    out.q(d, d) = q3;
    out.q(d, dim + d) = q2;
    out.q(dim + d, d) = q2;
    out.q(dim + d, dim + d) = q1;
  }
  return out;
}

Matrix assemble_transition_precision(const GPConfig& config, std::size_t dim) {
  check_config(config);
  const std::size_t n_states = config.grid.n_states();
  const std::size_t bs = 2 * dim;
  const std::size_t n = n_states * bs;
  const QInv qi = q_inverse(config.grid.dt, config.q_c);
  const double dt = config.grid.dt;

  // Per-dimension 2x2 blocks of the binary factor J^T Q^{-1} J with
  // J = [-Phi, I]; Phi = [[1, dt], [0, 1]] acts within each dimension.
  // A = Phi^T Qinv Phi, B = -Phi^T Qinv, C = Qinv.
  const double a_qq = qi.qq;
  const double a_qv = dt * qi.qq + qi.qv;
  const double a_vv = dt * dt * qi.qq + 2.0 * dt * qi.qv + qi.vv;
  const double b_qq = -qi.qq;
  const double b_qv = -qi.qv;
  const double b_vq = -(dt * qi.qq + qi.qv);
  const double b_vv = -(dt * qi.qv + qi.vv);

  Matrix p(n, n);
  for (std::size_t i = 0; i < n_states - 1; ++i) {
    const std::size_t r0 = i * bs;
    const std::size_t r1 = (i + 1) * bs;
    for (std::size_t d = 0; d < dim; ++d) {
      const std::size_t q0 = r0 + d, v0 = r0 + dim + d;
      const std::size_t q1 = r1 + d, v1 = r1 + dim + d;
      p(q0, q0) += a_qq;
      p(q0, v0) += a_qv;
      p(v0, q0) += a_qv;
      p(v0, v0) += a_vv;
      p(q1, q1) += qi.qq;
      p(q1, v1) += qi.qv;
      p(v1, q1) += qi.qv;
      p(v1, v1) += qi.vv;
      p(q0, q1) += b_qq;
      p(q0, v1) += b_qv;
      p(v0, q1) += b_vq;
      p(v0, v1) += b_vv;
      p(q1, q0) += b_qq;
      p(v1, q0) += b_qv;
      p(q1, v0) += b_vq;
      p(v1, v0) += b_vv;
    }
  }
  return p;
}

Matrix assemble_precision(const GPConfig& config, std::size_t dim) {
  Matrix p = assemble_transition_precision(config, dim);
  const std::size_t bs = 2 * dim;
  const double ws = 1.0 / (config.sigma_start * config.sigma_start);
  const double wg = 1.0 / (config.sigma_goal * config.sigma_goal);
  const std::size_t goal0 = (config.grid.n_states() - 1) * bs;
  for (std::size_t r = 0; r < bs; ++r) {
    p(r, r) += ws;
    p(goal0 + r, goal0 + r) += wg;
  }
  return p;
}

Trajectory const_velocity_mean(const State& start, const State& goal,
                               const TimeGrid& grid) {
  if (start.dim() != goal.dim())
    throw std::invalid_argument("const_velocity_mean: dimension mismatch");
  const std::size_t dim = start.dim();
  Trajectory mean(grid, dim);
  const double horizon = static_cast<double>(grid.n_steps) * grid.dt;
  Vec vel(dim);
  for (std::size_t d = 0; d < dim; ++d)
    vel[d] = (goal.q[d] - start.q[d]) / horizon;
  for (std::size_t i = 0; i < grid.n_states(); ++i) {
    const double s =
        static_cast<double>(i) / static_cast<double>(grid.n_steps);
    for (std::size_t d = 0; d < dim; ++d) {
      mean.q(i)[d] = start.q[d] + s * (goal.q[d] - start.q[d]);
      mean.qdot(i)[d] = vel[d];
    }
  }
  return mean;
}

GPPrior::GPPrior(GPConfig config, Trajectory mean)
    : config_(config), mean_(std::move(mean)) {
  check_config(config_);
  if (mean_.grid() != config_.grid)
    throw std::invalid_argument("gp prior: mean grid differs from config grid");
  precision_ = assemble_precision(config_, mean_.dim());
  transition_precision_ = assemble_transition_precision(config_, mean_.dim());
  try {
    chol_ = cholesky_spd(precision_);
  } catch (const FactorizationError&) {
    throw std::invalid_argument("gp prior: degenerate config, precision not SPD");
  }
}

const Matrix& GPPrior::covariance() const {
  if (covariance_.empty()) covariance_ = cholesky_inverse(chol_);
  return covariance_;
}

void GPPrior::set_mean(Trajectory mean) {
  if (mean.grid() != config_.grid || mean.dim() != mean_.dim())
    throw std::invalid_argument("gp prior: incompatible mean");
  mean_ = std::move(mean);
}

Matrix GPPrior::sample_flat(std::size_t k, RngStream& rng) const {
  const std::size_t n = flat_size();
  Matrix z(n, k);
  Vec buf(n);
  for (std::size_t j = 0; j < k; ++j) {
    RngStream sub = rng.substream(j);
    fill_normal(sub, buf.data(), n);
    for (std::size_t i = 0; i < n; ++i) z(i, j) = buf[i];
  }
  // tau = mean + L^{-T} z gives Cov = (L L^T)^{-1} = K
  solve_triangular_multi(chol_, z, true);
  const Vec& mu = mean_.flat();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = z.row(i);
    for (std::size_t j = 0; j < k; ++j) row[j] += mu[i];
  }
  return z;
}

std::vector<Trajectory> GPPrior::sample(std::size_t k, RngStream& rng) const {
  if (k < 1) throw std::invalid_argument("gp sample: k must be >= 1");
  const Matrix flat = sample_flat(k, rng);
  std::vector<Trajectory> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Vec col(flat.rows());
    for (std::size_t i = 0; i < flat.rows(); ++i) col[i] = flat(i, j);
    out.emplace_back(config_.grid, mean_.dim(), std::move(col));
  }
  return out;
}

double GPPrior::log_prob_unnorm_flat(const Vec& flat) const {
  if (flat.size() != flat_size())
    throw std::invalid_argument("log_prob: flat size mismatch");
  Vec r = vsub(flat, mean_.flat());
  const Vec y = lower_transpose_matvec(chol_, r);
  return -0.5 * kernels::dot(y.data(), y.data(), y.size());
}

double GPPrior::log_prob_unnorm(const Trajectory& traj) const {
  if (traj.grid() != config_.grid)
    throw std::invalid_argument("log_prob: grid mismatch");
  return log_prob_unnorm_flat(traj.flat());
}

namespace {

// 2x2 constant-velocity blocks as plain scalars.
struct Block2 {
  double a, b, c, d;  // [[a, b], [c, d]]
};

Block2 mul(const Block2& x, const Block2& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
          x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

Block2 phi_block(double dt) { return {1.0, dt, 0.0, 1.0}; }

Block2 q_block(double dt, double q_c) {
  return {dt * dt * dt / 3.0 * q_c, dt * dt / 2.0 * q_c, dt * dt / 2.0 * q_c,
          dt * q_c};
}

Block2 inverse(const Block2& x) {
  const double det = x.a * x.d - x.b * x.c;
  return {x.d / det, -x.b / det, -x.c / det, x.a / det};
}

Block2 transpose2(const Block2& x) { return {x.a, x.c, x.b, x.d}; }

Block2 sub(const Block2& x, const Block2& y) {
  return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
}

}  // namespace

Trajectory interpolate(const GPPrior& prior, const Trajectory& mean,
                       const TimeGrid& dense) {
  const TimeGrid& grid = prior.config().grid;
  if (mean.grid() != grid)
    throw std::invalid_argument("interpolate: mean grid differs from prior");
  const double t_begin = grid.t0;
  const double t_end = grid.horizon_end();
  const double snap = 1e-9 * grid.dt;
  if (dense.t0 < t_begin - snap || dense.horizon_end() > t_end + snap)
    throw std::out_of_range("interpolate: dense grid outside horizon");

  const std::size_t dim = mean.dim();
  const double q_c = prior.config().q_c;
  Trajectory out(dense, dim);
  for (std::size_t j = 0; j < dense.n_states(); ++j) {
    const double t = dense.time(j);
    double rel = (t - grid.t0) / grid.dt;
    std::size_t i = static_cast<std::size_t>(
        std::max(0.0, std::min(rel, static_cast<double>(grid.n_steps - 1))));
    if (i > grid.n_steps - 1) i = grid.n_steps - 1;
    const double delta = t - grid.time(i);
    if (std::fabs(delta) <= snap) {
      out.set_state(j, mean.state(i));
      continue;
    }
    if (std::fabs(delta - grid.dt) <= snap) {
      out.set_state(j, mean.state(i + 1));
      continue;
    }
    // Bridge conditioning on the bracketing supports:
    // x(t) = Lam x_i + Psi x_{i+1},
    // Psi = Q(delta) Phi(dt-delta)^T Q(dt)^{-1}, Lam = Phi(delta) - Psi Phi(dt).
    const double rest = grid.dt - delta;
    const Block2 psi = mul(mul(q_block(delta, q_c), transpose2(phi_block(rest))),
                           inverse(q_block(grid.dt, q_c)));
    const Block2 lam = sub(phi_block(delta), mul(psi, phi_block(grid.dt)));
    for (std::size_t d = 0; d < dim; ++d) {
      const double qa = mean.q(i)[d], va = mean.qdot(i)[d];
      const double qb = mean.q(i + 1)[d], vb = mean.qdot(i + 1)[d];
      out.q(j)[d] = lam.a * qa + lam.b * va + psi.a * qb + psi.b * vb;
      out.qdot(j)[d] = lam.c * qa + lam.d * va + psi.c * qb + psi.d * vb;
    }
  }
  return out;
}

}  // namespace mopt::gp
