#pragma once

#include <cstddef>
#include <vector>

#include "mopt/cholesky.hpp"
#include "mopt/matrix.hpp"
#include "mopt/rng.hpp"
#include "mopt/trajectory.hpp"

namespace mopt::gp {

// Constant-velocity transition model parameters. Q_c = q_c * I per
// configuration dimension; start/goal factors are isotropic with the given
// per-dimension standard deviations.
struct GPConfig {
  double sigma_start = 1e-2;
  double sigma_goal = 1e-2;
  double q_c = 1e-2;
  TimeGrid grid;
};

// State transition Phi and process covariance Q for one step of length dt,
// as 2d x 2d blocks over the [q; qdot] layout.
struct TransitionMatrices {
  Matrix phi;
  Matrix q;
};

TransitionMatrices transition_matrices(double dt, double q_c, std::size_t dim);

// Goal-directed trajectory prior N(mean, K) represented by its precision
// K^{-1} (start factor + goal factor + constant-velocity transition factors)
// and the precision's Cholesky factor. transition_precision keeps the
// transition-only part, used by the planner's importance-sampling factor.
class GPPrior {
 public:
  GPPrior(GPConfig config, Trajectory mean);

  const GPConfig& config() const { return config_; }
  const Trajectory& mean() const { return mean_; }
  std::size_t dim() const { return mean_.dim(); }
  std::size_t flat_size() const { return mean_.flat_size(); }

  const Matrix& precision() const { return precision_; }
  const Matrix& precision_chol() const { return chol_; }
  const Matrix& transition_precision() const { return transition_precision_; }

  // Covariance K = precision^{-1}, computed on first use.
  const Matrix& covariance() const;

  void set_mean(Trajectory mean);

  std::vector<Trajectory> sample(std::size_t k, RngStream& rng) const;

  // Flattened samples, one per column of the returned (flat_size x k) matrix.
  Matrix sample_flat(std::size_t k, RngStream& rng) const;

  // -1/2 (tau - mean)^T K^{-1} (tau - mean)
  double log_prob_unnorm(const Trajectory& traj) const;
  double log_prob_unnorm_flat(const Vec& flat) const;

 private:
  GPConfig config_;
  Trajectory mean_;
  Matrix precision_;
  Matrix transition_precision_;
  Matrix chol_;
  mutable Matrix covariance_;
};

// Precision of the factored prior over the grid: unary start/goal factors
// plus one binary transition factor per step.
Matrix assemble_precision(const GPConfig& config, std::size_t dim);

// Transition factors only (singular; constant-velocity null space).
Matrix assemble_transition_precision(const GPConfig& config, std::size_t dim);

// Straight-line mean: positions interpolate linearly, velocity constant.
Trajectory const_velocity_mean(const State& start, const State& goal,
                               const TimeGrid& grid);

// GP posterior mean of `mean` queried on a denser grid inside the horizon.
// Support-time queries reproduce the support states exactly; between
// supports the two bracketing states determine the value (Markov property).
Trajectory interpolate(const GPPrior& prior, const Trajectory& mean,
                       const TimeGrid& dense);

}  // namespace mopt::gp
