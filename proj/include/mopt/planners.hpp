#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mopt/costs.hpp"
#include "mopt/gp_prior.hpp"
#include "mopt/kinematics.hpp"
#include "mopt/rng.hpp"
#include "mopt/trajectory.hpp"

namespace mopt::plan {

// Which precision the importance-sampling factor alpha(tau) = -1/2 mu^T P tau
// uses. `full` includes the start/goal blocks; `dynamics` restricts P to the
// transition factors, which leaves a straight-line mean exactly stationary
// under zero cost (the start/goal blocks otherwise contract the mean toward
// the origin); `none` drops the factor, as the batched multi-goal update
// does. Default is `dynamics`.
enum class AlphaMode { full, dynamics, none };

struct PlannerConfig {
  double temperature = 1.0;  // lambda
  double step_size = 0.5;    // gamma in [0, 1]
  std::size_t num_samples = 32;
  std::size_t iterations = 100;
  double sigma_start = 1e-2;
  double sigma_goal = 1e-2;
  double sigma_gp = 0.1;      // q_c = sigma_gp^2
  double init_inflation = 4.0;  // sigma_gp multiplier for Alg. 2 init draws
  std::size_t plans_per_goal = 1;
  AlphaMode alpha_mode = AlphaMode::dynamics;
  double convergence_tol = 1e-6;

  gp::GPConfig gp_config(const TimeGrid& grid) const {
    return {sigma_start, sigma_goal, sigma_gp * sigma_gp, grid};
  }
  gp::GPConfig init_gp_config(const TimeGrid& grid) const {
    const double s = init_inflation * sigma_gp;
    return {sigma_start, sigma_goal, s * s, grid};
  }
};

struct PlanningProblem {
  State start;
  std::vector<State> config_goals;
  std::vector<kin::Point2> task_goals;  // resolved via IK against `arm`
  costs::Objective objective;
  std::optional<kin::PlanarArm> arm;
  TimeGrid grid;
  std::optional<Trajectory> init_mean;  // warm start; default straight line
};

// Batched trajectory cost; planners only see this signature.
using CostFn = std::function<Vec(const std::vector<Trajectory>&)>;

CostFn objective_cost_fn(const costs::Objective& objective);

struct StepFailure : std::runtime_error {
  StepFailure() : std::runtime_error("stochgpmp step: all sample costs non-finite") {}
};

struct StepDiagnostics {
  Vec weights;
  Vec costs;
  double ess = 0.0;
  double mean_delta_inf = 0.0;
};

// One importance-sampling update of the proposal mean (in flattened form).
StepDiagnostics stochgpmp_step(Vec& mean_flat, const gp::GPPrior& prior,
                               const CostFn& cost_fn, const PlannerConfig& cfg,
                               RngStream& rng);

struct PlanResult {
  Trajectory trajectory;
  std::vector<Vec> mean_history;  // mean after each iteration (flattened)
  std::vector<StepDiagnostics> diagnostics;
  std::size_t iterations_run = 0;
};

// Algorithm: init mean as the constant-velocity line to the (single) goal,
// fixed covariance from cfg, iterate until convergence or the iteration cap.
PlanResult stochgpmp_plan(const PlanningProblem& problem,
                          const PlannerConfig& cfg, RngStream& rng);

struct MultiPlanResult {
  Trajectory best;
  std::size_t best_goal = 0;
  std::size_t best_plan = 0;
  std::vector<Trajectory> means;  // goal-major order
  Vec final_costs;
};

MultiPlanResult multi_stochgpmp_plan(const PlanningProblem& problem,
                                     const PlannerConfig& cfg, RngStream& rng);

// ---- gradient-based multi-particle planner with prior tempering ----

struct GradientPlanConfig {
  std::size_t particles = 8;
  std::size_t iterations = 100;
  double step_size = 1e-2;
  double clip_norm = 50.0;
  double w_max = 1.0;  // tempering weight at t = 0, linear decay to 0
  PlannerConfig sampling;  // GP prior used to draw initial particles
};

struct GradientDiverged : std::runtime_error {
  GradientDiverged(std::size_t particle_index, std::size_t iteration)
      : std::runtime_error("gradient plan diverged"),
        particle(particle_index),
        iteration(iteration) {}
  std::size_t particle;
  std::size_t iteration;
};

struct GradientPlanResult {
  Trajectory best;
  double best_cost = 0.0;
  std::vector<double> cost_history;  // best base cost per iteration
};

// Descends objective + w(t) * tempered_objective over a batch of particles
// drawn from the structured prior; returns the best particle by base cost.
GradientPlanResult gradient_plan(const PlanningProblem& problem,
                                 const costs::Objective& tempered,
                                 const GradientPlanConfig& cfg, RngStream& rng);

// Resolve all goals to configuration space (IK for task-space goals).
std::vector<State> resolve_goals(const PlanningProblem& problem);

}  // namespace mopt::plan
