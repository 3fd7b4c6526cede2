#include "mopt/planners.hpp"

#include <cmath>
#include <limits>

#include "mopt/kernels.hpp"

namespace mopt::plan {

CostFn objective_cost_fn(const costs::Objective& objective) {
  return [&objective](const std::vector<Trajectory>& trajs) {
    return objective.evaluate_many(trajs);
  };
}

namespace {

void check_cfg(const PlannerConfig& cfg) {
  if (!(cfg.temperature > 0.0))
    throw std::invalid_argument("planner: temperature must be positive");
  if (cfg.step_size < 0.0 || cfg.step_size > 1.0)
    throw std::invalid_argument("planner: step size must lie in [0, 1]");
  if (cfg.num_samples < 1)
    throw std::invalid_argument("planner: need at least one sample");
}

// Samples K trajectories around `mean_flat` using the prior covariance.
std::vector<Trajectory> sample_around(const Vec& mean_flat,
                                      const gp::GPPrior& prior, std::size_t k,
                                      RngStream& rng) {
  const std::size_t n = prior.flat_size();
  Matrix z(n, k);
  Vec buf(n);
  for (std::size_t j = 0; j < k; ++j) {
    RngStream sub = rng.substream(j);
    fill_normal(sub, buf.data(), n);
    for (std::size_t i = 0; i < n; ++i) z(i, j) = buf[i];
  }
  solve_triangular_multi(prior.precision_chol(), z, true);
  std::vector<Trajectory> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Vec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = z(i, j) + mean_flat[i];
    out.emplace_back(prior.config().grid, prior.dim(), std::move(col));
  }
  return out;
}

}  // namespace

StepDiagnostics stochgpmp_step(Vec& mean_flat, const gp::GPPrior& prior,
                               const CostFn& cost_fn, const PlannerConfig& cfg,
                               RngStream& rng) {
  check_cfg(cfg);
  const std::size_t k = cfg.num_samples;
  const std::vector<Trajectory> samples = sample_around(mean_flat, prior, k, rng);

  StepDiagnostics diag;
  diag.costs = cost_fn(samples);
  if (diag.costs.size() != k)
    throw std::invalid_argument("stochgpmp step: cost function arity mismatch");

  // alpha(tau) = -1/2 mu^T P tau, Etilde = E - lambda alpha
  Vec alpha(k, 0.0);
  if (cfg.alpha_mode != AlphaMode::none) {
    const Matrix& p = cfg.alpha_mode == AlphaMode::full
                          ? prior.precision()
                          : prior.transition_precision();
    const Vec a = matvec(p, mean_flat);
    for (std::size_t j = 0; j < k; ++j)
      alpha[j] = -0.5 * vdot(a, samples[j].flat());
  }

  Vec log_w(k);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const double etilde = diag.costs[j] - cfg.temperature * alpha[j];
    log_w[j] = std::isfinite(etilde)
                   ? -etilde / cfg.temperature
                   : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, log_w[j]);
  }
  if (!std::isfinite(max_log)) throw StepFailure();

  diag.weights.assign(k, 0.0);
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    diag.weights[j] = std::exp(log_w[j] - max_log);
    z += diag.weights[j];
  }
  double sum_sq = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    diag.weights[j] /= z;
    sum_sq += diag.weights[j] * diag.weights[j];
  }
  diag.ess = 1.0 / sum_sq;

  // mu <- (1 - gamma) mu + gamma sum_k w_k tau_k
  Vec blended(mean_flat.size(), 0.0);
  for (std::size_t j = 0; j < k; ++j)
    kernels::axpy(diag.weights[j], samples[j].flat().data(), blended.data(),
                  blended.size());
  double delta = 0.0;
  for (std::size_t i = 0; i < mean_flat.size(); ++i) {
    const double next =
        (1.0 - cfg.step_size) * mean_flat[i] + cfg.step_size * blended[i];
    delta = std::max(delta, std::fabs(next - mean_flat[i]));
    mean_flat[i] = next;
  }
  diag.mean_delta_inf = delta;
  return diag;
}

std::vector<State> resolve_goals(const PlanningProblem& problem) {
  std::vector<State> goals = problem.config_goals;
  for (const auto& target : problem.task_goals) {
    if (!problem.arm.has_value())
      throw std::invalid_argument("task-space goal requires an arm");
    const Vec q = kin::ik(*problem.arm, target, problem.start.q);
    goals.emplace_back(q, Vec(q.size(), 0.0));
  }
  if (goals.empty()) throw std::invalid_argument("planning problem: no goals");
  return goals;
}

PlanResult stochgpmp_plan(const PlanningProblem& problem,
                          const PlannerConfig& cfg, RngStream& rng) {
  check_cfg(cfg);
  const std::vector<State> goals = resolve_goals(problem);
  if (goals.size() != 1)
    throw std::invalid_argument("stochgpmp_plan: expects a single goal");

  const gp::GPConfig gp_cfg = cfg.gp_config(problem.grid);
  gp::GPPrior prior(gp_cfg,
                    gp::const_velocity_mean(problem.start, goals[0], problem.grid));
  const CostFn cost_fn = objective_cost_fn(problem.objective);

  PlanResult result;
  Vec mean = problem.init_mean.has_value() ? problem.init_mean->flat()
                                           : prior.mean().flat();
  if (mean.size() != prior.flat_size())
    throw std::invalid_argument("stochgpmp_plan: init mean has wrong size");
  // stream layout shared with multi_stochgpmp_plan so the single-goal,
  // single-plan, zero-inflation cases coincide exactly
  RngStream iter_rng = rng.substream(2).substream(0);
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    RngStream step_rng = iter_rng.substream(iter);
    StepDiagnostics diag = stochgpmp_step(mean, prior, cost_fn, cfg, step_rng);
    const double delta = diag.mean_delta_inf;
    result.diagnostics.push_back(std::move(diag));
    result.mean_history.push_back(mean);
    ++result.iterations_run;
    if (delta < cfg.convergence_tol) break;
  }
  result.trajectory = Trajectory(problem.grid, problem.start.dim(), mean);
  return result;
}

MultiPlanResult multi_stochgpmp_plan(const PlanningProblem& problem,
                                     const PlannerConfig& cfg, RngStream& rng) {
  check_cfg(cfg);
  const std::vector<State> goals = resolve_goals(problem);
  const std::size_t n_goals = goals.size();
  const std::size_t n_plans = cfg.plans_per_goal;
  const CostFn cost_fn = objective_cost_fn(problem.objective);

  // One planning prior and one inflated initialization prior; both shared
  // across goals (same grid and noise levels), only the means differ.
  const gp::GPConfig plan_cfg = cfg.gp_config(problem.grid);
  const gp::GPConfig init_cfg = cfg.init_gp_config(problem.grid);
  gp::GPPrior plan_prior(plan_cfg, gp::const_velocity_mean(problem.start,
                                                           goals[0],
                                                           problem.grid));
  const bool inflate = cfg.init_inflation > 0.0;
  std::optional<gp::GPPrior> init_prior;
  if (inflate)
    init_prior.emplace(init_cfg, gp::const_velocity_mean(problem.start, goals[0],
                                                         problem.grid));

  // Initialize plan means M ~ N(M0, K0)
  std::vector<Vec> means;
  means.reserve(n_goals * n_plans);
  for (std::size_t g = 0; g < n_goals; ++g) {
    const Trajectory m0 =
        gp::const_velocity_mean(problem.start, goals[g], problem.grid);
    for (std::size_t p = 0; p < n_plans; ++p) {
      if (inflate) {
        RngStream init_rng = rng.substream(1).substream(g * 7919 + p);
        const std::size_t n = m0.flat_size();
        Matrix z(n, 1);
        fill_normal(init_rng, z.data(), n);
        solve_triangular_multi(init_prior->precision_chol(), z, true);
        Vec flat = m0.flat();
        for (std::size_t i = 0; i < n; ++i) flat[i] += z(i, 0);
        means.push_back(std::move(flat));
      } else {
        means.push_back(m0.flat());
      }
    }
  }

  // Independent per-plan updates for the fixed iteration budget.
  std::vector<RngStream> plan_rngs;
  plan_rngs.reserve(means.size());
  for (std::size_t i = 0; i < means.size(); ++i)
    plan_rngs.push_back(rng.substream(2).substream(i));
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    for (std::size_t i = 0; i < means.size(); ++i) {
      RngStream step_rng = plan_rngs[i].substream(iter);
      stochgpmp_step(means[i], plan_prior, cost_fn, cfg, step_rng);
    }
  }

  MultiPlanResult result;
  result.means.reserve(means.size());
  for (auto& m : means)
    result.means.emplace_back(problem.grid, problem.start.dim(), m);
  result.final_costs = cost_fn(result.means);
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.means.size(); ++i)
    if (result.final_costs[i] < result.final_costs[best]) best = i;
  result.best = result.means[best];
  result.best_goal = best / n_plans;
  result.best_plan = best % n_plans;
  return result;
}

GradientPlanResult gradient_plan(const PlanningProblem& problem,
                                 const costs::Objective& tempered,
                                 const GradientPlanConfig& cfg, RngStream& rng) {
  const std::vector<State> goals = resolve_goals(problem);
  if (goals.size() != 1)
    throw std::invalid_argument("gradient_plan: expects a single goal");
  const gp::GPConfig gp_cfg = cfg.sampling.gp_config(problem.grid);
  gp::GPPrior prior(gp_cfg, gp::const_velocity_mean(problem.start, goals[0],
                                                    problem.grid));
  RngStream sample_rng = rng.substream(0);
  std::vector<Trajectory> particles = prior.sample(cfg.particles, sample_rng);

  GradientPlanResult result;
  const bool has_tempered = !tempered.terms().empty();
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    const double w =
        cfg.w_max *
        (1.0 - static_cast<double>(iter) / static_cast<double>(cfg.iterations));
    for (std::size_t p = 0; p < particles.size(); ++p) {
      Vec g = problem.objective.gradient(particles[p]);
      if (has_tempered && w > 0.0) {
        const Vec gt = tempered.gradient(particles[p]);
        kernels::axpy(w, gt.data(), g.data(), g.size());
      }
      const double gn = norm2(g);
      if (!std::isfinite(gn)) throw GradientDiverged(p, iter);
      const double scale =
          gn > cfg.clip_norm ? cfg.clip_norm / gn : 1.0;
      kernels::axpy(-cfg.step_size * scale, g.data(),
                    particles[p].flat().data(), particles[p].flat().size());
    }
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& particle : particles)
      best_cost = std::min(best_cost, problem.objective.evaluate(particle));
    result.cost_history.push_back(best_cost);
  }

  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < particles.size(); ++p) {
    const double c = problem.objective.evaluate(particles[p]);
    if (c < best_cost) {
      best_cost = c;
      best = p;
    }
  }
  result.best = particles[best];
  result.best_cost = best_cost;
  return result;
}

}  // namespace mopt::plan
