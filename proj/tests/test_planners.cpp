#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "mopt/cholesky.hpp"
#include "mopt/environments.hpp"
#include "mopt/planners.hpp"
#include "mopt/kernels.hpp"
#include "mopt/rng.hpp"

using namespace mopt;
using namespace mopt::plan;

namespace {

gp::GPPrior make_prior(double sigma = 0.5, double q_c = 1.0,
                       std::size_t n_steps = 8, double dt = 0.25) {
  gp::GPConfig cfg;
  cfg.sigma_start = cfg.sigma_goal = sigma;
  cfg.q_c = q_c;
  cfg.grid = build_time_grid(0.0, dt, n_steps);
  const State a(Vec{0.0}, Vec{0.0});
  const State b(Vec{1.0}, Vec{0.0});
  return gp::GPPrior(cfg, gp::const_velocity_mean(a, b, cfg.grid));
}

CostFn zero_cost() {
  return [](const std::vector<Trajectory>& trajs) {
    return Vec(trajs.size(), 0.0);
  };
}

}  // namespace

TEST_CASE("step with zero step size leaves the mean unchanged") {
  const gp::GPPrior prior = make_prior();
  PlannerConfig cfg;
  cfg.step_size = 0.0;
  cfg.num_samples = 8;
  Vec mean = prior.mean().flat();
  const Vec before = mean;
  RngStream rng(1);
  stochgpmp_step(mean, prior, zero_cost(), cfg, rng);
  CHECK(mean == before);
}

TEST_CASE("single sample with unit step resamples exactly") {
  const gp::GPPrior prior = make_prior();
  PlannerConfig cfg;
  cfg.step_size = 1.0;
  cfg.num_samples = 1;
  Vec mean = prior.mean().flat();
  RngStream rng(2);
  // regenerate the sample the step will draw
  RngStream clone(2);
  const std::size_t n = prior.flat_size();
  Matrix z(n, 1);
  RngStream sub = clone.substream(0);
  fill_normal(sub, z.data(), n);
  solve_triangular_multi(prior.precision_chol(), z, true);
  Vec expected(n);
  for (std::size_t i = 0; i < n; ++i) expected[i] = z(i, 0) + mean[i];

  const StepDiagnostics diag = stochgpmp_step(mean, prior, zero_cost(), cfg, rng);
  CHECK(diag.weights == Vec{1.0});
  for (std::size_t i = 0; i < n; ++i) CHECK(mean[i] == expected[i]);
}

TEST_CASE("equal costs produce uniform weights, invariant to constant shifts") {
  const gp::GPPrior prior = make_prior();
  PlannerConfig cfg;
  cfg.num_samples = 16;
  cfg.alpha_mode = AlphaMode::none;

  Vec mean = prior.mean().flat();
  RngStream rng(3);
  const StepDiagnostics d1 = stochgpmp_step(mean, prior, zero_cost(), cfg, rng);
  double sum = 0.0;
  for (double w : d1.weights) {
    CHECK(w == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    CHECK(w >= 0.0);
    sum += w;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d1.ess == doctest::Approx(16.0).epsilon(1e-9));

  // shifting every cost by a constant leaves the weights unchanged
  Vec mean2 = prior.mean().flat();
  RngStream rng2(3);
  const CostFn shifted = [](const std::vector<Trajectory>& trajs) {
    return Vec(trajs.size(), 1234.5);
  };
  const StepDiagnostics d2 = stochgpmp_step(mean2, prior, shifted, cfg, rng2);
  for (std::size_t i = 0; i < d2.weights.size(); ++i)
    CHECK(d2.weights[i] == doctest::Approx(d1.weights[i]).epsilon(1e-12));
  CHECK(mean2 == mean);
}

TEST_CASE("the updated mean stays in the convex hull of mean and samples") {
  const gp::GPPrior prior = make_prior();
  PlannerConfig cfg;
  cfg.num_samples = 8;
  cfg.step_size = 0.7;
  Vec mean = prior.mean().flat();
  const Vec before = mean;

  // recreate the samples drawn inside the step
  RngStream clone(5);
  const std::size_t n = prior.flat_size();
  Matrix z(n, 8);
  Vec buf(n);
  for (std::size_t j = 0; j < 8; ++j) {
    RngStream sub = clone.substream(j);
    fill_normal(sub, buf.data(), n);
    for (std::size_t i = 0; i < n; ++i) z(i, j) = buf[i];
  }
  solve_triangular_multi(prior.precision_chol(), z, true);

  RngStream rng(5);
  RngStream rng_pass(5);
  stochgpmp_step(mean, prior, zero_cost(), cfg, rng_pass);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = before[i], hi = before[i];
    for (std::size_t j = 0; j < 8; ++j) {
      lo = std::min(lo, z(i, j) + before[i]);
      hi = std::max(hi, z(i, j) + before[i]);
    }
    CHECK(mean[i] >= lo - 1e-12);
    CHECK(mean[i] <= hi + 1e-12);
  }
}

TEST_CASE("all-infinite costs raise a step failure") {
  const gp::GPPrior prior = make_prior();
  PlannerConfig cfg;
  cfg.num_samples = 4;
  Vec mean = prior.mean().flat();
  RngStream rng(7);
  const CostFn bad = [](const std::vector<Trajectory>& trajs) {
    return Vec(trajs.size(), std::numeric_limits<double>::infinity());
  };
  CHECK_THROWS_AS((void)stochgpmp_step(mean, prior, bad, cfg, rng), StepFailure);
}

TEST_CASE("zero-cost planning keeps the straight line within monte-carlo noise") {
  // with the dynamics-only importance factor the constant-velocity mean is a
  // stationary point; 100 iterations should wander by at most a few sample
  // standard deviations
  PlanningProblem problem;
  problem.start = State(Vec{0.0, 0.0}, Vec{0.0, 0.0});
  problem.config_goals = {State(Vec{1.0, 1.0}, Vec{0.0, 0.0})};
  problem.grid = build_time_grid(0.0, 0.125, 8);
  costs::Objective obj(costs::TaskMap::identity());
  obj.add_term({"zero", 0.0, costs::SmoothnessTerm{}});
  problem.objective = std::move(obj);

  PlannerConfig cfg;
  cfg.sigma_start = cfg.sigma_goal = 0.05;
  cfg.sigma_gp = 0.5;
  cfg.num_samples = 32;
  cfg.iterations = 100;
  cfg.step_size = 0.5;
  cfg.convergence_tol = 0.0;
  RngStream rng(11);
  const PlanResult res = stochgpmp_plan(problem, cfg, rng);

  const Trajectory line = gp::const_velocity_mean(
      problem.start, problem.config_goals[0], problem.grid);
  const gp::GPPrior prior(cfg.gp_config(problem.grid), line);
  const Matrix& cov = prior.covariance();
  // per-coordinate drift <= 3 marginal std (the per-step kick is
  // gamma/sqrt(K) of a sample, and steps average out)
  for (std::size_t i = 0; i < line.flat_size(); ++i) {
    const double sigma = std::sqrt(cov(i, i));
    CHECK(std::fabs(res.trajectory.flat()[i] - line.flat()[i]) <= 3.0 * sigma);
  }
}

TEST_CASE("quadratic cost converges to the fixed point of the update") {
  // E(tau) = 1/2 ||tau - tau*||^2. The stationary mean of the update with
  // alpha precision P_a solves (I/lambda + 1/2 P_a) m = tau*/lambda, a
  // direct linear solve.
  for (const AlphaMode mode : {AlphaMode::dynamics, AlphaMode::full}) {
    // keep the sampling cloud tight so the finite-sample softmax bias stays
    // well under the 5% tolerance
    const gp::GPPrior prior = make_prior(0.15, 0.1, 8, 0.25);
    const std::size_t n = prior.flat_size();

    Vec target = prior.mean().flat();
    RngStream tweak(13);
    for (auto& v : target) v += 0.4 + 0.2 * tweak.normal();

    const CostFn quad = [&target](const std::vector<Trajectory>& trajs) {
      Vec costs(trajs.size());
      for (std::size_t t = 0; t < trajs.size(); ++t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) {
          const double d = trajs[t].flat()[i] - target[i];
          acc += d * d;
        }
        costs[t] = 0.5 * acc;
      }
      return costs;
    };

    PlannerConfig cfg;
    cfg.num_samples = 256;
    cfg.step_size = 0.3;
    cfg.temperature = 2.0;
    cfg.alpha_mode = mode;
    cfg.sigma_start = cfg.sigma_goal = 0.15;
    cfg.sigma_gp = 0.31622776601683794;  // q_c ~= 0.1 to match the prior

    Vec mean = prior.mean().flat();
    RngStream rng(17);
    Vec tail_avg(n, 0.0);
    const std::size_t iters = 600, tail = 200;
    for (std::size_t iter = 0; iter < iters; ++iter) {
      RngStream step_rng = rng.substream(iter);
      stochgpmp_step(mean, prior, quad, cfg, step_rng);
      if (iter >= iters - tail)
        kernels::axpy(1.0 / static_cast<double>(tail), mean.data(),
                      tail_avg.data(), n);
    }
    mean = tail_avg;

    // oracle: (I/lambda + 1/2 P_a) m = tau*/lambda
    Matrix a(n, n);
    const Matrix* pa = nullptr;
    if (mode == AlphaMode::full) pa = &prior.precision();
    if (mode == AlphaMode::dynamics) pa = &prior.transition_precision();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        a(i, j) = (pa != nullptr ? 0.5 * (*pa)(i, j) : 0.0);
      a(i, i) += 1.0 / cfg.temperature;
    }
    Vec rhs = target;
    for (auto& v : rhs) v /= cfg.temperature;
    const Matrix la = cholesky_spd(a);
    const Vec fixed_point = solve_cholesky(la, rhs);

    // 5% relative error in the prior norm ||v||_{K^{-1}}
    Vec diff = vsub(mean, fixed_point);
    const Vec pd = matvec(prior.precision(), diff);
    const double err = std::sqrt(vdot(diff, pd));
    const Vec pf = matvec(prior.precision(), fixed_point);
    const double scale = std::sqrt(vdot(fixed_point, pf));
    CHECK(err / scale < 0.05);
  }
}

TEST_CASE("without the importance factor the mean descends the cost") {
  // alpha none has no prior coupling, so its stationary point is the bare
  // cost minimizer; with a stiff prior that is only approached at rate
  // gamma K / lambda per mode. Assert monotone-in-expectation progress
  // instead of the fixed point.
  const gp::GPPrior prior = make_prior(0.15, 0.1, 8, 0.25);
  Vec target = prior.mean().flat();
  RngStream tweak(13);
  for (auto& v : target) v += 0.4 + 0.2 * tweak.normal();
  const auto cost_of = [&target](const Vec& flat) {
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double d = flat[i] - target[i];
      acc += d * d;
    }
    return 0.5 * acc;
  };
  const CostFn quad = [&](const std::vector<Trajectory>& trajs) {
    Vec costs(trajs.size());
    for (std::size_t t = 0; t < trajs.size(); ++t)
      costs[t] = cost_of(trajs[t].flat());
    return costs;
  };
  PlannerConfig cfg;
  cfg.num_samples = 256;
  cfg.step_size = 0.3;
  cfg.temperature = 2.0;
  cfg.alpha_mode = AlphaMode::none;
  Vec mean = prior.mean().flat();
  const double c0 = cost_of(mean);
  RngStream rng(19);
  for (std::size_t iter = 0; iter < 300; ++iter) {
    RngStream step_rng = rng.substream(iter);
    stochgpmp_step(mean, prior, quad, cfg, step_rng);
  }
  CHECK(cost_of(mean) < 0.5 * c0);
}

TEST_CASE("multi-plan reduces to the single planner when degenerate") {
  PlanningProblem problem;
  problem.start = State(Vec{0.0, 0.0}, Vec{0.0, 0.0});
  problem.config_goals = {State(Vec{2.0, 1.0}, Vec{0.0, 0.0})};
  problem.grid = build_time_grid(0.0, 0.125, 8);
  costs::Objective obj(costs::TaskMap::identity());
  obj.add_term({"pose", 1.0,
                costs::PosePotentialTerm{{2.0, 1.0}, costs::StepSelect::final()}});
  problem.objective = std::move(obj);

  PlannerConfig cfg;
  cfg.iterations = 20;
  cfg.num_samples = 8;
  cfg.plans_per_goal = 1;
  cfg.init_inflation = 0.0;
  cfg.convergence_tol = 0.0;
  cfg.sigma_start = cfg.sigma_goal = 0.1;

  RngStream rng1(19), rng2(19);
  const PlanResult single = stochgpmp_plan(problem, cfg, rng1);
  const MultiPlanResult multi = multi_stochgpmp_plan(problem, cfg, rng2);
  REQUIRE(multi.means.size() == 1);
  CHECK(multi.best.flat() == single.trajectory.flat());
}

TEST_CASE("multi-plan returns the arg-min with deterministic tie-break") {
  PlanningProblem problem;
  problem.start = State(Vec{0.0, 0.0}, Vec{0.0, 0.0});
  problem.config_goals = {State(Vec{2.0, 1.0}, Vec{0.0, 0.0}),
                          State(Vec{-1.0, 2.0}, Vec{0.0, 0.0})};
  problem.grid = build_time_grid(0.0, 0.125, 8);
  costs::Objective obj(costs::TaskMap::identity());
  obj.add_term({"pose", 1.0,
                costs::PosePotentialTerm{{1.0, 1.0}, costs::StepSelect::final()}});
  problem.objective = std::move(obj);

  PlannerConfig cfg;
  cfg.iterations = 10;
  cfg.num_samples = 8;
  cfg.plans_per_goal = 3;

  RngStream rng(23);
  const MultiPlanResult res = multi_stochgpmp_plan(problem, cfg, rng);
  REQUIRE(res.means.size() == 6);
  const std::size_t best_index = res.best_goal * 3 + res.best_plan;
  for (std::size_t i = 0; i < res.final_costs.size(); ++i) {
    CHECK(res.final_costs[best_index] <= res.final_costs[i]);
    if (res.final_costs[i] == res.final_costs[best_index])
      CHECK(best_index <= i);
  }
}

TEST_CASE("B.1 parameters solve unobstructed navigation") {
  PlanningProblem problem;
  problem.start = State(Vec{-9.0, -9.0}, Vec{0.0, 0.0});
  problem.config_goals = {State(Vec{5.0, 9.0}, Vec{0.0, 0.0})};
  problem.grid = build_time_grid(0.0, 0.02, 64);
  costs::Objective obj(costs::TaskMap::identity());
  obj.add_term({"zero", 0.0, costs::SmoothnessTerm{}});
  problem.objective = std::move(obj);

  PlannerConfig cfg;
  cfg.temperature = 1.0;
  cfg.sigma_start = cfg.sigma_goal = 1e-2;
  cfg.sigma_gp = 0.1;
  cfg.num_samples = 32;
  cfg.iterations = 100;
  RngStream rng(29);
  const PlanResult res = stochgpmp_plan(problem, cfg, rng);

  env::Environment empty;
  CHECK(env::success_metric(res.trajectory, empty, {5.0, 9.0}, 1.5));
}

TEST_CASE("gradient planner matches the quadratic linear-system oracle") {
  gp::GPConfig gcfg;
  gcfg.sigma_start = gcfg.sigma_goal = 0.7;
  gcfg.q_c = 1.0;
  gcfg.grid = build_time_grid(0.0, 1.0, 8);
  const State a(Vec{0.0}, Vec{0.0});
  const State b(Vec{1.0}, Vec{0.0});
  auto prior = std::make_shared<gp::GPPrior>(
      gcfg, gp::const_velocity_mean(a, b, gcfg.grid));

  PlanningProblem problem;
  problem.start = a;
  problem.config_goals = {b};
  problem.grid = gcfg.grid;
  costs::Objective obj(costs::TaskMap::identity());
  // identity map needs 2-d configurations; use d=2 instead
  gp::GPConfig gcfg2 = gcfg;
  const State a2(Vec{0.0, 0.0}, Vec{0.0, 0.0});
  const State b2(Vec{1.0, -0.5}, Vec{0.0, 0.0});
  auto prior2 = std::make_shared<gp::GPPrior>(
      gcfg2, gp::const_velocity_mean(a2, b2, gcfg2.grid));
  problem.start = a2;
  problem.config_goals = {b2};
  obj.add_term({"gp", 1.0, costs::GpFactorTerm{prior2}});
  const kin::Point2 target{0.8, 0.4};
  obj.add_term({"pose", 2.0,
                costs::PosePotentialTerm{target, costs::StepSelect::final()}});
  problem.objective = std::move(obj);

  GradientPlanConfig cfg;
  cfg.particles = 4;
  cfg.iterations = 15000;
  cfg.step_size = 0.03;
  cfg.clip_norm = 1e9;
  cfg.w_max = 0.0;
  cfg.sampling.sigma_start = cfg.sampling.sigma_goal = 0.7;
  cfg.sampling.sigma_gp = 1.0;

  RngStream rng(31);
  const costs::Objective empty_tempered(costs::TaskMap::identity());
  const GradientPlanResult res = gradient_plan(problem, empty_tempered, cfg, rng);

  // oracle: (P + w S^T S) tau = P mu + w S^T p with S selecting the final q
  Matrix h = prior2->precision();
  Vec rhs = matvec(prior2->precision(), prior2->mean().flat());
  const std::size_t q_last = (gcfg2.grid.n_states() - 1) * 4;
  h(q_last, q_last) += 2.0;
  h(q_last + 1, q_last + 1) += 2.0;
  rhs[q_last] += 2.0 * target[0];
  rhs[q_last + 1] += 2.0 * target[1];
  const Matrix lh = cholesky_spd(h);
  const Vec want = solve_cholesky(lh, rhs);

  Vec diff = vsub(res.best.flat(), want);
  const Vec pd = matvec(prior2->precision(), diff);
  const double err = std::sqrt(vdot(diff, pd));
  CHECK(err < 1e-3);
}

TEST_CASE("ik-resolved task goals feed the planner") {
  kin::PlanarArm arm;
  arm.link_lengths = {1.0, 1.0};
  PlanningProblem problem;
  problem.arm = arm;
  problem.start = State(Vec{0.2, 0.2}, Vec{0.0, 0.0});
  problem.task_goals = {{1.2, 0.9}};
  problem.grid = build_time_grid(0.0, 0.1, 8);
  costs::Objective obj(costs::TaskMap::arm(arm, 0.5));
  obj.add_term({"zero", 0.0, costs::SmoothnessTerm{}});
  problem.objective = std::move(obj);

  PlannerConfig cfg;
  cfg.iterations = 30;
  cfg.sigma_start = cfg.sigma_goal = 1e-2;
  RngStream rng(37);
  const PlanResult res = stochgpmp_plan(problem, cfg, rng);
  const auto chain =
      kin::fk(arm, Vec(res.trajectory.q(8).begin(), res.trajectory.q(8).end()));
  CHECK(std::hypot(chain.joints.back()[0] - 1.2,
                   chain.joints.back()[1] - 0.9) < 0.15);
}
