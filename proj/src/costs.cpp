#include "mopt/costs.hpp"

#include <cmath>

namespace mopt::costs {

TaskMap TaskMap::identity() { return TaskMap(); }

TaskMap TaskMap::arm(kin::PlanarArm arm, double body_point_spacing) {
  TaskMap m;
  m.arm_ = std::move(arm);
  m.spacing_ = body_point_spacing;
  return m;
}

std::vector<Point2> TaskMap::points(const Vec& q) const {
  if (is_identity()) {
    if (q.size() != 2)
      throw std::invalid_argument("identity task map expects 2-d configurations");
    return {Point2{q[0], q[1]}};
  }
  return kin::body_points(*arm_, q, spacing_);
}

Point2 TaskMap::ee_point(const Vec& q) const {
  if (is_identity()) {
    if (q.size() != 2)
      throw std::invalid_argument("identity task map expects 2-d configurations");
    return Point2{q[0], q[1]};
  }
  return kin::fk(*arm_, q).joints.back();
}

double joint_limit_cost(const Trajectory& traj, const Vec& q_min,
                        const Vec& q_max) {
  const std::size_t d = traj.dim();
  if (q_min.size() != d || q_max.size() != d)
    throw std::invalid_argument("joint_limit: limit dimension mismatch");
  for (std::size_t j = 0; j < d; ++j)
    if (q_min[j] > q_max[j])
      throw std::invalid_argument("joint_limit: q_min above q_max");
  double cost = 0.0;
  for (std::size_t i = 0; i < traj.n_states(); ++i) {
    const auto qi = traj.q(i);
    for (std::size_t j = 0; j < d; ++j) {
      cost += std::max(qi[j] - q_max[j], 0.0) + std::max(q_min[j] - qi[j], 0.0);
    }
  }
  return cost;
}

double sphere_obstacle_cost(const std::vector<Point2>& points,
                            const std::vector<Obstacle>& obstacles,
                            double eps) {
  double cost = 0.0;
  for (const auto& p : points) {
    for (const auto& o : obstacles) {
      const double dx = p[0] - o.center[0];
      const double dy = p[1] - o.center[1];
      const double dist = std::sqrt(dx * dx + dy * dy);
      const double pen = o.radius + eps - dist;
      if (pen > 0.0) cost += pen * pen;
    }
  }
  return cost;
}

double pose_potential(const Point2& point, const Point2& target) {
  const double dx = point[0] - target[0];
  const double dy = point[1] - target[1];
  return 0.5 * (dx * dx + dy * dy);
}

double smoothness_cost(const Trajectory& traj) {
  const std::size_t n = traj.grid().n_steps;
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = traj.q(i);
    const auto b = traj.q(i + 1);
    for (std::size_t d = 0; d < traj.dim(); ++d) {
      const double diff = a[d] - b[d];
      cost += diff * diff;
    }
  }
  return cost / static_cast<double>(n);
}

double gp_factor_cost(const gp::GPPrior& prior, const Trajectory& traj) {
  return -prior.log_prob_unnorm(traj);
}

void Objective::add_term(CostTerm term) {
  if (term.weight < 0.0)
    throw std::invalid_argument("objective: negative term weight");
  terms_.push_back(std::move(term));
}

namespace {

bool step_selected(const StepSelect& sel, std::size_t i, std::size_t last) {
  switch (sel.kind) {
    case StepSelect::Kind::all:
      return true;
    case StepSelect::Kind::final:
      return i == last;
    case StepSelect::Kind::index:
      return i == sel.index;
  }
  return false;
}

inline double point_obstacle_cost(double px, double py,
                                  const std::vector<Obstacle>& obstacles,
                                  double eps) {
  double cost = 0.0;
  for (const auto& o : obstacles) {
    const double dx = px - o.center[0];
    const double dy = py - o.center[1];
    const double pen = o.radius + eps - std::sqrt(dx * dx + dy * dy);
    if (pen > 0.0) cost += pen * pen;
  }
  return cost;
}

struct TermEvaluator {
  const TaskMap& map;
  const Trajectory& traj;

  double operator()(const JointLimitTerm& t) const {
    return joint_limit_cost(traj, t.q_min, t.q_max);
  }

  double operator()(const SphereObstacleTerm& t) const {
    double cost = 0.0;
    if (map.is_identity()) {
      // hot path for the point robot: no task-point materialization
      for (std::size_t i = 0; i < traj.n_states(); ++i) {
        const auto q = traj.q(i);
        cost += point_obstacle_cost(q[0], q[1], t.obstacles, t.eps);
      }
      return cost;
    }
    for (std::size_t i = 0; i < traj.n_states(); ++i) {
      const Vec q(traj.q(i).begin(), traj.q(i).end());
      if (t.ee_only) {
        cost += sphere_obstacle_cost({map.ee_point(q)}, t.obstacles, t.eps);
      } else {
        cost += sphere_obstacle_cost(map.points(q), t.obstacles, t.eps);
      }
    }
    return cost;
  }

  double operator()(const PosePotentialTerm& t) const {
    const std::size_t last = traj.n_states() - 1;
    double cost = 0.0;
    for (std::size_t i = 0; i < traj.n_states(); ++i) {
      if (!step_selected(t.steps, i, last)) continue;
      const Vec q(traj.q(i).begin(), traj.q(i).end());
      cost += pose_potential(map.ee_point(q), t.target);
    }
    return cost;
  }

  double operator()(const SmoothnessTerm&) const {
    return smoothness_cost(traj);
  }

  double operator()(const GpFactorTerm& t) const {
    return gp_factor_cost(*t.prior, traj);
  }

  void fill_task_points(Matrix& x) const {
    const std::size_t n = traj.n_states();
    x.resize(n, 2);
    if (map.is_identity()) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto q = traj.q(i);
        x(i, 0) = q[0];
        x(i, 1) = q[1];
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec q(traj.q(i).begin(), traj.q(i).end());
      const Point2 p = map.ee_point(q);
      x(i, 0) = p[0];
      x(i, 1) = p[1];
    }
  }

  double operator()(const EbmFactorTerm& t) const {
    Matrix x;
    fill_task_points(x);
    Vec e;
    t.energy->eval(x, e, nullptr);
    return kernels::sum(e.data(), e.size());
  }
};

}  // namespace

Evaluation Objective::evaluate_breakdown(const Trajectory& traj) const {
  if (terms_.empty()) throw std::invalid_argument("objective: no terms");
  Evaluation out;
  out.per_term.reserve(terms_.size());
  const TermEvaluator ev{map_, traj};
  for (const auto& term : terms_) {
    const double raw = std::visit(ev, term.payload);
    const double weighted = term.weight * raw;
    out.per_term.push_back({term.name, weighted});
    out.total += weighted;
  }
  return out;
}

double Objective::evaluate(const Trajectory& traj) const {
  return evaluate_breakdown(traj).total;
}

Vec Objective::evaluate_many(const std::vector<Trajectory>& trajs) const {
  Vec costs(trajs.size(), 0.0);
  if (trajs.empty()) return costs;

  // EBM terms share one batched network evaluation across all trajectories.
  const std::size_t n_states = trajs.front().n_states();
  Matrix ebm_x;
  Vec ebm_e;
  for (const auto& term : terms_) {
    const auto* ebm = std::get_if<EbmFactorTerm>(&term.payload);
    if (ebm == nullptr) continue;
    if (ebm_x.empty()) {
      ebm_x.resize(trajs.size() * n_states, 2);
      std::size_t row = 0;
      for (const auto& traj : trajs) {
        for (std::size_t i = 0; i < n_states; ++i, ++row) {
          if (map_.is_identity()) {
            const auto q = traj.q(i);
            ebm_x(row, 0) = q[0];
            ebm_x(row, 1) = q[1];
          } else {
            const Vec q(traj.q(i).begin(), traj.q(i).end());
            const Point2 p = map_.ee_point(q);
            ebm_x(row, 0) = p[0];
            ebm_x(row, 1) = p[1];
          }
        }
      }
    }
    ebm->energy->eval(ebm_x, ebm_e, nullptr);
    for (std::size_t t = 0; t < trajs.size(); ++t) {
      costs[t] += term.weight *
                  kernels::sum(ebm_e.data() + t * n_states, n_states);
    }
  }

  for (std::size_t t = 0; t < trajs.size(); ++t) {
    const TermEvaluator ev{map_, trajs[t]};
    for (const auto& term : terms_) {
      if (std::holds_alternative<EbmFactorTerm>(term.payload)) continue;
      costs[t] += term.weight * std::visit(ev, term.payload);
    }
  }
  return costs;
}

namespace {

struct TermGradient {
  const TaskMap& map;
  const Trajectory& traj;
  double weight;
  Vec& grad;  // flattened, accumulated

  std::size_t dim() const { return traj.dim(); }

  void add_q(std::size_t step, std::size_t d, double v) const {
    grad[step * 2 * dim() + d] += v;
  }

  // Pull a task-point gradient back to configuration coordinates.
  void pullback_point(std::size_t step, const Vec& q, const Point2& dp,
                      bool ee, std::size_t link_index,
                      const kin::FkResult* chain, const Point2& point) const {
    if (map.is_identity()) {
      add_q(step, 0, weight * dp[0]);
      add_q(step, 1, weight * dp[1]);
      return;
    }
    const kin::FkResult local = chain ? *chain : kin::fk(map.arm(), q);
    const Matrix j =
        ee ? kin::jacobian(map.arm(), q)
           : kin::point_jacobian(map.arm(), local, point, link_index);
    for (std::size_t k = 0; k < dim(); ++k)
      add_q(step, k, weight * (dp[0] * j(0, k) + dp[1] * j(1, k)));
  }

  void operator()(const JointLimitTerm& t) const {
    for (std::size_t i = 0; i < traj.n_states(); ++i) {
      const auto qi = traj.q(i);
      for (std::size_t d = 0; d < dim(); ++d) {
        if (qi[d] > t.q_max[d]) add_q(i, d, weight);
        else if (qi[d] < t.q_min[d]) add_q(i, d, -weight);
      }
    }
  }

  void operator()(const SphereObstacleTerm& t) const {
    for (std::size_t i = 0; i < traj.n_states(); ++i) {
      const Vec q(traj.q(i).begin(), traj.q(i).end());
      if (t.ee_only) {
        const Point2 p = map.ee_point(q);
        Point2 dp{0.0, 0.0};
        accumulate_obstacle_grad(p, t, dp);
        pullback_point(i, q, dp, true, 0, nullptr, p);
      } else if (map.is_identity()) {
        const Point2 p{q[0], q[1]};
        Point2 dp{0.0, 0.0};
        accumulate_obstacle_grad(p, t, dp);
        add_q(i, 0, weight * dp[0]);
        add_q(i, 1, weight * dp[1]);
      } else {
        const kin::FkResult chain = kin::fk(map.arm(), q);
        const kin::BodyPoints bp =
            kin::body_points_indexed(map.arm(), chain, map.spacing());
        for (std::size_t pi = 0; pi < bp.points.size(); ++pi) {
          Point2 dp{0.0, 0.0};
          accumulate_obstacle_grad(bp.points[pi], t, dp);
          if (dp[0] != 0.0 || dp[1] != 0.0)
            pullback_point(i, q, dp, false, bp.link_index[pi], &chain,
                           bp.points[pi]);
        }
      }
    }
  }

  static void accumulate_obstacle_grad(const Point2& p,
                                       const SphereObstacleTerm& t,
                                       Point2& dp) {
    for (const auto& o : t.obstacles) {
      const double dx = p[0] - o.center[0];
      const double dy = p[1] - o.center[1];
      const double dist = std::sqrt(dx * dx + dy * dy);
      const double pen = o.radius + t.eps - dist;
      if (pen > 0.0 && dist > 0.0) {
        const double s = -2.0 * pen / dist;
        dp[0] += s * dx;
        dp[1] += s * dy;
      }
    }
  }

  void operator()(const PosePotentialTerm& t) const {
    const std::size_t last = traj.n_states() - 1;
    for (std::size_t i = 0; i < traj.n_states(); ++i) {
      if (!step_selected(t.steps, i, last)) continue;
      const Vec q(traj.q(i).begin(), traj.q(i).end());
      const Point2 p = map.ee_point(q);
      const Point2 dp{p[0] - t.target[0], p[1] - t.target[1]};
      pullback_point(i, q, dp, true, 0, nullptr, p);
    }
  }

  void operator()(const SmoothnessTerm&) const {
    const std::size_t n = traj.grid().n_steps;
    const double scale = 2.0 * weight / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
      const auto qi = traj.q(i);
      for (std::size_t d = 0; d < dim(); ++d) {
        double g = 0.0;
        if (i < n) g += qi[d] - traj.q(i + 1)[d];
        if (i > 0) g += qi[d] - traj.q(i - 1)[d];
        add_q(i, d, scale * g);
      }
    }
  }

  void operator()(const GpFactorTerm& t) const {
    // d/dtau 1/2 (tau-mu)^T P (tau-mu) = P (tau-mu)
    const Vec r = vsub(traj.flat(), t.prior->mean().flat());
    const Vec g = matvec(t.prior->precision(), r);
    kernels::axpy(weight, g.data(), grad.data(), grad.size());
  }

  void operator()(const EbmFactorTerm& t) const {
    if (!t.energy->has_gradient())
      throw UnsupportedTermError("ebm_factor");
    const std::size_t n = traj.n_states();
    Matrix x(n, 2);
    std::vector<Vec> configs(n);
    for (std::size_t i = 0; i < n; ++i) {
      configs[i].assign(traj.q(i).begin(), traj.q(i).end());
      const Point2 p = map.ee_point(configs[i]);
      x(i, 0) = p[0];
      x(i, 1) = p[1];
    }
    Vec e;
    Matrix g;
    t.energy->eval(x, e, &g);
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 dp{g(i, 0), g(i, 1)};
      pullback_point(i, configs[i], dp, true, 0, nullptr,
                     Point2{x(i, 0), x(i, 1)});
    }
  }
};

}  // namespace

Vec Objective::gradient(const Trajectory& traj) const {
  if (terms_.empty()) throw std::invalid_argument("objective: no terms");
  Vec grad(traj.flat_size(), 0.0);
  for (const auto& term : terms_) {
    if (term.weight == 0.0) continue;
    std::visit(TermGradient{map_, traj, term.weight, grad}, term.payload);
  }
  return grad;
}

}  // namespace mopt::costs
