#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mopt/gp_prior.hpp"
#include "mopt/kinematics.hpp"
#include "mopt/matrix.hpp"
#include "mopt/trajectory.hpp"

namespace mopt::costs {

using kin::Point2;

struct Obstacle {
  Point2 center{0.0, 0.0};
  double radius = 1.0;
};

struct UnsupportedTermError : std::runtime_error {
  explicit UnsupportedTermError(const std::string& term)
      : std::runtime_error("objective gradient: term without gradient support: " + term) {}
};

// Per-state energy over task points, optionally with input gradients. The
// EBM module provides implementations; costs only sees this surface.
class StateEnergy {
 public:
  virtual ~StateEnergy() = default;
  virtual std::size_t input_dim() const = 0;
  virtual bool has_gradient() const { return true; }
  // x: rows x input_dim; energy resized to rows; grad (if non-null) same
  // shape as x.
  virtual void eval(const Matrix& x, Vec& energy, Matrix* grad) const = 0;
};

// Maps configurations to the task points costs are evaluated at.
class TaskMap {
 public:
  static TaskMap identity();
  static TaskMap arm(kin::PlanarArm arm, double body_point_spacing);

  bool is_identity() const { return !arm_.has_value(); }
  const kin::PlanarArm& arm() const { return *arm_; }
  double spacing() const { return spacing_; }

  // All collision points (body points for arms, the configuration itself
  // for the identity map).
  std::vector<Point2> points(const Vec& q) const;
  // Single task point (end effector for arms).
  Point2 ee_point(const Vec& q) const;

 private:
  std::optional<kin::PlanarArm> arm_;
  double spacing_ = 0.25;
};

// ---- Elementary cost terms (free functions, used by the term structs) ----

double joint_limit_cost(const Trajectory& traj, const Vec& q_min,
                        const Vec& q_max);

double sphere_obstacle_cost(const std::vector<Point2>& points,
                            const std::vector<Obstacle>& obstacles,
                            double eps);

double pose_potential(const Point2& point, const Point2& target);

double smoothness_cost(const Trajectory& traj);

double gp_factor_cost(const gp::GPPrior& prior, const Trajectory& traj);

// ---- Composable objective ----

struct StepSelect {
  enum class Kind { all, final, index };
  Kind kind = Kind::all;
  std::size_t index = 0;

  static StepSelect all() { return {Kind::all, 0}; }
  static StepSelect final() { return {Kind::final, 0}; }
  static StepSelect at(std::size_t i) { return {Kind::index, i}; }
};

struct JointLimitTerm {
  Vec q_min, q_max;
};

struct SphereObstacleTerm {
  std::vector<Obstacle> obstacles;
  double eps = 0.1;
  bool ee_only = false;
};

struct PosePotentialTerm {
  Point2 target{0.0, 0.0};
  StepSelect steps = StepSelect::final();
};

struct SmoothnessTerm {};

struct GpFactorTerm {
  std::shared_ptr<const gp::GPPrior> prior;
};

struct EbmFactorTerm {
  std::shared_ptr<const StateEnergy> energy;
};

using TermPayload = std::variant<JointLimitTerm, SphereObstacleTerm,
                                 PosePotentialTerm, SmoothnessTerm,
                                 GpFactorTerm, EbmFactorTerm>;

struct CostTerm {
  std::string name;
  double weight = 1.0;
  TermPayload payload;
};

struct TermValue {
  std::string name;
  double weighted_value = 0.0;
};

struct Evaluation {
  double total = 0.0;
  std::vector<TermValue> per_term;
};

class Objective {
 public:
  Objective() : map_(TaskMap::identity()) {}
  explicit Objective(TaskMap map) : map_(std::move(map)) {}

  void add_term(CostTerm term);
  const std::vector<CostTerm>& terms() const { return terms_; }
  const TaskMap& task_map() const { return map_; }

  double evaluate(const Trajectory& traj) const;
  Evaluation evaluate_breakdown(const Trajectory& traj) const;

  // Batched evaluation; EBM terms run one network batch over all
  // trajectories and states.
  Vec evaluate_many(const std::vector<Trajectory>& trajs) const;

  // Gradient w.r.t. the flattened trajectory.
  Vec gradient(const Trajectory& traj) const;

 private:
  TaskMap map_;
  std::vector<CostTerm> terms_;
};

}  // namespace mopt::costs
