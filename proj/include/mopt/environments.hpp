#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mopt/costs.hpp"
#include "mopt/ebm.hpp"
#include "mopt/kinematics.hpp"
#include "mopt/planners.hpp"
#include "mopt/rng.hpp"
#include "mopt/trajectory.hpp"

namespace mopt::env {

using costs::Obstacle;
using kin::Point2;

struct Box {
  double lo_x = -10.0, lo_y = -10.0, hi_x = 10.0, hi_y = 10.0;

  bool contains(const Point2& p) const {
    return p[0] >= lo_x && p[0] <= hi_x && p[1] >= lo_y && p[1] <= hi_y;
  }
};

struct Environment {
  int id = 0;
  Box bounds;
  std::vector<Obstacle> obstacles;

  bool collides(const Point2& p) const {
    for (const auto& o : obstacles) {
      const double dx = p[0] - o.center[0];
      const double dy = p[1] - o.center[1];
      if (dx * dx + dy * dy <= o.radius * o.radius) return true;
    }
    return false;
  }
};

struct EnvGenSpec {
  std::size_t n_obstacles = 3;
  double center_range = 7.0;  // centers uniform in [-range, range]^2
  double radius_lo = 1.0;
  double radius_hi = 2.0;
  double separation_factor = 2.0;  // pairwise center distance >= factor * r_max
  Point2 start{-9.0, -9.0};
  double start_clearance = 1.0;
  std::size_t max_retries = 10000;
};

struct GenerationFailure : std::runtime_error {
  explicit GenerationFailure(const std::string& what_arg)
      : std::runtime_error(what_arg) {}
};

Environment generate_environment(const EnvGenSpec& spec, int id, RngStream rng);

// Uniform rejection sampling over bounds minus the obstacle discs.
std::vector<Point2> sample_free_space_points(const Environment& env,
                                             std::size_t n, RngStream rng);

// Goals uniform on the top (y = 9) and right (x = 9) border segments,
// zero velocity.
std::vector<State> sample_goals(std::size_t n_goals, RngStream rng);

// End state within `radius` of the goal and no support position inside any
// obstacle disc.
bool success_metric(const Trajectory& traj, const Environment& env,
                    const Point2& goal, double radius = 1.5);

struct ExpertGenConfig {
  plan::PlannerConfig planner;  // high-covariance settings for demonstrations
  double obstacle_weight = 0.5 / (1e-5 * 1e-5);
  double obstacle_eps = 0.1;
  std::size_t trajectories_per_goal = 5;
  std::size_t retry_bound = 3;
  double success_radius = 1.5;

  ExpertGenConfig() {
    planner.iterations = 500;
    planner.sigma_gp = 0.4;  // 4x the planning default of 0.1
    planner.plans_per_goal = 5;
    planner.alpha_mode = plan::AlphaMode::none;
  }
};

struct ExpertTraj {
  std::size_t goal_index = 0;
  Trajectory traj;
};

struct ExpertGenResult {
  std::vector<ExpertTraj> trajectories;
  std::vector<std::size_t> failed_goals;
};

ExpertGenResult generate_expert_trajectories(const Environment& env,
                                             const std::vector<State>& goals,
                                             const TimeGrid& grid,
                                             const ExpertGenConfig& cfg,
                                             RngStream rng);

// ---- Experiment II scene ----

struct GraspInsertScene {
  kin::PlanarArm arm;
  Vec q_start;
  ebm::Frame2 cube_pose;
  double cube_half = 0.3;
  ebm::Frame2 cubby_pose;  // interior center; opening faces the frame +x axis
  double cubby_width = 1.4;
  double cubby_depth = 1.6;
  double wall_thickness = 0.25;
  std::vector<Obstacle> fixed_obstacles;
};

GraspInsertScene default_grasp_insert_scene();

// The two cubby walls approximated by rows of sphere obstacles.
std::vector<Obstacle> cubby_wall_obstacles(const GraspInsertScene& scene);

// Uniform points in thin bands along the cube's four edges (world frame).
std::vector<Point2> sample_grasp_points(const GraspInsertScene& scene,
                                        std::size_t per_edge, double band,
                                        RngStream rng);

struct InsertGenConfig {
  std::size_t n_initial_points = 64;
  std::size_t samples_per_point = 16;
  std::size_t n_steps = 32;
  double dt = 0.05;
  plan::PlannerConfig planner;
  double obstacle_weight = 1e4;
  double obstacle_eps = 0.05;

  InsertGenConfig() {
    planner.iterations = 100;
    planner.sigma_gp = 0.2;
    planner.alpha_mode = plan::AlphaMode::none;
  }
};

// Collision-free 2-d approach trajectories ending in the cubby, world frame.
std::vector<Trajectory> generate_insert_trajectories(
    const GraspInsertScene& scene, const InsertGenConfig& cfg, RngStream rng);

// ---- dataset files ----

struct Exp1EnvRecord {
  Environment environment;
  std::vector<Point2> free_points;
  std::vector<State> goals;
  std::vector<ExpertTraj> expert;
};

void save_exp1_records(const std::string& dir, std::uint64_t seed,
                       const std::vector<Exp1EnvRecord>& records);
std::vector<Exp1EnvRecord> load_exp1_records(const std::string& dir);

}  // namespace mopt::env
