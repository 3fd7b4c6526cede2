#include "mopt/environments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mopt::env {

Environment generate_environment(const EnvGenSpec& spec, int id, RngStream rng) {
  Environment env;
  env.id = id;
  const double min_sep = spec.separation_factor * spec.radius_hi;
  for (std::size_t attempt = 0; attempt < spec.max_retries; ++attempt) {
    env.obstacles.clear();
    bool ok = true;
    for (std::size_t i = 0; i < spec.n_obstacles && ok; ++i) {
      bool placed = false;
      for (std::size_t t = 0; t < spec.max_retries; ++t) {
        Obstacle o;
        o.center = {rng.uniform(-spec.center_range, spec.center_range),
                    rng.uniform(-spec.center_range, spec.center_range)};
        o.radius = rng.uniform(spec.radius_lo, spec.radius_hi);
        const double sx = o.center[0] - spec.start[0];
        const double sy = o.center[1] - spec.start[1];
        if (std::sqrt(sx * sx + sy * sy) < o.radius + spec.start_clearance)
          continue;
        bool separated = true;
        for (const auto& other : env.obstacles) {
          const double dx = o.center[0] - other.center[0];
          const double dy = o.center[1] - other.center[1];
          if (std::sqrt(dx * dx + dy * dy) < min_sep) {
            separated = false;
            break;
          }
        }
        if (!separated) continue;
        env.obstacles.push_back(o);
        placed = true;
        break;
      }
      ok = placed;
    }
    if (ok) return env;
  }
  throw GenerationFailure("environment placement failed after retries");
}

std::vector<Point2> sample_free_space_points(const Environment& env,
                                             std::size_t n, RngStream rng) {
  std::vector<Point2> points;
  points.reserve(n);
  std::size_t rejected = 0;
  while (points.size() < n) {
    const Point2 p{rng.uniform(env.bounds.lo_x, env.bounds.hi_x),
                   rng.uniform(env.bounds.lo_y, env.bounds.hi_y)};
    if (env.collides(p)) {
      if (++rejected > 100 * (n + 100))
        throw GenerationFailure("free-space acceptance rate below 1%");
      continue;
    }
    points.push_back(p);
  }
  return points;
}

std::vector<State> sample_goals(std::size_t n_goals, RngStream rng) {
  if (n_goals < 1) throw std::invalid_argument("sample_goals: need n_goals >= 1");
  std::vector<State> goals;
  goals.reserve(n_goals);
  for (std::size_t i = 0; i < n_goals; ++i) {
    const bool top = rng.uniform01() < 0.5;
    const double s = rng.uniform(-9.0, 9.0);
    const Vec q = top ? Vec{s, 9.0} : Vec{9.0, s};
    goals.emplace_back(q, Vec{0.0, 0.0});
  }
  return goals;
}

bool success_metric(const Trajectory& traj, const Environment& env,
                    const Point2& goal, double radius) {
  const auto qn = traj.q(traj.n_states() - 1);
  const double dx = qn[0] - goal[0];
  const double dy = qn[1] - goal[1];
  if (std::sqrt(dx * dx + dy * dy) > radius) return false;
  for (std::size_t i = 0; i < traj.n_states(); ++i) {
    const auto q = traj.q(i);
    if (env.collides({q[0], q[1]})) return false;
  }
  return true;
}

ExpertGenResult generate_expert_trajectories(const Environment& env,
                                             const std::vector<State>& goals,
                                             const TimeGrid& grid,
                                             const ExpertGenConfig& cfg,
                                             RngStream rng) {
  ExpertGenResult result;
  for (std::size_t g = 0; g < goals.size(); ++g) {
    std::size_t found = 0;
    for (std::size_t attempt = 0;
         attempt <= cfg.retry_bound && found < cfg.trajectories_per_goal;
         ++attempt) {
      plan::PlanningProblem problem;
      problem.start = State(Vec{-9.0, -9.0}, Vec{0.0, 0.0});
      problem.config_goals = {goals[g]};
      problem.grid = grid;
      costs::Objective objective(costs::TaskMap::identity());
      objective.add_term({"obstacles", cfg.obstacle_weight,
                          costs::SphereObstacleTerm{env.obstacles,
                                                    cfg.obstacle_eps, false}});
      problem.objective = std::move(objective);

      plan::PlannerConfig pc = cfg.planner;
      pc.plans_per_goal = cfg.trajectories_per_goal - found;
      RngStream attempt_rng =
          rng.substream(g * 97 + attempt);
      const plan::MultiPlanResult plans =
          plan::multi_stochgpmp_plan(problem, pc, attempt_rng);
      for (const auto& mean : plans.means) {
        if (found >= cfg.trajectories_per_goal) break;
        if (success_metric(mean, env, {goals[g].q[0], goals[g].q[1]},
                           cfg.success_radius)) {
          result.trajectories.push_back({g, mean});
          ++found;
        }
      }
    }
    if (found < cfg.trajectories_per_goal) result.failed_goals.push_back(g);
  }
  return result;
}

// ---- Experiment II ----

GraspInsertScene default_grasp_insert_scene() {
  GraspInsertScene scene;
  scene.arm.link_lengths = {2.0, 2.0, 1.0};
  scene.arm.base = {0.0, 0.0};
  scene.q_start = {-1.2, -0.6, -0.3};
  scene.cube_pose = {3.2, -0.8, 0.35};
  scene.cube_half = 0.3;
  scene.cubby_pose = {1.2, 3.4, -1.5707963267948966};  // opening faces -y... +x axis rotated
  scene.cubby_width = 1.4;
  scene.cubby_depth = 1.6;
  scene.wall_thickness = 0.25;
  scene.fixed_obstacles = {{{3.4, 2.6}, 0.55}, {{-1.6, 2.4}, 0.55}};
  return scene;
}

std::vector<Obstacle> cubby_wall_obstacles(const GraspInsertScene& scene) {
  // Two walls parallel to the frame x axis at y = +-(width/2 + thickness/2),
  // from the closed back (x = -depth/2) to the opening (x = +depth/2).
  std::vector<Obstacle> out;
  const double r = scene.wall_thickness / 2.0;
  const double c = std::cos(scene.cubby_pose.theta);
  const double s = std::sin(scene.cubby_pose.theta);
  const double y_off = scene.cubby_width / 2.0 + r;
  const std::size_t n = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil(scene.cubby_depth / r)));
  for (int side = -1; side <= 1; side += 2) {
    for (std::size_t i = 0; i <= n; ++i) {
      const double lx = -scene.cubby_depth / 2.0 +
                        scene.cubby_depth * static_cast<double>(i) /
                            static_cast<double>(n);
      const double ly = side * y_off;
      out.push_back(Obstacle{{scene.cubby_pose.x + c * lx - s * ly,
                              scene.cubby_pose.y + s * lx + c * ly},
                             r});
    }
  }
  // closed back wall
  const std::size_t m = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil((scene.cubby_width + 2.0 * r) / r)));
  for (std::size_t i = 0; i <= m; ++i) {
    const double lx = -scene.cubby_depth / 2.0 - r;
    const double ly = -y_off + (2.0 * y_off) * static_cast<double>(i) /
                                   static_cast<double>(m);
    out.push_back(Obstacle{{scene.cubby_pose.x + c * lx - s * ly,
                            scene.cubby_pose.y + s * lx + c * ly},
                           r});
  }
  return out;
}

std::vector<Point2> sample_grasp_points(const GraspInsertScene& scene,
                                        std::size_t per_edge, double band,
                                        RngStream rng) {
  std::vector<Point2> out;
  out.reserve(4 * per_edge);
  const double c = std::cos(scene.cube_pose.theta);
  const double s = std::sin(scene.cube_pose.theta);
  const double h = scene.cube_half;
  for (int edge = 0; edge < 4; ++edge) {
    for (std::size_t i = 0; i < per_edge; ++i) {
      const double along = rng.uniform(-h, h);
      const double off = rng.uniform(0.0, band);
      double lx = 0.0, ly = 0.0;
      switch (edge) {
        case 0: lx = along; ly = h + off; break;
        case 1: lx = along; ly = -h - off; break;
        case 2: lx = h + off; ly = along; break;
        case 3: lx = -h - off; ly = along; break;
      }
      out.push_back({scene.cube_pose.x + c * lx - s * ly,
                     scene.cube_pose.y + s * lx + c * ly});
    }
  }
  return out;
}

std::vector<Trajectory> generate_insert_trajectories(
    const GraspInsertScene& scene, const InsertGenConfig& cfg, RngStream rng) {
  std::vector<Trajectory> out;
  const std::vector<Obstacle> walls = cubby_wall_obstacles(scene);
  std::vector<Obstacle> all = walls;
  all.insert(all.end(), scene.fixed_obstacles.begin(),
             scene.fixed_obstacles.end());
  const TimeGrid grid = build_time_grid(0.0, cfg.dt, cfg.n_steps);
  const double reach = scene.arm.reach();

  for (std::size_t i = 0; i < cfg.n_initial_points; ++i) {
    RngStream point_rng = rng.substream(i);
    // initial end-effector positions, collision-free and within reach
    Point2 p0{0.0, 0.0};
    bool found = false;
    for (int t = 0; t < 1000 && !found; ++t) {
      const double ang = point_rng.uniform(0.0, 6.283185307179586);
      const double rad = point_rng.uniform(0.3 * reach, 0.95 * reach);
      p0 = {scene.arm.base[0] + rad * std::cos(ang),
            scene.arm.base[1] + rad * std::sin(ang)};
      found = true;
      for (const auto& o : all) {
        const double dx = p0[0] - o.center[0];
        const double dy = p0[1] - o.center[1];
        if (std::sqrt(dx * dx + dy * dy) <= o.radius + 0.1) {
          found = false;
          break;
        }
      }
    }
    if (!found) continue;

    plan::PlanningProblem problem;
    problem.start = State(Vec{p0[0], p0[1]}, Vec{0.0, 0.0});
    problem.config_goals = {
        State(Vec{scene.cubby_pose.x, scene.cubby_pose.y}, Vec{0.0, 0.0})};
    problem.grid = grid;
    costs::Objective objective(costs::TaskMap::identity());
    objective.add_term({"obstacles", cfg.obstacle_weight,
                        costs::SphereObstacleTerm{all, cfg.obstacle_eps, false}});
    problem.objective = std::move(objective);

    plan::PlannerConfig pc = cfg.planner;
    RngStream plan_rng = point_rng.substream(1);
    const plan::PlanResult res = plan::stochgpmp_plan(problem, pc, plan_rng);

    // draw samples from the converged distribution, keep collision-free ones
    gp::GPPrior prior(pc.gp_config(grid), res.trajectory);
    RngStream sample_rng = point_rng.substream(2);
    const auto samples = prior.sample(cfg.samples_per_point, sample_rng);
    Environment wall_env;
    wall_env.obstacles = all;
    for (const auto& s : samples) {
      if (success_metric(s, wall_env,
                         {scene.cubby_pose.x, scene.cubby_pose.y}, 0.5))
        out.push_back(s);
    }
  }
  return out;
}

// ---- dataset files ----

namespace {

nlohmann::json env_to_json(const Environment& env) {
  nlohmann::json j;
  j["id"] = env.id;
  j["bounds"] = {env.bounds.lo_x, env.bounds.lo_y, env.bounds.hi_x,
                 env.bounds.hi_y};
  auto obs = nlohmann::json::array();
  for (const auto& o : env.obstacles)
    obs.push_back({o.center[0], o.center[1], o.radius});
  j["obstacles"] = std::move(obs);
  return j;
}

Environment env_from_json(const nlohmann::json& j) {
  Environment env;
  env.id = j.at("id").get<int>();
  const auto b = j.at("bounds").get<std::vector<double>>();
  env.bounds = {b[0], b[1], b[2], b[3]};
  for (const auto& o : j.at("obstacles"))
    env.obstacles.push_back(
        Obstacle{{o[0].get<double>(), o[1].get<double>()}, o[2].get<double>()});
  return env;
}

}  // namespace

void save_exp1_records(const std::string& dir, std::uint64_t seed,
                       const std::vector<Exp1EnvRecord>& records) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["seed"] = seed;
  manifest["n_environments"] = records.size();
  auto ids = nlohmann::json::array();
  for (const auto& r : records) ids.push_back(r.environment.id);
  manifest["environment_ids"] = std::move(ids);
  {
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }
  for (const auto& r : records) {
    nlohmann::json j;
    j["environment"] = env_to_json(r.environment);
    auto pts = nlohmann::json::array();
    for (const auto& p : r.free_points) pts.push_back({p[0], p[1]});
    j["free_points"] = std::move(pts);
    auto goals = nlohmann::json::array();
    for (const auto& g : r.goals) goals.push_back({g.q[0], g.q[1]});
    j["goals"] = std::move(goals);
    auto trajs = nlohmann::json::array();
    for (const auto& t : r.expert) {
      nlohmann::json tj;
      tj["goal_index"] = t.goal_index;
      tj["trajectory"] = nlohmann::json::parse(trajectory_to_json(t.traj));
      trajs.push_back(std::move(tj));
    }
    j["expert_trajectories"] = std::move(trajs);
    char name[32];
    std::snprintf(name, sizeof(name), "env_%04d.json", r.environment.id);
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    out << j.dump() << '\n';
  }
}

std::vector<Exp1EnvRecord> load_exp1_records(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream min(fs::path(dir) / "manifest.json");
  if (!min) throw std::runtime_error("missing manifest.json in " + dir);
  nlohmann::json manifest;
  min >> manifest;
  std::vector<Exp1EnvRecord> records;
  for (const auto& id : manifest.at("environment_ids")) {
    char name[32];
    std::snprintf(name, sizeof(name), "env_%04d.json", id.get<int>());
    std::ifstream in(fs::path(dir) / name);
    if (!in) throw std::runtime_error(std::string("missing ") + name);
    nlohmann::json j;
    in >> j;
    Exp1EnvRecord r;
    r.environment = env_from_json(j.at("environment"));
    for (const auto& p : j.at("free_points"))
      r.free_points.push_back({p[0].get<double>(), p[1].get<double>()});
    for (const auto& g : j.at("goals"))
      r.goals.emplace_back(Vec{g[0].get<double>(), g[1].get<double>()},
                           Vec{0.0, 0.0});
    for (const auto& t : j.at("expert_trajectories")) {
      ExpertTraj et;
      et.goal_index = t.at("goal_index").get<std::size_t>();
      et.traj = trajectory_from_json(t.at("trajectory").dump());
      r.expert.push_back(std::move(et));
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace mopt::env
