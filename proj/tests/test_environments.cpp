#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "mopt/environments.hpp"
#include "mopt/rng.hpp"

using namespace mopt;
using namespace mopt::env;

TEST_CASE("environment generation respects placement constraints") {
  const EnvGenSpec spec;
  RngStream rng(1);
  for (int id = 0; id < 50; ++id) {
    const Environment e = generate_environment(spec, id, rng.substream(id));
    REQUIRE(e.obstacles.size() == 3);
    for (const auto& o : e.obstacles) {
      CHECK(o.center[0] >= -7.0);
      CHECK(o.center[0] <= 7.0);
      CHECK(o.center[1] >= -7.0);
      CHECK(o.center[1] <= 7.0);
      CHECK(o.radius >= 1.0);
      CHECK(o.radius <= 2.0);
      // start cell kept free
      const double ds = std::hypot(o.center[0] + 9.0, o.center[1] + 9.0);
      CHECK(ds >= o.radius + spec.start_clearance - 1e-12);
    }
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j) {
        const double d = std::hypot(
            e.obstacles[i].center[0] - e.obstacles[j].center[0],
            e.obstacles[i].center[1] - e.obstacles[j].center[1]);
        CHECK(d >= 2.0 * spec.radius_hi - 1e-12);
      }
  }
}

TEST_CASE("environment generation is deterministic and fast") {
  const EnvGenSpec spec;
  RngStream rng(7);
  const Environment a = generate_environment(spec, 3, rng.substream(3));
  const Environment b = generate_environment(spec, 3, rng.substream(3));
  REQUIRE(a.obstacles.size() == b.obstacles.size());
  for (std::size_t i = 0; i < a.obstacles.size(); ++i) {
    CHECK(a.obstacles[i].center == b.obstacles[i].center);
    CHECK(a.obstacles[i].radius == b.obstacles[i].radius);
  }

  const auto t0 = std::chrono::steady_clock::now();
  for (int id = 0; id < 512; ++id)
    (void)generate_environment(spec, id, rng.substream(id));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(secs < 1.0);
}

TEST_CASE("free-space points avoid the obstacle discs") {
  const EnvGenSpec spec;
  RngStream rng(11);
  const Environment e = generate_environment(spec, 0, rng.substream(0));
  const auto pts = sample_free_space_points(e, 1024, rng.substream(1));
  CHECK(pts.size() == 1024);
  for (const auto& p : pts) {
    CHECK(e.bounds.contains(p));
    for (const auto& o : e.obstacles) {
      CHECK(std::hypot(p[0] - o.center[0], p[1] - o.center[1]) > o.radius);
    }
  }

  // empty obstacle list samples the plain box
  Environment empty;
  const auto plain = sample_free_space_points(empty, 256, rng.substream(2));
  CHECK(plain.size() == 256);
}

TEST_CASE("goals land on the top and right border segments") {
  RngStream rng(13);
  const auto goals = sample_goals(15, rng);
  CHECK(goals.size() == 15);
  for (const auto& g : goals) {
    const bool top = std::fabs(g.q[1] - 9.0) < 1e-12 && g.q[0] >= -9.0 &&
                     g.q[0] <= 9.0;
    const bool right = std::fabs(g.q[0] - 9.0) < 1e-12 && g.q[1] >= -9.0 &&
                       g.q[1] <= 9.0;
    CHECK((top || right));
    CHECK(g.qdot == Vec{0.0, 0.0});
  }
  const auto again = sample_goals(15, RngStream(13));
  for (std::size_t i = 0; i < goals.size(); ++i)
    CHECK(goals[i].q == again[i].q);
}

TEST_CASE("success metric checks the goal radius and collisions") {
  Environment e;
  e.obstacles = {{{0.0, 0.0}, 1.0}};

  // stationary trajectory at the goal in an empty world
  Environment empty;
  Trajectory stay(build_time_grid(0.0, 0.1, 4), 2);
  for (std::size_t i = 0; i < stay.n_states(); ++i) {
    stay.q(i)[0] = 3.0;
    stay.q(i)[1] = 3.0;
  }
  CHECK(success_metric(stay, empty, {3.0, 3.0}));
  CHECK(success_metric(stay, empty, {3.0, 4.4}, 1.5));
  CHECK_FALSE(success_metric(stay, empty, {3.0, 4.6}, 1.5));

  // straight line through the obstacle fails
  Trajectory through(build_time_grid(0.0, 0.1, 10), 2);
  for (std::size_t i = 0; i <= 10; ++i) {
    const double s = static_cast<double>(i) / 10.0;
    through.q(i)[0] = -3.0 + 6.0 * s;
    through.q(i)[1] = 0.0;
  }
  CHECK_FALSE(success_metric(through, e, {3.0, 0.0}));
}

TEST_CASE("expert generation returns only successful demonstrations") {
  EnvGenSpec spec;
  RngStream rng(17);
  const Environment e = generate_environment(spec, 0, rng.substream(0));
  const std::vector<State> goals = {State(Vec{5.0, 9.0}, Vec{0.0, 0.0}),
                                    State(Vec{9.0, 0.0}, Vec{0.0, 0.0})};
  ExpertGenConfig cfg;
  cfg.planner.iterations = 60;  // enough at this desk scale
  cfg.trajectories_per_goal = 2;
  const TimeGrid grid = build_time_grid(0.0, 0.02, 64);
  const ExpertGenResult result =
      generate_expert_trajectories(e, goals, grid, cfg, rng.substream(1));
  CHECK(result.failed_goals.empty());
  CHECK(result.trajectories.size() == 4);
  for (const auto& demo : result.trajectories) {
    const auto& goal = goals[demo.goal_index];
    CHECK(success_metric(demo.traj, e, {goal.q[0], goal.q[1]}));
  }
}

TEST_CASE("grasp points hug the cube edges") {
  const GraspInsertScene scene = default_grasp_insert_scene();
  RngStream rng(19);
  const auto pts = sample_grasp_points(scene, 50, 0.05, rng);
  CHECK(pts.size() == 200);
  const double c = std::cos(-scene.cube_pose.theta);
  const double s = std::sin(-scene.cube_pose.theta);
  for (const auto& p : pts) {
    const double dx = p[0] - scene.cube_pose.x;
    const double dy = p[1] - scene.cube_pose.y;
    const double lx = c * dx - s * dy;
    const double ly = s * dx + c * dy;
    const double h = scene.cube_half;
    // inside the band around the boundary, outside the cube interior
    CHECK(std::max(std::fabs(lx), std::fabs(ly)) >= h - 1e-9);
    CHECK(std::max(std::fabs(lx), std::fabs(ly)) <= h + 0.05 + 1e-9);
  }
}

TEST_CASE("cubby walls leave the opening clear") {
  const GraspInsertScene scene = default_grasp_insert_scene();
  const auto walls = cubby_wall_obstacles(scene);
  CHECK(walls.size() > 10);
  // the interior center and a point at the opening stay collision-free
  const Point2 center{scene.cubby_pose.x, scene.cubby_pose.y};
  const double c = std::cos(scene.cubby_pose.theta);
  const double s = std::sin(scene.cubby_pose.theta);
  const Point2 opening{scene.cubby_pose.x + c * (scene.cubby_depth / 2.0 + 0.3),
                       scene.cubby_pose.y + s * (scene.cubby_depth / 2.0 + 0.3)};
  for (const auto& o : walls) {
    CHECK(std::hypot(center[0] - o.center[0], center[1] - o.center[1]) >
          o.radius);
    CHECK(std::hypot(opening[0] - o.center[0], opening[1] - o.center[1]) >
          o.radius);
  }
}

TEST_CASE("insert trajectories end in the cubby without collisions") {
  GraspInsertScene scene = default_grasp_insert_scene();
  InsertGenConfig cfg;
  cfg.n_initial_points = 6;
  cfg.samples_per_point = 4;
  cfg.planner.iterations = 60;
  RngStream rng(23);
  const auto trajs = generate_insert_trajectories(scene, cfg, rng);
  CHECK(trajs.size() >= 8);  // most of 24 candidates should survive
  Environment wall_env;
  wall_env.obstacles = cubby_wall_obstacles(scene);
  for (const auto& o : scene.fixed_obstacles)
    wall_env.obstacles.push_back(o);
  for (const auto& t : trajs) {
    CHECK(success_metric(t, wall_env,
                         {scene.cubby_pose.x, scene.cubby_pose.y}, 0.5));
  }
}

TEST_CASE("exp1 records round-trip through the dataset files") {
  EnvGenSpec spec;
  RngStream rng(29);
  std::vector<Exp1EnvRecord> records;
  for (int id = 0; id < 3; ++id) {
    Exp1EnvRecord r;
    r.environment = generate_environment(spec, id, rng.substream(id));
    r.free_points = sample_free_space_points(r.environment, 16, rng.substream(100 + id));
    r.goals = sample_goals(4, rng.substream(200 + id));
    records.push_back(std::move(r));
  }
  const auto dir =
      (std::filesystem::temp_directory_path() / "mopt_exp1_data").string();
  std::filesystem::remove_all(dir);
  save_exp1_records(dir, 12345, records);
  const auto loaded = load_exp1_records(dir);
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].environment.id == records[i].environment.id);
    CHECK(loaded[i].free_points == records[i].free_points);
    CHECK(loaded[i].goals.size() == records[i].goals.size());
  }
  std::filesystem::remove_all(dir);
}
