#include "mopt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "mopt/csv.hpp"
#include "mopt/parallel.hpp"
#include "mopt/svg.hpp"

namespace mopt::bench {

namespace fs = std::filesystem;

// ---- reports ----

std::vector<RateRow> Report::rates() const {
  std::map<std::pair<std::string, std::size_t>,
           std::map<int, std::pair<std::size_t, std::size_t>>>
      by_key;  // (method, budget) -> env -> (successes, trials)
  for (const auto& r : records) {
    auto& cell = by_key[{r.method, r.budget}][r.env_id];
    cell.first += r.success ? 1 : 0;
    cell.second += 1;
  }
  std::vector<RateRow> out;
  for (const auto& [key, envs] : by_key) {
    RateRow row;
    row.method = key.first;
    row.budget = key.second;
    double env_mean = 0.0;
    for (const auto& [env_id, cell] : envs) {
      row.successes += cell.first;
      row.trials += cell.second;
      env_mean += static_cast<double>(cell.first) /
                  static_cast<double>(cell.second);
    }
    row.pooled = static_cast<double>(row.successes) /
                 static_cast<double>(row.trials);
    row.env_mean = env_mean / static_cast<double>(envs.size());
    out.push_back(row);
  }
  return out;
}

double Report::rate_of(const std::string& method, std::size_t budget) const {
  for (const auto& row : rates())
    if (row.method == method && row.budget == budget) return row.pooled;
  throw std::invalid_argument("report: no rate for " + method);
}

void write_report(const std::string& dir, const Report& report) {
  fs::create_directories(dir);
  {
    csv::Writer w((fs::path(dir) / "report.csv").string());
    w.row({"method", "budget", "success_rate_pooled", "success_rate_env_mean",
           "successes", "trials"});
    for (const auto& row : report.rates()) {
      w.row({row.method, std::to_string(row.budget), csv::num(row.pooled),
             csv::num(row.env_mean), std::to_string(row.successes),
             std::to_string(row.trials)});
    }
  }
  {
    csv::Writer w((fs::path(dir) / "records.csv").string());
    w.row({"method", "budget", "env_id", "goal_id", "success", "final_cost",
           "wall_time_s"});
    for (const auto& r : report.records) {
      w.row({r.method, std::to_string(r.budget), std::to_string(r.env_id),
             std::to_string(r.goal_id), r.success ? "1" : "0",
             csv::num(r.final_cost), csv::num(r.wall_time_s)});
    }
  }
}

Report read_records_csv(const std::string& path) {
  const auto rows = csv::read(path);
  if (rows.empty()) throw std::runtime_error("empty records csv");
  Report report;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    RunRecord rec;
    rec.method = r.at(0);
    rec.budget = std::stoul(r.at(1));
    rec.env_id = std::stoi(r.at(2));
    rec.goal_id = std::stoul(r.at(3));
    rec.success = r.at(4) == "1";
    rec.final_cost = std::stod(r.at(5));
    rec.wall_time_s = std::stod(r.at(6));
    report.records.push_back(std::move(rec));
  }
  return report;
}

// ---- experiment I data ----

std::vector<int> generate_exp1_data(const Exp1DataConfig& cfg,
                                    const std::string& out_dir) {
  std::vector<int> failures;
  RngStream root(cfg.seed);
  const auto make_split = [&](const std::string& name, std::size_t count,
                              int id_base, RngStream split_rng) {
    std::vector<env::Exp1EnvRecord> records(count);
    std::vector<std::vector<std::size_t>> failed(count);
    parallel_for(count, [&](std::size_t i) {
      const int id = id_base + static_cast<int>(i);
      RngStream env_rng = split_rng.substream(static_cast<std::uint64_t>(id));
      env::Exp1EnvRecord rec;
      rec.environment =
          env::generate_environment(cfg.env_spec, id, env_rng.substream(0));
      rec.free_points = env::sample_free_space_points(
          rec.environment, cfg.free_points_per_env, env_rng.substream(1));
      rec.goals = env::sample_goals(cfg.goals_per_env, env_rng.substream(2));
      if (cfg.with_expert_trajectories) {
        const env::ExpertGenResult gen = env::generate_expert_trajectories(
            rec.environment, rec.goals, cfg.grid, cfg.expert,
            env_rng.substream(3));
        rec.expert = gen.trajectories;
        failed[i] = gen.failed_goals;
      }
      records[i] = std::move(rec);
    });
    env::save_exp1_records((fs::path(out_dir) / name).string(), cfg.seed,
                           records);
    for (std::size_t i = 0; i < count; ++i)
      if (!failed[i].empty()) failures.push_back(id_base + static_cast<int>(i));
  };
  make_split("train", cfg.train_envs, 0, root.substream(1));
  make_split("eval", cfg.eval_envs, 1000, root.substream(2));
  return failures;
}

namespace {

void append_obstacle_rows(const env::Exp1EnvRecord& rec,
                          const std::vector<kin::Point2>& points,
                          Matrix& rows, std::size_t& at) {
  const Vec ctx = ebm::obstacle_context(rec.environment.obstacles);
  for (const auto& p : points) {
    double* r = rows.row(at++);
    r[0] = p[0];
    r[1] = p[1];
    std::copy(ctx.begin(), ctx.end(), r + 2);
  }
}

}  // namespace

ebm::Dataset obstacle_dataset_from_points(
    const std::vector<env::Exp1EnvRecord>& records) {
  std::size_t total = 0;
  for (const auto& r : records) total += r.free_points.size();
  if (total == 0) throw std::invalid_argument("no free-space points in records");
  const std::size_t ctx_dim = 2 * records.front().environment.obstacles.size();
  ebm::Dataset data;
  data.state_dim = 2;
  data.rows.resize(total, 2 + ctx_dim);
  std::size_t at = 0;
  for (const auto& r : records) append_obstacle_rows(r, r.free_points, data.rows, at);
  return data;
}

ebm::Dataset obstacle_dataset_from_experts(
    const std::vector<env::Exp1EnvRecord>& records) {
  std::size_t total = 0;
  for (const auto& r : records)
    for (const auto& demo : r.expert) total += demo.traj.n_states();
  if (total == 0) throw std::invalid_argument("no expert states in records");
  const std::size_t ctx_dim = 2 * records.front().environment.obstacles.size();
  ebm::Dataset data;
  data.state_dim = 2;
  data.rows.resize(total, 2 + ctx_dim);
  std::size_t at = 0;
  for (const auto& r : records) {
    std::vector<kin::Point2> pts;
    for (const auto& demo : r.expert)
      for (std::size_t i = 0; i < demo.traj.n_states(); ++i)
        pts.push_back({demo.traj.q(i)[0], demo.traj.q(i)[1]});
    append_obstacle_rows(r, pts, data.rows, at);
  }
  return data;
}

bc::BcDataset bc_dataset_from_experts(
    const std::vector<env::Exp1EnvRecord>& records) {
  std::size_t total = 0;
  for (const auto& r : records)
    for (const auto& demo : r.expert) total += demo.traj.n_states();
  if (total == 0) throw std::invalid_argument("no expert states in records");
  const std::size_t ctx_dim = 2 * records.front().environment.obstacles.size();
  bc::BcDataset data;
  data.config_dim = 2;
  data.inputs.resize(total, 2 + ctx_dim + 2);
  data.targets.resize(total, 2);
  std::size_t at = 0;
  for (const auto& r : records) {
    const Vec ctx = ebm::obstacle_context(r.environment.obstacles);
    for (const auto& demo : r.expert) {
      const auto& goal = r.goals.at(demo.goal_index);
      for (std::size_t i = 0; i < demo.traj.n_states(); ++i) {
        double* in = data.inputs.row(at);
        in[0] = demo.traj.q(i)[0];
        in[1] = demo.traj.q(i)[1];
        std::copy(ctx.begin(), ctx.end(), in + 2);
        in[2 + ctx_dim] = goal.q[0];
        in[3 + ctx_dim] = goal.q[1];
        data.targets(at, 0) = demo.traj.qdot(i)[0];
        data.targets(at, 1) = demo.traj.qdot(i)[1];
        ++at;
      }
    }
  }
  return data;
}

// ---- experiment I evaluation ----

Report run_exp1_eval(const std::vector<env::Exp1EnvRecord>& eval_records,
                     const std::vector<EvalMethod>& methods,
                     const Exp1EvalConfig& cfg) {
  std::size_t max_budget = 0;
  for (std::size_t b : cfg.budgets) max_budget = std::max(max_budget, b);

  struct Slot {
    std::vector<RunRecord> records;
  };
  std::vector<Slot> slots(methods.size() * eval_records.size());
  RngStream root(cfg.seed);

  parallel_for(slots.size(), [&](std::size_t slot_index) {
    const std::size_t mi = slot_index / eval_records.size();
    const std::size_t ei = slot_index % eval_records.size();
    const EvalMethod& method = methods[mi];
    const env::Exp1EnvRecord& rec = eval_records[ei];
    const Vec ctx = ebm::obstacle_context(rec.environment.obstacles);
    RngStream env_rng =
        root.substream(mi).substream(static_cast<std::uint64_t>(rec.environment.id));

    for (std::size_t gi = 0; gi < rec.goals.size(); ++gi) {
      const State& goal = rec.goals[gi];
      const kin::Point2 goal_pt{goal.q[0], goal.q[1]};
      const auto t0 = std::chrono::steady_clock::now();

      if (method.policy != nullptr) {
        Vec bc_ctx = ctx;
        bc_ctx.push_back(goal.q[0]);
        bc_ctx.push_back(goal.q[1]);
        const Trajectory rolled = bc::rollout_bc(
            *method.policy, Vec{-9.0, -9.0}, bc_ctx, cfg.grid.n_steps,
            cfg.grid.dt);
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        RunRecord r;
        r.method = method.name;
        r.budget = 0;
        r.env_id = rec.environment.id;
        r.goal_id = gi;
        r.success = env::success_metric(rolled, rec.environment, goal_pt,
                                        cfg.success_radius);
        r.final_cost = 0.0;
        r.wall_time_s = secs;
        slots[slot_index].records.push_back(std::move(r));
        continue;
      }

      plan::PlanningProblem problem;
      problem.start = State(Vec{-9.0, -9.0}, Vec{0.0, 0.0});
      problem.config_goals = {goal};
      problem.grid = cfg.grid;
      costs::Objective objective(costs::TaskMap::identity());
      objective.add_term(
          {"ebm", cfg.ebm_weight,
           costs::EbmFactorTerm{
               std::make_shared<ebm::PointEnergy>(method.model, ctx)}});
      problem.objective = std::move(objective);

      plan::PlannerConfig pc = cfg.planner;
      pc.iterations = max_budget;
      pc.convergence_tol = 0.0;
      RngStream plan_rng = env_rng.substream(gi);
      const plan::PlanResult res = plan::stochgpmp_plan(problem, pc, plan_rng);
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count();

      const Trajectory init = gp::const_velocity_mean(problem.start, goal,
                                                      cfg.grid);
      for (const std::size_t budget : cfg.budgets) {
        const Trajectory* mean = &init;
        Trajectory at_budget;
        if (budget > 0 && !res.mean_history.empty()) {
          const std::size_t idx =
              std::min(budget, res.mean_history.size()) - 1;
          at_budget = Trajectory(cfg.grid, 2, res.mean_history[idx]);
          mean = &at_budget;
        }
        RunRecord r;
        r.method = method.name;
        r.budget = budget;
        r.env_id = rec.environment.id;
        r.goal_id = gi;
        r.success = env::success_metric(*mean, rec.environment, goal_pt,
                                        cfg.success_radius);
        r.final_cost = problem.objective.evaluate(*mean);
        r.wall_time_s = secs;
        slots[slot_index].records.push_back(std::move(r));
      }
    }
  });

  Report report;
  for (const auto& slot : slots)
    report.records.insert(report.records.end(), slot.records.begin(),
                          slot.records.end());
  return report;
}

// ---- experiment II ----

namespace {

ebm::Dataset object_centric_dataset(const std::vector<kin::Point2>& world_points,
                                    const ebm::Frame2& frame) {
  ebm::Dataset data;
  data.state_dim = 2;
  data.rows.resize(world_points.size(), 2);
  const double c = std::cos(-frame.theta);
  const double s = std::sin(-frame.theta);
  for (std::size_t i = 0; i < world_points.size(); ++i) {
    const double dx = world_points[i][0] - frame.x;
    const double dy = world_points[i][1] - frame.y;
    data.rows(i, 0) = c * dx - s * dy;
    data.rows(i, 1) = s * dx + c * dy;
  }
  return data;
}

costs::Objective exp2_base_objective(const Exp2Config& cfg) {
  std::vector<costs::Obstacle> all = env::cubby_wall_obstacles(cfg.scene);
  all.insert(all.end(), cfg.scene.fixed_obstacles.begin(),
             cfg.scene.fixed_obstacles.end());
  costs::Objective obj(costs::TaskMap::arm(cfg.scene.arm, 0.3));
  obj.add_term({"obstacles", cfg.obstacle_weight,
                costs::SphereObstacleTerm{all, cfg.obstacle_eps, false}});
  const std::size_t n = cfg.scene.arm.n_joints();
  obj.add_term({"joint_limits", cfg.joint_limit_weight,
                costs::JointLimitTerm{Vec(n, -3.0), Vec(n, 3.0)}});
  return obj;
}

std::size_t grasp_step_index(const Exp2Config& cfg) {
  return static_cast<std::size_t>(
      cfg.grasp_step_fraction * static_cast<double>(cfg.n_steps));
}

// demonstrations for the exp2 behavioral-cloning baseline: plan with the
// potential-based objective on randomized cube poses, keep successes
bc::BcDataset exp2_bc_demos(const Exp2Config& cfg, RngStream rng) {
  bc::BcDataset data;
  data.config_dim = cfg.scene.arm.n_joints();
  const std::size_t d = data.config_dim;
  std::vector<Vec> inputs;
  std::vector<Vec> targets;
  const TimeGrid grid = build_time_grid(0.0, cfg.dt, cfg.n_steps);

  std::size_t made = 0;
  for (std::size_t attempt = 0;
       attempt < 4 * cfg.bc_demo_count && made < cfg.bc_demo_count; ++attempt) {
    RngStream demo_rng = rng.substream(attempt);
    const Exp2Instance inst = sample_exp2_instance(cfg.scene, demo_rng);

    plan::PlanningProblem problem;
    problem.arm = cfg.scene.arm;
    problem.start = State(cfg.scene.q_start, Vec(d, 0.0));
    problem.task_goals = {{cfg.scene.cubby_pose.x, cfg.scene.cubby_pose.y}};
    problem.grid = grid;
    costs::Objective obj = exp2_base_objective(cfg);
    obj.add_term({"grasp_potential", cfg.grasp_potential_weight,
                  costs::PosePotentialTerm{
                      inst.grasp_target,
                      costs::StepSelect::at(grasp_step_index(cfg))}});
    obj.add_term({"insert_potential", cfg.insert_potential_weight,
                  costs::PosePotentialTerm{
                      {cfg.scene.cubby_pose.x, cfg.scene.cubby_pose.y},
                      costs::StepSelect::final()}});
    problem.objective = std::move(obj);

    plan::PlannerConfig pc = cfg.planner;
    pc.iterations = 150;
    RngStream plan_rng = demo_rng.substream(1);
    plan::PlanResult res;
    try {
      res = plan::stochgpmp_plan(problem, pc, plan_rng);
    } catch (const kin::IkFailure&) {
      continue;
    }
    if (!exp2_success(res.trajectory, cfg, inst.cube_pose).ok()) continue;
    ++made;
    const Vec ctx{inst.grasp_target[0], inst.grasp_target[1],
                  cfg.scene.cubby_pose.x, cfg.scene.cubby_pose.y};
    for (std::size_t i = 0; i < res.trajectory.n_states(); ++i) {
      Vec in(res.trajectory.q(i).begin(), res.trajectory.q(i).end());
      in.insert(in.end(), ctx.begin(), ctx.end());
      inputs.push_back(std::move(in));
      targets.emplace_back(res.trajectory.qdot(i).begin(),
                           res.trajectory.qdot(i).end());
    }
  }
  if (inputs.empty())
    throw env::GenerationFailure("exp2: no successful bc demonstrations");
  data.inputs.resize(inputs.size(), inputs.front().size());
  data.targets.resize(inputs.size(), d);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::copy(inputs[i].begin(), inputs[i].end(), data.inputs.row(i));
    std::copy(targets[i].begin(), targets[i].end(), data.targets.row(i));
  }
  return data;
}

}  // namespace

Exp2Instance sample_exp2_instance(const env::GraspInsertScene& scene,
                                  RngStream& rng) {
  Exp2Instance inst;
  const double reach = scene.arm.reach();
  std::vector<costs::Obstacle> blocked = env::cubby_wall_obstacles(scene);
  blocked.insert(blocked.end(), scene.fixed_obstacles.begin(),
                 scene.fixed_obstacles.end());
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double ang = rng.uniform(-1.3, 0.4);  // lower-right workspace slice
    const double rad = rng.uniform(0.5 * reach, 0.82 * reach);
    const double x = scene.arm.base[0] + rad * std::cos(ang);
    const double y = scene.arm.base[1] + rad * std::sin(ang);
    bool clear = true;
    for (const auto& o : blocked) {
      if (std::hypot(x - o.center[0], y - o.center[1]) <
          o.radius + 2.0 * scene.cube_half + 0.2) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    inst.cube_pose = {x, y, rng.uniform(-0.6, 0.6)};
    break;
  }
  // random grasp target on the cube boundary for the potential baselines
  const double c = std::cos(inst.cube_pose.theta);
  const double s = std::sin(inst.cube_pose.theta);
  const int edge = static_cast<int>(rng.next_u64() % 4);
  const double along = rng.uniform(-scene.cube_half, scene.cube_half);
  double lx = 0.0, ly = 0.0;
  switch (edge) {
    case 0: lx = along; ly = scene.cube_half; break;
    case 1: lx = along; ly = -scene.cube_half; break;
    case 2: lx = scene.cube_half; ly = along; break;
    case 3: lx = -scene.cube_half; ly = along; break;
  }
  inst.grasp_target = {inst.cube_pose.x + c * lx - s * ly,
                       inst.cube_pose.y + s * lx + c * ly};
  return inst;
}

Exp2Success exp2_success(const Trajectory& traj, const Exp2Config& cfg,
                         const ebm::Frame2& cube_pose) {
  Exp2Success result;
  result.collision_free = true;
  const auto& scene = cfg.scene;
  std::vector<costs::Obstacle> all = env::cubby_wall_obstacles(scene);
  all.insert(all.end(), scene.fixed_obstacles.begin(),
             scene.fixed_obstacles.end());
  const double band = cfg.success_band * scene.arm.reach();
  const double cc = std::cos(-cube_pose.theta);
  const double cs = std::sin(-cube_pose.theta);
  const double bc_ = std::cos(-scene.cubby_pose.theta);
  const double bs = std::sin(-scene.cubby_pose.theta);

  for (std::size_t i = 0; i < traj.n_states(); ++i) {
    const Vec q(traj.q(i).begin(), traj.q(i).end());
    const kin::FkResult chain = kin::fk(scene.arm, q);
    const auto& ee = chain.joints.back();

    // grasp: signed distance of the end effector to the cube boundary
    {
      const double dx = ee[0] - cube_pose.x;
      const double dy = ee[1] - cube_pose.y;
      const double lx = cc * dx - cs * dy;
      const double ly = cs * dx + cc * dy;
      const double ax = std::fabs(lx) - scene.cube_half;
      const double ay = std::fabs(ly) - scene.cube_half;
      const double outside =
          std::hypot(std::max(ax, 0.0), std::max(ay, 0.0));
      const double inside = std::min(std::max(ax, ay), 0.0);
      if (std::fabs(outside + inside) <= band) result.grasped = true;
    }

    // collisions for all body points
    const kin::BodyPoints bp = kin::body_points_indexed(scene.arm, chain, 0.2);
    for (const auto& p : bp.points) {
      for (const auto& o : all) {
        if (std::hypot(p[0] - o.center[0], p[1] - o.center[1]) <= o.radius) {
          result.collision_free = false;
          break;
        }
      }
      if (!result.collision_free) break;
    }

    if (i == traj.n_states() - 1) {
      const double dx = ee[0] - scene.cubby_pose.x;
      const double dy = ee[1] - scene.cubby_pose.y;
      const double lx = bc_ * dx - bs * dy;
      const double ly = bs * dx + bc_ * dy;
      result.inserted = std::fabs(lx) <= scene.cubby_depth / 2.0 &&
                        std::fabs(ly) <= scene.cubby_width / 2.0;
    }
  }
  return result;
}

Exp2Models train_exp2_models(const Exp2Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  RngStream root(cfg.seed);
  Exp2Models models;

  // grasp EBM on cube-frame edge-band points
  {
    const auto pts = env::sample_grasp_points(cfg.scene, cfg.grasp_points_per_edge,
                                              cfg.grasp_band, root.substream(1));
    ebm::Dataset data = object_centric_dataset(pts, cfg.scene.cube_pose);
    ebm::TrainConfig tc = cfg.grasp_train;
    tc.seed = root.substream(2).root_seed();
    const ebm::TrainResult res =
        ebm::train_ebm(data, ebm::Conditioning::object_centric, tc);
    models.grasp = std::make_shared<ebm::EnergyModel>(res.model);
    ebm::save_energy_model(res.model, (fs::path(out_dir) / "grasp.json").string());
  }

  // insert EBM on cubby-frame approach-trajectory states
  {
    const auto trajs =
        env::generate_insert_trajectories(cfg.scene, cfg.insert, root.substream(3));
    std::vector<kin::Point2> pts;
    for (const auto& t : trajs)
      for (std::size_t i = 0; i < t.n_states(); ++i)
        pts.push_back({t.q(i)[0], t.q(i)[1]});
    ebm::Dataset data = object_centric_dataset(pts, cfg.scene.cubby_pose);
    ebm::TrainConfig tc = cfg.insert_train;
    tc.seed = root.substream(4).root_seed();
    const ebm::TrainResult res =
        ebm::train_ebm(data, ebm::Conditioning::object_centric, tc);
    models.insert = std::make_shared<ebm::EnergyModel>(res.model);
    ebm::save_energy_model(res.model,
                           (fs::path(out_dir) / "insert.json").string());
  }

  // behavioral-cloning baseline on planner demonstrations
  {
    const bc::BcDataset demos = exp2_bc_demos(cfg, root.substream(5));
    bc::BcTrainConfig tc = cfg.bc_train;
    tc.seed = root.substream(6).root_seed();
    const bc::BcTrainResult res = bc::train_bc(demos, tc);
    models.policy = std::make_shared<bc::BcPolicy>(res.policy);
    bc::save_bc_policy(res.policy, (fs::path(out_dir) / "bc.json").string());
  }
  return models;
}

Exp2Models load_exp2_models(const std::string& dir) {
  Exp2Models models;
  models.grasp = std::make_shared<ebm::EnergyModel>(
      ebm::load_energy_model((fs::path(dir) / "grasp.json").string()));
  models.insert = std::make_shared<ebm::EnergyModel>(
      ebm::load_energy_model((fs::path(dir) / "insert.json").string()));
  models.policy = std::make_shared<bc::BcPolicy>(
      bc::load_bc_policy((fs::path(dir) / "bc.json").string()));
  return models;
}

Report run_exp2_eval(const Exp2Config& cfg, const Exp2Models& models) {
  std::size_t max_budget = 0;
  for (std::size_t b : cfg.budgets) max_budget = std::max(max_budget, b);
  const TimeGrid grid = build_time_grid(0.0, cfg.dt, cfg.n_steps);
  const std::size_t d = cfg.scene.arm.n_joints();

  struct Slot {
    std::vector<RunRecord> records;
  };
  std::vector<Slot> slots(cfg.repetitions * cfg.instances);
  RngStream root(cfg.seed);

  parallel_for(slots.size(), [&](std::size_t slot_index) {
    const std::size_t rep = slot_index / cfg.instances;
    const std::size_t inst_i = slot_index % cfg.instances;
    RngStream inst_rng = root.substream(7).substream(rep).substream(inst_i);
    const Exp2Instance inst = sample_exp2_instance(cfg.scene, inst_rng);

    const std::vector<std::string> method_names = {"gauss-potential",
                                                   "bc-warm-start", "ebm"};
    for (std::size_t mi = 0; mi < method_names.size(); ++mi) {
      const std::string& name = method_names[mi];
      const auto t0 = std::chrono::steady_clock::now();

      plan::PlanningProblem problem;
      problem.arm = cfg.scene.arm;
      problem.start = State(cfg.scene.q_start, Vec(d, 0.0));
      problem.task_goals = {{cfg.scene.cubby_pose.x, cfg.scene.cubby_pose.y}};
      problem.grid = grid;
      costs::Objective obj = exp2_base_objective(cfg);
      if (name == "ebm") {
        obj.add_term(
            {"ebm", cfg.ebm_weight,
             costs::EbmFactorTerm{std::make_shared<ebm::ComposedEnergy>(
                 std::vector<ebm::ComposedEnergy::Factor>{
                     {models.grasp, ebm::frame_context(inst.cube_pose), 1.0},
                     {models.insert,
                      ebm::frame_context(cfg.scene.cubby_pose), 1.0}})}});
      } else {
        obj.add_term({"grasp_potential", cfg.grasp_potential_weight,
                      costs::PosePotentialTerm{
                          inst.grasp_target,
                          costs::StepSelect::at(grasp_step_index(cfg))}});
        obj.add_term({"insert_potential", cfg.insert_potential_weight,
                      costs::PosePotentialTerm{
                          {cfg.scene.cubby_pose.x, cfg.scene.cubby_pose.y},
                          costs::StepSelect::final()}});
      }
      problem.objective = std::move(obj);
      if (name == "bc-warm-start") {
        const Vec ctx{inst.grasp_target[0], inst.grasp_target[1],
                      cfg.scene.cubby_pose.x, cfg.scene.cubby_pose.y};
        problem.init_mean = bc::rollout_bc(*models.policy, cfg.scene.q_start,
                                           ctx, cfg.n_steps, cfg.dt);
      }

      plan::PlannerConfig pc = cfg.planner;
      pc.iterations = max_budget;
      pc.convergence_tol = 0.0;
      RngStream plan_rng = inst_rng.substream(10 + mi);
      plan::PlanResult res;
      bool failed = false;
      try {
        res = plan::stochgpmp_plan(problem, pc, plan_rng);
      } catch (const std::exception&) {
        failed = true;
      }
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count();

      for (const std::size_t budget : cfg.budgets) {
        RunRecord r;
        r.method = name;
        r.budget = budget;
        r.env_id = static_cast<int>(inst_i);
        r.goal_id = rep;
        r.wall_time_s = secs;
        if (!failed && !res.mean_history.empty()) {
          const std::size_t idx = std::min(budget, res.mean_history.size()) - 1;
          const Trajectory mean(grid, d, res.mean_history[idx]);
          r.success = exp2_success(mean, cfg, inst.cube_pose).ok();
          r.final_cost = problem.objective.evaluate(mean);
        }
        slots[slot_index].records.push_back(std::move(r));
      }
    }
  });

  Report report;
  for (const auto& slot : slots)
    report.records.insert(report.records.end(), slot.records.begin(),
                          slot.records.end());
  return report;
}

// ---- plots ----

void plot_success_curves(const Report& report, const std::string& path) {
  const auto rates = report.rates();
  std::set<std::string> methods;
  std::size_t max_budget = 1;
  for (const auto& r : rates) {
    methods.insert(r.method);
    max_budget = std::max(max_budget, r.budget);
  }
  svg::Canvas canvas(-0.12 * static_cast<double>(max_budget), -0.18,
                     1.05 * static_cast<double>(max_budget), 1.1, 640);
  canvas.line(0, 0, static_cast<double>(max_budget), 0, "#333", 1.0);
  canvas.line(0, 0, 0, 1.0, "#333", 1.0);
  for (double y = 0.25; y <= 1.0; y += 0.25) {
    canvas.line(0, y, static_cast<double>(max_budget), y, "#ddd", 0.5);
    canvas.text(-0.11 * static_cast<double>(max_budget), y,
                csv::num(y).substr(0, 4));
  }
  const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#9467bd", "#ff7f0e"};
  std::size_t ci = 0;
  double label_y = 1.06;
  for (const auto& m : methods) {
    std::vector<std::array<double, 2>> pts;
    for (const auto& r : rates)
      if (r.method == m)
        pts.push_back({static_cast<double>(r.budget), r.pooled});
    std::sort(pts.begin(), pts.end());
    const std::string color = palette[ci++ % palette.size()];
    if (pts.size() > 1) canvas.polyline(pts, color, 2.0);
    for (const auto& p : pts) canvas.circle(p[0], p[1], 0.012 * max_budget, color);
    canvas.text(0.02 * max_budget, label_y, m);
    canvas.circle(0.0, label_y + 0.01, 0.01 * max_budget, color);
    label_y -= 0.07;
  }
  canvas.text(0.4 * static_cast<double>(max_budget), -0.12,
              "optimization iterations");
  canvas.save(path);
}

void plot_env_overlay(const env::Exp1EnvRecord& record,
                      const std::vector<Trajectory>& trajectories,
                      const std::string& path) {
  const auto& b = record.environment.bounds;
  svg::Canvas canvas(b.lo_x, b.lo_y, b.hi_x, b.hi_y, 640);
  for (const auto& o : record.environment.obstacles)
    canvas.circle(o.center[0], o.center[1], o.radius, "#444", 0.8);
  for (const auto& g : record.goals)
    canvas.circle(g.q[0], g.q[1], 0.18, "#2ca02c");
  canvas.circle(-9.0, -9.0, 0.2, "#d62728");
  const std::vector<std::string> palette = {"#1f77b4", "#ff7f0e", "#9467bd"};
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 0; i < trajectories[t].n_states(); ++i)
      pts.push_back({trajectories[t].q(i)[0], trajectories[t].q(i)[1]});
    canvas.polyline(pts, palette[t % palette.size()], 1.5, 0.9);
  }
  canvas.save(path);
}

void plot_energy_heatmap(const ebm::EnergyModel& model, const Vec& context,
                         double lo, double hi, std::size_t resolution,
                         const std::vector<Trajectory>& overlays,
                         const std::string& path) {
  const double cell = (hi - lo) / static_cast<double>(resolution);
  Matrix rows(resolution * resolution, model.layout_dim());
  std::size_t at = 0;
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix, ++at) {
      const double x = lo + (static_cast<double>(ix) + 0.5) * cell;
      const double y = lo + (static_cast<double>(iy) + 0.5) * cell;
      const Vec row = model.assemble({x, y}, context);
      std::copy(row.begin(), row.end(), rows.row(at));
    }
  }
  const Vec e = model.energy_rows(rows);
  double emin = e[0], emax = e[0];
  for (double v : e) {
    emin = std::min(emin, v);
    emax = std::max(emax, v);
  }
  const double span = emax - emin > 1e-12 ? emax - emin : 1.0;

  svg::Canvas canvas(lo, lo, hi, hi, 640);
  at = 0;
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix, ++at) {
      const double x = lo + static_cast<double>(ix) * cell;
      const double y = lo + static_cast<double>(iy) * cell;
      // low energy bright
      canvas.rect(x, y, cell * 1.02, cell * 1.02,
                  svg::heat_color(1.0 - (e[at] - emin) / span));
    }
  }
  for (std::size_t t = 0; t < overlays.size(); ++t) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 0; i < overlays[t].n_states(); ++i)
      pts.push_back({overlays[t].q(i)[0], overlays[t].q(i)[1]});
    canvas.polyline(pts, "#1f77b4", 1.5, 0.95);
  }
  canvas.save(path);
}

}  // namespace mopt::bench
