// Command-line harness: dataset generation, model training, planning,
// evaluation sweeps, and plot emission.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mopt/bench.hpp"
#include "mopt/csv.hpp"
#include "mopt/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mopt;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  json j;
  in >> j;
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_planner_config(const json& j, plan::PlannerConfig& pc) {
  maybe(j, "temperature", pc.temperature);
  maybe(j, "step_size", pc.step_size);
  maybe(j, "num_samples", pc.num_samples);
  maybe(j, "iterations", pc.iterations);
  maybe(j, "sigma_start", pc.sigma_start);
  maybe(j, "sigma_goal", pc.sigma_goal);
  maybe(j, "sigma_gp", pc.sigma_gp);
  maybe(j, "init_inflation", pc.init_inflation);
  maybe(j, "plans_per_goal", pc.plans_per_goal);
  if (j.contains("alpha_mode")) {
    const std::string mode = j.at("alpha_mode").get<std::string>();
    if (mode == "full") pc.alpha_mode = plan::AlphaMode::full;
    else if (mode == "dynamics") pc.alpha_mode = plan::AlphaMode::dynamics;
    else if (mode == "none") pc.alpha_mode = plan::AlphaMode::none;
    else throw std::runtime_error("unknown alpha_mode " + mode);
  }
}

void apply_train_config(const json& j, ebm::TrainConfig& tc) {
  maybe(j, "batch", tc.batch);
  maybe(j, "iters", tc.iters);
  maybe(j, "lr", tc.lr);
  maybe(j, "dsm_sigma", tc.dsm_sigma);
  maybe(j, "dsm_beta", tc.dsm_beta);
  maybe(j, "lambda_reg", tc.lambda_reg);
  maybe(j, "langevin_steps", tc.langevin_steps);
  maybe(j, "langevin_step_size", tc.langevin_step_size);
  maybe(j, "hidden", tc.hidden);
  maybe(j, "seed", tc.seed);
  if (j.contains("negatives")) {
    const std::string neg = j.at("negatives").get<std::string>();
    tc.negatives = neg == "langevin" ? ebm::NegativeSampler::langevin
                                     : ebm::NegativeSampler::uniform;
  }
}

bench::Exp2Config exp2_config_from_json(const json& j, std::uint64_t seed) {
  bench::Exp2Config cfg;
  cfg.seed = seed;
  maybe(j, "grasp_points_per_edge", cfg.grasp_points_per_edge);
  maybe(j, "grasp_band", cfg.grasp_band);
  maybe(j, "bc_demo_count", cfg.bc_demo_count);
  maybe(j, "budgets", cfg.budgets);
  maybe(j, "instances", cfg.instances);
  maybe(j, "repetitions", cfg.repetitions);
  maybe(j, "n_steps", cfg.n_steps);
  maybe(j, "dt", cfg.dt);
  maybe(j, "obstacle_weight", cfg.obstacle_weight);
  maybe(j, "joint_limit_weight", cfg.joint_limit_weight);
  maybe(j, "grasp_potential_weight", cfg.grasp_potential_weight);
  maybe(j, "insert_potential_weight", cfg.insert_potential_weight);
  maybe(j, "ebm_weight", cfg.ebm_weight);
  maybe(j, "success_band", cfg.success_band);
  if (j.contains("insert_initial_points"))
    cfg.insert.n_initial_points = j.at("insert_initial_points").get<std::size_t>();
  if (j.contains("insert_samples_per_point"))
    cfg.insert.samples_per_point =
        j.at("insert_samples_per_point").get<std::size_t>();
  if (j.contains("planner")) apply_planner_config(j.at("planner"), cfg.planner);
  if (j.contains("train")) {
    apply_train_config(j.at("train"), cfg.grasp_train);
    apply_train_config(j.at("train"), cfg.insert_train);
  }
  if (j.contains("bc_train")) {
    const json& b = j.at("bc_train");
    maybe(b, "batch", cfg.bc_train.batch);
    maybe(b, "iters", cfg.bc_train.iters);
    maybe(b, "lr", cfg.bc_train.lr);
    maybe(b, "hidden", cfg.bc_train.hidden);
  }
  return cfg;
}

int cmd_gen_data(const std::string& config_path, const std::string& out,
                 std::uint64_t seed) {
  const json j = load_config(config_path);
  bench::Exp1DataConfig cfg;
  cfg.seed = seed;
  maybe(j, "train_envs", cfg.train_envs);
  maybe(j, "eval_envs", cfg.eval_envs);
  maybe(j, "goals_per_env", cfg.goals_per_env);
  maybe(j, "free_points_per_env", cfg.free_points_per_env);
  maybe(j, "with_expert", cfg.with_expert_trajectories);
  if (j.contains("expert_iterations"))
    cfg.expert.planner.iterations = j.at("expert_iterations").get<std::size_t>();
  if (j.contains("trajs_per_goal")) {
    cfg.expert.trajectories_per_goal = j.at("trajs_per_goal").get<std::size_t>();
    cfg.expert.planner.plans_per_goal = cfg.expert.trajectories_per_goal;
  }
  if (j.contains("expert_planner"))
    apply_planner_config(j.at("expert_planner"), cfg.expert.planner);

  const std::vector<int> failures = bench::generate_exp1_data(cfg, out);
  for (int id : failures)
    std::fprintf(stderr, "gen-data: environment %d has missing demonstrations\n", id);
  std::printf("gen-data: wrote %zu train + %zu eval environments to %s\n",
              cfg.train_envs, cfg.eval_envs, out.c_str());
  return failures.empty() ? 0 : 1;
}

int cmd_train(const std::string& dataset, const std::string& conditioning,
              const std::string& config_path, const std::string& out,
              std::uint64_t seed, double dsm_beta_override) {
  const json j = load_config(config_path);

  if (conditioning == "object") {
    bench::Exp2Config cfg = exp2_config_from_json(j, seed);
    (void)bench::train_exp2_models(cfg, out);
    std::printf("train: wrote grasp.json, insert.json, bc.json to %s\n",
                out.c_str());
    return 0;
  }

  const auto records = env::load_exp1_records(dataset);
  if (conditioning == "bc") {
    bc::BcTrainConfig tc;
    tc.seed = seed;
    if (j.contains("bc_train")) {
      const json& b = j.at("bc_train");
      maybe(b, "batch", tc.batch);
      maybe(b, "iters", tc.iters);
      maybe(b, "lr", tc.lr);
      maybe(b, "hidden", tc.hidden);
    }
    const bc::BcTrainResult res =
        bc::train_bc(bench::bc_dataset_from_experts(records), tc);
    bc::save_bc_policy(res.policy, out);
    csv::Writer loss(out + ".loss.csv");
    loss.row({"iteration", "loss"});
    for (std::size_t i = 0; i < res.loss_history.size(); ++i)
      loss.row({std::to_string(i), csv::num(res.loss_history[i])});
    std::printf("train: bc policy -> %s\n", out.c_str());
    return 0;
  }

  ebm::TrainConfig tc;
  tc.seed = seed;
  if (j.contains("train")) apply_train_config(j.at("train"), tc);
  else apply_train_config(j, tc);
  if (dsm_beta_override >= 0.0) tc.dsm_beta = dsm_beta_override;

  ebm::Dataset data;
  ebm::Conditioning cond = ebm::Conditioning::obstacle_concat;
  std::string source = "expert";
  maybe(j, "source", source);
  if (conditioning == "obstacle") {
    cond = ebm::Conditioning::obstacle_concat;
    data = source == "free" ? bench::obstacle_dataset_from_points(records)
                            : bench::obstacle_dataset_from_experts(records);
  } else if (conditioning == "phase") {
    cond = ebm::Conditioning::phase_concat;
    std::size_t total = 0;
    for (const auto& r : records)
      for (const auto& demo : r.expert) total += demo.traj.n_states();
    if (total == 0) throw std::runtime_error("no expert trajectories");
    data.state_dim = 2;
    data.rows.resize(total, 3);
    std::size_t at = 0;
    for (const auto& r : records)
      for (const auto& demo : r.expert)
        for (std::size_t i = 0; i < demo.traj.n_states(); ++i, ++at) {
          data.rows(at, 0) = demo.traj.q(i)[0];
          data.rows(at, 1) = demo.traj.q(i)[1];
          data.rows(at, 2) = static_cast<double>(i) /
                             static_cast<double>(demo.traj.grid().n_steps);
        }
  } else if (conditioning == "trajectory") {
    cond = ebm::Conditioning::plain_trajectory;
    std::vector<const Trajectory*> trajs;
    for (const auto& r : records)
      for (const auto& demo : r.expert) trajs.push_back(&demo.traj);
    if (trajs.empty()) throw std::runtime_error("no expert trajectories");
    const std::size_t width = trajs.front()->n_states() * 2;
    data.state_dim = width;
    data.rows.resize(trajs.size(), width);
    for (std::size_t t = 0; t < trajs.size(); ++t)
      for (std::size_t i = 0; i < trajs[t]->n_states(); ++i) {
        data.rows(t, 2 * i) = trajs[t]->q(i)[0];
        data.rows(t, 2 * i + 1) = trajs[t]->q(i)[1];
      }
  } else {
    throw std::runtime_error("unknown conditioning " + conditioning);
  }

  const ebm::TrainResult res = ebm::train_ebm(data, cond, tc);
  ebm::save_energy_model(res.model, out);
  csv::Writer loss(out + ".loss.csv");
  loss.row({"iteration", "total", "cd", "dsm"});
  for (std::size_t i = 0; i < res.history.total.size(); ++i)
    loss.row({std::to_string(i), csv::num(res.history.total[i]),
              csv::num(res.history.cd[i]), csv::num(res.history.dsm[i])});
  std::printf("train: %s model -> %s\n", conditioning.c_str(), out.c_str());
  return 0;
}

int cmd_plan(const std::string& config_path, const std::string& out,
             std::uint64_t seed) {
  const json j = load_config(config_path);
  plan::PlanningProblem problem;
  const auto start = j.at("start").get<std::vector<double>>();
  const auto goal = j.at("goal").get<std::vector<double>>();
  problem.start = State(start, Vec(start.size(), 0.0));
  problem.config_goals = {State(goal, Vec(goal.size(), 0.0))};
  const json& g = j.at("grid");
  problem.grid = build_time_grid(g.value("t0", 0.0), g.at("dt").get<double>(),
                                 g.at("n_steps").get<std::size_t>());

  costs::Objective objective(costs::TaskMap::identity());
  std::vector<costs::Obstacle> obstacles;
  if (j.contains("environment")) {
    for (const auto& o : j.at("environment").at("obstacles"))
      obstacles.push_back(costs::Obstacle{
          {o[0].get<double>(), o[1].get<double>()}, o[2].get<double>()});
  }
  if (!obstacles.empty() && j.value("use_obstacle_cost", true)) {
    const double w = j.value("obstacle_weight", 0.5 / (1e-5 * 1e-5));
    objective.add_term({"obstacles", w,
                        costs::SphereObstacleTerm{obstacles, 0.1, false}});
  }
  if (j.contains("model")) {
    auto model = std::make_shared<ebm::EnergyModel>(
        ebm::load_energy_model(j.at("model").get<std::string>()));
    const Vec ctx = ebm::obstacle_context(obstacles);
    objective.add_term({"ebm", j.value("ebm_weight", 1.0),
                        costs::EbmFactorTerm{
                            std::make_shared<ebm::PointEnergy>(model, ctx)}});
  }
  if (objective.terms().empty())
    objective.add_term({"smoothness", 0.0, costs::SmoothnessTerm{}});
  problem.objective = std::move(objective);

  plan::PlannerConfig pc;
  pc.sigma_start = pc.sigma_goal = 1e-2;
  pc.sigma_gp = 0.1;
  if (j.contains("planner")) apply_planner_config(j.at("planner"), pc);
  RngStream rng(seed);
  const plan::PlanResult res = plan::stochgpmp_plan(problem, pc, rng);
  std::ofstream of(out, std::ios::binary);
  of << trajectory_to_json(res.trajectory) << '\n';
  std::printf("plan: %zu iterations, final cost %.6g -> %s\n",
              res.iterations_run,
              problem.objective.evaluate(res.trajectory), out.c_str());
  return 0;
}

int cmd_eval(const std::string& models_arg, const std::string& envs,
             const std::string& budgets_arg, const std::string& config_path,
             const std::string& out, std::uint64_t seed) {
  const json j = load_config(config_path);
  if (j.value("experiment", "exp1") == "exp2") {
    bench::Exp2Config cfg = exp2_config_from_json(j, seed);
    const bench::Exp2Models models = bench::load_exp2_models(models_arg);
    const bench::Report report = bench::run_exp2_eval(cfg, models);
    bench::write_report(out, report);
    for (const auto& row : report.rates())
      std::printf("eval: %-16s budget %3zu  success %.3f (%zu/%zu)\n",
                  row.method.c_str(), row.budget, row.pooled, row.successes,
                  row.trials);
    return 0;
  }

  bench::Exp1EvalConfig cfg;
  cfg.seed = seed;
  maybe(j, "ebm_weight", cfg.ebm_weight);
  maybe(j, "success_radius", cfg.success_radius);
  if (j.contains("planner")) apply_planner_config(j.at("planner"), cfg.planner);
  if (!budgets_arg.empty()) {
    cfg.budgets.clear();
    std::stringstream ss(budgets_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.budgets.push_back(std::stoul(tok));
  }

  std::vector<bench::EvalMethod> methods;
  std::stringstream ss(models_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--models wants name=path[,name=path...]");
    bench::EvalMethod m;
    m.name = tok.substr(0, eq);
    const std::string path = tok.substr(eq + 1);
    std::ifstream probe(path);
    if (!probe) throw std::runtime_error("cannot read model " + path);
    json header;
    probe >> header;
    if (header.value("kind", "ebm") == "bc")
      m.policy = std::make_shared<bc::BcPolicy>(bc::load_bc_policy(path));
    else
      m.model = std::make_shared<ebm::EnergyModel>(ebm::load_energy_model(path));
    methods.push_back(std::move(m));
  }
  if (methods.empty()) throw std::runtime_error("eval: no models given");

  const auto eval_records = env::load_exp1_records(envs);
  // train/eval ids are disjoint by construction; enforce the held-out range
  for (const auto& r : eval_records)
    if (r.environment.id < 1000)
      throw std::runtime_error("eval: expected held-out environment ids");

  const bench::Report report = bench::run_exp1_eval(eval_records, methods, cfg);
  bench::write_report(out, report);
  for (const auto& row : report.rates())
    std::printf("eval: %-16s budget %3zu  success %.3f (%zu/%zu)\n",
                row.method.c_str(), row.budget, row.pooled, row.successes,
                row.trials);
  return 0;
}

int cmd_plot(const std::string& report_dir, const std::string& out,
             const std::string& envs, const std::string& model_path) {
  const fs::path records_path = fs::path(report_dir) / "records.csv";
  if (!fs::exists(records_path))
    throw std::runtime_error("plot: missing " + records_path.string());
  const bench::Report report = bench::read_records_csv(records_path.string());
  if (report.records.empty()) throw std::runtime_error("plot: empty report");
  fs::create_directories(out);
  bench::plot_success_curves(report,
                             (fs::path(out) / "success_curves.svg").string());
  std::printf("plot: success_curves.svg\n");

  if (!envs.empty()) {
    const auto records = env::load_exp1_records(envs);
    if (!records.empty()) {
      std::vector<Trajectory> overlays;
      for (const auto& demo : records.front().expert)
        overlays.push_back(demo.traj);
      bench::plot_env_overlay(records.front(), overlays,
                              (fs::path(out) / "environment.svg").string());
      std::printf("plot: environment.svg\n");
      if (!model_path.empty()) {
        const auto model = ebm::load_energy_model(model_path);
        const Vec ctx =
            ebm::obstacle_context(records.front().environment.obstacles);
        bench::plot_energy_heatmap(
            model, ctx, -10.0, 10.0, 128, overlays,
            (fs::path(out) / "energy_heatmap.svg").string());
        std::printf("plot: energy_heatmap.svg\n");
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EBM-guided stochastic motion optimization benchmark"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path, out, dataset, conditioning = "obstacle";
  std::string models, envs, budgets, report_dir, model_path;
  double dsm_beta_override = -1.0;

  auto* gen = app.add_subcommand("gen-data", "generate environments and datasets");
  gen->add_option("--config", config_path, "JSON config");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--seed", seed, "RNG seed");

  auto* train = app.add_subcommand("train", "train an energy model or baseline");
  train->add_option("--dataset", dataset, "dataset directory (exp1 train split)");
  train->add_option("--conditioning", conditioning,
                    "obstacle|phase|object|trajectory|bc");
  train->add_option("--config", config_path, "JSON config");
  train->add_option("--out", out, "checkpoint path (or directory for object)")
      ->required();
  train->add_option("--seed", seed, "RNG seed");
  train->add_option("--dsm-beta", dsm_beta_override,
                    "override the denoising regularizer weight");

  auto* planc = app.add_subcommand("plan", "solve one planning problem");
  planc->add_option("--config", config_path, "problem JSON")->required();
  planc->add_option("--out", out, "output trajectory JSON")->required();
  planc->add_option("--seed", seed, "RNG seed");

  auto* evalc = app.add_subcommand("eval", "run an evaluation sweep");
  evalc->add_option("--models", models,
                    "name=path list (exp1) or model directory (exp2)")
      ->required();
  evalc->add_option("--envs", envs, "held-out environment directory");
  evalc->add_option("--budgets", budgets, "comma-separated iteration budgets");
  evalc->add_option("--config", config_path, "JSON config");
  evalc->add_option("--out", out, "report directory")->required();
  evalc->add_option("--seed", seed, "RNG seed");

  auto* plot = app.add_subcommand("plot", "render report figures");
  plot->add_option("--report", report_dir, "report directory")->required();
  plot->add_option("--out", out, "figure directory")->required();
  plot->add_option("--envs", envs, "environment directory for overlays");
  plot->add_option("--model", model_path, "energy model for the heatmap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out, seed);
    if (train->parsed())
      return cmd_train(dataset, conditioning, config_path, out, seed,
                       dsm_beta_override);
    if (planc->parsed()) return cmd_plan(config_path, out, seed);
    if (evalc->parsed())
      return cmd_eval(models, envs, budgets, config_path, out, seed);
    if (plot->parsed()) return cmd_plot(report_dir, out, envs, model_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
