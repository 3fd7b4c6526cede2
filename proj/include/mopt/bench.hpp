#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mopt/bc.hpp"
#include "mopt/ebm.hpp"
#include "mopt/environments.hpp"
#include "mopt/planners.hpp"

namespace mopt::bench {

// ---- reports ----

struct RunRecord {
  std::string method;
  std::size_t budget = 0;
  int env_id = 0;
  std::size_t goal_id = 0;
  bool success = false;
  double final_cost = 0.0;
  double wall_time_s = 0.0;
};

struct RateRow {
  std::string method;
  std::size_t budget = 0;
  std::size_t successes = 0;
  std::size_t trials = 0;
  double pooled = 0.0;    // successes / trials
  double env_mean = 0.0;  // mean over environments of per-env success rate
};

struct Report {
  std::vector<RunRecord> records;
  std::vector<RateRow> rates() const;
  double rate_of(const std::string& method, std::size_t budget) const;
};

// Writes report.csv (aggregates only, byte-stable across reruns) and
// records.csv (per-run rows including wall time).
void write_report(const std::string& dir, const Report& report);
Report read_records_csv(const std::string& path);

// ---- experiment I ----

struct Exp1DataConfig {
  std::size_t train_envs = 64;
  std::size_t eval_envs = 32;
  std::size_t goals_per_env = 15;
  std::size_t free_points_per_env = 1024;
  TimeGrid grid{0.0, 0.02, 64};
  env::EnvGenSpec env_spec;
  env::ExpertGenConfig expert;
  bool with_expert_trajectories = true;
  std::uint64_t seed = 0;
};

// Writes <out_dir>/train and <out_dir>/eval record sets. Train environment
// ids start at 0, eval ids at 1000, so the two sets are disjoint by
// construction. Returns the ids that failed demonstration generation.
std::vector<int> generate_exp1_data(const Exp1DataConfig& cfg,
                                    const std::string& out_dir);

// dataset assembly for the conditioned obstacle EBMs and the BC baseline
ebm::Dataset obstacle_dataset_from_points(
    const std::vector<env::Exp1EnvRecord>& records);
ebm::Dataset obstacle_dataset_from_experts(
    const std::vector<env::Exp1EnvRecord>& records);
bc::BcDataset bc_dataset_from_experts(
    const std::vector<env::Exp1EnvRecord>& records);

struct EvalMethod {
  std::string name;
  std::shared_ptr<const ebm::EnergyModel> model;  // EBM-guided planning
  std::shared_ptr<const bc::BcPolicy> policy;     // rollout baseline
};

struct Exp1EvalConfig {
  std::vector<std::size_t> budgets{0, 5, 10, 25, 50};
  plan::PlannerConfig planner;
  TimeGrid grid{0.0, 0.02, 64};
  double ebm_weight = 1.0;
  double success_radius = 1.5;
  std::uint64_t seed = 0;

  Exp1EvalConfig() {
    planner.temperature = 1.0;
    planner.sigma_start = planner.sigma_goal = 1e-2;
    planner.sigma_gp = 0.1;
    planner.num_samples = 32;
    planner.alpha_mode = plan::AlphaMode::dynamics;
  }
};

Report run_exp1_eval(const std::vector<env::Exp1EnvRecord>& eval_records,
                     const std::vector<EvalMethod>& methods,
                     const Exp1EvalConfig& cfg);

// ---- experiment II ----

struct Exp2Config {
  env::GraspInsertScene scene = env::default_grasp_insert_scene();
  std::size_t grasp_points_per_edge = 1000;
  double grasp_band = 0.05;
  env::InsertGenConfig insert;
  ebm::TrainConfig grasp_train;
  ebm::TrainConfig insert_train;
  std::size_t bc_demo_count = 48;
  bc::BcTrainConfig bc_train;

  std::vector<std::size_t> budgets{50, 100};
  std::size_t instances = 10;
  std::size_t repetitions = 4;
  std::size_t n_steps = 80;
  double dt = 0.025;
  plan::PlannerConfig planner;
  double obstacle_weight = 50.0;
  double obstacle_eps = 0.05;
  double joint_limit_weight = 10.0;
  double grasp_potential_weight = 4.0;
  double insert_potential_weight = 4.0;
  double ebm_weight = 1.0;
  double grasp_step_fraction = 0.45;  // step index for the grasp potential
  double success_band = 0.05;         // fraction of arm reach
  std::uint64_t seed = 0;

  Exp2Config() {
    planner.sigma_start = planner.sigma_goal = 1e-2;
    planner.sigma_gp = 0.35;
    planner.num_samples = 32;
    planner.alpha_mode = plan::AlphaMode::dynamics;
  }
};

struct Exp2Models {
  std::shared_ptr<ebm::EnergyModel> grasp;
  std::shared_ptr<ebm::EnergyModel> insert;
  std::shared_ptr<bc::BcPolicy> policy;
};

Exp2Models train_exp2_models(const Exp2Config& cfg, const std::string& out_dir);
Exp2Models load_exp2_models(const std::string& dir);

// Per-instance task sampled at evaluation time.
struct Exp2Instance {
  ebm::Frame2 cube_pose;
  kin::Point2 grasp_target{0.0, 0.0};  // baseline grasp potential target
};

Exp2Instance sample_exp2_instance(const env::GraspInsertScene& scene,
                                  RngStream& rng);

struct Exp2Success {
  bool grasped = false;
  bool inserted = false;
  bool collision_free = false;
  bool ok() const { return grasped && inserted && collision_free; }
};

Exp2Success exp2_success(const Trajectory& traj, const Exp2Config& cfg,
                         const ebm::Frame2& cube_pose);

Report run_exp2_eval(const Exp2Config& cfg, const Exp2Models& models);

// ---- plots ----

void plot_success_curves(const Report& report, const std::string& path);
void plot_env_overlay(const env::Exp1EnvRecord& record,
                      const std::vector<Trajectory>& trajectories,
                      const std::string& path);
void plot_energy_heatmap(const ebm::EnergyModel& model, const Vec& context,
                         double lo, double hi, std::size_t resolution,
                         const std::vector<Trajectory>& overlays,
                         const std::string& path);

}  // namespace mopt::bench
