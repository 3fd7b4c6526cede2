#pragma once

#include <cstdint>
#include <string>

#include "mopt/ebm.hpp"
#include "mopt/matrix.hpp"
#include "mopt/mlp.hpp"
#include "mopt/rng.hpp"
#include "mopt/trajectory.hpp"

namespace mopt::bc {

// Velocity policy qdot = f(q; context), a plain regression baseline.
struct BcPolicy {
  nn::MlpParams net;
  ebm::Normalization input_norm;   // over [q, context]
  ebm::Normalization output_norm;  // over qdot targets
  std::size_t config_dim = 0;

  Vec velocity(const Vec& q, const Vec& context) const;
};

struct BcDataset {
  Matrix inputs;   // rows x (config_dim + context_dim), raw units
  Matrix targets;  // rows x config_dim, raw units
  std::size_t config_dim = 0;
};

struct BcTrainConfig {
  std::size_t batch = 256;
  std::size_t iters = 3000;
  double lr = 1e-3;
  std::vector<std::size_t> hidden = {512, 512};
  std::uint64_t seed = 0;
};

struct BcTrainResult {
  BcPolicy policy;
  Vec loss_history;
};

BcTrainResult train_bc(const BcDataset& data, const BcTrainConfig& cfg);

// Integrate q_{t+1} = q_t + dt f(q_t; context) for n_steps.
Trajectory rollout_bc(const BcPolicy& policy, const Vec& q0, const Vec& context,
                      std::size_t n_steps, double dt);

std::string bc_policy_to_json(const BcPolicy& policy);
BcPolicy bc_policy_from_json(const std::string& text);
void save_bc_policy(const BcPolicy& policy, const std::string& path);
BcPolicy load_bc_policy(const std::string& path);

}  // namespace mopt::bc
