#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mopt/costs.hpp"
#include "mopt/matrix.hpp"
#include "mopt/mlp.hpp"
#include "mopt/rng.hpp"
#include "mopt/trajectory.hpp"

namespace mopt::ebm {

enum class Conditioning {
  obstacle_concat,   // input = [x, obstacle centers], canonical order
  phase_concat,      // input = [x, alpha]
  object_centric,    // input = x expressed in an object frame
  plain_trajectory,  // input = flattened configuration path
};

std::string conditioning_name(Conditioning c);
Conditioning conditioning_from_name(const std::string& name);

// SE(2) frame for object-centric conditioning.
struct Frame2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Per-dimension affine normalization of assembled inputs, plus the bounds
// (in normalized units) of the training data, used as the negative-sampling
// domain and the Langevin clamp box.
struct Normalization {
  Vec mean, std, lo, hi;

  std::size_t dims() const { return mean.size(); }
  void normalize_rows(Matrix& rows) const;
  void denormalize_rows(Matrix& rows) const;
  Vec normalize(Vec row) const;
  Vec denormalize(Vec row) const;
};

// Training rows in assembled raw layout; the first state_dim columns are
// the state part (resampled when drawing negatives), the rest is context.
struct Dataset {
  Matrix rows;
  std::size_t state_dim = 0;

  std::size_t size() const { return rows.rows(); }
  std::size_t layout_dim() const { return rows.cols(); }
};

Normalization fit_normalization(const Matrix& rows);

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(std::size_t iter, const std::string& what_arg)
      : std::runtime_error(what_arg), iteration(iter) {}
  std::size_t iteration;
};

// Energy network plus its conditioning scheme and input normalization.
class EnergyModel {
 public:
  nn::MlpParams net;
  Conditioning conditioning = Conditioning::obstacle_concat;
  std::size_t state_dim = 0;
  Normalization norm;

  std::size_t layout_dim() const { return net.input_dim(); }

  // Energy of assembled raw rows (layout as in Dataset).
  Vec energy_rows(const Matrix& raw_rows) const;
  // Same, with gradients w.r.t. the raw row entries.
  Vec energy_rows_grad(const Matrix& raw_rows, Matrix& grad) const;

  // Single-point convenience: assembles [x, context] per the conditioning.
  double energy(const Vec& x, const Vec& context = {}) const;
  Vec grad_input(const Vec& x, const Vec& context = {}) const;

  // Assemble one raw row from state + context per the conditioning scheme.
  Vec assemble(const Vec& x, const Vec& context) const;

  // Gradient of the assembled row's state part pulled back to world
  // coordinates (identity except for object_centric rotation).
  Vec state_grad_to_world(const Vec& grad_state, const Vec& context) const;
};

std::string energy_model_to_json(const EnergyModel& model);
EnergyModel energy_model_from_json(const std::string& text);
void save_energy_model(const EnergyModel& model, const std::string& path);
EnergyModel load_energy_model(const std::string& path);

// Canonical obstacle context: centers sorted by angle about the origin.
Vec obstacle_context(const std::vector<costs::Obstacle>& obstacles);
Vec frame_context(const Frame2& frame);

enum class NegativeSampler { uniform, langevin };

struct TrainConfig {
  std::size_t batch = 256;
  std::size_t iters = 3000;
  double lr = 1e-3;
  double dsm_sigma = 0.1;   // normalized units
  double dsm_beta = 1.0;    // 0 disables the smoothing regularizer
  double lambda_reg = 0.1;  // energy magnitude regularizer on the CD batches
  NegativeSampler negatives = NegativeSampler::uniform;
  std::size_t langevin_steps = 20;
  double langevin_step_size = 1e-2;
  std::vector<std::size_t> hidden = {512, 512};
  std::uint64_t seed = 0;
};

struct TrainHistory {
  Vec total, cd, dsm;
};

struct TrainResult {
  EnergyModel model;
  TrainHistory history;
};

TrainResult train_ebm(const Dataset& data, Conditioning conditioning,
                      const TrainConfig& cfg);

// Contrastive-divergence loss on raw assembled batches:
// mean E(pos) - mean E(neg) + lambda_reg mean(E^2) over both batches.
double cd_loss(const EnergyModel& model, const Matrix& positives,
               const Matrix& negatives, double lambda_reg = 0.0);

// Denoising score-matching loss, exactly mean ||eps - grad E(x + sigma eps)||^2
// with the noise applied in normalized units.
double dsm_loss(const EnergyModel& model, const Matrix& positives,
                double sigma, RngStream& rng);

// Unadjusted Langevin iteration in normalized input space, state dims only;
// iterates x <- x - (step/2) grad E + sqrt(step) xi, clamped to [lo, hi].
struct LangevinDiverged : std::runtime_error {
  LangevinDiverged(std::size_t step_index)
      : std::runtime_error("langevin: non-finite gradient at step " +
                           std::to_string(step_index)),
        step(step_index) {}
  std::size_t step;
};

Matrix langevin_sample(const EnergyModel& model, Matrix init_normalized,
                       std::size_t steps, double step_size, RngStream& rng);

// The underlying chain over an arbitrary gradient field; grad_fn must fill
// `grad` with d E / d x for each row of x.
using GradFn = std::function<void(const Matrix& x, Matrix& grad)>;
Matrix langevin_chain(const GradFn& grad_fn, Matrix init, std::size_t steps,
                      double step_size, RngStream& rng, const Vec& lo,
                      const Vec& hi);

// Phase-conditioned trajectory energy: sum_k E(x_k, alpha_k) plus the
// squared-difference smoothing term; gradient w.r.t. configurations.
struct PhaseEnergyWeights {
  double energy = 1.0;
  double smooth = 1.0;
};

double phase_trajectory_energy(const EnergyModel& model, const Trajectory& traj,
                               const PhaseEnergyWeights& weights);
Vec phase_trajectory_energy_grad(const EnergyModel& model,
                                 const Trajectory& traj,
                                 const PhaseEnergyWeights& weights);

// costs::StateEnergy adapter: a conditioned model evaluated on task points.
class PointEnergy : public costs::StateEnergy {
 public:
  PointEnergy(std::shared_ptr<const EnergyModel> model, Vec context);
  std::size_t input_dim() const override;
  void eval(const Matrix& x, Vec& energy, Matrix* grad) const override;

 private:
  std::shared_ptr<const EnergyModel> model_;
  Vec context_;
};

// Weighted sum of conditioned factors sharing one input space.
class ComposedEnergy : public costs::StateEnergy {
 public:
  struct Factor {
    std::shared_ptr<const EnergyModel> model;
    Vec context;
    double weight = 1.0;
  };

  explicit ComposedEnergy(std::vector<Factor> factors);
  std::size_t input_dim() const override;
  void eval(const Matrix& x, Vec& energy, Matrix* grad) const override;

 private:
  std::vector<Factor> factors_;
};

}  // namespace mopt::ebm
