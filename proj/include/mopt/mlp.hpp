#pragma once

#include <cstddef>
#include <vector>

#include "mopt/matrix.hpp"
#include "mopt/rng.hpp"

namespace mopt::nn {

enum class Activation { softplus, identity };

// Fully connected network. Hidden layers apply the activation; the output
// layer is linear. Weights are stored input-major (sizes[l] x sizes[l+1])
// so the batched forward pass is a plain row-major product.
struct MlpParams {
  std::vector<std::size_t> sizes;
  std::vector<Matrix> weights;  // weights[l]: sizes[l] x sizes[l+1]
  std::vector<Vec> biases;      // biases[l]: sizes[l+1]
  Activation activation = Activation::softplus;

  static MlpParams random_init(std::vector<std::size_t> sizes, RngStream& rng,
                               Activation act = Activation::softplus);

  std::size_t n_layers() const { return weights.size(); }
  std::size_t input_dim() const { return sizes.front(); }
  std::size_t output_dim() const { return sizes.back(); }
  std::size_t param_count() const;

  Vec pack() const;
  void unpack(const Vec& flat);
};

// Gradient accumulator shaped like the parameters.
struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vec> biases;

  explicit MlpGrads(const MlpParams& p);
  void zero();
  Vec pack() const;
};

// Forward-pass cache for one batch: pre-activations, activations, and the
// hidden sigmoids (softplus' = sigmoid, softplus'' = sigmoid (1 - sigmoid)).
struct MlpCache {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> act;
  std::vector<Matrix> sig;
};

// Tangent-pass cache for the same batch.
struct MlpDualCache {
  Matrix vin;
  std::vector<Matrix> pre_dot;
  std::vector<Matrix> act_dot;
};

// out = network(x); x is batch x in. Returns reference to cache.act.back().
const Matrix& forward(const MlpParams& p, const Matrix& x, MlpCache& cache);

// Reverse pass seeded with dL/d(output). Accumulates parameter gradients
// into grads (if non-null) and writes input gradients to dx (if non-null).
void backward(const MlpParams& p, const MlpCache& cache, const Matrix& dout,
              MlpGrads* grads, Matrix* dx);

// Tangent (forward-mode) pass in input direction v: computes the per-row
// directional derivative of the outputs, cached in dual.act_dot.back().
const Matrix& dual_forward(const MlpParams& p, const MlpCache& cache,
                           const Matrix& v, MlpDualCache& dual);

// Reverse pass over the joint primal+tangent computation, seeded with
// dS/d(output_dot). Together with dual_forward this differentiates
// S = sum_rows c . (v^T grad_x E) with respect to the parameters, which is
// the second-order term the denoising score-matching loss needs.
void dual_backward(const MlpParams& p, const MlpCache& cache,
                   const MlpDualCache& dual, const Matrix& cdot,
                   MlpGrads* grads);

// Adam with bias correction; operates on flat parameter vectors.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(Vec& params, const Vec& grad);

  Vec m, v;
  std::size_t t = 0;
};

}  // namespace mopt::nn
