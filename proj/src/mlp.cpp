#include "mopt/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "mopt/kernels.hpp"

namespace mopt::nn {

MlpParams MlpParams::random_init(std::vector<std::size_t> sizes,
                                 RngStream& rng, Activation act) {
  if (sizes.size() < 2)
    throw std::invalid_argument("mlp: need at least input and output sizes");
  MlpParams p;
  p.sizes = std::move(sizes);
  p.activation = act;
  for (std::size_t l = 0; l + 1 < p.sizes.size(); ++l) {
    const std::size_t in = p.sizes[l];
    const std::size_t out = p.sizes[l + 1];
    Matrix w(in, out);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(out, 0.0);
  }
  return p;
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < n_layers(); ++l)
    n += weights[l].size() + biases[l].size();
  return n;
}

Vec MlpParams::pack() const {
  Vec flat;
  flat.reserve(param_count());
  for (std::size_t l = 0; l < n_layers(); ++l) {
    flat.insert(flat.end(), weights[l].data(),
                weights[l].data() + weights[l].size());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void MlpParams::unpack(const Vec& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("mlp unpack: size mismatch");
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers(); ++l) {
    std::copy(flat.begin() + off, flat.begin() + off + weights[l].size(),
              weights[l].data());
    off += weights[l].size();
    std::copy(flat.begin() + off, flat.begin() + off + biases[l].size(),
              biases[l].begin());
    off += biases[l].size();
  }
}

MlpGrads::MlpGrads(const MlpParams& p) {
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    biases.emplace_back(p.biases[l].size(), 0.0);
  }
}

void MlpGrads::zero() {
  for (auto& w : weights) w.fill(0.0);
  for (auto& b : biases) b.assign(b.size(), 0.0);
}

Vec MlpGrads::pack() const {
  Vec flat;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data(),
                weights[l].data() + weights[l].size());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

namespace {

void affine(const Matrix& x, const Matrix& w, const Vec& b, Matrix& out) {
  const std::size_t rows = x.rows();
  const std::size_t cols = w.cols();
  out.resize(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    std::copy(b.begin(), b.end(), out.row(i));
  kernels::gemm_nn(x.data(), w.data(), out.data(), rows, x.cols(), cols);
}

void linear(const Matrix& x, const Matrix& w, Matrix& out) {
  out.resize(x.rows(), w.cols());
  kernels::gemm_nn(x.data(), w.data(), out.data(), x.rows(), x.cols(), w.cols());
}

}  // namespace

const Matrix& forward(const MlpParams& p, const Matrix& x, MlpCache& cache) {
  if (x.cols() != p.input_dim())
    throw std::invalid_argument("mlp forward: input width mismatch");
  const std::size_t layers = p.n_layers();
  cache.input = x;
  cache.pre.resize(layers);
  cache.act.resize(layers);
  cache.sig.resize(layers);
  const Matrix* in = &cache.input;
  for (std::size_t l = 0; l < layers; ++l) {
    affine(*in, p.weights[l], p.biases[l], cache.pre[l]);
    const bool hidden = l + 1 < layers;
    if (hidden && p.activation == Activation::softplus) {
      cache.act[l].resize(cache.pre[l].rows(), cache.pre[l].cols());
      cache.sig[l].resize(cache.pre[l].rows(), cache.pre[l].cols());
      kernels::vec_softplus_sigmoid(cache.pre[l].data(), cache.act[l].data(),
                                    cache.sig[l].data(), cache.pre[l].size());
    } else {
      cache.act[l] = cache.pre[l];
    }
    in = &cache.act[l];
  }
  return cache.act.back();
}

void backward(const MlpParams& p, const MlpCache& cache, const Matrix& dout,
              MlpGrads* grads, Matrix* dx) {
  const std::size_t layers = p.n_layers();
  Matrix da = dout;
  Matrix dz;
  for (std::size_t li = layers; li-- > 0;) {
    const bool hidden = li + 1 < layers;
    if (hidden && p.activation == Activation::softplus) {
      // da currently holds dL/dz; multiply by softplus' = sigmoid
      const Matrix& sg = cache.sig[li];
      for (std::size_t i = 0; i < da.size(); ++i)
        da.data()[i] *= sg.data()[i];
    }
    const Matrix& zin = li == 0 ? cache.input : cache.act[li - 1];
    if (grads != nullptr) {
      kernels::gemm_tn(zin.data(), da.data(), grads->weights[li].data(),
                       zin.cols(), zin.rows(), da.cols());
      Vec& db = grads->biases[li];
      for (std::size_t i = 0; i < da.rows(); ++i)
        kernels::axpy(1.0, da.row(i), db.data(), da.cols());
    }
    if (li == 0 && dx == nullptr) break;
    dz.resize(da.rows(), p.weights[li].rows());
    dz.fill(0.0);
    kernels::gemm_nt(da.data(), p.weights[li].data(), dz.data(), da.rows(),
                     da.cols(), p.weights[li].rows());
    if (li == 0) {
      *dx = dz;
      break;
    }
    da = dz;
  }
}

const Matrix& dual_forward(const MlpParams& p, const MlpCache& cache,
                           const Matrix& v, MlpDualCache& dual) {
  const std::size_t layers = p.n_layers();
  dual.vin = v;
  dual.pre_dot.resize(layers);
  dual.act_dot.resize(layers);
  const Matrix* in_dot = &dual.vin;
  for (std::size_t l = 0; l < layers; ++l) {
    linear(*in_dot, p.weights[l], dual.pre_dot[l]);
    const bool hidden = l + 1 < layers;
    if (hidden && p.activation == Activation::softplus) {
      const Matrix& sg = cache.sig[l];
      Matrix& zd = dual.act_dot[l];
      zd.resize(sg.rows(), sg.cols());
      for (std::size_t i = 0; i < zd.size(); ++i)
        zd.data()[i] = sg.data()[i] * dual.pre_dot[l].data()[i];
    } else {
      dual.act_dot[l] = dual.pre_dot[l];
    }
    in_dot = &dual.act_dot[l];
  }
  return dual.act_dot.back();
}

void dual_backward(const MlpParams& p, const MlpCache& cache,
                   const MlpDualCache& dual, const Matrix& cdot,
                   MlpGrads* grads) {
  const std::size_t layers = p.n_layers();
  // adjoints of the primal activations (q) and tangent activations (qdot)
  Matrix q(cdot.rows(), cdot.cols());
  Matrix qdot = cdot;
  Matrix da, da_dot, tmp;
  for (std::size_t li = layers; li-- > 0;) {
    const bool hidden = li + 1 < layers;
    if (hidden && p.activation == Activation::softplus) {
      const Matrix& sg = cache.sig[li];
      const Matrix& ad = dual.pre_dot[li];
      da.resize(q.rows(), q.cols());
      da_dot.resize(q.rows(), q.cols());
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double s = sg.data()[i];
        const double spp = s * (1.0 - s);  // softplus''
        da_dot.data()[i] = s * qdot.data()[i];
        da.data()[i] = s * q.data()[i] + spp * ad.data()[i] * qdot.data()[i];
      }
    } else {
      da = q;
      da_dot = qdot;
    }
    if (grads != nullptr) {
      const Matrix& zin = li == 0 ? cache.input : cache.act[li - 1];
      const Matrix& zin_dot = li == 0 ? dual.vin : dual.act_dot[li - 1];
      kernels::gemm_tn(zin.data(), da.data(), grads->weights[li].data(),
                       zin.cols(), zin.rows(), da.cols());
      kernels::gemm_tn(zin_dot.data(), da_dot.data(),
                       grads->weights[li].data(), zin_dot.cols(),
                       zin_dot.rows(), da_dot.cols());
      Vec& db = grads->biases[li];
      for (std::size_t i = 0; i < da.rows(); ++i)
        kernels::axpy(1.0, da.row(i), db.data(), da.cols());
    }
    if (li == 0) break;
    const std::size_t in_w = p.weights[li].rows();
    tmp.resize(da.rows(), in_w);
    tmp.fill(0.0);
    kernels::gemm_nt(da.data(), p.weights[li].data(), tmp.data(), da.rows(),
                     da.cols(), in_w);
    q = tmp;
    tmp.fill(0.0);
    kernels::gemm_nt(da_dot.data(), p.weights[li].data(), tmp.data(),
                     da_dot.rows(), da_dot.cols(), in_w);
    qdot = tmp;
  }
}

void Adam::step(Vec& params, const Vec& grad) {
  if (m.empty()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  if (grad.size() != params.size())
    throw std::invalid_argument("adam: gradient size mismatch");
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace mopt::nn
