#include "mopt/bc.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mopt/kernels.hpp"

namespace mopt::bc {

Vec BcPolicy::velocity(const Vec& q, const Vec& context) const {
  Vec row = q;
  row.insert(row.end(), context.begin(), context.end());
  if (row.size() != net.input_dim())
    throw std::invalid_argument("bc: input layout mismatch");
  row = input_norm.normalize(std::move(row));
  Matrix x(1, row.size());
  std::copy(row.begin(), row.end(), x.row(0));
  nn::MlpCache cache;
  const Matrix& out = nn::forward(net, x, cache);
  Vec v(out.cols());
  for (std::size_t j = 0; j < out.cols(); ++j) v[j] = out(0, j);
  return output_norm.denormalize(std::move(v));
}

BcTrainResult train_bc(const BcDataset& data, const BcTrainConfig& cfg) {
  if (data.inputs.rows() == 0 || data.inputs.rows() != data.targets.rows())
    throw std::invalid_argument("train_bc: bad dataset");
  BcTrainResult result;
  BcPolicy& policy = result.policy;
  policy.config_dim = data.config_dim;
  policy.input_norm = ebm::fit_normalization(data.inputs);
  policy.output_norm = ebm::fit_normalization(data.targets);

  RngStream root(cfg.seed);
  RngStream init_rng = root.substream(0);
  std::vector<std::size_t> sizes;
  sizes.push_back(data.inputs.cols());
  for (std::size_t h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(data.targets.cols());
  policy.net = nn::MlpParams::random_init(sizes, init_rng);

  nn::MlpGrads grads(policy.net);
  nn::Adam adam;
  adam.lr = cfg.lr;
  Vec params = policy.net.pack();
  RngStream batch_rng = root.substream(1);

  Matrix x(cfg.batch, data.inputs.cols());
  Matrix y(cfg.batch, data.targets.cols());
  nn::MlpCache cache;
  result.loss_history.reserve(cfg.iters);
  for (std::size_t iter = 0; iter < cfg.iters; ++iter) {
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      const std::size_t idx = batch_rng.next_u64() % data.inputs.rows();
      const double* src = data.inputs.row(idx);
      double* dst = x.row(i);
      for (std::size_t j = 0; j < x.cols(); ++j)
        dst[j] = (src[j] - policy.input_norm.mean[j]) / policy.input_norm.std[j];
      const double* ts = data.targets.row(idx);
      double* td = y.row(i);
      for (std::size_t j = 0; j < y.cols(); ++j)
        td[j] = (ts[j] - policy.output_norm.mean[j]) / policy.output_norm.std[j];
    }
    const Matrix& out = nn::forward(policy.net, x, cache);
    double loss = 0.0;
    Matrix dout(out.rows(), out.cols());
    const double scale = 1.0 / static_cast<double>(cfg.batch);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double diff = out.data()[i] - y.data()[i];
      loss += diff * diff * scale;
      dout.data()[i] = 2.0 * diff * scale;
    }
    if (!std::isfinite(loss))
      throw ebm::TrainingDiverged(iter, "bc: non-finite loss");
    result.loss_history.push_back(loss);
    grads.zero();
    nn::backward(policy.net, cache, dout, &grads, nullptr);
    Vec g = grads.pack();
    adam.step(params, g);
    policy.net.unpack(params);
  }
  return result;
}

Trajectory rollout_bc(const BcPolicy& policy, const Vec& q0, const Vec& context,
                      std::size_t n_steps, double dt) {
  const std::size_t d = q0.size();
  Trajectory traj(build_time_grid(0.0, dt, n_steps), d);
  Vec q = q0;
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const Vec v = policy.velocity(q, context);
    for (std::size_t j = 0; j < d; ++j) {
      traj.q(i)[j] = q[j];
      traj.qdot(i)[j] = v[j];
    }
    if (i < n_steps)
      for (std::size_t j = 0; j < d; ++j) q[j] += dt * v[j];
  }
  return traj;
}

namespace {

nlohmann::json norm_to_json(const ebm::Normalization& n) {
  return {{"mean", n.mean}, {"std", n.std}, {"lo", n.lo}, {"hi", n.hi}};
}

ebm::Normalization norm_from_json(const nlohmann::json& j) {
  ebm::Normalization n;
  n.mean = j.at("mean").get<Vec>();
  n.std = j.at("std").get<Vec>();
  n.lo = j.at("lo").get<Vec>();
  n.hi = j.at("hi").get<Vec>();
  return n;
}

}  // namespace

std::string bc_policy_to_json(const BcPolicy& policy) {
  nlohmann::json j;
  j["kind"] = "bc";
  j["layers"] = policy.net.sizes;
  j["activation"] = "softplus";
  j["config_dim"] = policy.config_dim;
  j["input_normalization"] = norm_to_json(policy.input_norm);
  j["output_normalization"] = norm_to_json(policy.output_norm);
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  for (std::size_t l = 0; l < policy.net.n_layers(); ++l) {
    const Matrix& w = policy.net.weights[l];
    weights.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    biases.push_back(policy.net.biases[l]);
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump();
}

BcPolicy bc_policy_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BcPolicy policy;
  policy.net.sizes = j.at("layers").get<std::vector<std::size_t>>();
  policy.net.activation = nn::Activation::softplus;
  policy.config_dim = j.at("config_dim").get<std::size_t>();
  policy.input_norm = norm_from_json(j.at("input_normalization"));
  policy.output_norm = norm_from_json(j.at("output_normalization"));
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  for (std::size_t l = 0; l + 1 < policy.net.sizes.size(); ++l) {
    const std::size_t in = policy.net.sizes[l];
    const std::size_t out = policy.net.sizes[l + 1];
    const auto wf = weights.at(l).get<Vec>();
    if (wf.size() != in * out)
      throw std::invalid_argument("bc checkpoint: weight size mismatch");
    Matrix w(in, out);
    std::copy(wf.begin(), wf.end(), w.data());
    policy.net.weights.push_back(std::move(w));
    policy.net.biases.push_back(biases.at(l).get<Vec>());
  }
  return policy;
}

void save_bc_policy(const BcPolicy& policy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << bc_policy_to_json(policy) << '\n';
}

BcPolicy load_bc_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return bc_policy_from_json(ss.str());
}

}  // namespace mopt::bc
