#include "mopt/ebm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mopt/kernels.hpp"

namespace mopt::ebm {

std::string conditioning_name(Conditioning c) {
  switch (c) {
    case Conditioning::obstacle_concat: return "obstacle_concat";
    case Conditioning::phase_concat: return "phase_concat";
    case Conditioning::object_centric: return "object_centric";
    case Conditioning::plain_trajectory: return "plain_trajectory";
  }
  return "unknown";
}

Conditioning conditioning_from_name(const std::string& name) {
  if (name == "obstacle_concat") return Conditioning::obstacle_concat;
  if (name == "phase_concat") return Conditioning::phase_concat;
  if (name == "object_centric") return Conditioning::object_centric;
  if (name == "plain_trajectory") return Conditioning::plain_trajectory;
  throw std::invalid_argument("unknown conditioning: " + name);
}

void Normalization::normalize_rows(Matrix& rows) const {
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double* r = rows.row(i);
    for (std::size_t j = 0; j < dims(); ++j) r[j] = (r[j] - mean[j]) / std[j];
  }
}

void Normalization::denormalize_rows(Matrix& rows) const {
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double* r = rows.row(i);
    for (std::size_t j = 0; j < dims(); ++j) r[j] = r[j] * std[j] + mean[j];
  }
}

Vec Normalization::normalize(Vec row) const {
  for (std::size_t j = 0; j < dims(); ++j) row[j] = (row[j] - mean[j]) / std[j];
  return row;
}

Vec Normalization::denormalize(Vec row) const {
  for (std::size_t j = 0; j < dims(); ++j) row[j] = row[j] * std[j] + mean[j];
  return row;
}

Normalization fit_normalization(const Matrix& rows) {
  if (rows.rows() == 0) throw std::invalid_argument("normalization: empty data");
  const std::size_t d = rows.cols();
  Normalization n;
  n.mean.assign(d, 0.0);
  n.std.assign(d, 0.0);
  n.lo.assign(d, 0.0);
  n.hi.assign(d, 0.0);
  const double count = static_cast<double>(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) n.mean[j] += rows(i, j);
  for (std::size_t j = 0; j < d; ++j) n.mean[j] /= count;
  for (std::size_t i = 0; i < rows.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = rows(i, j) - n.mean[j];
      n.std[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    n.std[j] = std::sqrt(n.std[j] / count);
    if (n.std[j] < 1e-12) n.std[j] = 1.0;  // constant column
  }
  for (std::size_t j = 0; j < d; ++j) {
    double lo = (rows(0, j) - n.mean[j]) / n.std[j];
    double hi = lo;
    for (std::size_t i = 1; i < rows.rows(); ++i) {
      const double v = (rows(i, j) - n.mean[j]) / n.std[j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    n.lo[j] = lo;
    n.hi[j] = hi;
  }
  return n;
}

Vec EnergyModel::assemble(const Vec& x, const Vec& context) const {
  switch (conditioning) {
    case Conditioning::obstacle_concat:
    case Conditioning::phase_concat: {
      Vec row = x;
      row.insert(row.end(), context.begin(), context.end());
      if (row.size() != layout_dim())
        throw std::invalid_argument("energy: layout mismatch");
      return row;
    }
    case Conditioning::object_centric: {
      if (context.size() != 3)
        throw std::invalid_argument("object_centric: context must be [x, y, theta]");
      if (x.size() != layout_dim())
        throw std::invalid_argument("energy: layout mismatch");
      const double c = std::cos(-context[2]);
      const double s = std::sin(-context[2]);
      Vec row = x;
      // pairs of coordinates rotate into the frame; assumes 2-d points
      for (std::size_t j = 0; j + 1 < row.size(); j += 2) {
        const double dx = row[j] - context[0];
        const double dy = row[j + 1] - context[1];
        row[j] = c * dx - s * dy;
        row[j + 1] = s * dx + c * dy;
      }
      return row;
    }
    case Conditioning::plain_trajectory: {
      if (!context.empty())
        throw std::invalid_argument("plain_trajectory: no context expected");
      if (x.size() != layout_dim())
        throw std::invalid_argument("energy: layout mismatch");
      return x;
    }
  }
  throw std::logic_error("unreachable");
}

Vec EnergyModel::state_grad_to_world(const Vec& grad_state,
                                     const Vec& context) const {
  if (conditioning != Conditioning::object_centric) return grad_state;
  // x_local = R(-theta)(x - o)  =>  d/dx = R(-theta)^T d/dx_local
  const double c = std::cos(-context[2]);
  const double s = std::sin(-context[2]);
  Vec out = grad_state;
  for (std::size_t j = 0; j + 1 < out.size(); j += 2) {
    const double gx = grad_state[j];
    const double gy = grad_state[j + 1];
    out[j] = c * gx + s * gy;
    out[j + 1] = -s * gx + c * gy;
  }
  return out;
}

Vec EnergyModel::energy_rows(const Matrix& raw_rows) const {
  Matrix x = raw_rows;
  norm.normalize_rows(x);
  nn::MlpCache cache;
  const Matrix& out = nn::forward(net, x, cache);
  Vec e(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) e[i] = out(i, 0);
  return e;
}

Vec EnergyModel::energy_rows_grad(const Matrix& raw_rows, Matrix& grad) const {
  Matrix x = raw_rows;
  norm.normalize_rows(x);
  nn::MlpCache cache;
  const Matrix& out = nn::forward(net, x, cache);
  Vec e(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) e[i] = out(i, 0);
  Matrix dout(out.rows(), 1, 1.0);
  nn::backward(net, cache, dout, nullptr, &grad);
  // chain through normalization back to raw units
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    double* g = grad.row(i);
    for (std::size_t j = 0; j < norm.dims(); ++j) g[j] /= norm.std[j];
  }
  return e;
}

double EnergyModel::energy(const Vec& x, const Vec& context) const {
  const Vec row = assemble(x, context);
  Matrix rows(1, row.size());
  std::copy(row.begin(), row.end(), rows.row(0));
  return energy_rows(rows)[0];
}

Vec EnergyModel::grad_input(const Vec& x, const Vec& context) const {
  const Vec row = assemble(x, context);
  Matrix rows(1, row.size());
  std::copy(row.begin(), row.end(), rows.row(0));
  Matrix grad;
  energy_rows_grad(rows, grad);
  Vec gs(x.size());
  const std::size_t n_state =
      conditioning == Conditioning::obstacle_concat ||
              conditioning == Conditioning::phase_concat
          ? x.size()
          : layout_dim();
  for (std::size_t j = 0; j < n_state && j < x.size(); ++j) gs[j] = grad(0, j);
  return state_grad_to_world(gs, context);
}

Vec obstacle_context(const std::vector<costs::Obstacle>& obstacles) {
  std::vector<costs::Obstacle> sorted = obstacles;
  std::sort(sorted.begin(), sorted.end(),
            [](const costs::Obstacle& a, const costs::Obstacle& b) {
              return std::atan2(a.center[1], a.center[0]) <
                     std::atan2(b.center[1], b.center[0]);
            });
  Vec ctx;
  ctx.reserve(2 * sorted.size());
  for (const auto& o : sorted) {
    ctx.push_back(o.center[0]);
    ctx.push_back(o.center[1]);
  }
  return ctx;
}

Vec frame_context(const Frame2& frame) { return {frame.x, frame.y, frame.theta}; }

// ---- serialization ----

std::string energy_model_to_json(const EnergyModel& model) {
  nlohmann::json j;
  j["layers"] = model.net.sizes;
  j["activation"] =
      model.net.activation == nn::Activation::softplus ? "softplus" : "identity";
  j["conditioning"] = conditioning_name(model.conditioning);
  j["state_dim"] = model.state_dim;
  j["normalization"] = {{"mean", model.norm.mean},
                        {"std", model.norm.std},
                        {"lo", model.norm.lo},
                        {"hi", model.norm.hi}};
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  for (std::size_t l = 0; l < model.net.n_layers(); ++l) {
    const Matrix& w = model.net.weights[l];
    weights.push_back(std::vector<double>(w.data(), w.data() + w.size()));
    biases.push_back(model.net.biases[l]);
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump();
}

EnergyModel energy_model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EnergyModel model;
  model.net.sizes = j.at("layers").get<std::vector<std::size_t>>();
  model.net.activation = j.at("activation").get<std::string>() == "softplus"
                             ? nn::Activation::softplus
                             : nn::Activation::identity;
  model.conditioning = conditioning_from_name(j.at("conditioning"));
  model.state_dim = j.at("state_dim").get<std::size_t>();
  const auto& n = j.at("normalization");
  model.norm.mean = n.at("mean").get<Vec>();
  model.norm.std = n.at("std").get<Vec>();
  model.norm.lo = n.at("lo").get<Vec>();
  model.norm.hi = n.at("hi").get<Vec>();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  for (std::size_t l = 0; l + 1 < model.net.sizes.size(); ++l) {
    const std::size_t in = model.net.sizes[l];
    const std::size_t out = model.net.sizes[l + 1];
    const auto wf = weights.at(l).get<Vec>();
    if (wf.size() != in * out)
      throw std::invalid_argument("checkpoint: weight size mismatch");
    Matrix w(in, out);
    std::copy(wf.begin(), wf.end(), w.data());
    model.net.weights.push_back(std::move(w));
    auto b = biases.at(l).get<Vec>();
    if (b.size() != out)
      throw std::invalid_argument("checkpoint: bias size mismatch");
    model.net.biases.push_back(std::move(b));
  }
  return model;
}

void save_energy_model(const EnergyModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << energy_model_to_json(model);
  out << '\n';
}

EnergyModel load_energy_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return energy_model_from_json(ss.str());
}

// ---- losses and training ----

namespace {

// CD gradient contribution on a normalized batch: positives first, then
// negatives. Returns the loss value.
double cd_loss_grads(const nn::MlpParams& net, const Matrix& pos_neg,
                     std::size_t n_pos, double lambda_reg, nn::MlpGrads* grads,
                     nn::MlpCache& cache) {
  const std::size_t rows = pos_neg.rows();
  const std::size_t n_neg = rows - n_pos;
  const Matrix& out = nn::forward(net, pos_neg, cache);
  double mean_pos = 0.0, mean_neg = 0.0, mean_sq = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double e = out(i, 0);
    if (i < n_pos) mean_pos += e / static_cast<double>(n_pos);
    else mean_neg += e / static_cast<double>(n_neg);
    mean_sq += e * e / static_cast<double>(rows);
  }
  if (grads != nullptr) {
    Matrix dout(rows, 1);
    for (std::size_t i = 0; i < rows; ++i) {
      const double sign = i < n_pos ? 1.0 / static_cast<double>(n_pos)
                                    : -1.0 / static_cast<double>(n_neg);
      dout(i, 0) =
          sign + lambda_reg * 2.0 * out(i, 0) / static_cast<double>(rows);
    }
    nn::backward(net, cache, dout, grads, nullptr);
  }
  return mean_pos - mean_neg + lambda_reg * mean_sq;
}

// DSM on a normalized positive batch. noisy = pos + sigma*eps is formed here;
// returns the loss and accumulates the double-backward parameter gradient.
double dsm_loss_grads(const nn::MlpParams& net, const Matrix& positives,
                      double sigma, RngStream& rng, nn::MlpGrads* grads) {
  const std::size_t rows = positives.rows();
  const std::size_t d = positives.cols();
  Matrix noisy = positives;
  Matrix eps(rows, d);
  for (std::size_t i = 0; i < rows * d; ++i) {
    eps.data()[i] = rng.normal();
    noisy.data()[i] += sigma * eps.data()[i];
  }
  nn::MlpCache cache;
  nn::forward(net, noisy, cache);
  Matrix score;
  Matrix dout(rows, 1, 1.0);
  nn::backward(net, cache, dout, nullptr, &score);

  double loss = 0.0;
  Matrix v(rows, d);  // v = (2/rows) (score - eps); dL/dtheta = d(v . grad E)/dtheta
  for (std::size_t i = 0; i < rows * d; ++i) {
    const double diff = eps.data()[i] - score.data()[i];
    loss += diff * diff / static_cast<double>(rows);
    v.data()[i] = 2.0 / static_cast<double>(rows) * (score.data()[i] - eps.data()[i]);
  }
  if (grads != nullptr) {
    nn::MlpDualCache dual;
    nn::dual_forward(net, cache, v, dual);
    Matrix cdot(rows, 1, 1.0);
    nn::dual_backward(net, cache, dual, cdot, grads);
  }
  return loss;
}

void draw_positive_batch(const Dataset& data, std::size_t batch,
                         RngStream& rng, const Normalization& norm,
                         Matrix& out) {
  out.resize(batch, data.layout_dim());
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t idx = rng.next_u64() % data.size();
    const double* src = data.rows.row(idx);
    double* dst = out.row(i);
    for (std::size_t j = 0; j < data.layout_dim(); ++j)
      dst[j] = (src[j] - norm.mean[j]) / norm.std[j];
  }
}

// Negatives: uniform on the normalized state box, context copied from the
// paired positive row.
void draw_negative_batch(const Matrix& positives, std::size_t state_dim,
                         const Normalization& norm, RngStream& rng,
                         Matrix& out) {
  out = positives;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    for (std::size_t j = 0; j < state_dim; ++j)
      r[j] = rng.uniform(norm.lo[j], norm.hi[j]);
  }
}

Matrix langevin_refine(const nn::MlpParams& net, const Normalization& norm,
                       std::size_t state_dim, Matrix init, std::size_t steps,
                       double step_size, RngStream& rng) {
  nn::MlpCache cache;
  const auto grad_fn = [&](const Matrix& x, Matrix& grad) {
    nn::forward(net, x, cache);
    Matrix dout(x.rows(), 1, 1.0);
    nn::backward(net, cache, dout, nullptr, &grad);
  };
  Vec lo(norm.lo.begin(), norm.lo.begin() + state_dim);
  Vec hi(norm.hi.begin(), norm.hi.begin() + state_dim);
  return langevin_chain(grad_fn, std::move(init), steps, step_size, rng, lo, hi);
}

}  // namespace

Matrix langevin_chain(const GradFn& grad_fn, Matrix init, std::size_t steps,
                      double step_size, RngStream& rng, const Vec& lo,
                      const Vec& hi) {
  const std::size_t rows = init.rows();
  const std::size_t free_dims = lo.size();  // trailing dims stay fixed
  Matrix grad;
  for (std::size_t s = 0; s < steps; ++s) {
    grad_fn(init, grad);
    for (std::size_t i = 0; i < rows; ++i) {
      double* r = init.row(i);
      const double* g = grad.row(i);
      for (std::size_t j = 0; j < free_dims; ++j) {
        if (!std::isfinite(g[j])) throw LangevinDiverged(s);
        double x = r[j] - 0.5 * step_size * g[j] +
                   std::sqrt(step_size) * rng.normal();
        x = std::min(std::max(x, lo[j]), hi[j]);
        r[j] = x;
      }
    }
  }
  return init;
}

double cd_loss(const EnergyModel& model, const Matrix& positives,
               const Matrix& negatives, double lambda_reg) {
  if (positives.rows() == 0 || negatives.rows() == 0)
    throw std::invalid_argument("cd_loss: empty batch");
  Matrix both(positives.rows() + negatives.rows(), positives.cols());
  for (std::size_t i = 0; i < positives.rows(); ++i)
    std::copy(positives.row(i), positives.row(i) + positives.cols(),
              both.row(i));
  for (std::size_t i = 0; i < negatives.rows(); ++i)
    std::copy(negatives.row(i), negatives.row(i) + negatives.cols(),
              both.row(positives.rows() + i));
  model.norm.normalize_rows(both);
  nn::MlpCache cache;
  return cd_loss_grads(model.net, both, positives.rows(), lambda_reg, nullptr,
                       cache);
}

double dsm_loss(const EnergyModel& model, const Matrix& positives,
                double sigma, RngStream& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("dsm_loss: sigma must be > 0");
  Matrix rows = positives;
  model.norm.normalize_rows(rows);
  return dsm_loss_grads(model.net, rows, sigma, rng, nullptr);
}

Matrix langevin_sample(const EnergyModel& model, Matrix init_normalized,
                       std::size_t steps, double step_size, RngStream& rng) {
  if (steps < 1) throw std::invalid_argument("langevin: steps must be >= 1");
  if (!(step_size > 0.0))
    throw std::invalid_argument("langevin: step_size must be > 0");
  return langevin_refine(model.net, model.norm, model.state_dim,
                         std::move(init_normalized), steps, step_size, rng);
}

TrainResult train_ebm(const Dataset& data, Conditioning conditioning,
                      const TrainConfig& cfg) {
  if (data.size() == 0) throw std::invalid_argument("train_ebm: empty dataset");
  if (data.state_dim == 0 || data.state_dim > data.layout_dim())
    throw std::invalid_argument("train_ebm: bad state_dim");

  TrainResult result;
  EnergyModel& model = result.model;
  model.conditioning = conditioning;
  model.state_dim = data.state_dim;
  model.norm = fit_normalization(data.rows);

  RngStream root(cfg.seed);
  RngStream init_rng = root.substream(0);
  std::vector<std::size_t> sizes;
  sizes.push_back(data.layout_dim());
  for (std::size_t h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(1);
  model.net = nn::MlpParams::random_init(sizes, init_rng);

  nn::MlpGrads grads(model.net);
  nn::MlpGrads dsm_grads(model.net);
  nn::Adam adam;
  adam.lr = cfg.lr;
  Vec params = model.net.pack();

  RngStream batch_rng = root.substream(1);
  RngStream noise_rng = root.substream(2);
  RngStream neg_rng = root.substream(3);

  Matrix pos, both, neg;
  nn::MlpCache cache;
  result.history.total.reserve(cfg.iters);
  result.history.cd.reserve(cfg.iters);
  result.history.dsm.reserve(cfg.iters);

  for (std::size_t iter = 0; iter < cfg.iters; ++iter) {
    draw_positive_batch(data, cfg.batch, batch_rng, model.norm, pos);
    draw_negative_batch(pos, data.state_dim, model.norm, neg_rng, neg);
    if (cfg.negatives == NegativeSampler::langevin) {
      neg = langevin_refine(model.net, model.norm, data.state_dim, neg,
                            cfg.langevin_steps, cfg.langevin_step_size,
                            neg_rng);
    }
    both.resize(2 * cfg.batch, data.layout_dim());
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      std::copy(pos.row(i), pos.row(i) + pos.cols(), both.row(i));
      std::copy(neg.row(i), neg.row(i) + neg.cols(), both.row(cfg.batch + i));
    }

    grads.zero();
    const double cd =
        cd_loss_grads(model.net, both, cfg.batch, cfg.lambda_reg, &grads, cache);
    double dsm = 0.0;
    Vec g = grads.pack();
    if (cfg.dsm_beta > 0.0) {
      dsm_grads.zero();
      dsm = dsm_loss_grads(model.net, pos, cfg.dsm_sigma, noise_rng, &dsm_grads);
      const Vec gd = dsm_grads.pack();
      kernels::axpy(cfg.dsm_beta, gd.data(), g.data(), g.size());
    }
    const double total = cd + cfg.dsm_beta * dsm;
    if (!std::isfinite(total)) throw TrainingDiverged(iter, "non-finite loss");
    result.history.cd.push_back(cd);
    result.history.dsm.push_back(dsm);
    result.history.total.push_back(total);

    adam.step(params, g);
    model.net.unpack(params);
  }
  return result;
}

// ---- phase energy and adapters ----

double phase_trajectory_energy(const EnergyModel& model, const Trajectory& traj,
                               const PhaseEnergyWeights& weights) {
  const std::size_t n = traj.n_states();
  Matrix rows(n, model.layout_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const double alpha =
        static_cast<double>(i) / static_cast<double>(traj.grid().n_steps);
    Vec x(traj.q(i).begin(), traj.q(i).end());
    const Vec row = model.assemble(x, {alpha});
    std::copy(row.begin(), row.end(), rows.row(i));
  }
  const Vec e = model.energy_rows(rows);
  double total = weights.energy * kernels::sum(e.data(), e.size());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t d = 0; d < traj.dim(); ++d) {
      const double diff = traj.q(i)[d] - traj.q(i + 1)[d];
      total += weights.smooth * diff * diff;
    }
  }
  return total;
}

Vec phase_trajectory_energy_grad(const EnergyModel& model,
                                 const Trajectory& traj,
                                 const PhaseEnergyWeights& weights) {
  const std::size_t n = traj.n_states();
  const std::size_t d = traj.dim();
  Matrix rows(n, model.layout_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const double alpha =
        static_cast<double>(i) / static_cast<double>(traj.grid().n_steps);
    Vec x(traj.q(i).begin(), traj.q(i).end());
    const Vec row = model.assemble(x, {alpha});
    std::copy(row.begin(), row.end(), rows.row(i));
  }
  Matrix grad;
  model.energy_rows_grad(rows, grad);
  Vec out(traj.flat_size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      out[i * 2 * d + j] += weights.energy * grad(i, j);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = traj.q(i)[j] - traj.q(i + 1)[j];
      out[i * 2 * d + j] += 2.0 * weights.smooth * diff;
      out[(i + 1) * 2 * d + j] -= 2.0 * weights.smooth * diff;
    }
  }
  return out;
}

PointEnergy::PointEnergy(std::shared_ptr<const EnergyModel> model, Vec context)
    : model_(std::move(model)), context_(std::move(context)) {}

std::size_t PointEnergy::input_dim() const { return 2; }

void PointEnergy::eval(const Matrix& x, Vec& energy, Matrix* grad) const {
  const std::size_t rows = x.rows();
  Matrix assembled(rows, model_->layout_dim());
  for (std::size_t i = 0; i < rows; ++i) {
    const Vec row = model_->assemble({x(i, 0), x(i, 1)}, context_);
    std::copy(row.begin(), row.end(), assembled.row(i));
  }
  if (grad == nullptr) {
    energy = model_->energy_rows(assembled);
    return;
  }
  Matrix g;
  energy = model_->energy_rows_grad(assembled, g);
  grad->resize(rows, 2);
  for (std::size_t i = 0; i < rows; ++i) {
    const Vec gw =
        model_->state_grad_to_world({g(i, 0), g(i, 1)}, context_);
    (*grad)(i, 0) = gw[0];
    (*grad)(i, 1) = gw[1];
  }
}

ComposedEnergy::ComposedEnergy(std::vector<Factor> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty())
    throw std::invalid_argument("compose_energies: no factors");
}

std::size_t ComposedEnergy::input_dim() const { return 2; }

void ComposedEnergy::eval(const Matrix& x, Vec& energy, Matrix* grad) const {
  energy.assign(x.rows(), 0.0);
  if (grad != nullptr) {
    grad->resize(x.rows(), x.cols());
    grad->fill(0.0);
  }
  Vec e;
  Matrix g;
  for (const auto& f : factors_) {
    PointEnergy pe(f.model, f.context);
    pe.eval(x, e, grad != nullptr ? &g : nullptr);
    kernels::axpy(f.weight, e.data(), energy.data(), e.size());
    if (grad != nullptr)
      kernels::axpy(f.weight, g.data(), grad->data(), g.size());
  }
}

}  // namespace mopt::ebm
