#include "mopt/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace mopt {

TimeGrid build_time_grid(double t0, double dt, std::size_t n_steps) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("time grid: dt must be positive");
  if (n_steps < 1) throw std::invalid_argument("time grid: n_steps must be >= 1");
  if (!std::isfinite(t0)) throw std::invalid_argument("time grid: t0 not finite");
  return TimeGrid{t0, dt, n_steps};
}

State::State(Vec q_in, Vec qdot_in) : q(std::move(q_in)), qdot(std::move(qdot_in)) {
  if (q.size() != qdot.size() || q.empty())
    throw std::invalid_argument("state: q and qdot must share dimension >= 1");
}

Trajectory::Trajectory(TimeGrid grid, std::size_t dim)
    : grid_(grid), dim_(dim), flat_(grid.n_states() * 2 * dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("trajectory: dimension must be >= 1");
}

Trajectory::Trajectory(TimeGrid grid, std::size_t dim, Vec flat)
    : grid_(grid), dim_(dim), flat_(std::move(flat)) {
  if (flat_.size() != grid.n_states() * 2 * dim)
    throw std::invalid_argument("trajectory: flat vector has wrong length");
}

State Trajectory::state(std::size_t i) const {
  const auto qi = q(i);
  const auto vi = qdot(i);
  return State(Vec(qi.begin(), qi.end()), Vec(vi.begin(), vi.end()));
}

void Trajectory::set_state(std::size_t i, const State& s) {
  if (s.dim() != dim_) throw std::invalid_argument("set_state: dimension mismatch");
  std::copy(s.q.begin(), s.q.end(), q(i).begin());
  std::copy(s.qdot.begin(), s.qdot.end(), qdot(i).begin());
}

Vec flatten(const Trajectory& traj) { return traj.flat(); }

Trajectory unflatten(const TimeGrid& grid, std::size_t dim, const Vec& flat) {
  return Trajectory(grid, dim, flat);
}

std::string trajectory_to_json(const Trajectory& traj) {
  nlohmann::json j;
  j["t0"] = traj.grid().t0;
  j["dt"] = traj.grid().dt;
  auto states = nlohmann::json::array();
  for (std::size_t i = 0; i < traj.n_states(); ++i) {
    auto row = nlohmann::json::array();
    for (double v : traj.q(i)) row.push_back(v);
    for (double v : traj.qdot(i)) row.push_back(v);
    states.push_back(std::move(row));
  }
  j["states"] = std::move(states);
  return j.dump();
}

Trajectory trajectory_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto& states = j.at("states");
  if (states.empty() || states.size() < 2)
    throw std::invalid_argument("trajectory json: need at least two states");
  const std::size_t two_d = states.front().size();
  if (two_d == 0 || two_d % 2 != 0)
    throw std::invalid_argument("trajectory json: state rows must be even length");
  const std::size_t dim = two_d / 2;
  const TimeGrid grid =
      build_time_grid(j.at("t0").get<double>(), j.at("dt").get<double>(),
                      states.size() - 1);
  Trajectory traj(grid, dim);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& row = states[i];
    if (row.size() != two_d)
      throw std::invalid_argument("trajectory json: ragged state rows");
    for (std::size_t d = 0; d < dim; ++d) traj.q(i)[d] = row[d].get<double>();
    for (std::size_t d = 0; d < dim; ++d)
      traj.qdot(i)[d] = row[dim + d].get<double>();
  }
  return traj;
}

}  // namespace mopt
