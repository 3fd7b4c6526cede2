#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mopt/matrix.hpp"

namespace mopt {

// Uniform time grid with n_steps + 1 support times t0, t0+dt, ...
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  std::size_t n_steps = 0;

  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double horizon_end() const { return time(n_steps); }
  std::size_t n_states() const { return n_steps + 1; }

  bool operator==(const TimeGrid&) const = default;
};

TimeGrid build_time_grid(double t0, double dt, std::size_t n_steps);

// One support state: configuration and velocity, each of dimension d.
struct State {
  Vec q;
  Vec qdot;

  State() = default;
  State(Vec q_in, Vec qdot_in);
  std::size_t dim() const { return q.size(); }
};

// Discrete-time trajectory over a uniform grid. States are stored flattened
// as [q_0; qdot_0; q_1; qdot_1; ...], the block order used by the GP
// precision assembly, so planner math can work on the raw vector directly.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(TimeGrid grid, std::size_t dim);
  Trajectory(TimeGrid grid, std::size_t dim, Vec flat);

  const TimeGrid& grid() const { return grid_; }
  std::size_t dim() const { return dim_; }
  std::size_t n_states() const { return grid_.n_states(); }
  std::size_t flat_size() const { return flat_.size(); }

  std::span<double> q(std::size_t i) {
    return {flat_.data() + i * 2 * dim_, dim_};
  }
  std::span<const double> q(std::size_t i) const {
    return {flat_.data() + i * 2 * dim_, dim_};
  }
  std::span<double> qdot(std::size_t i) {
    return {flat_.data() + i * 2 * dim_ + dim_, dim_};
  }
  std::span<const double> qdot(std::size_t i) const {
    return {flat_.data() + i * 2 * dim_ + dim_, dim_};
  }

  State state(std::size_t i) const;
  void set_state(std::size_t i, const State& s);

  Vec& flat() { return flat_; }
  const Vec& flat() const { return flat_; }

  bool operator==(const Trajectory&) const = default;

 private:
  TimeGrid grid_;
  std::size_t dim_ = 0;
  Vec flat_;
};

// Stacked vector copy in the [q_i; qdot_i] block order.
Vec flatten(const Trajectory& traj);
Trajectory unflatten(const TimeGrid& grid, std::size_t dim, const Vec& flat);

std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& text);

}  // namespace mopt
