#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mopt/cholesky.hpp"
#include "mopt/matrix.hpp"
#include "mopt/rng.hpp"
#include "mopt/trajectory.hpp"

using namespace mopt;

TEST_CASE("build_time_grid spans the stated support times") {
  const TimeGrid g = build_time_grid(0.0, 0.02, 64);
  CHECK(g.n_states() == 65);
  CHECK(g.time(64) == doctest::Approx(1.28).epsilon(1e-12));

  const TimeGrid g2 = build_time_grid(0.0, 1.0, 1);
  CHECK(g2.time(0) == 0.0);
  CHECK(g2.time(1) == 1.0);

  const TimeGrid g3 = build_time_grid(5.0, 0.5, 2);
  CHECK(g3.time(0) == 5.0);
  CHECK(g3.time(1) == 5.5);
  CHECK(g3.time(2) == 6.0);

  CHECK_THROWS_AS(build_time_grid(0.0, 0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_time_grid(0.0, -0.1, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_time_grid(0.0, 0.1, 0), std::invalid_argument);
}

TEST_CASE("flatten uses the per-step [q; qdot] block order") {
  Trajectory traj(build_time_grid(0.0, 1.0, 2), 1);
  traj.set_state(0, State({1.0}, {0.0}));
  traj.set_state(1, State({2.0}, {0.0}));
  traj.set_state(2, State({3.0}, {0.0}));
  const Vec flat = flatten(traj);
  CHECK(flat == Vec{1.0, 0.0, 2.0, 0.0, 3.0, 0.0});

  const Trajectory zero(build_time_grid(0.0, 0.5, 3), 2);
  for (double v : flatten(zero)) CHECK(v == 0.0);
}

TEST_CASE("flatten/unflatten round-trip on random trajectories") {
  RngStream rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t dim = 1 + rng.next_u64() % 4;
    const std::size_t steps = 1 + rng.next_u64() % 9;
    Trajectory traj(build_time_grid(0.0, 0.1, steps), dim);
    for (auto& v : traj.flat()) v = rng.normal();
    const Trajectory back = unflatten(traj.grid(), dim, flatten(traj));
    CHECK(back == traj);
  }
}

TEST_CASE("trajectory json round trip") {
  Trajectory traj(build_time_grid(0.25, 0.5, 2), 2);
  RngStream rng(9);
  for (auto& v : traj.flat()) v = rng.normal();
  const Trajectory back = trajectory_from_json(trajectory_to_json(traj));
  CHECK(back.grid().t0 == traj.grid().t0);
  CHECK(back.grid().dt == traj.grid().dt);
  for (std::size_t i = 0; i < traj.flat_size(); ++i)
    CHECK(back.flat()[i] == traj.flat()[i]);
}

TEST_CASE("cholesky factors SPD matrices and flags indefinite ones") {
  const Matrix eye = Matrix::identity(5);
  const Matrix l_eye = cholesky_spd(eye);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(l_eye(i, j) == (i == j ? 1.0 : 0.0));

  Matrix m(2, 2);
  m(0, 0) = 4.0; m(0, 1) = 2.0; m(1, 0) = 2.0; m(1, 1) = 3.0;
  const Matrix l = cholesky_spd(m);
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(1, 0) == doctest::Approx(1.0));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
  // L L^T == M
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 2; ++k) s += l(i, k) * l(j, k);
      CHECK(s == doctest::Approx(m(i, j)).epsilon(1e-12));
    }

  Matrix indef(2, 2);
  indef(0, 0) = 1.0; indef(0, 1) = 2.0; indef(1, 0) = 2.0; indef(1, 1) = 1.0;
  CHECK_THROWS_AS((void)cholesky_spd(indef), FactorizationError);
  try {
    (void)cholesky_spd(indef);
  } catch (const FactorizationError& e) {
    CHECK(e.pivot == 1);
  }
}

TEST_CASE("triangular solves invert the factor") {
  Matrix m(2, 2);
  m(0, 0) = 4.0; m(0, 1) = 2.0; m(1, 0) = 2.0; m(1, 1) = 3.0;
  const Matrix l = cholesky_spd(m);

  const Vec x = solve_triangular(l, Vec{2.0, 1.0}, false);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(0.0));

  const Vec idb = solve_triangular(Matrix::identity(3), Vec{1.0, 2.0, 3.0}, false);
  CHECK(idb == Vec{1.0, 2.0, 3.0});

  Matrix diag(2, 2);
  diag(0, 0) = 2.0; diag(1, 1) = 4.0;
  const Vec dt = solve_triangular(diag, Vec{2.0, 8.0}, true);
  CHECK(dt[0] == doctest::Approx(1.0));
  CHECK(dt[1] == doctest::Approx(2.0));

  CHECK_THROWS_AS((void)solve_triangular(l, Vec{1.0, 2.0, 3.0}, false),
                  std::invalid_argument);
}

TEST_CASE("cholesky solve reproduces the identity on random SPD systems") {
  RngStream rng(17);
  for (std::size_t n : {3u, 16u, 64u, 257u, 512u}) {
    // A = B B^T + n I is SPD
    Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.normal();
    Matrix a(n, n);
    kernels::gemm_nt(b.data(), b.data(), a.data(), n, n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);

    const Matrix l = cholesky_spd(a);
    Vec rhs(n);
    for (auto& v : rhs) v = rng.normal();
    const Vec x = solve_cholesky(l, rhs);
    const Vec back = matvec(a, x);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(back[i] == doctest::Approx(rhs[i]).epsilon(1e-8));
  }
}

TEST_CASE("multi-rhs triangular solve matches the single-vector path") {
  RngStream rng(23);
  const std::size_t n = 40, k = 7;
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.normal();
  Matrix a(n, n);
  kernels::gemm_nt(b.data(), b.data(), a.data(), n, n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
  const Matrix l = cholesky_spd(a);

  for (bool transpose : {false, true}) {
    Matrix rhs(n, k);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) rhs(i, j) = rng.normal();
    Matrix solved = rhs;
    solve_triangular_multi(l, solved, transpose);
    for (std::size_t j = 0; j < k; ++j) {
      Vec col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = rhs(i, j);
      const Vec want = solve_triangular(l, col, transpose);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(solved(i, j) == doctest::Approx(want[i]).epsilon(1e-11));
    }
  }
}

TEST_CASE("rng streams are deterministic and substreams independent") {
  RngStream a(1234), b(1234);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(1234);
  (void)c.next_u64();  // consumption must not affect substream derivation
  RngStream d(1234);
  RngStream sc = c.substream(5), sd = d.substream(5);
  for (int i = 0; i < 10; ++i) CHECK(sc.next_u64() == sd.next_u64());

  RngStream s0 = c.substream(0), s1 = c.substream(1);
  bool any_different = false;
  for (int i = 0; i < 10; ++i)
    if (s0.next_u64() != s1.next_u64()) any_different = true;
  CHECK(any_different);
}

TEST_CASE("rng normals have roughly standard moments") {
  RngStream rng(99);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform01 stays in [0, 1)") {
  RngStream rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
