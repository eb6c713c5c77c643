#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vfc/simulation.hpp"

using namespace vfc;

namespace {

// Closed form of x' = -a x + b sin t.
double linear_sine_solution(double x0, double a, double b, double t) {
  const double denom = a * a + 1.0;
  const double part = b * (a * std::sin(t) - std::cos(t)) / denom;
  const double part0 = -b / denom;
  return (x0 - part0) * std::exp(-a * t) + part;
}

RegressorModel zero_regressor() {
  RegressorModel m;
  m.name = "zero";
  m.state_dim = 1;
  m.param_dim = 2;
  m.psi = [](const Eigen::VectorXd&, double) { return Eigen::MatrixXd::Zero(1, 2); };
  return m;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("rk4_step basics") {
  auto decay = [](double, const Eigen::VectorXd& y) { return (-y).eval(); };
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::VectorXd next = rk4_step(decay, one, 0.0, 0.1);
  CHECK(std::abs(next(0) - 0.9048375) <= 1e-15);

  auto zero = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Zero(y.size()).eval();
  };
  CHECK(rk4_step(zero, one, 0.0, 0.5)(0) == 1.0);

  auto unit = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Ones(y.size()).eval();
  };
  CHECK(rk4_step(unit, Eigen::VectorXd::Zero(1), 0.0, 0.25)(0) == doctest::Approx(0.25));

  auto bad = [](double, const Eigen::VectorXd& y) {
    return (y * std::numeric_limits<double>::quiet_NaN()).eval();
  };
  CHECK_THROWS_AS(rk4_step(bad, one, 0.0, 0.1), NumericalBlowup);
}

TEST_CASE("stiffness guard") {
  const RegressorModel model = scalar_linear_sine();
  const Graph ring = ring_graph(3);  // lambda_N = 3
  NetworkState init;
  init.x = Eigen::MatrixXd::Zero(1, 3);
  init.theta = Eigen::Vector2d(1, 1).replicate(1, 3);

  IntegratorConfig cfg;
  cfg.dt = 0.01;  // limit for k = 50: 0.5/150 = 3.33e-3
  cfg.t_end = 1.0;
  CHECK_THROWS_AS(simulate(model, ring, init, {50.0, 0.0}, cfg), StiffnessGuard);

  cfg.stiffness_guard = false;
  cfg.t_end = 0.05;
  CHECK_NOTHROW(simulate(model, ring, init, {50.0, 0.0}, cfg));
}

TEST_CASE("consensus initial conditions stay on the consensus manifold") {
  const RegressorModel model = scalar_linear_sine();
  const Graph ring = ring_graph(3);
  NetworkState init;
  init.x = Eigen::MatrixXd::Constant(1, 3, 0.7);
  init.theta = Eigen::Vector2d(1.2, 0.9).replicate(1, 3);
  IntegratorConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 10.0;
  const Trajectory traj =
      simulate(model, ring, init, {50.0, CouplingGains::auto_g(50.0)}, cfg);
  CHECK(traj.sup_norm_chi_tilde <= 1e-10);
  CHECK(traj.sup_mean_drift <= 1e-10);
}

TEST_CASE("uncoupled agents follow the closed-form solution") {
  const RegressorModel model = scalar_linear_sine();
  const Graph ring = ring_graph(3);
  NetworkState init;
  init.x.resize(1, 3);
  init.x << 1.0, -0.4, 0.2;
  init.theta.resize(2, 3);
  init.theta << 1.0, 0.5, 2.0, 1.0, 0.7, -0.3;

  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 10.0;
  const Trajectory traj = simulate(model, ring, init, {0.0, 0.0}, cfg);
  const double t_end = traj.times.back();
  for (int i = 0; i < 3; ++i) {
    const double want =
        linear_sine_solution(init.x(0, i), init.theta(0, i), init.theta(1, i), t_end);
    CHECK(std::abs(traj.x.back()(0, i) - want) <= 1e-6);
  }
}

TEST_CASE("recording stride keeps first and last samples") {
  const RegressorModel model = scalar_linear_sine();
  const Graph ring = ring_graph(3);
  NetworkState init;
  init.x = Eigen::MatrixXd::Constant(1, 3, 0.2);
  init.theta = Eigen::Vector2d(1, 1).replicate(1, 3);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 1.0;
  SimulateOptions opts;
  opts.record_every = 7;
  const Trajectory traj = simulate(model, ring, init, {1.0, 0.0}, cfg, opts);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  CHECK(traj.total_steps == 100);
  // Strided interior records: 0, 7 dt, 14 dt, ...
  CHECK(traj.times[1] == doctest::Approx(0.07));
}

TEST_CASE("blended trajectory with constant mean parameter hits the closed form") {
  const RegressorModel model = scalar_linear_sine();
  IntegratorConfig cfg;
  const int steps = 3200;
  cfg.dt = M_PI / steps;
  cfg.t_end = M_PI;
  const Series s = blended_trajectory(model, Eigen::Vector2d(1.0, 1.0),
                                      Eigen::VectorXd::Zero(1), cfg);
  const double want = (std::sin(M_PI) - std::cos(M_PI) + std::exp(-M_PI)) / 2.0;
  CHECK(std::abs(s.values.back()(0) - want) <= 1e-6);
  CHECK(want == doctest::Approx(0.5216).epsilon(1e-4));
}

TEST_CASE("blended trajectory with a recorded parameter series") {
  const RegressorModel model = scalar_linear_sine();
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 5.0;
  // Identical constant series must reproduce the constant-parameter variant.
  std::vector<Eigen::VectorXd> series(501, Eigen::Vector2d(0.9, 1.1));
  const Series a = blended_trajectory(model, series, Eigen::VectorXd::Constant(1, 0.4), cfg);
  const Series b = blended_trajectory(model, Eigen::Vector2d(0.9, 1.1),
                                      Eigen::VectorXd::Constant(1, 0.4), cfg);
  CHECK((a.values.back() - b.values.back()).norm() == 0.0);

  CHECK_THROWS_AS(blended_trajectory(model, std::vector<Eigen::VectorXd>(10),
                                     Eigen::VectorXd::Zero(1), cfg),
                  ShapeError);
}

TEST_CASE("zero regressor keeps the blended state constant") {
  IntegratorConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 3.0;
  const Series s = blended_trajectory(zero_regressor(), Eigen::Vector2d(4.0, -1.0),
                                      Eigen::VectorXd::Constant(1, 1.25), cfg);
  CHECK(s.values.back()(0) == 1.25);
}

TEST_CASE("reference trajectory: pure decay and contraction gap") {
  const RegressorModel model = scalar_linear_sine();
  IntegratorConfig cfg;
  cfg.dt = 0.002;
  cfg.t_end = 6.0;

  const Series dec = reference_trajectory(model, Eigen::Vector2d(1.3, 0.0),
                                          Eigen::VectorXd::Constant(1, 0.8), cfg);
  CHECK(std::abs(dec.values.back()(0) - 0.8 * std::exp(-1.3 * 6.0)) <= 1e-9);

  const Series s0 = reference_trajectory(model, Eigen::Vector2d(1.0, 1.0),
                                         Eigen::VectorXd::Zero(1), cfg);
  const Series s1 = reference_trajectory(model, Eigen::Vector2d(1.0, 1.0),
                                         Eigen::VectorXd::Constant(1, 1.0), cfg);
  for (std::size_t j = 0; j < s0.size(); ++j) {
    const double gap = std::abs(s1.values[j](0) - s0.values[j](0));
    CHECK(gap <= std::exp(-s0.times[j]) * 1.0 * (1.0 + 1e-3));
  }
}

TEST_CASE("integrator order: halving dt cuts the error by about 16") {
  const RegressorModel model = scalar_linear_sine();
  const Graph single = build_graph(1, {});
  NetworkState init;
  init.x = Eigen::MatrixXd::Constant(1, 1, 1.0);
  init.theta = Eigen::Vector2d(1.0, 1.0).replicate(1, 1);

  auto end_value = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 3.0;
    return simulate(model, single, init, {0.0, 0.0}, cfg).x.back()(0, 0);
  };
  const double ref = end_value(0.1 / 16.0);
  const double e1 = std::abs(end_value(0.1) - ref);
  const double e2 = std::abs(end_value(0.05) - ref);
  CHECK(e1 / e2 >= 12.0);
  CHECK(e1 / e2 <= 20.0);
}

TEST_CASE("determinism: identical runs produce identical trajectories") {
  const RegressorModel model = scalar_linear_sine();
  const Graph ring = ring_graph(3);
  NetworkState init;
  init.x.resize(1, 3);
  init.x << 1.0, -0.5, 2.0;
  init.theta.resize(2, 3);
  init.theta << 1.5, 1.0, 0.5, 0.8, 1.2, 1.0;
  IntegratorConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 5.0;
  const CouplingGains gains{50.0, CouplingGains::auto_g(50.0)};
  const Trajectory a = simulate(model, ring, init, gains, cfg);
  const Trajectory b = simulate(model, ring, init, gains, cfg);
  REQUIRE(a.records() == b.records());
  for (std::size_t j = 0; j < a.records(); ++j) {
    CHECK((a.x[j] - b.x[j]).norm() == 0.0);
    CHECK((a.theta[j] - b.theta[j]).norm() == 0.0);
  }
}

TEST_CASE("blowup attaches the partial trajectory") {
  const RegressorModel model = scalar_linear_sine();
  const Graph single = build_graph(1, {});
  NetworkState init;
  init.x = Eigen::MatrixXd::Constant(1, 1, 1.0);
  init.theta = Eigen::Vector2d(-5.0, 0.0).replicate(1, 1);  // x' = +5x, divergent
  IntegratorConfig cfg;
  cfg.dt = 1.0;
  cfg.t_end = 500.0;
  try {
    simulate(model, single, init, {0.0, 0.0}, cfg);
    FAIL("expected NumericalBlowup");
  } catch (const NumericalBlowup& e) {
    CHECK(e.t_last > 0.0);
    REQUIRE(e.partial != nullptr);
    CHECK(e.partial->records() > 0);
    CHECK(e.partial->times.back() <= e.t_last + 1.0);
  }
}

}  // TEST_SUITE
