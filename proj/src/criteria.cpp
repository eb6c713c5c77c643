#include "vfc/criteria.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "vfc/analysis.hpp"
#include "vfc/graph.hpp"
#include "vfc/io.hpp"
#include "vfc/model.hpp"
#include "vfc/scenario.hpp"
#include "vfc/simulation.hpp"
#include "vfc/transforms.hpp"

namespace vfc {

namespace {

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Graph random_connected_graph(std::mt19937_64& rng, int n) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng() % static_cast<unsigned>(i + 1)]);
  }
  std::set<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) {
    int a = order[i], b = order[rng() % static_cast<unsigned>(i)];
    if (a > b) std::swap(a, b);
    edges.insert({a, b});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (uniform(rng, 0.0, 1.0) < 0.3) edges.insert({i, j});
    }
  }
  return build_graph(n, std::vector<std::pair<int, int>>(edges.begin(), edges.end()));
}

// The fig2 initial condition triple, used by several criteria.
NetworkState fig2_initial() {
  NetworkState s;
  s.x.resize(1, 3);
  s.x << 1.0, -0.5, 1.5;
  s.theta.resize(2, 3);
  s.theta << 1.5, 1.0, 0.5, 0.8, 1.2, 1.0;
  return s;
}

ScenarioConfig fig2_config(const CriteriaOptions& opts, const char* tag) {
  ScenarioConfig cfg = load_config("fig2");
  if (opts.quick) cfg.t_end *= 0.5;
  if (!opts.out_dir.empty()) {
    cfg.csv_path = opts.out_dir + "/" + tag + ".csv";
    cfg.plot_path = opts.out_dir + "/" + tag + ".svg";
  } else {
    cfg.csv_path.clear();
    cfg.plot_path.clear();
  }
  return cfg;
}

double tol_scale(const CriteriaOptions& opts) { return opts.quick ? 5.0 : 1.0; }

// Shared measurement of the scalar-example problem instance
// (N = 3 ring, M_x = 2, M_theta = 2, delta = 0.2): sampled contraction
// margin, PE constants along reference solutions, deviation bounds.
struct ScalarInstance {
  ProblemInstance prob;
  RegressorModel model;
  LaplacianDecomposition dec;
  DecayBounds bounds;
  PBounds pb;
};

ScalarInstance scalar_example_instance() {
  ScalarInstance inst;
  inst.model = scalar_linear_sine();
  const Graph graph = ring_graph(3);
  inst.dec = decompose(graph);

  const double M_x = 2.0, M_theta = 2.0, delta = 0.2;
  std::vector<Eigen::VectorXd> theta_stars;
  for (double a : {0.5, 2.0}) {
    for (double b : {0.5, 1.5}) theta_stars.push_back(Eigen::Vector2d(a, b));
  }
  theta_stars.push_back(Eigen::Vector2d(1.0, 1.0));

  std::vector<Eigen::VectorXd> grid;
  std::vector<double> t_grid;
  for (int i = 0; i < 201; ++i) {
    grid.push_back(Eigen::VectorXd::Constant(1, -6.0 + 12.0 * i / 200.0));
  }
  for (int i = 0; i < 64; ++i) t_grid.push_back(2.0 * M_PI * i / 64.0);
  const ContractionSpec con =
      certify_contraction(inst.model, theta_stars, grid, t_grid);
  const double c = con.c;

  const double tau = 2.0 * M_PI;
  const PESpec pe = measure_pe(inst.model, theta_stars, M_x, tau, 12.0 * tau,
                               tau / 1024.0);
  const double c1 = pe.c1, c2 = pe.c2;

  const double M_s = std::max(M_x, inst.model.rho(0.0) * M_theta / c);
  const TildePsiBounds tpb = sample_tilde_psi_bounds(
      inst.model, inst.dec, M_s + delta, std::sqrt(3.0) * M_x + delta, t_grid);

  inst.prob.N = 3;
  inst.prob.lambda2 = inst.dec.lambda2;
  inst.prob.lambdaN = inst.dec.lambdaN;
  inst.prob.M_x = M_x;
  inst.prob.M_theta = M_theta;
  inst.prob.delta = delta;
  inst.prob.rho = inst.model.rho;
  inst.prob.c = c;
  inst.prob.c1 = c1;
  inst.prob.c2 = c2;
  inst.prob.tau = tau;
  inst.prob.L_psi = 1.0;  // |d psi / d s| = 1 everywhere for this model
  inst.prob.M_tilde_psi = tpb.M_tilde_psi;
  inst.prob.L_tilde_psi = tpb.L_tilde_psi;
  inst.bounds = decay_bounds(c1, c2, tau, inst.model.rho(M_s + delta), c, 1.0, M_x);
  inst.pb = p_bounds(inst.bounds);
  return inst;
}

// P(t) on the recorded grid of a run, by backward integration at a finer
// internal step (dt_rec / fine_factor) with a contamination pad.
std::vector<Eigen::MatrixXd> p_path_on_grid(const RegressorModel& model,
                                            const Eigen::VectorXd& theta_star,
                                            const Eigen::VectorXd& s0, double t_end,
                                            double dt_rec, double g, double pad,
                                            int fine_factor,
                                            const Eigen::MatrixXd& terminal) {
  const double dt_fine = dt_rec / fine_factor;
  IntegratorConfig icfg;
  icfg.dt = dt_fine / 2.0;
  icfg.t_end = t_end + pad;
  const Series ref = reference_trajectory(model, theta_star, s0, icfg);
  std::vector<Eigen::MatrixXd> psi_half(ref.size());
  for (std::size_t q = 0; q < ref.size(); ++q) {
    psi_half[q] = model.psi_at(ref.values[q], ref.times[q]);
  }
  if (psi_half.size() % 2 == 0) psi_half.pop_back();
  const auto fine_path = p_matrix_path(psi_half, dt_fine, g, terminal);
  const auto n_rec = static_cast<std::size_t>(std::llround(t_end / dt_rec));
  std::vector<Eigen::MatrixXd> out(n_rec + 1);
  for (std::size_t q = 0; q <= n_rec; ++q) {
    out[q] = fine_path[std::min(q * fine_factor, fine_path.size() - 1)];
  }
  return out;
}

using Clock = std::chrono::steady_clock;

CriterionResult finish(CriterionResult res, bool pass, const std::string& detail,
                       Clock::time_point start) {
  res.pass = pass;
  res.detail = detail;
  res.seconds =
      std::chrono::duration_cast<std::chrono::duration<double>>(Clock::now() - start)
          .count();
  return res;
}

// ----------------------------------------------------------- criteria 1..14

CriterionResult c01_transform_algebra(const CriteriaOptions& opts) {
  CriterionResult res{1, "transform algebra round trips", false, false, "", 0.0};
  const auto start = Clock::now();
  std::mt19937_64 rng(opts.seed ? opts.seed : 101);
  const int cases = opts.quick ? 500 : 1000;
  double worst_rt = 0.0, worst_dec = 0.0;
  for (int rep = 0; rep < cases; ++rep) {
    const int N = 2 + static_cast<int>(rng() % 7);
    const int n = 1 + static_cast<int>(rng() % 3);
    const int p = 1 + static_cast<int>(rng() % 3);
    const Graph g = random_connected_graph(rng, N);
    const LaplacianDecomposition dec = decompose(g);

    const Eigen::MatrixXd& r = dec.r_matrix;
    worst_dec = std::max(
        worst_dec,
        (r.transpose() * r - Eigen::MatrixXd::Identity(N - 1, N - 1)).norm() / 1e-10);
    worst_dec = std::max(
        worst_dec, (r.transpose() * Eigen::VectorXd::Ones(N)).norm() / 1e-10);
    worst_dec = std::max(
        worst_dec,
        (dec.laplacian - r * dec.lambda.asDiagonal() * r.transpose()).norm() / 1e-9);
    if (dec.lambda.minCoeff() <= 1e-9) worst_dec = std::max(worst_dec, 2.0);

    Eigen::MatrixXd x(n, N), th(p, N);
    for (int i = 0; i < N; ++i) {
      for (int q = 0; q < n; ++q) x(q, i) = uniform(rng, -10.0, 10.0);
      for (int q = 0; q < p; ++q) th(q, i) = uniform(rng, -10.0, 10.0);
    }
    const SyncCoords sc = to_sync_coords(dec, x);
    const ParamCoords pc = to_param_coords(dec, th);
    worst_rt = std::max(worst_rt, (from_sync_coords(dec, sc) - x).norm() /
                                      (1e-12 * std::max(1.0, x.norm())));
    worst_rt = std::max(worst_rt, (from_param_coords(dec, pc) - th).norm() /
                                      (1e-12 * std::max(1.0, th.norm())));
  }
  return finish(res, worst_rt <= 1.0 && worst_dec <= 1.0,
                fmt("%d cases; worst round-trip at %.3f of 1e-12 rel, "
                    "worst decomposition residual at %.3f of tolerance",
                    cases, worst_rt, worst_dec),
                start);
}

CriterionResult c02_transformed_dynamics(const CriteriaOptions& opts) {
  CriterionResult res{2, "transformed-dynamics oracle", false, false, "", 0.0};
  const auto start = Clock::now();
  const RegressorModel model = scalar_linear_sine();
  const Graph graph = ring_graph(3);
  const LaplacianDecomposition dec = decompose(graph);
  const CouplingGains gains{5.0, CouplingGains::auto_g(5.0)};
  const NetworkState init = fig2_initial();

  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = opts.quick ? 5.0 : 10.0;
  const Trajectory direct = simulate(model, graph, init, gains, cfg);

  auto pack = [](const TransformedState& s) {
    Eigen::VectorXd y(1 + 2 + 2 + 4);
    y << s.chi_o, s.chi_tilde, s.vartheta_o, s.vartheta_tilde;
    return y;
  };
  auto unpack = [](const Eigen::VectorXd& y) {
    return TransformedState{y.segment(0, 1), y.segment(1, 2), y.segment(3, 2),
                            y.segment(5, 4)};
  };
  auto rhs = [&](double t, const Eigen::VectorXd& y) {
    return pack(transformed_rhs(model, dec, unpack(y), t, gains));
  };
  const SyncCoords sc0 = to_sync_coords(dec, init.x);
  const ParamCoords pc0 = to_param_coords(dec, init.theta);
  Eigen::VectorXd y = pack({sc0.chi_o, sc0.chi_tilde, pc0.vartheta_o, pc0.vartheta_tilde});
  double sup = 0.0;
  for (std::size_t j = 0; j + 1 < direct.records(); ++j) {
    y = rk4_step(rhs, y, direct.times[j], cfg.dt);
    const TransformedState s = unpack(y);
    const SyncCoords sc = to_sync_coords(dec, direct.x[j + 1]);
    const ParamCoords pc = to_param_coords(dec, direct.theta[j + 1]);
    sup = std::max({sup, (s.chi_o - sc.chi_o).norm(), (s.chi_tilde - sc.chi_tilde).norm(),
                    (s.vartheta_o - pc.vartheta_o).norm(),
                    (s.vartheta_tilde - pc.vartheta_tilde).norm()});
  }
  const double tol = 1e-6 * tol_scale(opts);
  return finish(res, sup <= tol, fmt("sup-norm gap %.3e (tolerance %.1e)", sup, tol),
                start);
}

CriterionResult c03_equilibrium_invariance(const CriteriaOptions& opts) {
  CriterionResult res{3, "consensus equilibrium invariance", false, false, "", 0.0};
  const auto start = Clock::now();
  const RegressorModel model = scalar_linear_sine();
  const Graph graph = ring_graph(3);
  NetworkState init;
  init.x = Eigen::MatrixXd::Constant(1, 3, 0.7);
  init.theta = Eigen::Vector2d(1.2, 0.9).replicate(1, 3);
  IntegratorConfig cfg;
  cfg.dt = 0.4 / 150.0;
  cfg.t_end = opts.quick ? 25.0 : 50.0;
  const Trajectory traj =
      simulate(model, graph, init, {50.0, CouplingGains::auto_g(50.0)}, cfg,
               {std::max(1, static_cast<int>(cfg.t_end / cfg.dt / 5000)), true, false});
  const double tol = 1e-10 * tol_scale(opts);
  return finish(res,
                traj.sup_norm_chi_tilde <= tol && traj.sup_mean_drift <= tol,
                fmt("sup|chi~| = %.3e, sup mean drift = %.3e (tolerance %.1e)",
                    traj.sup_norm_chi_tilde, traj.sup_mean_drift, tol),
                start);
}

CriterionResult c04_parameter_consensus(const CriteriaOptions& opts) {
  CriterionResult res{4, "parameter consensus at k = 50", false, false, "", 0.0};
  const auto start = Clock::now();
  const ScenarioConfig cfg = fig2_config(opts, "fig2");
  const auto [traj, rep] = run_scenario(cfg);
  const double ts = tol_scale(opts);
  const bool pass = rep.final_param_err <= 1e-3 * ts &&
                    rep.final_sync_err <= 1e-3 * ts &&
                    rep.theta_tail_variation <= 1e-4 * ts;
  return finish(res, pass,
                fmt("final param err %.3e (<= %.1e), final sync err %.3e (<= %.1e), "
                    "theta tail variation %.3e (<= %.1e), T = %.0f s",
                    rep.final_param_err, 1e-3 * ts, rep.final_sync_err, 1e-3 * ts,
                    rep.theta_tail_variation, 1e-4 * ts, traj.times.back()),
                start);
}

CriterionResult c05_mean_drift(const CriteriaOptions& opts) {
  CriterionResult res{5, "mean-parameter drift bound", false, false, "", 0.0};
  const auto start = Clock::now();
  ScenarioConfig cfg = fig2_config(opts, "fig2_drift");
  cfg.csv_path.clear();
  cfg.plot_path.clear();
  const auto [traj, rep] = run_scenario(cfg);
  (void)rep;
  // Full-resolution sup over every integration step, not just recorded rows.
  return finish(res, traj.sup_mean_drift <= cfg.delta,
                fmt("sup_t |vartheta_o(t) - vartheta_o(0)| = %.4f (delta = %.2f)",
                    traj.sup_mean_drift, cfg.delta),
                start);
}

CriterionResult c06_rate_proportional_to_g(const CriteriaOptions& opts) {
  CriterionResult res{6, "disagreement decay rate scales with g", false, false, "", 0.0};
  const auto start = Clock::now();
  const RegressorModel model = scalar_linear_sine();
  const Graph graph = ring_graph(3);
  const NetworkState init = fig2_initial();
  const double k = 50.0;
  const double g1 = CouplingGains::auto_g(k);

  auto fitted_rate = [&](double g) {
    IntegratorConfig cfg;
    cfg.dt = 0.4 / (k * 3.0);
    cfg.t_end = opts.quick ? 300.0 : 600.0;
    SimulateOptions sopts;
    sopts.record_every = 10;
    sopts.with_blended = false;
    const Trajectory traj = simulate(model, graph, init, {k, g}, cfg, sopts);
    return fit_exp_rate(traj.times, traj.norm_vartheta_tilde, 0.8).rate;
  };
  const double r1 = fitted_rate(g1);
  const double r2 = fitted_rate(g1 / 2.0);
  const double ratio = r1 / r2;
  return finish(res, ratio >= 1.6 && ratio <= 2.4,
                fmt("rate(g)/rate(g/2) = %.3f (want within [1.6, 2.4]); "
                    "rates %.3e, %.3e",
                    ratio, r1, r2),
                start);
}

CriterionResult c07_inverse_k_error(const CriteriaOptions& opts) {
  CriterionResult res{7, "O(1/k) sync error without adaptation", false, false, "", 0.0};
  const auto start = Clock::now();
  const RegressorModel model = scalar_linear_sine();
  const Graph graph = ring_graph(3);
  const NetworkState init = fig2_initial();

  auto tail_err = [&](double k) {
    IntegratorConfig cfg;
    cfg.dt = 0.4 / (k * 3.0);
    cfg.t_end = opts.quick ? 30.0 : 60.0;
    SimulateOptions sopts;
    sopts.record_every = 2;
    const Trajectory traj = simulate(model, graph, init, {k, 0.0}, cfg, sopts);
    double sup = 0.0;
    for (std::size_t j = 0; j < traj.records(); ++j) {
      if (traj.times[j] >= 0.8 * cfg.t_end) sup = std::max(sup, traj.sync_err[j]);
    }
    return sup;
  };
  const double e100 = tail_err(100.0);
  const double e200 = tail_err(200.0);
  const double ratio = e100 / e200;
  return finish(res, ratio >= 1.6 && ratio <= 2.4,
                fmt("tail sync err ratio k=100 vs k=200: %.3f (want [1.6, 2.4]); "
                    "errors %.3e, %.3e",
                    ratio, e100, e200),
                start);
}

CriterionResult c08_decay_certificate(const CriteriaOptions& opts) {
  CriterionResult res{8, "transition-matrix decay certificate", false, false, "", 0.0};
  const auto start = Clock::now();
  // Frozen values for the rotating sinusoid regressor, computed separately
  // from the certificate formulas: kappa2 = 8 pi^3 + 2 pi,
  // kappa1 = kappa2 + 2 pi^2, m_hat = sqrt(5)/2, b_hat = pi/(4 kappa1).
  const DecayBounds b = decay_bounds(M_PI, M_PI, 2.0 * M_PI, 1.0, 1.0, 0.0, 1.0);
  const bool frozen_ok = std::abs(b.kappa2 - 254.33339874957812) <= 1e-10 &&
                         std::abs(b.kappa1 - 274.07260755175685) <= 1e-10 &&
                         std::abs(b.m_hat - 1.1180339887498949) <= 1e-10 &&
                         std::abs(b.b_hat - 0.002865657281160909) <= 1e-10;

  auto F = [](double t) {
    Eigen::MatrixXd psi(1, 2);
    psi << std::cos(t), std::sin(t);
    return (-psi.transpose() * psi).eval();
  };
  const double envelope_scale = std::sqrt(b.kappa1 / b.kappa2);
  const double rate = M_PI / (4.0 * b.kappa1);
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  const double dt = opts.quick ? 2e-3 : 1e-3;
  for (int a = 0; a < 20; ++a) {
    const double t0 = 10.0 * a / 19.0;
    const TransitionPath path = transition_path(F, t0, t0 + 15.0, dt);
    for (int d = 0; d < 20; ++d) {
      const double span_want = 15.0 * d / 19.0;
      const auto idx = static_cast<std::size_t>(std::llround(span_want / dt));
      const double span = static_cast<double>(idx) * dt;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(path.phi[idx]);
      const double norm = svd.singularValues()(0);
      const double envelope = envelope_scale * std::exp(-rate * span);
      worst_ratio = std::max(worst_ratio, norm / envelope);
      if (norm > envelope) ++violations;
    }
  }
  return finish(res, frozen_ok && violations == 0,
                fmt("frozen constants %s; %zu violations on the 20x20 grid, "
                    "worst |Phi|/envelope = %.4f",
                    frozen_ok ? "match to 1e-10" : "MISMATCH", violations, worst_ratio),
                start);
}

CriterionResult c09_p_matrix(const CriteriaOptions& opts) {
  CriterionResult res{9, "P-matrix construction and bounds", false, false, "", 0.0};
  const auto start = Clock::now();
  std::string detail;
  bool pass = true;

  // (a) psi == 1: P = 1/2 exactly, trapezoid to 1e-8.
  {
    const double g = 1.0;
    const DecayBounds b = decay_bounds(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
    auto F = [&](double) { return Eigen::MatrixXd::Constant(1, 1, -g); };
    const double horizon = 5.0 / (g * b.b) + 1.0;
    const TransitionPath path = transition_path(F, 0.0, horizon, 2e-4);
    const PMatrixResult pm = p_matrix(path, g, horizon, b);
    const double err = std::abs(pm.value(0, 0) - 0.5);
    pass = pass && err <= 1e-8 && pm.within_bounds;
    detail += fmt("unit regressor |P - 1/2| = %.2e; ", err);
  }

  // (b) scalar-model reference trajectories: eigenvalues of P(t) inside
  // [lambda_m, lambda_M] at every grid point, for each adaptation gain.
  const ScalarInstance inst = scalar_example_instance();
  const Eigen::VectorXd theta_star = Eigen::Vector2d(1.0, 1.0);
  const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 2.0);
  const std::vector<double> g_values =
      opts.quick ? std::vector<double>{0.1, 1.0}
                 : std::vector<double>{0.05, 0.1, 0.5, 1.0};
  double worst_lo = std::numeric_limits<double>::infinity();
  double worst_hi = worst_lo;
  for (double g : g_values) {
    const double realized_rate = g * inst.prob.c1 / inst.prob.tau;
    const double pad = 18.0 / (2.0 * realized_rate);
    const auto path = p_path_on_grid(
        inst.model, theta_star, s0, 40.0, 0.02, g, pad, 1,
        inst.pb.lambda_m * Eigen::MatrixXd::Identity(2, 2));
    for (const auto& p : path) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
      worst_lo = std::min(worst_lo, es.eigenvalues().minCoeff() - inst.pb.lambda_m);
      worst_hi = std::min(worst_hi, inst.pb.lambda_M - es.eigenvalues().maxCoeff());
    }
  }
  pass = pass && worst_lo >= -1e-9 && worst_hi >= -1e-9;
  detail += fmt("eig margins above lambda_m %.3e / below lambda_M %.3e; ", worst_lo,
                worst_hi);

  // (c) Lyapunov-ODE residual by finite differences on a fine grid.
  {
    const double g = 0.1;
    const double dt = 2e-4;
    const double realized_rate = g * inst.prob.c1 / inst.prob.tau;
    // Coarse backward pass over the pad, then a fine pass on the window.
    const double pad = 18.0 / (2.0 * realized_rate);
    const auto coarse = p_path_on_grid(
        inst.model, theta_star, s0, 20.0 + 1.0, 0.01, g, pad, 1,
        inst.pb.lambda_m * Eigen::MatrixXd::Identity(2, 2));
    IntegratorConfig icfg;
    icfg.dt = dt / 2.0;
    icfg.t_end = 20.0 + 1.0;
    const Series ref = reference_trajectory(inst.model, theta_star, s0, icfg);
    std::vector<Eigen::MatrixXd> psi_half(ref.size());
    for (std::size_t q = 0; q < ref.size(); ++q) {
      psi_half[q] = inst.model.psi_at(ref.values[q], ref.times[q]);
    }
    if (psi_half.size() % 2 == 0) psi_half.pop_back();
    const auto fine = p_matrix_path(psi_half, dt, g, coarse.back());
    double worst = 0.0;
    const auto n20 = static_cast<std::size_t>(std::llround(20.0 / dt));
    for (std::size_t j = 1; j < n20; ++j) {
      const double t = static_cast<double>(j) * dt;
      const Eigen::MatrixXd psi = inst.model.psi_at(
          ref.values[std::min(2 * j, ref.size() - 1)], t);
      const Eigen::MatrixXd f = -g * psi.transpose() * psi;
      const Eigen::MatrixXd dot = (fine[j + 1] - fine[j - 1]) / (2.0 * dt);
      const Eigen::MatrixXd residual =
          dot + fine[j] * f + f.transpose() * fine[j] +
          g * Eigen::MatrixXd::Identity(2, 2);
      worst = std::max(worst, residual.norm());
    }
    pass = pass && worst <= 1e-5;
    detail += fmt("Lyapunov-ODE residual %.3e (<= 1e-5)", worst);
  }
  return finish(res, pass, detail, start);
}

CriterionResult c10_lyapunov_decay(const CriteriaOptions& opts) {
  CriterionResult res{10, "Lyapunov decay along the adaptation run", false, false, "",
                      0.0};
  const auto start = Clock::now();
  ScenarioConfig cfg = fig2_config(opts, "fig2_lyapunov");
  cfg.csv_path.clear();
  cfg.plot_path.clear();
  const auto [traj, rep] = run_scenario(cfg);
  (void)rep;
  const ScalarInstance inst = scalar_example_instance();
  const ProofConstants pc = proof_constants(inst.prob);

  const double dt_rec = traj.times[1] - traj.times[0];
  const double realized_rate = cfg.g * inst.prob.c1 / inst.prob.tau;
  const double pad = 18.0 / (2.0 * realized_rate);
  const auto p_path = p_path_on_grid(
      inst.model, traj.vartheta_o.front(), traj.chi_o.front(), traj.times.back(),
      dt_rec, cfg.g, pad, 5,
      inst.pb.lambda_m * Eigen::MatrixXd::Identity(2, 2));
  std::vector<Eigen::MatrixXd> aligned(traj.records());
  for (std::size_t j = 0; j < traj.records(); ++j) {
    const auto idx = static_cast<std::size_t>(std::llround(traj.times[j] / dt_rec));
    aligned[j] = p_path[std::min(idx, p_path.size() - 1)];
  }
  // The certified layer T0/sqrt(k) degenerates for this instance; start past
  // the realized coupling layer 5/(k lambda_2) as well.
  const double t_start = std::max({pc.T0 / std::sqrt(cfg.k),
                                   5.0 / (cfg.k * inst.dec.lambda2), 2.0 * dt_rec});
  const DecayReport dr = decay_check(traj, inst.dec, inst.model, aligned,
                                     {cfg.k, cfg.g}, inst.pb, t_start);
  const bool pass = !dr.skipped && dr.n_checked > 1000 && dr.fraction_violating <= 0.01;
  return finish(res, pass,
                fmt("%zu samples, %zu violations (%.2f%%; allowed 1%%), tol %.2e, "
                    "worst excess (Vdot + rate V)/(1 + V) = %.3e",
                    dr.n_checked, dr.violations, 100.0 * dr.fraction_violating,
                    dr.tol, dr.worst_excess),
                start);
}

CriterionResult c11_pe_checker(const CriteriaOptions& opts) {
  CriterionResult res{11, "persistent-excitation checker", false, false, "", 0.0};
  (void)opts;
  const auto start = Clock::now();
  const double dt = 2.0 * M_PI / 2048.0;
  const auto steps = static_cast<std::size_t>(std::llround(8.0 * 2.0 * M_PI / dt));
  std::vector<Eigen::MatrixXd> sinusoid(steps + 1), constant(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    Eigen::MatrixXd psi(1, 2);
    psi << std::cos(t), std::sin(t);
    sinusoid[j] = psi;
    Eigen::MatrixXd flat(1, 2);
    flat << 1.0, 0.0;
    constant[j] = flat;
  }
  const PEGramReport rot = pe_gram(sinusoid, dt, 2.0 * M_PI);
  const PEGramReport flat = pe_gram(constant, dt, 2.0 * M_PI);
  const bool pass = std::abs(rot.c1_est - M_PI) <= 1e-6 &&
                    std::abs(rot.c2_est - M_PI) <= 1e-6 && flat.c1_est <= 1e-12;
  return finish(res, pass,
                fmt("sinusoid (c1, c2) = (%.9f, %.9f) vs pi; constant c1 = %.2e",
                    rot.c1_est, rot.c2_est, flat.c1_est),
                start);
}

CriterionResult c12_proof_constants(const CriteriaOptions& opts) {
  CriterionResult res{12, "proof-constant ledger end-to-end", false, false, "", 0.0};
  const auto start = Clock::now();
  const ScalarInstance inst = scalar_example_instance();
  const ProofConstants pc = proof_constants(inst.prob);

  bool constants_finite = pc.delta_o > 0.0 && pc.T0 > 0.0 &&
                          std::isfinite(pc.delta_o) && std::isfinite(pc.T0);
  for (double c : pc.C) constants_finite = constants_finite && std::isfinite(c) && c > 0.0;

  std::string detail = fmt(
      "delta_o = %.3e, T0 = %.3e, C1..C12 finite: %s; ", pc.delta_o, pc.T0,
      constants_finite ? "yes" : "NO");

  if (!pc.k_star) {
    std::string infeasible;
    for (int i = 0; i < 10; ++i) {
      if (!pc.k_thresholds[i]) infeasible += fmt("k%d* ", i + 1);
    }
    detail += fmt(
        "k* infeasible within [1, 1e12] (entries: %s); widened search gives %s. "
        "The certified constants (lambda_M = %.3e, delta_o = %.3e) put the "
        "threshold far beyond any step-size-feasible simulation, so the "
        "end-to-end bound check cannot run at desk scale.",
        infeasible.c_str(),
        pc.k_star_extended ? fmt("k* = %.3e", *pc.k_star_extended).c_str()
                           : "no finite k* below 1e60",
        pc.lambda_M, pc.delta_o);
    return finish(res, false, detail, start);
  }

  const double k = *pc.k_star;
  const double g = CouplingGains::auto_g(k);
  const double dt = 0.4 / (k * inst.dec.lambdaN);
  const double horizon = opts.quick ? 10.0 : 20.0;
  const double steps = horizon / dt;
  detail += fmt("k* = %.3e, dt = %.3e, steps = %.3e; ", k, dt, steps);
  if (steps > 2e8) {
    detail += "simulation at k* exceeds the desk-scale step budget (2e8)";
    return finish(res, false, detail, start);
  }

  const Graph graph = ring_graph(3);
  IntegratorConfig icfg;
  icfg.dt = dt;
  icfg.t_end = horizon;
  const NetworkState init = fig2_initial();
  const Trajectory traj = simulate(inst.model, graph, init, {k, g}, icfg,
                                   {std::max(1, static_cast<int>(steps / 20000)),
                                    false, false});
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < traj.records(); ++j) {
    worst = std::min(worst, pc.G_chi_o - traj.chi_o[j].norm());
    worst = std::min(worst, pc.G_chi_tilde - traj.norm_chi_tilde[j]);
    worst = std::min(worst, pc.G_vartheta_o - traj.vartheta_o[j].norm());
    worst = std::min(worst, pc.G_vartheta_tilde - traj.norm_vartheta_tilde[j]);
  }
  worst = std::min(worst, pc.delta_o - traj.sup_mean_drift);
  detail += fmt("worst trajectory-bound margin %.3e", worst);
  return finish(res, constants_finite && worst > 0.0, detail, start);
}

CriterionResult c13_regime_ordering(const CriteriaOptions& opts) {
  CriterionResult res{13, "coupled-oscillator regime ordering", false, false, "", 0.0};
  const auto start = Clock::now();
  const std::uint64_t base_seed = opts.seed ? opts.seed : 7001;
  const double ts = tol_scale(opts);
  bool pass = true;
  std::string detail;
  for (int sweep = 0; sweep < 3; ++sweep) {
    double errs[3];
    for (int regime = 0; regime < 3; ++regime) {
      ScenarioConfig cfg = load_config(regime == 0   ? "fig1a"
                                       : regime == 1 ? "fig1b"
                                                     : "fig1c");
      cfg.seed = base_seed + sweep;
      if (opts.quick) cfg.t_end *= 0.5;
      if (!opts.out_dir.empty() && sweep == 0) {
        cfg.csv_path = opts.out_dir + "/" + cfg.name + ".csv";
        cfg.plot_path = opts.out_dir + "/" + cfg.name + ".svg";
      }
      const auto [traj, rep] = run_scenario(cfg);
      (void)traj;
      // Deviation from the network mean: the blended comparison is
      // ill-posed here (phase drift on the non-contractive cycle).
      errs[regime] = rep.tail_sup_consensus_err;
    }
    const bool order = errs[0] > errs[1] && errs[1] > errs[2];
    const bool magnitudes = errs[2] <= 1e-2 * ts && errs[1] >= 5.0 * errs[2] &&
                            errs[0] > 0.5;
    pass = pass && order && magnitudes;
    detail += fmt("seed %llu: A %.3f > B %.3f > C %.2e%s; ",
                  static_cast<unsigned long long>(base_seed + sweep), errs[0],
                  errs[1], errs[2], order && magnitudes ? "" : " [FAIL]");
  }
  return finish(res, pass, detail, start);
}

CriterionResult c14_integrator_order(const CriteriaOptions& opts) {
  CriterionResult res{14, "integrator order check", false, false, "", 0.0};
  (void)opts;
  const auto start = Clock::now();
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
  const double ratio = e1 / e2;
  return finish(res, ratio >= 12.0 && ratio <= 20.0,
                fmt("error ratio dt = 0.1 vs 0.05 against a dt/16 reference: %.2f "
                    "(want [12, 20])",
                    ratio),
                start);
}

}  // namespace

const std::vector<int>& fast_criteria() {
  static const std::vector<int> ids{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 14};
  return ids;
}

CriterionResult run_criterion(int id, const CriteriaOptions& opts) {
  switch (id) {
    case 1: return c01_transform_algebra(opts);
    case 2: return c02_transformed_dynamics(opts);
    case 3: return c03_equilibrium_invariance(opts);
    case 4: return c04_parameter_consensus(opts);
    case 5: return c05_mean_drift(opts);
    case 6: return c06_rate_proportional_to_g(opts);
    case 7: return c07_inverse_k_error(opts);
    case 8: return c08_decay_certificate(opts);
    case 9: return c09_p_matrix(opts);
    case 10: return c10_lyapunov_decay(opts);
    case 11: return c11_pe_checker(opts);
    case 12: return c12_proof_constants(opts);
    case 13: return c13_regime_ordering(opts);
    case 14: return c14_integrator_order(opts);
    default:
      throw ConfigError("unknown criterion id " + std::to_string(id));
  }
}

int repro_all(const CriteriaOptions& opts, bool include_slow) {
  namespace fs = std::filesystem;
  CriteriaOptions run_opts = opts;
  if (run_opts.out_dir.empty()) run_opts.out_dir = "repro_out";
  fs::create_directories(run_opts.out_dir);

  std::cout << "run header: out_dir=" << run_opts.out_dir
            << " quick=" << (run_opts.quick ? 1 : 0)
            << " seed=" << (run_opts.seed ? run_opts.seed : 0)
            << " include_slow=" << (include_slow ? 1 : 0) << "\n";
  if (run_opts.quick) {
    std::cout << "quick mode: horizons halved, absolute tolerances relaxed x5\n";
  }

  std::vector<int> ids = fast_criteria();
  if (include_slow) ids.push_back(12);

  std::vector<CriterionResult> results;
  bool all_pass = true;
  for (int id : ids) {
    CriterionResult r;
    try {
      r = run_criterion(id, run_opts);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": "
              << r.name << " -- " << r.detail << " (" << fmt("%.1f", r.seconds)
              << " s)\n";
    results.push_back(std::move(r));
  }
  if (!include_slow) {
    std::cout << "[SKIP] criterion 12: proof-constant ledger end-to-end -- "
                 "gated behind the slow tag (run with --slow)\n";
  }

  std::ofstream summary(run_opts.out_dir + "/summary.txt");
  for (const auto& r : results) {
    summary << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " " << r.name
            << " :: " << r.detail << "\n";
  }
  std::cout << (all_pass ? "all criteria PASS\n" : "some criteria FAILED\n");
  return all_pass ? 0 : 1;
}

}  // namespace vfc
