#include "vfc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "vfc/transforms.hpp"

namespace vfc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double op_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

PEGramReport pe_gram(const std::vector<Eigen::MatrixXd>& psi_series, double dt,
                     double tau) {
  if (psi_series.empty()) throw WindowTooLong("pe_gram: empty series");
  if (!(dt > 0.0) || !(tau > 0.0)) {
    throw ConfigError("pe_gram: dt and tau must be positive");
  }
  const auto w = static_cast<std::size_t>(std::llround(tau / dt));
  if (w < 10) {
    throw ConfigError("pe_gram: window must span at least 10 grid steps, got " +
                      std::to_string(w));
  }
  if (w + 1 > psi_series.size()) {
    throw WindowTooLong("pe_gram: window of " + std::to_string(w) +
                        " steps exceeds series of " +
                        std::to_string(psi_series.size()) + " samples");
  }
  const int p = static_cast<int>(psi_series[0].cols());

  // Prefix trapezoid sums of psi^T psi; window Gram = difference of prefixes.
  std::vector<Eigen::MatrixXd> prefix(psi_series.size());
  prefix[0] = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd prev = psi_series[0].transpose() * psi_series[0];
  for (std::size_t j = 1; j < psi_series.size(); ++j) {
    const Eigen::MatrixXd cur = psi_series[j].transpose() * psi_series[j];
    prefix[j] = prefix[j - 1] + 0.5 * dt * (prev + cur);
    prev = cur;
  }

  PEGramReport rep;
  rep.tau_actual = static_cast<double>(w) * dt;
  rep.c1_est = kInf;
  rep.c2_est = 0.0;
  for (std::size_t j = 0; j + w < psi_series.size(); ++j) {
    const Eigen::MatrixXd gram = prefix[j + w] - prefix[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    rep.window_start.push_back(static_cast<double>(j) * dt);
    rep.min_eig.push_back(lo);
    rep.max_eig.push_back(hi);
    rep.c1_est = std::min(rep.c1_est, lo);
    rep.c2_est = std::max(rep.c2_est, hi);
  }
  return rep;
}

PESpec measure_pe(const RegressorModel& model,
                  const std::vector<Eigen::VectorXd>& theta_star_samples,
                  double M_x, double tau, double horizon, double dt) {
  if (theta_star_samples.empty()) {
    throw InvalidBounds("measure_pe: need at least one sample parameter");
  }
  PESpec spec;
  spec.tau = tau;
  spec.M_x = M_x;
  spec.c1 = std::numeric_limits<double>::infinity();
  IntegratorConfig cfg;
  cfg.dt = dt;
  cfg.t_end = horizon;
  for (const auto& theta_star : theta_star_samples) {
    const Series ref = reference_trajectory(
        model, theta_star, Eigen::VectorXd::Constant(model.state_dim, M_x), cfg);
    std::vector<Eigen::MatrixXd> series(ref.size());
    for (std::size_t j = 0; j < ref.size(); ++j) {
      series[j] = model.psi_at(ref.values[j], ref.times[j]);
    }
    const PEGramReport rep = pe_gram(series, dt, tau);
    spec.c1 = std::min(spec.c1, rep.c1_est);
    spec.c2 = std::max(spec.c2, rep.c2_est);
  }
  if (!(spec.c1 > 0.0)) {
    throw InvalidBounds("measure_pe: excitation lost (c1 = " +
                        std::to_string(spec.c1) + ")");
  }
  return spec;
}

ContractionReport contraction_margin(const RegressorModel& model,
                                     const std::vector<Eigen::VectorXd>& theta_samples,
                                     const std::vector<Eigen::VectorXd>& state_grid,
                                     const std::vector<double>& t_grid) {
  if (theta_samples.empty() || state_grid.empty() || t_grid.empty()) {
    throw ConfigError("contraction_margin: empty sampling grid");
  }
  ContractionReport rep;
  rep.worst_mu = -kInf;
  for (double t : t_grid) {
    for (const auto& s : state_grid) {
      for (const auto& th : theta_samples) {
        const Eigen::MatrixXd jac = model.vector_field_jacobian(s, t, th);
        double mu;
        if (model.state_dim == 1) {
          mu = jac(0, 0);
        } else {
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(jac));
          mu = es.eigenvalues().maxCoeff();
        }
        ++rep.samples;
        if (mu > rep.worst_mu) {
          rep.worst_mu = mu;
          rep.worst_theta = th;
          rep.worst_state = s;
          rep.worst_t = t;
        }
      }
    }
  }
  rep.c = -rep.worst_mu;
  rep.contractive = rep.c > 0.0;
  return rep;
}

ContractionSpec certify_contraction(const RegressorModel& model,
                                    const std::vector<Eigen::VectorXd>& theta_samples,
                                    const std::vector<Eigen::VectorXd>& state_grid,
                                    const std::vector<double>& t_grid) {
  const ContractionReport rep =
      contraction_margin(model, theta_samples, state_grid, t_grid);
  if (!rep.contractive) {
    throw InvalidBounds("certify_contraction: sampled margin " +
                        std::to_string(rep.c) + " is not positive");
  }
  ContractionSpec spec;
  spec.theta_star_set = theta_samples;
  spec.c = rep.c;
  spec.metric = Eigen::MatrixXd::Identity(model.state_dim, model.state_dim);
  return spec;
}

namespace {

Eigen::MatrixXd rk4_matrix_step(const std::function<Eigen::MatrixXd(double)>& F,
                                const Eigen::MatrixXd& y, double t, double h) {
  const Eigen::MatrixXd k1 = F(t) * y;
  const Eigen::MatrixXd k2 = F(t + 0.5 * h) * (y + 0.5 * h * k1);
  const Eigen::MatrixXd k3 = F(t + 0.5 * h) * (y + 0.5 * h * k2);
  const Eigen::MatrixXd k4 = F(t + h) * (y + h * k3);
  Eigen::MatrixXd next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw NumericalBlowup("state_transition: non-finite at t = " + std::to_string(t), t);
  }
  return next;
}

}  // namespace

Eigen::MatrixXd state_transition(const std::function<Eigen::MatrixXd(double)>& F,
                                 double t0, double t1, double dt) {
  if (t1 < t0) throw ConfigError("state_transition: t1 must be >= t0");
  if (!(dt > 0.0)) throw ConfigError("state_transition: dt must be positive");
  const Eigen::MatrixXd f0 = F(t0);
  const int p = static_cast<int>(f0.rows());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(p, p);
  double t = t0;
  while (t < t1 - 1e-12 * std::max(1.0, std::abs(t1))) {
    const double h = std::min(dt, t1 - t);
    phi = rk4_matrix_step(F, phi, t, h);
    t += h;
  }
  return phi;
}

TransitionPath transition_path(const std::function<Eigen::MatrixXd(double)>& F,
                               double t0, double t1, double dt) {
  if (t1 <= t0) throw ConfigError("transition_path: t1 must be > t0");
  if (!(dt > 0.0)) throw ConfigError("transition_path: dt must be positive");
  const Eigen::MatrixXd f0 = F(t0);
  const int p = static_cast<int>(f0.rows());
  const auto steps = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  TransitionPath path;
  path.t0 = t0;
  path.dt = dt;
  path.phi.reserve(steps + 1);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(p, p);
  path.phi.push_back(phi);
  for (std::size_t j = 0; j < steps; ++j) {
    phi = rk4_matrix_step(F, phi, t0 + static_cast<double>(j) * dt, dt);
    path.phi.push_back(phi);
  }
  return path;
}

DecayBounds decay_bounds(double c1, double c2, double tau, double M_psi, double c,
                         double L_psi, double M_x) {
  if (!(c1 > 0.0) || !(c2 >= c1)) {
    throw InvalidBounds("decay_bounds: need 0 < c1 <= c2");
  }
  if (!(tau > 0.0) || !(M_psi > 0.0) || !(c > 0.0) || M_x < 0.0 || L_psi < 0.0) {
    throw InvalidBounds("decay_bounds: inputs must be positive");
  }
  DecayBounds b;
  b.M_psi = M_psi;
  b.L_psi = L_psi;
  b.c = c;
  const double core = (2.0 * std::pow(tau * M_psi * c2, 2) + tau * c1) / c1;
  b.kappa2 = core;
  b.kappa1 = core + tau * c2;
  b.m_hat = std::sqrt(1.0 + c1 / (2.0 * std::sqrt(2.0 * tau * c1) * M_psi));
  b.b_hat = c1 / (4.0 * b.kappa1);
  if (b.b_hat >= c) {
    b.b_hat = 0.5 * c;
    b.b_hat_clamped = true;
  }
  b.m = b.m_hat * (1.0 + 4.0 * M_psi * L_psi * M_x / (c - b.b_hat));
  b.b = b.b_hat;
  return b;
}

PBounds p_bounds(const DecayBounds& b) {
  PBounds pb;
  pb.lambda_m = 1.0 / (2.0 * b.M_psi * b.M_psi);
  pb.lambda_M = b.m * b.m / (2.0 * b.b);
  return pb;
}

TransitionEnvelopeReport transition_envelope_certificate(const RegressorModel& model,
                                const Eigen::VectorXd& theta_star,
                                const std::vector<Eigen::VectorXd>& s0_list,
                                double g, double horizon, const DecayBounds& bounds,
                                int n_t0, int n_dt, double fine_dt) {
  if (!(g > 0.0) || g > 1.0) {
    throw InvalidGain("transition_envelope_certificate: certificate holds for 0 < g <= 1");
  }
  TransitionEnvelopeReport rep;
  rep.m = bounds.m;
  rep.b = bounds.b;
  rep.g = g;
  const int p = model.param_dim;

  for (const auto& s0 : s0_list) {
    // Regressor along the reference solution, sampled at fine_dt/2 so that
    // the transition-matrix stages land on sample points.
    IntegratorConfig cfg;
    cfg.dt = 0.5 * fine_dt;
    cfg.t_end = horizon;
    const Series ref = reference_trajectory(model, theta_star, s0, cfg);
    std::vector<Eigen::MatrixXd> f_half(ref.size());
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const Eigen::MatrixXd psi = model.psi_at(ref.values[j], ref.times[j]);
      f_half[j] = -g * psi.transpose() * psi;
    }
    const std::size_t full_steps = (f_half.size() - 1) / 2;

    for (int a = 0; a < n_t0; ++a) {
      const double t0_want = 0.5 * horizon * static_cast<double>(a) /
                             std::max(1, n_t0 - 1);
      const auto i0 = static_cast<std::size_t>(std::llround(t0_want / fine_dt));
      const double t0 = static_cast<double>(i0) * fine_dt;
      // Snapped check offsets within [0, horizon - t0].
      std::vector<std::size_t> check_steps;
      for (int d = 0; d < n_dt; ++d) {
        const double dt_want = (horizon - t0) * static_cast<double>(d) /
                               std::max(1, n_dt - 1);
        check_steps.push_back(
            static_cast<std::size_t>(std::llround(dt_want / fine_dt)));
      }
      Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(p, p);
      std::size_t next_check = 0;
      for (std::size_t step = 0; i0 + step <= full_steps; ++step) {
        while (next_check < check_steps.size() && check_steps[next_check] == step) {
          const double dt_span = static_cast<double>(step) * fine_dt;
          const double envelope = bounds.m * std::exp(-g * bounds.b * dt_span);
          const double ratio = op_norm(phi) / envelope;
          rep.max_ratio = std::max(rep.max_ratio, ratio);
          ++rep.n_pairs;
          if (ratio > 1.0) ++rep.violations;
          ++next_check;
        }
        if (i0 + step == full_steps) break;
        // Manual RK4 using the half-grid samples (indices 2j, 2j+1, 2j+2).
        const std::size_t h0 = 2 * (i0 + step);
        const Eigen::MatrixXd& F0 = f_half[h0];
        const Eigen::MatrixXd& Fm = f_half[h0 + 1];
        const Eigen::MatrixXd& F1 = f_half[h0 + 2];
        const Eigen::MatrixXd k1 = F0 * phi;
        const Eigen::MatrixXd k2 = Fm * (phi + 0.5 * fine_dt * k1);
        const Eigen::MatrixXd k3 = Fm * (phi + 0.5 * fine_dt * k2);
        const Eigen::MatrixXd k4 = F1 * (phi + fine_dt * k3);
        phi += (fine_dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
  }
  return rep;
}

PMatrixResult p_matrix(const TransitionPath& path, double g, double horizon_T,
                       const DecayBounds& bounds) {
  if (path.phi.size() < 2) throw ConfigError("p_matrix: path too short");
  if (!(g > 0.0)) throw InvalidGain("p_matrix: g must be positive");
  const double span = horizon_T - path.t0;
  if (span < 5.0 / (g * bounds.b)) {
    throw TailTooLarge("p_matrix: horizon " + std::to_string(span) +
                       " shorter than 5/(g b) = " + std::to_string(5.0 / (g * bounds.b)));
  }
  const auto usable = std::min(
      path.phi.size() - 1, static_cast<std::size_t>(std::llround(span / path.dt)));
  const int p = static_cast<int>(path.phi[0].rows());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd prev = path.phi[0].transpose() * path.phi[0];
  for (std::size_t j = 1; j <= usable; ++j) {
    const Eigen::MatrixXd cur = path.phi[j].transpose() * path.phi[j];
    acc += 0.5 * path.dt * (prev + cur);
    prev = cur;
  }
  PMatrixResult res;
  res.value = symmetrized(g * acc);
  const double covered = static_cast<double>(usable) * path.dt;
  res.tail_bound =
      bounds.m * bounds.m / (2.0 * bounds.b) * std::exp(-2.0 * g * bounds.b * covered);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.value);
  res.min_eig = es.eigenvalues().minCoeff();
  res.max_eig = es.eigenvalues().maxCoeff();
  const PBounds pb = p_bounds(bounds);
  const double slack = res.tail_bound + 1e-9 * (1.0 + res.max_eig);
  res.within_bounds =
      (res.min_eig + slack >= pb.lambda_m) && (res.max_eig <= pb.lambda_M + slack);
  return res;
}

std::vector<Eigen::MatrixXd> p_matrix_path(
    const std::vector<Eigen::MatrixXd>& psi_half_grid, double dt, double g,
    const Eigen::MatrixXd& terminal_guess) {
  if (psi_half_grid.size() < 3 || psi_half_grid.size() % 2 == 0) {
    throw ConfigError("p_matrix_path: need an odd number (>= 3) of half-grid samples");
  }
  const int p = static_cast<int>(psi_half_grid[0].cols());
  if (terminal_guess.rows() != p || terminal_guess.cols() != p) {
    throw ShapeError("p_matrix_path: terminal guess dimension mismatch");
  }
  const std::size_t steps = (psi_half_grid.size() - 1) / 2;
  std::vector<Eigen::MatrixXd> f(psi_half_grid.size());
  for (std::size_t j = 0; j < psi_half_grid.size(); ++j) {
    f[j] = -g * psi_half_grid[j].transpose() * psi_half_grid[j];
  }
  auto lyap = [&](const Eigen::MatrixXd& F, const Eigen::MatrixXd& P) {
    return (-P * F - F.transpose() * P -
            g * Eigen::MatrixXd::Identity(p, p)).eval();
  };
  std::vector<Eigen::MatrixXd> path(steps + 1);
  path[steps] = symmetrized(terminal_guess);
  const double h = -dt;  // backward
  for (std::size_t j = steps; j-- > 0;) {
    const Eigen::MatrixXd& P1 = path[j + 1];
    const Eigen::MatrixXd& F1 = f[2 * j + 2];
    const Eigen::MatrixXd& Fm = f[2 * j + 1];
    const Eigen::MatrixXd& F0 = f[2 * j];
    const Eigen::MatrixXd k1 = lyap(F1, P1);
    const Eigen::MatrixXd k2 = lyap(Fm, P1 + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = lyap(Fm, P1 + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = lyap(F0, P1 + h * k3);
    path[j] = symmetrized(P1 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!path[j].allFinite()) {
      throw NumericalBlowup("p_matrix_path: non-finite backward step", 0.0);
    }
  }
  return path;
}

double lyapunov_value(const Eigen::VectorXd& xi, const Eigen::VectorXd& vartheta_tilde,
                      const Eigen::MatrixXd& P, double k) {
  const int p = static_cast<int>(P.rows());
  if (P.cols() != p) throw ShapeError("lyapunov_value: P must be square");
  if ((P - P.transpose()).norm() > 1e-9 * (1.0 + P.norm())) {
    throw ShapeError("lyapunov_value: P must be symmetric");
  }
  if (vartheta_tilde.size() % p != 0) {
    throw ShapeError("lyapunov_value: vartheta_tilde not a multiple of p");
  }
  double v = 0.5 * k * k * xi.squaredNorm();
  const Eigen::MatrixXd blocks = unstack(vartheta_tilde, p);
  for (int j = 0; j < blocks.cols(); ++j) {
    v += 0.5 * blocks.col(j).dot(P * blocks.col(j));
  }
  return v;
}

DecayReport decay_check(const Trajectory& traj, const LaplacianDecomposition& dec,
                        const RegressorModel& model,
                        const std::vector<Eigen::MatrixXd>& P_path,
                        const CouplingGains& gains, const PBounds& bounds,
                        double t_start) {
  DecayReport rep;
  if (gains.g == 0.0) {
    rep.skipped = true;
    return rep;
  }
  if (P_path.size() != traj.records()) {
    throw ShapeError("decay_check: P path must align with the recorded grid");
  }
  const std::size_t m = traj.records();
  if (m < 3) throw ConfigError("decay_check: trajectory too short");

  std::vector<double> v(m);
  for (std::size_t j = 0; j < m; ++j) {
    const SyncCoords sc = to_sync_coords(dec, traj.x[j]);
    const ParamCoords pc = to_param_coords(dec, traj.theta[j]);
    const XiCoord xi = xi_of(dec, sc.chi_tilde, pc.vartheta_tilde,
                             model.psi_at(sc.chi_o, traj.times[j]), gains.k);
    v[j] = lyapunov_value(xi.xi, pc.vartheta_tilde, P_path[j], gains.k);
  }

  // Estimate max |V''| by second differences over the checked window only;
  // the pre-layer collapse would otherwise dominate and void the tolerance.
  double max_vdd = 0.0;
  const double h0 = traj.times[1] - traj.times[0];
  auto uniform_at = [&](std::size_t j) {
    return std::abs((traj.times[j + 1] - traj.times[j]) - h0) < 1e-9 * h0 &&
           std::abs((traj.times[j] - traj.times[j - 1]) - h0) < 1e-9 * h0;
  };
  for (std::size_t j = 1; j + 1 < m; ++j) {
    if (traj.times[j] < t_start || !uniform_at(j)) continue;
    max_vdd = std::max(max_vdd, std::abs(v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h0 * h0));
  }
  rep.tol = 10.0 * h0 * h0 * max_vdd;

  const double rate = gains.g / (6.0 * bounds.lambda_M);
  // Values at the equilibrium are squared norms of rounding residue; their
  // differences carry no information, so they satisfy the bound trivially.
  const double v_dead = 1e-20;
  rep.worst_excess = -kInf;
  for (std::size_t j = 1; j + 1 < m; ++j) {
    if (traj.times[j] < t_start || !uniform_at(j)) continue;
    ++rep.n_checked;
    if (std::max({v[j - 1], v[j], v[j + 1]}) <= v_dead) continue;
    const double vdot = (v[j + 1] - v[j - 1]) / (2.0 * h0);
    const double bound = -rate * v[j] + rep.tol * (1.0 + v[j]);
    if (vdot > bound) ++rep.violations;
    rep.worst_excess = std::max(rep.worst_excess, (vdot + rate * v[j]) / (1.0 + v[j]));
  }
  rep.fraction_violating =
      rep.n_checked ? static_cast<double>(rep.violations) / rep.n_checked : 0.0;
  return rep;
}

double delta_o_formula(double delta, double c, double M_psi, double lambda_M,
                       double L_psi) {
  double d = std::min(delta, c * delta / (2.0 * M_psi));
  if (L_psi > 0.0) {
    d = std::min(d, c / (16.0 * lambda_M * M_psi * M_psi * L_psi));
    d = std::min(d, c / (2.0 * L_psi));
  }
  return d;
}

double T0_formula(double delta_o, double M_psi, double M_tilde_psi, double lambdaN,
                  double G_chi_tilde) {
  return (delta_o / 2.0) / ((M_psi + M_tilde_psi) * lambdaN * G_chi_tilde);
}

namespace {

// Smallest k in [1, cap] from which `holds` stays true for all larger k,
// judged on a log grid and refined by bisection at the boundary.
std::optional<double> threshold_from(const std::function<bool(double)>& holds,
                                     double cap) {
  const int grid_n = 6000;
  const double log_cap = std::log(cap);
  if (!holds(cap)) return std::nullopt;
  int last_fail = -1;
  for (int i = grid_n - 1; i >= 0; --i) {
    const double k = std::exp(log_cap * static_cast<double>(i) / (grid_n - 1));
    if (!holds(k)) {
      last_fail = i;
      break;
    }
  }
  if (last_fail < 0) return 1.0;
  double lo = std::exp(log_cap * static_cast<double>(last_fail) / (grid_n - 1));
  double hi = std::exp(log_cap * static_cast<double>(last_fail + 1) / (grid_n - 1));
  for (int it = 0; it < 200 && (hi - lo) > 1e-6 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

ProofConstants proof_constants(const ProblemInstance& prob) {
  if (prob.N < 2) throw InvalidBounds("proof_constants: need N >= 2");
  if (!(prob.lambda2 > 0.0) || !(prob.lambdaN >= prob.lambda2)) {
    throw InvalidBounds("proof_constants: spectrum must satisfy 0 < lambda2 <= lambdaN");
  }
  if (!(prob.M_x > 0.0) || !(prob.M_theta > 0.0) || !(prob.delta > 0.0) ||
      !(prob.c > 0.0) || !(prob.c1 > 0.0) || !(prob.c2 >= prob.c1) ||
      !(prob.tau > 0.0)) {
    throw InvalidBounds("proof_constants: bounds must be positive and consistent");
  }
  if (!prob.rho) throw InvalidBounds("proof_constants: rho envelope required");

  ProofConstants pc;
  pc.delta = prob.delta;
  pc.M_s = std::max(prob.M_x, prob.rho(0.0) * prob.M_theta / prob.c);
  pc.M_psi = prob.rho(pc.M_s + prob.delta);
  if (!std::isfinite(pc.M_psi) || pc.M_psi <= 0.0) {
    throw InvalidBounds("proof_constants: rho does not cover M_s + delta");
  }
  pc.decay = decay_bounds(prob.c1, prob.c2, prob.tau, pc.M_psi, prob.c, prob.L_psi,
                          prob.M_x);
  const PBounds pb = p_bounds(pc.decay);
  pc.lambda_m = pb.lambda_m;
  pc.lambda_M = pb.lambda_M;
  pc.delta_o = delta_o_formula(prob.delta, prob.c, pc.M_psi, pc.lambda_M, prob.L_psi);

  const double sqrtN = std::sqrt(static_cast<double>(prob.N));
  pc.G_chi_o = pc.M_s + prob.delta;
  pc.G_chi_tilde = sqrtN * prob.M_x + prob.delta;
  pc.G_vartheta_o = prob.M_theta + prob.delta;
  pc.G_vartheta_tilde =
      std::sqrt(pc.lambda_M / pc.lambda_m) * (sqrtN * prob.M_theta + prob.delta / 2.0) +
      prob.delta;
  pc.G_theta = sqrtN * pc.G_vartheta_o + pc.G_vartheta_tilde;
  pc.M_tilde_psi = prob.M_tilde_psi;
  pc.L_tilde_psi = prob.L_tilde_psi;
  pc.T0 = T0_formula(pc.delta_o, pc.M_psi, pc.M_tilde_psi, prob.lambdaN, pc.G_chi_tilde);

  const double l2 = prob.lambda2, lN = prob.lambdaN;
  pc.C[0] = pc.M_psi * pc.G_vartheta_o + pc.M_tilde_psi * pc.G_theta / sqrtN;
  pc.C[1] = (pc.M_psi * pc.G_vartheta_tilde + pc.M_tilde_psi * pc.G_theta) / l2;
  pc.M_dpsi = pc.M_psi * (pc.C[0] + 1.0);
  pc.C[2] = pc.L_tilde_psi * pc.G_theta;
  pc.C[3] = pc.M_psi * pc.M_psi + pc.M_psi * pc.M_tilde_psi * lN / l2;
  pc.C[4] = (pc.L_tilde_psi * pc.M_psi * pc.G_theta + pc.M_dpsi) / l2;
  pc.C[5] = (std::pow(pc.M_psi, 3) + pc.M_psi * pc.M_psi * pc.M_tilde_psi) / l2;
  pc.C[6] = pc.C[2] + pc.C[3];
  pc.C[7] = (pc.C[4] + pc.C[5]) * pc.G_vartheta_tilde;
  pc.C[8] = pc.lambda_M * lN * (pc.M_psi + pc.M_tilde_psi);
  pc.C[9] = pc.lambda_M * pc.M_psi * pc.M_psi * pc.L_tilde_psi * pc.G_vartheta_tilde / l2;
  pc.C[10] = pc.lambda_M * pc.M_psi * pc.L_tilde_psi * pc.G_vartheta_tilde;
  pc.C[11] = (2.0 * pc.L_tilde_psi / sqrtN) *
             (lN + lN * pc.M_psi / (l2 * std::sqrt(pc.lambda_m)) +
              pc.M_psi / std::sqrt(pc.lambda_m) + pc.M_psi * pc.M_psi / (l2 * pc.lambda_m));
  pc.M_xi = sqrtN * prob.M_x + pc.M_psi * sqrtN * prob.M_theta / l2;

  const double C2 = pc.C[1], C5 = pc.C[4], C6 = pc.C[5], C7 = pc.C[6], C8 = pc.C[7];
  const double C9 = pc.C[8], C10 = pc.C[9], C11 = pc.C[10], C12 = pc.C[11];
  const double T0 = pc.T0, delta_o = pc.delta_o, delta = prob.delta;
  const double M_psi = pc.M_psi, L_tpsi = pc.L_tilde_psi, L_psi = prob.L_psi;
  const double M_x = prob.M_x, M_theta = prob.M_theta, G_theta = pc.G_theta;
  const double M_xi = pc.M_xi, lam_m = pc.lambda_m, lam_M = pc.lambda_M, c = prob.c;

  // k1* and k6* are explicit; the rest are solved from their displays.
  std::array<std::function<bool(double)>, 10> holds;
  holds[0] = [=](double k) { return k >= C2 / (sqrtN * M_x); };
  holds[1] = [=](double k) {
    return (T0 / std::sqrt(k)) * (M_psi * delta_o + L_tpsi * M_x * G_theta) <=
           delta / 2.0;
  };
  holds[2] = [=](double k) {
    return std::exp(-l2 * T0 * std::sqrt(k)) * sqrtN * M_x <= C2 / k &&
           C2 / k < delta / 2.0;
  };
  holds[3] = [=](double k) {
    const double first = (T0 / std::sqrt(k)) * (M_psi * delta_o + L_tpsi * M_x * G_theta);
    const double second = M_psi * delta_o / c + 2.0 * L_tpsi * C2 * G_theta / (k * c * sqrtN);
    const double cap = std::min(1.0 / (8.0 * lam_M * M_psi * L_psi), delta);
    return std::max(first, second) < cap;
  };
  holds[4] = [=](double k) {
    const double gap = k * l2 - C7;
    if (gap <= 0.0) return false;
    return std::exp(-gap * T0 / std::sqrt(k)) * M_xi <= C8 / (k * gap);
  };
  holds[5] = [=](double k) { return k >= std::max(3.0 * C7 / l2, 12.0 * C10); };
  holds[6] = [=](double k) {
    const double lhs = l2 / 36.0 * std::pow(k, 2.5);
    const double rhs =
        0.25 * std::pow(k * C5 + std::sqrt(k) * (C6 + C9) + C11 / std::sqrt(k), 2);
    return lhs >= rhs;
  };
  holds[7] = [=](double k) {
    return 2.0 * l2 * k / 3.0 >= 1.0 / (6.0 * lam_M * std::sqrt(k));
  };
  holds[8] = [=](double k) {
    const double gap = k * l2 - C7;
    if (gap <= 0.0) return false;
    return 2.0 * C8 / (gap * std::sqrt(lam_m)) < delta;
  };
  holds[9] = [=](double k) {
    const double gap = k * l2 - C7;
    if (gap <= 0.0) return false;
    const double lhs = 12.0 * lam_M * C12 * C8 * C8 / (k * gap * gap) +
                       3.0 * lam_M * lam_M * C12 *
                           std::pow(sqrtN * M_theta + delta / 2.0, 2) / k;
    return lhs < delta_o / 2.0;
  };

  constexpr double kCap = 1e12;
  constexpr double kCapExtended = 1e60;
  bool all_finite = true, all_finite_ext = true;
  double k_star = 1.0, k_star_ext = 1.0;
  for (int i = 0; i < 10; ++i) {
    if (i == 0) {  // explicit: k1* = C2 / (sqrt(N) M_x)
      pc.k_thresholds[i] = std::max(1.0, C2 / (sqrtN * M_x));
      pc.k_thresholds_extended[i] = pc.k_thresholds[i];
    } else if (i == 5) {  // explicit: k6* = max{3 C7 / lambda2, 12 C10}
      pc.k_thresholds[i] = std::max({1.0, 3.0 * C7 / l2, 12.0 * C10});
      pc.k_thresholds_extended[i] = pc.k_thresholds[i];
    } else {
      pc.k_thresholds[i] = threshold_from(holds[i], kCap);
      pc.k_thresholds_extended[i] = threshold_from(holds[i], kCapExtended);
    }
    if (pc.k_thresholds[i]) {
      k_star = std::max(k_star, *pc.k_thresholds[i]);
    } else {
      all_finite = false;
    }
    if (pc.k_thresholds_extended[i]) {
      k_star_ext = std::max(k_star_ext, *pc.k_thresholds_extended[i]);
    } else {
      all_finite_ext = false;
    }
  }
  if (all_finite) pc.k_star = k_star;
  if (all_finite_ext) pc.k_star_extended = k_star_ext;
  return pc;
}

ExpFit fit_exp_rate(const std::vector<double>& t, const std::vector<double>& y,
                    double tail_fraction) {
  if (t.size() != y.size() || t.size() < 2) {
    throw ConfigError("fit_exp_rate: need matching series with >= 2 points");
  }
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0) {
    throw ConfigError("fit_exp_rate: tail_fraction must be in (0, 1]");
  }
  const std::size_t n = t.size();
  const std::size_t start = n - std::max<std::size_t>(
                                    2, static_cast<std::size_t>(std::ceil(
                                           tail_fraction * static_cast<double>(n))));
  double sum_t = 0.0, sum_l = 0.0, sum_tt = 0.0, sum_tl = 0.0;
  std::size_t m = 0;
  for (std::size_t j = start; j < n; ++j) {
    if (!(y[j] > 0.0)) {
      throw FitDomainError("fit_exp_rate: nonpositive sample at t = " +
                           std::to_string(t[j]));
    }
    const double l = std::log(y[j]);
    sum_t += t[j];
    sum_l += l;
    sum_tt += t[j] * t[j];
    sum_tl += t[j] * l;
    ++m;
  }
  const double denom = static_cast<double>(m) * sum_tt - sum_t * sum_t;
  ExpFit fit;
  fit.n_points = m;
  if (denom == 0.0) {
    fit.rate = 0.0;
    fit.intercept = sum_l / static_cast<double>(m);
    return fit;
  }
  const double slope = (static_cast<double>(m) * sum_tl - sum_t * sum_l) / denom;
  fit.rate = -slope;
  fit.intercept = (sum_l - slope * sum_t) / static_cast<double>(m);
  return fit;
}

TildePsiBounds sample_tilde_psi_bounds(const RegressorModel& model,
                                       const LaplacianDecomposition& dec,
                                       double G_chi_o, double G_chi_tilde,
                                       const std::vector<double>& t_grid,
                                       int n_chi_o, int n_mag, int n_dir,
                                       unsigned seed) {
  const int n = model.state_dim;
  const int N = dec.n_agents();
  std::mt19937_64 rng(seed);
  auto unit = [&]() {
    // Uniform direction from mapped 64-bit draws; deterministic across
    // platforms, unlike std::normal_distribution.
    Eigen::VectorXd v(n * (N - 1));
    double norm2 = 0.0;
    do {
      for (int i = 0; i < v.size(); ++i) {
        const double u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v(i) = 2.0 * u1 - 1.0;
      }
      norm2 = v.squaredNorm();
    } while (norm2 < 1e-12);
    return (v / std::sqrt(norm2)).eval();
  };

  TildePsiBounds out;
  for (int a = 0; a < n_chi_o; ++a) {
    Eigen::VectorXd chi_o(n);
    for (int q = 0; q < n; ++q) {
      const double frac = n_chi_o > 1 ? static_cast<double>(a) / (n_chi_o - 1) : 0.5;
      chi_o(q) = -G_chi_o + 2.0 * G_chi_o * frac;
    }
    for (int d = 0; d < n_dir; ++d) {
      const Eigen::VectorXd dir = unit();
      for (int mgi = 1; mgi <= n_mag; ++mgi) {
        const double mag = G_chi_tilde * static_cast<double>(mgi) / n_mag;
        const Eigen::VectorXd chi_tilde = mag * dir;
        for (double t : t_grid) {
          const TildePsi dev = tilde_psi(model, chi_o, chi_tilde, dec, t);
          double worst_block = 0.0;
          for (const auto& blk : dev.blocks) {
            worst_block = std::max(worst_block, op_norm(blk));
          }
          out.M_tilde_psi = std::max(out.M_tilde_psi, worst_block);
          out.L_tilde_psi = std::max(out.L_tilde_psi, worst_block / mag);
          ++out.samples;
        }
      }
    }
  }
  return out;
}

double rho_envelope_margin(const RegressorModel& model,
                           const std::vector<Eigen::VectorXd>& state_grid,
                           const std::vector<double>& t_grid) {
  if (!model.rho) throw ConfigError("rho_envelope_margin: model has no rho");
  double worst = kInf;
  for (const auto& s : state_grid) {
    for (double t : t_grid) {
      double used = op_norm(model.psi_at(s, t));
      const auto parts = model.d_psi_dx_at(s, t);
      double dnorm = 0.0;
      for (const auto& part : parts) dnorm += part.squaredNorm();
      used = std::max(used, std::sqrt(dnorm));
      used = std::max(used, op_norm(model.d_psi_dt_at(s, t)));
      worst = std::min(worst, model.rho(s.norm()) - used);
    }
  }
  return worst;
}

}  // namespace vfc
