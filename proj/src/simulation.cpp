#include "vfc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace vfc {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Eigen::VectorXd rk4_step(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& y, double t, double dt) {
  if (!(dt > 0.0)) throw InvalidGain("rk4_step: dt must be positive");
  const Eigen::VectorXd k1 = f(t, y);
  const Eigen::VectorXd k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(t + dt, y + dt * k3);
  if (!all_finite(k1) || !all_finite(k2) || !all_finite(k3) || !all_finite(k4)) {
    throw NumericalBlowup("rk4_step: non-finite stage derivative at t = " +
                              std::to_string(t),
                          t);
  }
  Eigen::VectorXd next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(next)) {
    throw NumericalBlowup("rk4_step: non-finite state at t = " + std::to_string(t), t);
  }
  return next;
}

namespace {

struct Layout {
  int n, p, N;
  bool blended, reference;

  int x_size() const { return n * N; }
  int theta_size() const { return p * N; }
  int total() const {
    return x_size() + theta_size() + (blended ? n : 0) + (reference ? n : 0);
  }
  Eigen::Map<const Eigen::MatrixXd> x_of(const Eigen::VectorXd& y) const {
    return {y.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N)};
  }
  Eigen::Map<const Eigen::MatrixXd> theta_of(const Eigen::VectorXd& y) const {
    return {y.data() + x_size(), static_cast<Eigen::Index>(p),
            static_cast<Eigen::Index>(N)};
  }
  Eigen::VectorXd s_of(const Eigen::VectorXd& y) const {
    return y.segment(x_size() + theta_size(), n);
  }
  Eigen::VectorXd s_ref_of(const Eigen::VectorXd& y) const {
    return y.segment(x_size() + theta_size() + n, n);
  }
};

}  // namespace

Trajectory simulate(const RegressorModel& model, const Graph& graph,
                    const NetworkState& initial, const CouplingGains& gains,
                    const IntegratorConfig& cfg, const SimulateOptions& opts) {
  if (!(cfg.dt > 0.0)) throw ConfigError("simulate: dt must be positive");
  if (gains.k < 0.0) throw InvalidGain("simulate: k must be nonnegative");
  if (gains.g < 0.0) throw InvalidGain("simulate: g must be nonnegative");

  const LaplacianDecomposition dec = decompose(graph);
  if (cfg.stiffness_guard && gains.k * dec.lambdaN > 0.0) {
    const double dt_max = 0.5 / (gains.k * dec.lambdaN);
    if (cfg.dt > dt_max) {
      throw StiffnessGuard("simulate: dt = " + std::to_string(cfg.dt) +
                           " exceeds stiffness limit 0.5/(k lambda_N) = " +
                           std::to_string(dt_max));
    }
  }

  const int N = graph.n_agents;
  const int n = model.state_dim;
  const int p = model.param_dim;
  if (initial.n_agents() != N || initial.state_dim() != n || initial.param_dim() != p) {
    throw ShapeError("simulate: initial state dimensions inconsistent");
  }

  Layout lay{n, p, N, opts.with_blended, opts.with_reference};
  Eigen::VectorXd y(lay.total());
  y.head(lay.x_size()) = stack(initial.x);
  y.segment(lay.x_size(), lay.theta_size()) = stack(initial.theta);
  const Eigen::VectorXd chi_o_0 = initial.x.rowwise().mean();
  const Eigen::VectorXd vartheta_o_0 = initial.theta.rowwise().mean();
  if (opts.with_blended) y.segment(lay.x_size() + lay.theta_size(), n) = chi_o_0;
  if (opts.with_reference) y.tail(n) = chi_o_0;

  auto rhs = [&](double t, const Eigen::VectorXd& state) {
    NetworkState ns{lay.x_of(state), lay.theta_of(state), t};
    const NetworkDerivative d = network_rhs(model, graph, ns, gains);
    Eigen::VectorXd dy(lay.total());
    dy.head(lay.x_size()) = stack(d.dx);
    dy.segment(lay.x_size(), lay.theta_size()) = stack(d.dtheta);
    int off = lay.x_size() + lay.theta_size();
    if (opts.with_blended) {
      const Eigen::VectorXd s = state.segment(off, n);
      const Eigen::VectorXd vo = lay.theta_of(state).rowwise().mean();
      dy.segment(off, n) = model.psi_at(s, t) * vo + model.psi_o_at(s, t);
      off += n;
    }
    if (opts.with_reference) {
      const Eigen::VectorXd sr = state.segment(off, n);
      dy.segment(off, n) = model.psi_at(sr, t) * vartheta_o_0 + model.psi_o_at(sr, t);
    }
    return dy;
  };

  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt)));
  const int stride = std::max(1, opts.record_every);

  auto traj = std::make_shared<Trajectory>();
  traj->n_agents = N;
  traj->state_dim = n;
  traj->param_dim = p;
  traj->k = gains.k;
  traj->g = gains.g;
  traj->dt = cfg.dt;
  traj->total_steps = steps;

  auto record = [&](double t, const Eigen::VectorXd& state) {
    const Eigen::MatrixXd x = lay.x_of(state);
    const Eigen::MatrixXd theta = lay.theta_of(state);
    const SyncCoords sc = to_sync_coords(dec, x);
    const ParamCoords pc = to_param_coords(dec, theta);
    traj->times.push_back(t);
    traj->x.push_back(x);
    traj->theta.push_back(theta);
    traj->chi_o.push_back(sc.chi_o);
    traj->norm_chi_tilde.push_back(sc.chi_tilde.norm());
    traj->vartheta_o.push_back(pc.vartheta_o);
    traj->norm_vartheta_tilde.push_back(pc.vartheta_tilde.norm());
    if (gains.k > 0.0) {
      const XiCoord xi = xi_of(dec, sc.chi_tilde, pc.vartheta_tilde,
                               model.psi_at(sc.chi_o, t), gains.k);
      traj->norm_xi.push_back(xi.xi.norm());
    } else {
      traj->norm_xi.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    if (opts.with_blended) {
      const Eigen::VectorXd s = lay.s_of(state);
      traj->s.push_back(s);
      double worst = 0.0;
      for (int i = 0; i < N; ++i) worst = std::max(worst, (x.col(i) - s).norm());
      traj->sync_err.push_back(worst);
    }
    if (opts.with_reference) traj->s_ref.push_back(lay.s_ref_of(state));
    double worst_p = 0.0;
    for (int i = 0; i < N; ++i)
      worst_p = std::max(worst_p, (theta.col(i) - pc.vartheta_o).norm());
    traj->param_err.push_back(worst_p);
  };

  auto track_stats = [&](const Eigen::VectorXd& state) {
    const Eigen::MatrixXd x = lay.x_of(state);
    const Eigen::MatrixXd theta = lay.theta_of(state);
    const Eigen::VectorXd vo = theta.rowwise().mean();
    traj->sup_mean_drift = std::max(traj->sup_mean_drift, (vo - vartheta_o_0).norm());
    traj->sup_norm_chi_tilde =
        std::max(traj->sup_norm_chi_tilde, (x * dec.r_matrix).norm());
  };

  record(0.0, y);
  track_stats(y);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * cfg.dt;
    try {
      y = rk4_step(rhs, y, t, cfg.dt);
    } catch (const NumericalBlowup& e) {
      throw NumericalBlowup(std::string(e.what()) + " (partial trajectory attached)",
                            t, traj);
    }
    const double t_next = static_cast<double>(i + 1) * cfg.dt;
    track_stats(y);
    if ((i + 1) % static_cast<std::size_t>(stride) == 0 || i + 1 == steps) {
      record(t_next, y);
    }
  }
  return std::move(*traj);
}

namespace {

Series integrate_reduced(
    const RegressorModel& model,
    const std::function<Eigen::VectorXd(double)>& vartheta_at,
    const Eigen::VectorXd& s0, const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (static_cast<int>(s0.size()) != model.state_dim) {
    throw ShapeError("initial condition dimension mismatch");
  }
  auto rhs = [&](double t, const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return model.psi_at(s, t) * vartheta_at(t) + model.psi_o_at(s, t);
  };
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt)));
  Series out;
  out.times.reserve(steps + 1);
  out.values.reserve(steps + 1);
  Eigen::VectorXd s = s0;
  out.times.push_back(0.0);
  out.values.push_back(s);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * cfg.dt;
    s = rk4_step(rhs, s, t, cfg.dt);
    out.times.push_back(static_cast<double>(i + 1) * cfg.dt);
    out.values.push_back(s);
  }
  return out;
}

}  // namespace

Series blended_trajectory(const RegressorModel& model,
                          const std::vector<Eigen::VectorXd>& vartheta_series,
                          const Eigen::VectorXd& s0, const IntegratorConfig& cfg) {
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt)));
  if (vartheta_series.size() < steps + 1) {
    throw ShapeError("blended_trajectory: parameter series shorter than the grid");
  }
  auto vartheta_at = [&](double t) -> Eigen::VectorXd {
    // Linear interpolation between grid nodes for RK4 stage times.
    const double pos = t / cfg.dt;
    const std::size_t i =
        std::min(static_cast<std::size_t>(std::max(0.0, std::floor(pos))),
                 vartheta_series.size() - 2);
    const double w = std::clamp(pos - static_cast<double>(i), 0.0, 1.0);
    return (1.0 - w) * vartheta_series[i] + w * vartheta_series[i + 1];
  };
  return integrate_reduced(model, vartheta_at, s0, cfg);
}

Series blended_trajectory(const RegressorModel& model,
                          const Eigen::VectorXd& vartheta_const,
                          const Eigen::VectorXd& s0, const IntegratorConfig& cfg) {
  return reference_trajectory(model, vartheta_const, s0, cfg);
}

Series reference_trajectory(const RegressorModel& model,
                            const Eigen::VectorXd& theta_star,
                            const Eigen::VectorXd& s0, const IntegratorConfig& cfg) {
  if (static_cast<int>(theta_star.size()) != model.param_dim) {
    throw ShapeError("reference_trajectory: theta_star dimension mismatch");
  }
  return integrate_reduced(
      model, [&](double) { return theta_star; }, s0, cfg);
}

}  // namespace vfc
