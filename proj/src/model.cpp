#include "vfc/model.hpp"

#include <cmath>
#include <string>

namespace vfc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace

Eigen::MatrixXd RegressorModel::psi_at(const Eigen::VectorXd& x, double t) const {
  Eigen::MatrixXd m = psi(x, t);
  require(m.rows() == state_dim && m.cols() == param_dim,
          "psi returned " + std::to_string(m.rows()) + "x" +
              std::to_string(m.cols()) + ", expected " +
              std::to_string(state_dim) + "x" + std::to_string(param_dim));
  return m;
}

Eigen::VectorXd RegressorModel::psi_o_at(const Eigen::VectorXd& x, double t) const {
  if (!psi_o) return Eigen::VectorXd::Zero(state_dim);
  Eigen::VectorXd v = psi_o(x, t);
  require(v.size() == state_dim, "psi_o dimension mismatch");
  return v;
}

std::vector<Eigen::MatrixXd> RegressorModel::d_psi_dx_at(const Eigen::VectorXd& x,
                                                         double t) const {
  if (d_psi_dx) return d_psi_dx(x, t);
  const double h = std::max(1e-6, 1e-6 * x.norm());
  std::vector<Eigen::MatrixXd> parts(state_dim);
  Eigen::VectorXd xp = x, xm = x;
  for (int j = 0; j < state_dim; ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    parts[j] = (psi_at(xp, t) - psi_at(xm, t)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return parts;
}

Eigen::MatrixXd RegressorModel::d_psi_dt_at(const Eigen::VectorXd& x, double t) const {
  if (d_psi_dt) return d_psi_dt(x, t);
  const double h = std::max(1e-6, 1e-6 * std::abs(t));
  return (psi_at(x, t + h) - psi_at(x, t - h)) / (2.0 * h);
}

Eigen::MatrixXd RegressorModel::vector_field_jacobian(
    const Eigen::VectorXd& x, double t, const Eigen::VectorXd& theta) const {
  require(theta.size() == param_dim, "vector_field_jacobian: theta dimension");
  const auto parts = d_psi_dx_at(x, t);
  Eigen::MatrixXd jac(state_dim, state_dim);
  for (int j = 0; j < state_dim; ++j) jac.col(j) = parts[j] * theta;
  return jac;
}

Eigen::MatrixXd coupling_input(const Graph& g, const Eigen::MatrixXd& x, double k) {
  require(static_cast<int>(x.cols()) == g.n_agents,
          "coupling_input: expected " + std::to_string(g.n_agents) +
              " agent columns, got " + std::to_string(x.cols()));
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (const auto& [i, j] : g.edges) {
    const Eigen::VectorXd diff = x.col(j) - x.col(i);
    u.col(i) += diff;
    u.col(j) -= diff;
  }
  return k * u;
}

namespace {

Eigen::MatrixXd masked_coupling(const RegressorModel& model, const Graph& g,
                                const NetworkState& s, double k) {
  Eigen::MatrixXd u = coupling_input(g, s.x, k);
  for (int c = 0; c < model.state_dim; ++c) {
    if (!model.couples(c)) u.row(c).setZero();
  }
  return u;
}

void check_dims(const RegressorModel& model, const Graph& g, const NetworkState& s) {
  require(s.n_agents() == g.n_agents, "network state has " +
                                          std::to_string(s.n_agents()) +
                                          " agents, graph has " +
                                          std::to_string(g.n_agents));
  require(s.state_dim() == model.state_dim, "state dimension mismatch");
  require(s.param_dim() == model.param_dim, "parameter dimension mismatch");
}

}  // namespace

Eigen::MatrixXd state_rhs(const RegressorModel& model, const Graph& g,
                          const NetworkState& s, const CouplingGains& gains) {
  check_dims(model, g, s);
  Eigen::MatrixXd u = masked_coupling(model, g, s, gains.k);
  Eigen::MatrixXd dx(model.state_dim, s.n_agents());
  for (int i = 0; i < s.n_agents(); ++i) {
    dx.col(i) = model.psi_at(s.x.col(i), s.t) * s.theta.col(i) +
                model.psi_o_at(s.x.col(i), s.t) + u.col(i);
  }
  return dx;
}

Eigen::MatrixXd param_rhs(const RegressorModel& model, const Graph& g,
                          const NetworkState& s, const CouplingGains& gains) {
  check_dims(model, g, s);
  Eigen::MatrixXd dtheta = Eigen::MatrixXd::Zero(model.param_dim, s.n_agents());
  if (gains.g == 0.0) return dtheta;
  Eigen::MatrixXd u = masked_coupling(model, g, s, gains.k);
  for (int i = 0; i < s.n_agents(); ++i) {
    dtheta.col(i) = gains.g * model.psi_at(s.x.col(i), s.t).transpose() * u.col(i);
  }
  return dtheta;
}

NetworkDerivative network_rhs(const RegressorModel& model, const Graph& g,
                              const NetworkState& s, const CouplingGains& gains) {
  check_dims(model, g, s);
  // Evaluate the coupling once; both equations recycle the same signal.
  Eigen::MatrixXd u = masked_coupling(model, g, s, gains.k);
  NetworkDerivative d;
  d.dx.resize(model.state_dim, s.n_agents());
  d.dtheta = Eigen::MatrixXd::Zero(model.param_dim, s.n_agents());
  for (int i = 0; i < s.n_agents(); ++i) {
    const Eigen::MatrixXd psi_i = model.psi_at(s.x.col(i), s.t);
    d.dx.col(i) = psi_i * s.theta.col(i) + model.psi_o_at(s.x.col(i), s.t) + u.col(i);
    if (gains.g != 0.0) d.dtheta.col(i) = gains.g * psi_i.transpose() * u.col(i);
  }
  return d;
}

RegressorModel scalar_linear_sine() {
  RegressorModel m;
  m.name = "scalar_linear_sine";
  m.state_dim = 1;
  m.param_dim = 2;
  m.psi = [](const Eigen::VectorXd& x, double t) {
    Eigen::MatrixXd r(1, 2);
    r << -x(0), std::sin(t);
    return r;
  };
  m.d_psi_dx = [](const Eigen::VectorXd&, double) {
    Eigen::MatrixXd d(1, 2);
    d << -1.0, 0.0;
    return std::vector<Eigen::MatrixXd>{d};
  };
  m.d_psi_dt = [](const Eigen::VectorXd&, double t) {
    Eigen::MatrixXd d(1, 2);
    d << 0.0, std::cos(t);
    return d;
  };
  m.rho = [](double r) { return std::sqrt(r * r + 1.0); };
  return m;
}

RegressorModel van_der_pol_companion() {
  RegressorModel m;
  m.name = "van_der_pol";
  m.state_dim = 2;  // (z, y)
  m.param_dim = 2;  // (mu, nu)
  m.psi = [](const Eigen::VectorXd& x, double) {
    const double z = x(0), y = x(1);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
    r(1, 0) = -(z * z - 1.0) * (-z + y);
    r(1, 1) = -z;
    return r;
  };
  m.psi_o = [](const Eigen::VectorXd& x, double) {
    const double z = x(0), y = x(1);
    Eigen::VectorXd v(2);
    v << -z + y, -z + y;
    return v;
  };
  m.d_psi_dx = [](const Eigen::VectorXd& x, double) {
    const double z = x(0), y = x(1);
    Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(2, 2);
    dz(1, 0) = -2.0 * z * (-z + y) + (z * z - 1.0);
    dz(1, 1) = -1.0;
    Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(2, 2);
    dy(1, 0) = -(z * z - 1.0);
    return std::vector<Eigen::MatrixXd>{dz, dy};
  };
  m.d_psi_dt = [](const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Zero(2, 2);
  };
  m.coupling_mask = {false, true};  // only y is coupled
  return m;
}

RegressorModel model_by_name(const std::string& name) {
  if (name == "scalar_linear_sine") return scalar_linear_sine();
  if (name == "van_der_pol") return van_der_pol_companion();
  throw ConfigError("unknown model '" + name +
                    "' (expected scalar_linear_sine or van_der_pol)");
}

}  // namespace vfc
