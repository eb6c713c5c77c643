#include "vfc/transforms.hpp"

#include <string>

namespace vfc {

Eigen::MatrixXd unstack(const Eigen::VectorXd& v, int dim) {
  if (dim <= 0 || v.size() % dim != 0) {
    throw ShapeError("unstack: vector of size " + std::to_string(v.size()) +
                     " is not a multiple of block dimension " + std::to_string(dim));
  }
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), dim, v.size() / dim);
}

Eigen::VectorXd stack(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd TildePsi::apply(const Eigen::MatrixXd& theta) const {
  const int n_agents = static_cast<int>(blocks.size());
  if (theta.cols() != n_agents) throw ShapeError("TildePsi::apply: column count");
  Eigen::MatrixXd out(blocks.empty() ? 0 : blocks[0].rows(), n_agents);
  for (int i = 0; i < n_agents; ++i) out.col(i) = blocks[i] * theta.col(i);
  return out;
}

Eigen::MatrixXd TildePsi::apply_transpose(const Eigen::MatrixXd& v) const {
  const int n_agents = static_cast<int>(blocks.size());
  if (v.cols() != n_agents) throw ShapeError("TildePsi::apply_transpose: column count");
  Eigen::MatrixXd out(blocks.empty() ? 0 : blocks[0].cols(), n_agents);
  for (int i = 0; i < n_agents; ++i) out.col(i) = blocks[i].transpose() * v.col(i);
  return out;
}

double TildePsi::norm() const {
  double worst = 0.0;
  for (const auto& b : blocks) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    worst = std::max(worst, svd.singularValues().size() > 0
                                ? svd.singularValues()(0)
                                : 0.0);
  }
  return worst;
}

SyncCoords to_sync_coords(const LaplacianDecomposition& dec, const Eigen::MatrixXd& x) {
  if (static_cast<int>(x.cols()) != dec.n_agents()) {
    throw ShapeError("to_sync_coords: expected " + std::to_string(dec.n_agents()) +
                     " columns, got " + std::to_string(x.cols()));
  }
  SyncCoords c;
  c.chi_o = x.rowwise().mean();
  c.chi_tilde = stack(x * dec.r_matrix);
  return c;
}

Eigen::MatrixXd from_sync_coords(const LaplacianDecomposition& dec, const SyncCoords& c) {
  const int n = static_cast<int>(c.chi_o.size());
  const int N = dec.n_agents();
  if (static_cast<int>(c.chi_tilde.size()) != n * (N - 1)) {
    throw ShapeError("from_sync_coords: disagreement size mismatch");
  }
  Eigen::MatrixXd x = c.chi_o.replicate(1, N);
  if (N > 1) x += unstack(c.chi_tilde, n) * dec.r_matrix.transpose();
  return x;
}

ParamCoords to_param_coords(const LaplacianDecomposition& dec, const Eigen::MatrixXd& theta) {
  if (static_cast<int>(theta.cols()) != dec.n_agents()) {
    throw ShapeError("to_param_coords: expected " + std::to_string(dec.n_agents()) +
                     " columns, got " + std::to_string(theta.cols()));
  }
  ParamCoords c;
  c.vartheta_o = theta.rowwise().mean();
  c.vartheta_tilde = stack(theta * dec.r_matrix);
  return c;
}

Eigen::MatrixXd from_param_coords(const LaplacianDecomposition& dec, const ParamCoords& c) {
  const int p = static_cast<int>(c.vartheta_o.size());
  const int N = dec.n_agents();
  if (static_cast<int>(c.vartheta_tilde.size()) != p * (N - 1)) {
    throw ShapeError("from_param_coords: disagreement size mismatch");
  }
  Eigen::MatrixXd theta = c.vartheta_o.replicate(1, N);
  if (N > 1) theta += unstack(c.vartheta_tilde, p) * dec.r_matrix.transpose();
  return theta;
}

TildePsi tilde_psi(const RegressorModel& model, const Eigen::VectorXd& chi_o,
                   const Eigen::VectorXd& chi_tilde,
                   const LaplacianDecomposition& dec, double t) {
  const int N = dec.n_agents();
  if (static_cast<int>(chi_o.size()) != model.state_dim ||
      static_cast<int>(chi_tilde.size()) != model.state_dim * (N - 1)) {
    throw ShapeError("tilde_psi: coordinate dimensions inconsistent with model");
  }
  const Eigen::MatrixXd psi_center = model.psi_at(chi_o, t);
  const Eigen::MatrixXd dis = unstack(chi_tilde, model.state_dim);
  TildePsi out;
  out.blocks.reserve(N);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd xi_state = chi_o;
    if (N > 1) xi_state += dis * dec.r_matrix.row(i).transpose();
    out.blocks.push_back(model.psi_at(xi_state, t) - psi_center);
  }
  return out;
}

XiCoord xi_of(const LaplacianDecomposition& dec, const Eigen::VectorXd& chi_tilde,
              const Eigen::VectorXd& vartheta_tilde,
              const Eigen::MatrixXd& psi_at_chi_o, double k) {
  if (k <= 0.0) {
    throw InvalidGain("xi_of: coupling gain must be positive, got " + std::to_string(k));
  }
  const int N = dec.n_agents();
  const int n = static_cast<int>(psi_at_chi_o.rows());
  const int p = static_cast<int>(psi_at_chi_o.cols());
  if (static_cast<int>(chi_tilde.size()) != n * (N - 1) ||
      static_cast<int>(vartheta_tilde.size()) != p * (N - 1)) {
    throw ShapeError("xi_of: disagreement dimensions inconsistent");
  }
  XiCoord out;
  if (N == 1) {
    out.xi = chi_tilde;
    return out;
  }
  // (Lambda^{-1} (x) psi) vartheta_tilde == vec(psi Theta Lambda^{-1}).
  Eigen::MatrixXd correction =
      psi_at_chi_o * unstack(vartheta_tilde, p) * dec.lambda.cwiseInverse().asDiagonal();
  out.xi = chi_tilde - stack(correction) / k;
  return out;
}

namespace {

// Agent states/parameters reconstructed from transformed coordinates.
struct Reconstructed {
  Eigen::MatrixXd x;      // n x N
  Eigen::MatrixXd theta;  // p x N
};

Reconstructed reconstruct(const LaplacianDecomposition& dec, const TransformedState& s) {
  Reconstructed r;
  SyncCoords sc{s.chi_o, s.chi_tilde};
  ParamCoords pc{s.vartheta_o, s.vartheta_tilde};
  r.x = from_sync_coords(dec, sc);
  r.theta = from_param_coords(dec, pc);
  return r;
}

}  // namespace

TransformedState transformed_rhs(const RegressorModel& model,
                                 const LaplacianDecomposition& dec,
                                 const TransformedState& s, double t,
                                 const CouplingGains& gains) {
  for (int c = 0; c < model.state_dim; ++c) {
    if (!model.couples(c)) {
      throw ShapeError("transformed_rhs: requires a fully coupled model");
    }
  }
  const int N = dec.n_agents();
  const int n = model.state_dim;
  const int p = model.param_dim;
  const auto rec = reconstruct(dec, s);

  const Eigen::MatrixXd psi_center = model.psi_at(s.chi_o, t);
  const TildePsi dev = tilde_psi(model, s.chi_o, s.chi_tilde, dec, t);

  // Common-part contribution (zero for the theory-path models).
  Eigen::MatrixXd psi_o_cols(n, N);
  for (int i = 0; i < N; ++i) psi_o_cols.col(i) = model.psi_o_at(rec.x.col(i), t);

  const Eigen::MatrixXd dev_theta = dev.apply(rec.theta);  // n x N

  TransformedState d;
  d.chi_o = psi_center * s.vartheta_o + dev_theta.rowwise().mean() +
            psi_o_cols.rowwise().mean();

  const Eigen::MatrixXd dis_x = unstack(s.chi_tilde, n);        // n x (N-1)
  const Eigen::MatrixXd dis_th = unstack(s.vartheta_tilde, p);  // p x (N-1)
  Eigen::MatrixXd dx_dis = -gains.k * dis_x * dec.lambda.asDiagonal();
  dx_dis += psi_center * dis_th;
  dx_dis += (dev_theta + psi_o_cols) * dec.r_matrix;
  d.chi_tilde = stack(dx_dis);

  // W columns: blocks of (R Lambda (x) I_n) chi_tilde.
  const Eigen::MatrixXd w =
      dis_x * dec.lambda.asDiagonal() * dec.r_matrix.transpose();  // n x N
  const Eigen::MatrixXd h = dev.apply_transpose(w);                // p x N

  d.vartheta_o = -(gains.g * gains.k) * h.rowwise().mean();
  Eigen::MatrixXd dth_dis =
      -(gains.g * gains.k) *
      (psi_center.transpose() * dis_x * dec.lambda.asDiagonal() + h * dec.r_matrix);
  d.vartheta_tilde = stack(dth_dis);
  return d;
}

Eigen::VectorXd xi_rhs(const RegressorModel& model, const LaplacianDecomposition& dec,
                       const TransformedState& s, double t, const CouplingGains& gains) {
  if (model.state_dim != 1) {
    throw ShapeError("xi_rhs: the xi dynamics oracle is scalar-state only");
  }
  if (gains.k <= 0.0) throw InvalidGain("xi_rhs: k must be positive");
  const int N = dec.n_agents();
  const int p = model.param_dim;
  const auto rec = reconstruct(dec, s);

  const Eigen::MatrixXd psi_c = model.psi_at(s.chi_o, t);  // 1 x p
  const TildePsi dev = tilde_psi(model, s.chi_o, s.chi_tilde, dec, t);
  const Eigen::MatrixXd dis_th = unstack(s.vartheta_tilde, p);  // p x (N-1)
  const Eigen::VectorXd inv_lambda = dec.lambda.cwiseInverse();

  const Eigen::VectorXd xi =
      xi_of(dec, s.chi_tilde, s.vartheta_tilde, psi_c, gains.k).xi;

  // Total derivative of psi(chi_o, t) along the flow.
  const TransformedState full = transformed_rhs(model, dec, s, t, gains);
  const Eigen::MatrixXd dpsi_dt_total =
      model.d_psi_dx_at(s.chi_o, t)[0] * full.chi_o(0) + model.d_psi_dt_at(s.chi_o, t);

  const double psi_sq = (psi_c * psi_c.transpose())(0, 0);

  Eigen::VectorXd rhs = -gains.k * dec.lambda.cwiseProduct(xi);

  // R^T tilde_psi theta
  Eigen::VectorXd dev_theta(N);
  for (int i = 0; i < N; ++i)
    dev_theta(i) = (dev.blocks[i] * rec.theta.col(i))(0, 0);
  rhs += dec.r_matrix.transpose() * dev_theta;

  // -(1/k) (Lambda^{-1} (x) dpsi/dt) vartheta_tilde
  rhs -= inv_lambda.cwiseProduct((dpsi_dt_total * dis_th).transpose().col(0)) / gains.k;

  rhs += gains.g * psi_sq * xi;
  rhs += (gains.g / gains.k) * psi_sq *
         inv_lambda.cwiseProduct((psi_c * dis_th).transpose().col(0));

  // g (Lambda^{-1} R^T (x) psi) tilde_psi^T R Lambda xi
  const Eigen::VectorXd r_lambda_xi = dec.r_matrix * dec.lambda.cwiseProduct(xi);
  Eigen::VectorXd q1(N);
  for (int i = 0; i < N; ++i)
    q1(i) = (psi_c * (dev.blocks[i].transpose() * r_lambda_xi(i)))(0, 0);
  rhs += gains.g * inv_lambda.cwiseProduct(dec.r_matrix.transpose() * q1);

  // (g/k) (Lambda^{-1} R^T (x) psi) tilde_psi^T (R (x) psi) vartheta_tilde
  const Eigen::VectorXd v2 = dec.r_matrix * (psi_c * dis_th).transpose().col(0);
  Eigen::VectorXd q2(N);
  for (int i = 0; i < N; ++i)
    q2(i) = (psi_c * (dev.blocks[i].transpose() * v2(i)))(0, 0);
  rhs += (gains.g / gains.k) * inv_lambda.cwiseProduct(dec.r_matrix.transpose() * q2);

  return rhs;
}

}  // namespace vfc
