#include "fol/fem.hpp"

#include <cmath>

namespace fol {

QuadratureRule quad4_rule() {
  const double g = 1.0 / std::sqrt(3.0);
  QuadratureRule rule;
  rule.points.resize(4, 2);
  rule.points << -g, -g, g, -g, g, g, -g, g;
  rule.weights = Eigen::VectorXd::Ones(4);
  return rule;
}

QuadratureRule tet4_rule() {
  QuadratureRule rule;
  rule.points.resize(1, 3);
  rule.points << 0.25, 0.25, 0.25;
  rule.weights = Eigen::VectorXd::Constant(1, 1.0 / 6.0);
  return rule;
}

void shape_quad4(double xi, double eta, Eigen::Vector4d& N, Eigen::Matrix<double, 4, 2>& dN) {
  N << 0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
       0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta);
  dN << -0.25 * (1 - eta), -0.25 * (1 - xi),
         0.25 * (1 - eta), -0.25 * (1 + xi),
         0.25 * (1 + eta),  0.25 * (1 + xi),
        -0.25 * (1 + eta),  0.25 * (1 - xi);
}

void shape_tet4(Eigen::Vector4d& N, Eigen::Matrix<double, 4, 3>& dN) {
  N << 0.25, 0.25, 0.25, 0.25;  // values at the centroid
  dN << -1, -1, -1,
         1,  0,  0,
         0,  1,  0,
         0,  0,  1;
}

Eigen::MatrixXd element_coords(const Eigen::MatrixXd& nodes, const Eigen::MatrixXi& elements, int element) {
  Eigen::MatrixXd coords(4, nodes.cols());
  for (int k = 0; k < 4; ++k) coords.row(k) = nodes.row(elements(element, k));
  return coords;
}

JacobianData jacobian(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& dN) {
  JacobianData out;
  out.J = dN.transpose() * coords;  // J(i,j) = sum_k dN_k/dxi_i * x_k,j
  out.det = out.J.determinant();
  if (out.det <= 1e-14) throw std::runtime_error("degenerate element: det(J) <= 1e-14");
  out.invJ = out.J.inverse();
  return out;
}

JacobianData jacobian(const Mesh& mesh, int element, const Eigen::MatrixXd& dN) {
  return jacobian(element_coords(mesh.nodes, mesh.elements, element), dN);
}

Eigen::MatrixXd physical_gradients(const Eigen::MatrixXd& invJ, const Eigen::MatrixXd& dN) {
  return dN * invJ.transpose();
}

Eigen::MatrixXd b_matrix(const Eigen::MatrixXd& dN_x) {
  const int dim = static_cast<int>(dN_x.cols());
  if (dim == 2) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 8);
    for (int i = 0; i < 4; ++i) {
      B(0, 2 * i) = dN_x(i, 0);
      B(1, 2 * i + 1) = dN_x(i, 1);
      B(2, 2 * i) = dN_x(i, 1);
      B(2, 2 * i + 1) = dN_x(i, 0);
    }
    return B;
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 12);
  for (int i = 0; i < 4; ++i) {
    B(0, 3 * i) = dN_x(i, 0);
    B(1, 3 * i + 1) = dN_x(i, 1);
    B(2, 3 * i + 2) = dN_x(i, 2);
    B(3, 3 * i + 1) = dN_x(i, 2);  // gamma_yz
    B(3, 3 * i + 2) = dN_x(i, 1);
    B(4, 3 * i) = dN_x(i, 2);      // gamma_xz
    B(4, 3 * i + 2) = dN_x(i, 0);
    B(5, 3 * i) = dN_x(i, 1);      // gamma_xy
    B(5, 3 * i + 1) = dN_x(i, 0);
  }
  return B;
}

Eigen::Matrix3d constitutive_plane_stress(double E, double nu) {
  if (!(E > 0.0) || !(std::abs(nu) < 1.0))
    throw std::invalid_argument("invalid material: plane stress needs E > 0, |nu| < 1");
  Eigen::Matrix3d C;
  const double f = E / (1.0 - nu * nu);
  C << f, f * nu, 0, f * nu, f, 0, 0, 0, f * (1.0 - nu) / 2.0;
  return C;
}

Eigen::Matrix<double, 6, 6> constitutive_3d(double E, double nu) {
  if (!(E > 0.0) || !(nu > -1.0) || !(nu < 0.5))
    throw std::invalid_argument("invalid material: 3D isotropic needs E > 0, -1 < nu < 0.5");
  const double lambda = E * nu / ((1.0 - 2.0 * nu) * (1.0 + nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Eigen::Matrix<double, 6, 6> C = Eigen::Matrix<double, 6, 6>::Zero();
  C.topLeftCorner<3, 3>().setConstant(lambda);
  for (int i = 0; i < 3; ++i) {
    C(i, i) = lambda + 2.0 * mu;
    C(i + 3, i + 3) = mu;
  }
  return C;
}

namespace {

// per-quadrature-point N and w * det(J) * B^T C(E=1) B for one element
void element_qp_data(const Mesh& mesh, int element, double nu, const QuadratureRule& rule,
                     Eigen::MatrixXd& shapes, std::vector<Eigen::MatrixXd>& p, double& measure) {
  const Eigen::MatrixXd coords = element_coords(mesh.nodes, mesh.elements, element);
  const int n_qp = static_cast<int>(rule.points.rows());
  measure = 0.0;
  for (int n = 0; n < n_qp; ++n) {
    Eigen::Vector4d N;
    Eigen::MatrixXd dN;
    if (mesh.dim == 2) {
      Eigen::Matrix<double, 4, 2> d;
      shape_quad4(rule.points(n, 0), rule.points(n, 1), N, d);
      dN = d;
    } else {
      Eigen::Matrix<double, 4, 3> d;
      shape_tet4(N, d);
      dN = d;
    }
    const JacobianData jac = jacobian(coords, dN);
    const Eigen::MatrixXd B = b_matrix(physical_gradients(jac.invJ, dN));
    Eigen::MatrixXd C_unit = mesh.dim == 2
                                 ? Eigen::MatrixXd(constitutive_plane_stress(1.0, nu))
                                 : Eigen::MatrixXd(constitutive_3d(1.0, nu));
    shapes.row(n) = N.transpose();
    p.push_back(rule.weights(n) * jac.det * (B.transpose() * C_unit * B));
    measure += rule.weights(n) * jac.det;
  }
}

}  // namespace

StiffnessKernel::StiffnessKernel(const Mesh& mesh, double nu) : mesh_(&mesh), nu_(nu) {
  const QuadratureRule rule = mesh.dim == 2 ? quad4_rule() : tet4_rule();
  n_qp_ = static_cast<int>(rule.points.rows());
  edof_ = 4 * mesh.dim;
  shared_ = mesh.structured();
  shapes_.resize(n_qp_, 4);

  const int n_geom = shared_ ? 1 : mesh.n_elements();
  p_.reserve(n_geom * n_qp_);
  measures_.resize(n_geom);
  for (int e = 0; e < n_geom; ++e)
    element_qp_data(mesh, e, nu, rule, shapes_, p_, measures_[e]);
}

void StiffnessKernel::element_matrix(int element, const Eigen::Vector4d& nodal_E, Eigen::MatrixXd& Ke) const {
  Ke.setZero(edof_, edof_);
  for (int n = 0; n < n_qp_; ++n)
    Ke.noalias() += (shapes_.row(n).dot(nodal_E)) * qp_matrix(element, n);
}

void StiffnessKernel::apply(const Eigen::Ref<const Eigen::VectorXd>& E,
                            const Eigen::Ref<const Eigen::VectorXd>& U,
                            Eigen::VectorXd& out) const {
  energy(E, U, out);
}

double StiffnessKernel::energy(const Eigen::Ref<const Eigen::VectorXd>& E,
                               const Eigen::Ref<const Eigen::VectorXd>& U,
                               Eigen::VectorXd& KU) const {
  const int dim = mesh_->dim;
  KU.setZero(U.size());
  double energy = 0.0;
  Eigen::VectorXd ue(edof_), ke_ue(edof_);
  Eigen::Vector4d ee;
  for (int e = 0; e < mesh_->n_elements(); ++e) {
    for (int k = 0; k < 4; ++k) {
      const int node = mesh_->elements(e, k);
      ee[k] = E[node];
      for (int c = 0; c < dim; ++c) ue[k * dim + c] = U[node * dim + c];
    }
    ke_ue.setZero();
    for (int n = 0; n < n_qp_; ++n)
      ke_ue.noalias() += (shapes_.row(n).dot(ee)) * (qp_matrix(e, n) * ue);
    energy += 0.5 * ue.dot(ke_ue);
    for (int k = 0; k < 4; ++k) {
      const int node = mesh_->elements(e, k);
      for (int c = 0; c < dim; ++c) KU[node * dim + c] += ke_ue[k * dim + c];
    }
  }
  return energy;
}

Eigen::VectorXd StiffnessKernel::diagonal(const Eigen::Ref<const Eigen::VectorXd>& E) const {
  const int dim = mesh_->dim;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(mesh_->n_nodes() * dim);
  Eigen::Vector4d ee;
  for (int e = 0; e < mesh_->n_elements(); ++e) {
    for (int k = 0; k < 4; ++k) ee[k] = E[mesh_->elements(e, k)];
    for (int n = 0; n < n_qp_; ++n) {
      const double scale = shapes_.row(n).dot(ee);
      const Eigen::MatrixXd& P = qp_matrix(e, n);
      for (int k = 0; k < 4; ++k) {
        const int node = mesh_->elements(e, k);
        for (int c = 0; c < dim; ++c) diag[node * dim + c] += scale * P(k * dim + c, k * dim + c);
      }
    }
  }
  return diag;
}

Eigen::MatrixXd element_stiffness(const Mesh& mesh, int element, const Eigen::Vector4d& nodal_E, double nu) {
  for (int k = 0; k < 4; ++k)
    if (!(nodal_E[k] > 0.0)) throw std::invalid_argument("element_stiffness: nodal E must be > 0");

  const QuadratureRule rule = mesh.dim == 2 ? quad4_rule() : tet4_rule();
  const Eigen::MatrixXd coords = element_coords(mesh.nodes, mesh.elements, element);
  const int edof = 4 * mesh.dim;
  Eigen::MatrixXd Ke = Eigen::MatrixXd::Zero(edof, edof);
  for (int n = 0; n < rule.points.rows(); ++n) {
    Eigen::Vector4d N;
    Eigen::MatrixXd dN;
    if (mesh.dim == 2) {
      Eigen::Matrix<double, 4, 2> d;
      shape_quad4(rule.points(n, 0), rule.points(n, 1), N, d);
      dN = d;
    } else {
      Eigen::Matrix<double, 4, 3> d;
      shape_tet4(N, d);
      dN = d;
    }
    const JacobianData jac = jacobian(coords, dN);
    const Eigen::MatrixXd B = b_matrix(physical_gradients(jac.invJ, dN));
    const double E_at_qp = N.dot(nodal_E);
    const Eigen::MatrixXd C = mesh.dim == 2
                                  ? Eigen::MatrixXd(constitutive_plane_stress(E_at_qp, nu))
                                  : Eigen::MatrixXd(constitutive_3d(E_at_qp, nu));
    Ke.noalias() += rule.weights(n) * jac.det * (B.transpose() * C * B);
  }
  return Ke;
}

Eigen::VectorXd apply_global_stiffness(const Mesh& mesh, const ElasticityField& field, const Eigen::VectorXd& U) {
  if (U.size() != mesh.n_dofs()) throw std::invalid_argument("apply_global_stiffness: U has wrong length");
  StiffnessKernel kernel(mesh, field.nu);
  Eigen::VectorXd out;
  kernel.apply(field.E, U, out);
  return out;
}

}  // namespace fol
