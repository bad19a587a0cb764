#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fol/mesh.hpp"

namespace fol {

// Nodal Young's modulus field (MPa) with a single Poisson ratio.
struct ElasticityField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd E;
  double nu = 0.3;
};

struct QuadratureRule {
  Eigen::MatrixXd points;   // n_qp x dim, parent coordinates
  Eigen::VectorXd weights;  // n_qp
};

// 2x2 Gauss rule on [-1,1]^2: points at +-1/sqrt(3), unit weights.
QuadratureRule quad4_rule();
// One-point rule at the tet centroid, weight 1/6.
QuadratureRule tet4_rule();

// Bilinear shape functions N_i = 1/4 (1 +- xi)(1 +- eta) and parent gradients.
void shape_quad4(double xi, double eta, Eigen::Vector4d& N, Eigen::Matrix<double, 4, 2>& dN);
// Linear tet shape functions; gradients are constant.
void shape_tet4(Eigen::Vector4d& N, Eigen::Matrix<double, 4, 3>& dN);

struct JacobianData {
  Eigen::MatrixXd J;     // dim x dim, J(i,j) = d x_j / d xi_i
  Eigen::MatrixXd invJ;  // dim x dim
  double det = 0.0;
};

// coords: 4 x dim element node coordinates; dN: 4 x dim parent gradients.
// Throws on det(J) <= 1e-14.
JacobianData jacobian(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& dN);
JacobianData jacobian(const Mesh& mesh, int element, const Eigen::MatrixXd& dN);

// Physical gradients from parent gradients: dN_x = dN * invJ^T.
Eigen::MatrixXd physical_gradients(const Eigen::MatrixXd& invJ, const Eigen::MatrixXd& dN);

// Strain-displacement matrix from physical gradients (4 x dim). Rows are
// (eps_xx, eps_yy, gamma_xy) in 2D and (eps_xx, eps_yy, eps_zz, gamma_yz,
// gamma_xz, gamma_xy) in 3D; columns interleaved per node.
Eigen::MatrixXd b_matrix(const Eigen::MatrixXd& dN_x);

Eigen::Matrix3d constitutive_plane_stress(double E, double nu);
Eigen::Matrix<double, 6, 6> constitutive_3d(double E, double nu);

// K_e = sum_n w_n det(J) B^T C(xi_n) B with E interpolated at each quadrature
// point through the shape functions.
Eigen::MatrixXd element_stiffness(const Mesh& mesh, int element, const Eigen::Vector4d& nodal_E, double nu);

Eigen::MatrixXd element_coords(const Eigen::MatrixXd& nodes, const Eigen::MatrixXi& elements, int element);

// Precomputed per-element quadrature factors for one (mesh, nu) pair.
// K_e(E) = sum_n Einterp_n * P_en where P_en = w_n det(J) B^T C_unit B and
// C_unit is the constitutive matrix at E = 1. Structured grids share one set
// of P matrices across all cells.
class StiffnessKernel {
 public:
  StiffnessKernel(const Mesh& mesh, double nu);

  const Mesh& mesh() const { return *mesh_; }
  double nu() const { return nu_; }
  int n_qp() const { return n_qp_; }
  int edof() const { return edof_; }
  double element_measure(int element) const { return measures_[shared_ ? 0 : element]; }
  // row n: shape function values at quadrature point n
  const Eigen::MatrixXd& qp_shapes() const { return shapes_; }

  void element_matrix(int element, const Eigen::Vector4d& nodal_E, Eigen::MatrixXd& Ke) const;

  // out = K(E) * U, matrix-free scatter-gather
  void apply(const Eigen::Ref<const Eigen::VectorXd>& E, const Eigen::Ref<const Eigen::VectorXd>& U,
             Eigen::VectorXd& out) const;

  // returns 1/2 U^T K U and writes KU = K(E) * U in the same element sweep
  double energy(const Eigen::Ref<const Eigen::VectorXd>& E,
                const Eigen::Ref<const Eigen::VectorXd>& U, Eigen::VectorXd& KU) const;

  Eigen::VectorXd diagonal(const Eigen::Ref<const Eigen::VectorXd>& E) const;

 private:
  const Eigen::MatrixXd& qp_matrix(int element, int qp) const {
    return p_[(shared_ ? 0 : element) * n_qp_ + qp];
  }

  const Mesh* mesh_;
  double nu_;
  int n_qp_;
  int edof_;
  bool shared_;                  // all elements share geometry (structured grid)
  Eigen::MatrixXd shapes_;       // n_qp x 4
  std::vector<Eigen::MatrixXd> p_;
  std::vector<double> measures_;
};

// R = K(field) * U; convenience wrapper that builds a transient kernel.
Eigen::VectorXd apply_global_stiffness(const Mesh& mesh, const ElasticityField& field, const Eigen::VectorXd& U);

}  // namespace fol
