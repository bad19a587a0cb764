#include "fol/solver.hpp"

#include <cmath>

namespace fol {

namespace {

// scatter x over free DOFs into a zero-padded full vector, apply K, gather back
class FreeDofOperator {
 public:
  FreeDofOperator(const StiffnessKernel& kernel, const Eigen::VectorXd& E, const DofMap& dof)
      : kernel_(kernel), E_(E), dof_(dof), full_(Eigen::VectorXd::Zero(dof.n_dofs())) {}

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    full_.setZero();
    for (std::size_t i = 0; i < dof_.free_dofs.size(); ++i) full_[dof_.free_dofs[i]] = x[i];
    kernel_.apply(E_, full_, result_);
    out.resize(dof_.free_dofs.size());
    for (std::size_t i = 0; i < dof_.free_dofs.size(); ++i) out[i] = result_[dof_.free_dofs[i]];
  }

 private:
  const StiffnessKernel& kernel_;
  const Eigen::VectorXd& E_;
  const DofMap& dof_;
  Eigen::VectorXd full_, result_;
};

}  // namespace

SolutionField solve_reference(const Mesh& mesh, const DofMap& dof_map, const ElasticityField& field,
                              const SolveOptions& options, CgStats* stats) {
  if (field.E.size() != mesh.n_nodes())
    throw std::invalid_argument("solve_reference: field size does not match mesh");
  if ((field.E.array() <= 0.0).any())
    throw std::invalid_argument("solve_reference: field must be strictly positive");

  const int n_free = static_cast<int>(dof_map.free_dofs.size());
  Eigen::VectorXd U = Eigen::VectorXd::Zero(dof_map.n_dofs());
  for (const auto& [d, v] : dof_map.prescribed) U[d] = v;

  SolutionField sol;
  sol.mesh = &mesh;
  if (n_free > 0) {
    StiffnessKernel kernel(mesh, field.nu);

    // rhs = -(K * U_p) restricted to free DOFs
    Eigen::VectorXd KU;
    kernel.apply(field.E, U, KU);
    Eigen::VectorXd b(n_free);
    for (int i = 0; i < n_free; ++i) b[i] = -KU[dof_map.free_dofs[i]];

    Eigen::VectorXd diag_full = kernel.diagonal(field.E);
    Eigen::VectorXd inv_diag(n_free);
    for (int i = 0; i < n_free; ++i) {
      const double d = diag_full[dof_map.free_dofs[i]];
      inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }

    FreeDofOperator op(kernel, field.E, dof_map);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_free);
    const double b_norm = b.norm();
    CgStats local{0, 0.0};
    if (b_norm > 0.0) {
      Eigen::VectorXd r = b;  // x = 0 start
      Eigen::VectorXd z = inv_diag.asDiagonal() * r;
      Eigen::VectorXd p = z, Ap(n_free);
      double rz = r.dot(z);
      double best = r.norm();
      int since_progress = 0;
      const int max_iter = options.max_iter_factor * n_free;
      while (true) {
        const double rel = r.norm() / b_norm;
        local.relative_residual = rel;
        if (rel <= options.tol) break;
        if (local.iterations >= max_iter)
          throw std::runtime_error("singular system: CG exceeded iteration budget");
        op.apply(p, Ap);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0)) throw std::runtime_error("singular system: CG lost positive definiteness");
        const double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        ++local.iterations;
        const double rn = r.norm();
        if (rn < best * (1.0 - 1e-14)) {
          best = rn;
          since_progress = 0;
        } else if (++since_progress >= options.stall_window) {
          throw std::runtime_error("singular system: CG stalled");
        }
        z = inv_diag.asDiagonal() * r;
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
      }
    }
    if (stats) *stats = local;
    for (int i = 0; i < n_free; ++i) U[dof_map.free_dofs[i]] = x[i];
  } else if (stats) {
    *stats = CgStats{0, 0.0};
  }

  sol.u = std::move(U);
  sol.stress = recover_stress(mesh, field, sol.u);
  return sol;
}

Eigen::MatrixXd recover_stress(const Mesh& mesh, const ElasticityField& field, const Eigen::VectorXd& U) {
  if (U.size() != mesh.n_dofs()) throw std::invalid_argument("recover_stress: U has wrong length");
  const int dim = mesh.dim;
  const int n_comp = dim == 2 ? 3 : 6;
  const QuadratureRule rule = dim == 2 ? quad4_rule() : tet4_rule();

  Eigen::MatrixXd nodal = Eigen::MatrixXd::Zero(mesh.n_nodes(), n_comp);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(mesh.n_nodes());
  const int edof = 4 * dim;
  Eigen::VectorXd ue(edof);

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Eigen::MatrixXd coords = element_coords(mesh.nodes, mesh.elements, e);
    Eigen::Vector4d ee;
    for (int k = 0; k < 4; ++k) {
      const int node = mesh.elements(e, k);
      ee[k] = field.E[node];
      for (int c = 0; c < dim; ++c) ue[k * dim + c] = U[node * dim + c];
    }
    Eigen::VectorXd sigma_e = Eigen::VectorXd::Zero(n_comp);
    double measure = 0.0;
    for (int n = 0; n < rule.points.rows(); ++n) {
      Eigen::Vector4d N;
      Eigen::MatrixXd dN;
      if (dim == 2) {
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
      const double E_at_qp = N.dot(ee);
      const Eigen::MatrixXd C = dim == 2 ? Eigen::MatrixXd(constitutive_plane_stress(E_at_qp, field.nu))
                                         : Eigen::MatrixXd(constitutive_3d(E_at_qp, field.nu));
      sigma_e += C * (B * ue);
      measure += rule.weights(n) * jac.det;
    }
    sigma_e /= static_cast<double>(rule.points.rows());  // element mean over quadrature points
    for (int k = 0; k < 4; ++k) {
      const int node = mesh.elements(e, k);
      nodal.row(node) += measure * sigma_e.transpose();
      weight[node] += measure;
    }
  }
  for (int i = 0; i < mesh.n_nodes(); ++i) nodal.row(i) /= weight[i];
  return nodal;
}

Eigen::VectorXd homogenize(const Eigen::MatrixXd& nodal_components) {
  return nodal_components.colwise().mean();
}

double homogenize(const Eigen::VectorXd& nodal_values) { return nodal_values.mean(); }

}  // namespace fol
