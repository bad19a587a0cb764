#pragma once

// Shared oracles for the test suite: dense assembly and a dense Dirichlet
// solve (independent of the matrix-free kernel and CG path), a naive MLP
// evaluator, scalar activations, and flat parameter access for
// finite-difference sweeps.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fol/fem.hpp"
#include "fol/mesh.hpp"
#include "fol/neural.hpp"

namespace test_helpers {

inline Eigen::MatrixXd assemble_dense(const fol::Mesh& mesh, const fol::ElasticityField& field) {
  const int dim = mesh.dim;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(mesh.n_dofs(), mesh.n_dofs());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Eigen::Vector4d ee;
    for (int k = 0; k < 4; ++k) ee[k] = field.E[mesh.elements(e, k)];
    Eigen::MatrixXd Ke = fol::element_stiffness(mesh, e, ee, field.nu);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j)
            K(mesh.elements(e, a) * dim + i, mesh.elements(e, b) * dim + j) +=
                Ke(a * dim + i, b * dim + j);
  }
  return K;
}

// Dense-LU reference for the constrained system; mirrors solve_reference's
// elimination of prescribed DOFs without sharing any of its code.
inline Eigen::VectorXd dense_solve(const fol::Mesh& mesh, const fol::DofMap& dof_map,
                                   const fol::ElasticityField& field) {
  Eigen::MatrixXd K = assemble_dense(mesh, field);
  Eigen::VectorXd U = Eigen::VectorXd::Zero(mesh.n_dofs());
  for (const auto& [d, v] : dof_map.prescribed) U[d] = v;
  const int n_free = static_cast<int>(dof_map.free_dofs.size());
  if (n_free == 0) return U;
  Eigen::MatrixXd K_ff(n_free, n_free);
  Eigen::VectorXd b(n_free);
  Eigen::VectorXd KU = K * U;
  for (int i = 0; i < n_free; ++i) {
    b[i] = -KU[dof_map.free_dofs[i]];
    for (int j = 0; j < n_free; ++j) K_ff(i, j) = K(dof_map.free_dofs[i], dof_map.free_dofs[j]);
  }
  Eigen::VectorXd x = K_ff.partialPivLu().solve(b);
  for (int i = 0; i < n_free; ++i) U[dof_map.free_dofs[i]] = x[i];
  return U;
}

inline double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / b.norm();
}

inline double scalar_activation(fol::Activation act, double z) {
  switch (act) {
    case fol::Activation::Linear: return z;
    case fol::Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case fol::Activation::Tanh: return std::tanh(z);
    case fol::Activation::Swish: return z / (1.0 + std::exp(-z));
  }
  return z;
}

// Straight-line re-evaluation of the network, one neuron at a time.
inline Eigen::VectorXd naive_forward(const fol::Mlp& net, const Eigen::VectorXd& x) {
  Eigen::VectorXd a = x;
  for (int l = 0; l < net.n_layers(); ++l) {
    Eigen::VectorXd z(net.W[l].rows());
    for (Eigen::Index m = 0; m < z.size(); ++m) {
      double s = net.b[l][m];
      for (Eigen::Index n = 0; n < a.size(); ++n) s += net.W[l](m, n) * a[n];
      z[m] = s;
    }
    const fol::Activation act =
        l + 1 == net.n_layers() ? net.output_activation : net.hidden_activation;
    for (Eigen::Index m = 0; m < z.size(); ++m) z[m] = scalar_activation(act, z[m]);
    a = z;
  }
  return a;
}

// Flat views over every parameter / gradient entry, in matching order.
inline std::vector<double*> param_ptrs(fol::Mlp& net) {
  std::vector<double*> out;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    for (Eigen::Index i = 0; i < net.W[l].size(); ++i) out.push_back(net.W[l].data() + i);
    for (Eigen::Index i = 0; i < net.b[l].size(); ++i) out.push_back(net.b[l].data() + i);
  }
  return out;
}

inline std::vector<const double*> grad_ptrs(const fol::MlpGrads& grads) {
  std::vector<const double*> out;
  for (std::size_t l = 0; l < grads.W.size(); ++l) {
    for (Eigen::Index i = 0; i < grads.W[l].size(); ++i) out.push_back(grads.W[l].data() + i);
    for (Eigen::Index i = 0; i < grads.b[l].size(); ++i) out.push_back(grads.b[l].data() + i);
  }
  return out;
}

// Central finite difference through a scalar functional, perturbing *slot.
template <class F>
double central_fd(const F& f, double* slot, double h) {
  const double saved = *slot;
  *slot = saved + h;
  const double up = f();
  *slot = saved - h;
  const double down = f();
  *slot = saved;
  return (up - down) / (2.0 * h);
}

// Largest relative mismatch between analytic and FD gradients over all
// parameters of one net; floor guards entries where both sides are ~0.
template <class F>
double max_grad_mismatch(fol::Mlp& net, const fol::MlpGrads& grads, const F& loss, double h,
                         double floor) {
  std::vector<double*> params = param_ptrs(net);
  std::vector<const double*> analytic = grad_ptrs(grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double fd = central_fd(loss, params[i], h);
    const double err = std::abs(*analytic[i] - fd) / std::max(std::abs(fd), floor);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace test_helpers
