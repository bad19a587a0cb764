#pragma once

#include <Eigen/Dense>

#include "fol/fem.hpp"

namespace fol {

// Nodal displacements (interleaved DOFs, mm) with recovered nodal stresses
// (MPa); stress rows follow the b_matrix component ordering.
struct SolutionField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd u;
  Eigen::MatrixXd stress;  // n_nodes x 3 (2D) or x 6 (3D); empty until recovered
};

struct SolveOptions {
  double tol = 1e-12;        // relative residual target
  int max_iter_factor = 10;  // iteration cap = factor * n_free
  int stall_window = 50;     // abort when the residual makes no progress this long
};

struct CgStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

// Jacobi-preconditioned CG on the free DOFs of K(field) U = 0 with the
// prescribed values eliminated; returns the full displacement vector with
// prescribed entries inserted. Stress is recovered before returning.
SolutionField solve_reference(const Mesh& mesh, const DofMap& dof_map, const ElasticityField& field,
                              const SolveOptions& options = {}, CgStats* stats = nullptr);

// Element-mean stresses averaged to nodes with element-measure weights.
Eigen::MatrixXd recover_stress(const Mesh& mesh, const ElasticityField& field, const Eigen::VectorXd& U);

// Arithmetic mean per component of any nodal field.
Eigen::VectorXd homogenize(const Eigen::MatrixXd& nodal_components);
double homogenize(const Eigen::VectorXd& nodal_values);

}  // namespace fol
