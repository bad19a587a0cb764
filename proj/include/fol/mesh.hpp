#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "fol/common.hpp"

namespace fol {

enum class ElementKind { Quad4, Tet4 };

struct Mesh {
  int dim = 2;
  ElementKind kind = ElementKind::Quad4;
  Eigen::MatrixXd nodes;     // n_nodes x dim, coordinates in mm
  Eigen::MatrixXi elements;  // n_elements x 4, node indices
  std::map<std::string, std::vector<int>> node_sets;

  // Structured-grid bookkeeping; grid_n == 0 for unstructured meshes.
  int grid_n = 0;
  double side_length = 0.0;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elements() const { return static_cast<int>(elements.rows()); }
  int dofs_per_node() const { return dim; }
  int n_dofs() const { return n_nodes() * dim; }
  bool structured() const { return grid_n > 0; }

  const std::vector<int>& node_set(const std::string& name) const;
};

struct DirichletSpec {
  std::string node_set;
  int component = 0;
  double value = 0.0;  // mm
};

struct DofMap {
  int n_nodes = 0;
  int dofs_per_node = 2;
  std::map<int, double> prescribed;  // dof index -> value (mm)
  std::vector<int> free_dofs;        // ascending

  int n_dofs() const { return n_nodes * dofs_per_node; }
  static int dof_index(int node, int component, int dofs_per_node) {
    return node * dofs_per_node + component;
  }
};

// Square [0, L]^2 grid of n_per_side x n_per_side nodes, quad4 cells, node
// numbering row-major with x fastest. Populates node sets "left", "right",
// "bottom", "top" by coordinate predicates (absolute tolerance 1e-9 mm).
Mesh build_structured_grid(int n_per_side, double side_length);

// Parses the NODES/ELEMS/SET text format described in the README. Elements
// with negative volume are repaired by swapping their first two nodes.
Mesh load_tet_mesh(const std::string& text);

// Inverse of load_tet_mesh; round-trips coordinates and connectivity exactly.
std::string write_tet_mesh(const Mesh& mesh);

// Later entries overwrite earlier ones when a (node, component) repeats.
DofMap build_dof_map(const Mesh& mesh, const std::vector<DirichletSpec>& dirichlet);

double tet_volume(const Mesh& mesh, int element);

}  // namespace fol
