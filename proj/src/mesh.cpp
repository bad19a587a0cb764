#include "fol/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fol {

namespace {
constexpr double kBoundaryTol = 1e-9;  // mm
}

const std::vector<int>& Mesh::node_set(const std::string& name) const {
  auto it = node_sets.find(name);
  if (it == node_sets.end()) throw std::invalid_argument("unknown node set: " + name);
  return it->second;
}

Mesh build_structured_grid(int n_per_side, double side_length) {
  if (n_per_side < 2) throw std::invalid_argument("build_structured_grid: n_per_side must be >= 2");
  if (side_length <= 0.0) throw std::invalid_argument("build_structured_grid: side_length must be > 0");

  const int n = n_per_side;
  Mesh mesh;
  mesh.dim = 2;
  mesh.kind = ElementKind::Quad4;
  mesh.grid_n = n;
  mesh.side_length = side_length;

  mesh.nodes.resize(n * n, 2);
  for (int i = 0; i < n * n; ++i) {
    mesh.nodes(i, 0) = side_length * (i % n) / (n - 1);
    mesh.nodes(i, 1) = side_length * (i / n) / (n - 1);
  }

  // counter-clockwise connectivity so det(J) > 0
  mesh.elements.resize((n - 1) * (n - 1), 4);
  for (int cy = 0; cy < n - 1; ++cy) {
    for (int cx = 0; cx < n - 1; ++cx) {
      int e = cy * (n - 1) + cx;
      mesh.elements(e, 0) = cy * n + cx;
      mesh.elements(e, 1) = cy * n + cx + 1;
      mesh.elements(e, 2) = (cy + 1) * n + cx + 1;
      mesh.elements(e, 3) = (cy + 1) * n + cx;
    }
  }

  auto& sets = mesh.node_sets;
  for (int i = 0; i < n * n; ++i) {
    double x = mesh.nodes(i, 0), y = mesh.nodes(i, 1);
    if (std::abs(x) < kBoundaryTol) sets["left"].push_back(i);
    if (std::abs(x - side_length) < kBoundaryTol) sets["right"].push_back(i);
    if (std::abs(y) < kBoundaryTol) sets["bottom"].push_back(i);
    if (std::abs(y - side_length) < kBoundaryTol) sets["top"].push_back(i);
  }
  return mesh;
}

double tet_volume(const Mesh& mesh, int element) {
  Eigen::Matrix3d m;
  for (int k = 0; k < 3; ++k)
    m.col(k) = (mesh.nodes.row(mesh.elements(element, k + 1)) - mesh.nodes.row(mesh.elements(element, 0))).transpose();
  return m.determinant() / 6.0;
}

namespace {

struct LineReader {
  std::istringstream in;
  int line_no = 0;
  explicit LineReader(const std::string& text) : in(text) {}

  // next non-empty, non-comment line; false at EOF
  bool next(std::string& out) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      out = line;
      return true;
    }
    return false;
  }
};

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw ParseError("parse error at line " + std::to_string(line) + ": " + what);
}

}  // namespace

Mesh load_tet_mesh(const std::string& text) {
  LineReader reader(text);
  Mesh mesh;
  mesh.dim = 3;
  mesh.kind = ElementKind::Tet4;

  std::string line;
  if (!reader.next(line)) parse_fail(reader.line_no, "expected NODES header");
  std::istringstream hdr(line);
  std::string tag;
  int n_nodes = 0;
  if (!(hdr >> tag >> n_nodes) || tag != "NODES" || n_nodes < 1)
    parse_fail(reader.line_no, "expected 'NODES <count>'");

  mesh.nodes.resize(n_nodes, 3);
  for (int i = 0; i < n_nodes; ++i) {
    if (!reader.next(line)) parse_fail(reader.line_no, "unexpected end of file in node block");
    std::istringstream ls(line);
    if (!(ls >> mesh.nodes(i, 0) >> mesh.nodes(i, 1) >> mesh.nodes(i, 2)))
      parse_fail(reader.line_no, "expected three node coordinates");
  }

  if (!reader.next(line)) parse_fail(reader.line_no, "expected ELEMS header");
  std::istringstream ehdr(line);
  int n_elems = 0;
  if (!(ehdr >> tag >> n_elems) || tag != "ELEMS" || n_elems < 1)
    parse_fail(reader.line_no, "expected 'ELEMS <count>'");

  mesh.elements.resize(n_elems, 4);
  for (int e = 0; e < n_elems; ++e) {
    if (!reader.next(line)) parse_fail(reader.line_no, "unexpected end of file in element block");
    std::istringstream ls(line);
    for (int k = 0; k < 4; ++k) {
      if (!(ls >> mesh.elements(e, k))) parse_fail(reader.line_no, "expected four node indices");
      if (mesh.elements(e, k) < 0 || mesh.elements(e, k) >= n_nodes)
        throw TopologyError("element " + std::to_string(e) + " references node " +
                            std::to_string(mesh.elements(e, k)) + " of " + std::to_string(n_nodes));
    }
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        if (mesh.elements(e, a) == mesh.elements(e, b))
          throw TopologyError("element " + std::to_string(e) + " repeats node " +
                              std::to_string(mesh.elements(e, a)));
  }

  while (reader.next(line)) {
    std::istringstream ls(line);
    std::string name;
    int count = 0;
    if (!(ls >> tag >> name >> count) || tag != "SET" || count < 0)
      parse_fail(reader.line_no, "expected 'SET <name> <count>'");
    std::vector<int>& set = mesh.node_sets[name];
    set.clear();
    while (static_cast<int>(set.size()) < count) {
      int idx;
      while (ls >> idx) {
        if (idx < 0 || idx >= n_nodes)
          throw TopologyError("set '" + name + "' references node " + std::to_string(idx));
        set.push_back(idx);
        if (static_cast<int>(set.size()) == count) break;
      }
      if (static_cast<int>(set.size()) < count) {
        if (!reader.next(line)) parse_fail(reader.line_no, "unexpected end of file in set '" + name + "'");
        ls = std::istringstream(line);
      }
    }
  }

  // repair inverted elements, then reject genuinely degenerate ones
  for (int e = 0; e < n_elems; ++e) {
    double vol = tet_volume(mesh, e);
    if (vol < 0.0) {
      std::swap(mesh.elements(e, 0), mesh.elements(e, 1));
      vol = tet_volume(mesh, e);
    }
    if (vol <= 1e-14)
      throw TopologyError("element " + std::to_string(e) + " has non-positive volume");
  }
  return mesh;
}

std::string write_tet_mesh(const Mesh& mesh) {
  if (mesh.kind != ElementKind::Tet4) throw std::invalid_argument("write_tet_mesh: mesh is not tet4");
  std::string out;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "NODES %d\n", mesh.n_nodes());
  out += buf;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", mesh.nodes(i, 0), mesh.nodes(i, 1), mesh.nodes(i, 2));
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "ELEMS %d\n", mesh.n_elements());
  out += buf;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    std::snprintf(buf, sizeof(buf), "%d %d %d %d\n", mesh.elements(e, 0), mesh.elements(e, 1),
                  mesh.elements(e, 2), mesh.elements(e, 3));
    out += buf;
  }
  for (const auto& [name, set] : mesh.node_sets) {
    std::snprintf(buf, sizeof(buf), "SET %s %d\n", name.c_str(), static_cast<int>(set.size()));
    out += buf;
    for (std::size_t i = 0; i < set.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%d%c", set[i], i + 1 == set.size() ? '\n' : ' ');
      out += buf;
    }
  }
  return out;
}

DofMap build_dof_map(const Mesh& mesh, const std::vector<DirichletSpec>& dirichlet) {
  DofMap dof;
  dof.n_nodes = mesh.n_nodes();
  dof.dofs_per_node = mesh.dim;
  for (const auto& d : dirichlet) {
    if (d.component < 0 || d.component >= mesh.dim)
      throw std::invalid_argument("build_dof_map: component out of range");
    const auto& set = mesh.node_set(d.node_set);
    for (int node : set)
      dof.prescribed[DofMap::dof_index(node, d.component, mesh.dim)] = d.value;
  }
  dof.free_dofs.reserve(dof.n_dofs() - dof.prescribed.size());
  for (int i = 0; i < dof.n_dofs(); ++i)
    if (!dof.prescribed.count(i)) dof.free_dofs.push_back(i);
  return dof;
}

}  // namespace fol
