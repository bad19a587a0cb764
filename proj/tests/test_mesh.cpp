#include <doctest.h>

#include "fol/mesh.hpp"

using namespace fol;

TEST_CASE("structured grid layout") {
  Mesh mesh = build_structured_grid(3, 2.0);
  CHECK(mesh.n_nodes() == 9);
  CHECK(mesh.n_elements() == 4);
  CHECK(mesh.dim == 2);
  CHECK(mesh.structured());
  CHECK(mesh.grid_n == 3);

  // node i sits at (L*(i%n)/(n-1), L*(i/n)/(n-1))
  CHECK(mesh.nodes(0, 0) == doctest::Approx(0.0));
  CHECK(mesh.nodes(4, 0) == doctest::Approx(1.0));
  CHECK(mesh.nodes(4, 1) == doctest::Approx(1.0));
  CHECK(mesh.nodes(8, 0) == doctest::Approx(2.0));
  CHECK(mesh.nodes(8, 1) == doctest::Approx(2.0));

  // counter-clockwise cell connectivity
  CHECK(mesh.elements(0, 0) == 0);
  CHECK(mesh.elements(0, 1) == 1);
  CHECK(mesh.elements(0, 2) == 4);
  CHECK(mesh.elements(0, 3) == 3);
  CHECK(mesh.elements(3, 0) == 4);
  CHECK(mesh.elements(3, 2) == 8);

  CHECK(mesh.node_set("left") == std::vector<int>{0, 3, 6});
  CHECK(mesh.node_set("right") == std::vector<int>{2, 5, 8});
  CHECK(mesh.node_set("bottom") == std::vector<int>{0, 1, 2});
  CHECK(mesh.node_set("top") == std::vector<int>{6, 7, 8});
  CHECK_THROWS_AS(mesh.node_set("sides"), std::invalid_argument);

  CHECK_THROWS_AS(build_structured_grid(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_structured_grid(3, 0.0), std::invalid_argument);
}

TEST_CASE("dof map prescribes boundary components") {
  Mesh mesh = build_structured_grid(3, 1.0);
  std::vector<DirichletSpec> bcs = {
      {"left", 0, 0.0}, {"left", 1, 0.0}, {"right", 0, 0.05}, {"right", 1, 0.05}};
  DofMap dof = build_dof_map(mesh, bcs);
  CHECK(dof.n_dofs() == 18);
  CHECK(dof.prescribed.size() == 12);
  CHECK(dof.free_dofs.size() == 6);
  CHECK(dof.prescribed.at(DofMap::dof_index(2, 0, 2)) == doctest::Approx(0.05));
  CHECK(dof.prescribed.at(DofMap::dof_index(6, 1, 2)) == doctest::Approx(0.0));
  // free DOFs are exactly the middle column's
  CHECK(dof.free_dofs == std::vector<int>{2, 3, 8, 9, 14, 15});

  // later entries overwrite earlier ones
  bcs.push_back({"right", 0, 0.07});
  DofMap dof2 = build_dof_map(mesh, bcs);
  CHECK(dof2.prescribed.at(DofMap::dof_index(2, 0, 2)) == doctest::Approx(0.07));

  CHECK_THROWS_AS(build_dof_map(mesh, {{"left", 2, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(build_dof_map(mesh, {{"nope", 0, 0.0}}), std::invalid_argument);
}

static const char* kTetText =
    "# single reference tetrahedron\n"
    "NODES 4\n"
    "0 0 0\n"
    "1 0 0\n"
    "0 1 0\n"
    "0 0 1\n"
    "ELEMS 1\n"
    "0 1 2 3\n"
    "SET base 3\n"
    "0 1 2\n";

TEST_CASE("tet mesh parsing and round trip") {
  Mesh mesh = load_tet_mesh(kTetText);
  CHECK(mesh.dim == 3);
  CHECK(mesh.kind == ElementKind::Tet4);
  CHECK(mesh.n_nodes() == 4);
  CHECK(mesh.n_elements() == 1);
  CHECK(tet_volume(mesh, 0) == doctest::Approx(1.0 / 6.0));
  CHECK(mesh.node_set("base") == std::vector<int>{0, 1, 2});

  // write -> load -> write is a fixed point
  std::string text = write_tet_mesh(mesh);
  Mesh again = load_tet_mesh(text);
  CHECK(write_tet_mesh(again) == text);
  CHECK((again.nodes - mesh.nodes).cwiseAbs().maxCoeff() == 0.0);
  CHECK((again.elements - mesh.elements).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("tet mesh repairs inverted elements") {
  const char* inverted =
      "NODES 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nELEMS 1\n1 0 2 3\n";
  Mesh mesh = load_tet_mesh(inverted);
  CHECK(tet_volume(mesh, 0) > 0.0);
}

TEST_CASE("tet mesh rejects malformed input") {
  CHECK_THROWS_AS(load_tet_mesh("NODES 2\n0 0 0\n1 1 1\nELEMS 1\n0 1 2 3\n"), TopologyError);
  CHECK_THROWS_AS(load_tet_mesh("NODES 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nELEMS 1\n0 0 2 3\n"),
                  TopologyError);
  CHECK_THROWS_AS(load_tet_mesh("ELEMS 1\n0 1 2 3\n"), ParseError);
  CHECK_THROWS_AS(load_tet_mesh("NODES 1\n0 0\n"), ParseError);
  // coplanar nodes: zero volume
  CHECK_THROWS_AS(load_tet_mesh("NODES 4\n0 0 0\n1 0 0\n0 1 0\n1 1 0\nELEMS 1\n0 1 2 3\n"),
                  TopologyError);
}
