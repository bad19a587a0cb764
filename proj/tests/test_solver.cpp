#include <doctest.h>

#include "fol/microstructure.hpp"
#include "fol/solver.hpp"
#include "helpers.hpp"

using namespace fol;

namespace {

std::vector<DirichletSpec> stretch_bcs() {
  return {{"left", 0, 0.0}, {"left", 1, 0.0}, {"right", 0, 0.05}, {"right", 1, 0.05}};
}

}  // namespace

TEST_CASE("uniform stretch patch reproduces the linear field") {
  // prescribe u = 0.05 x, v = 0 on the whole boundary; interior must follow
  Mesh mesh = build_structured_grid(5, 1.0);
  ElasticityField field{&mesh, Eigen::VectorXd::Ones(mesh.n_nodes()), 0.3};

  DofMap dof;
  dof.n_nodes = mesh.n_nodes();
  dof.dofs_per_node = 2;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double x = mesh.nodes(i, 0), y = mesh.nodes(i, 1);
    const bool boundary = x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0;
    if (!boundary) continue;
    dof.prescribed[DofMap::dof_index(i, 0, 2)] = 0.05 * x;
    dof.prescribed[DofMap::dof_index(i, 1, 2)] = 0.0;
  }
  for (int d = 0; d < dof.n_dofs(); ++d)
    if (!dof.prescribed.count(d)) dof.free_dofs.push_back(d);

  SolveOptions options;
  options.tol = 1e-14;
  SolutionField sol = solve_reference(mesh, dof, field, options);
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    CHECK(sol.u[2 * i] == doctest::Approx(0.05 * mesh.nodes(i, 0)).epsilon(1e-10));
    CHECK(std::abs(sol.u[2 * i + 1]) < 1e-12);
  }

  // constant strain state: sigma_xx = C00 * 0.05, sigma_yy = C01 * 0.05
  Eigen::Matrix3d C = constitutive_plane_stress(1.0, 0.3);
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    CHECK(sol.stress(i, 0) == doctest::Approx(C(0, 0) * 0.05).epsilon(1e-9));
    CHECK(sol.stress(i, 1) == doctest::Approx(C(0, 1) * 0.05).epsilon(1e-9));
    CHECK(std::abs(sol.stress(i, 2)) < 1e-12);
  }
}

TEST_CASE("cg solution matches the dense oracle") {
  Mesh mesh = build_structured_grid(7, 1.0);
  DofMap dof = build_dof_map(mesh, stretch_bcs());
  SampleSet set = generate_two_phase_samples(2, 7, 1.0, 0.1, 99);
  for (int s = 0; s < 2; ++s) {
    ElasticityField field{&mesh, set.inputs[s], 0.3};
    CgStats stats;
    SolutionField sol = solve_reference(mesh, dof, field, {}, &stats);
    Eigen::VectorXd dense = test_helpers::dense_solve(mesh, dof, field);
    CHECK(test_helpers::rel_l2(sol.u, dense) < 1e-10);
    CHECK(stats.iterations > 0);
    CHECK(stats.relative_residual <= 1e-12);
    // prescribed entries inserted exactly
    for (const auto& [d, v] : dof.prescribed) CHECK(sol.u[d] == v);
  }
}

TEST_CASE("solver validates the field") {
  Mesh mesh = build_structured_grid(3, 1.0);
  DofMap dof = build_dof_map(mesh, stretch_bcs());
  ElasticityField bad{&mesh, Eigen::VectorXd::Zero(mesh.n_nodes()), 0.3};
  CHECK_THROWS_AS(solve_reference(mesh, dof, bad, {}), std::invalid_argument);
  ElasticityField wrong{&mesh, Eigen::VectorXd::Ones(4), 0.3};
  CHECK_THROWS_AS(solve_reference(mesh, dof, wrong, {}), std::invalid_argument);
}

TEST_CASE("fully prescribed system skips the solve") {
  Mesh mesh = build_structured_grid(2, 1.0);
  std::vector<DirichletSpec> bcs = {{"left", 0, 0.0},  {"left", 1, 0.0},
                                    {"right", 0, 0.05}, {"right", 1, 0.0}};
  DofMap dof = build_dof_map(mesh, bcs);
  CHECK(dof.free_dofs.empty());
  ElasticityField field{&mesh, Eigen::VectorXd::Ones(4), 0.3};
  SolutionField sol = solve_reference(mesh, dof, field, {});
  CHECK(sol.u[DofMap::dof_index(1, 0, 2)] == 0.05);
  CHECK(sol.stress.rows() == 4);
}

TEST_CASE("homogenize averages nodal components") {
  Eigen::MatrixXd values(3, 2);
  values << 1.0, 4.0, 2.0, 5.0, 3.0, 6.0;
  Eigen::VectorXd mean = homogenize(values);
  CHECK(mean[0] == doctest::Approx(2.0));
  CHECK(mean[1] == doctest::Approx(5.0));
  CHECK(homogenize(Eigen::VectorXd(values.col(0))) == doctest::Approx(2.0));
}

TEST_CASE("recover_stress scales linearly with displacement") {
  Mesh mesh = build_structured_grid(4, 1.0);
  Rng rng(7);
  ElasticityField field{&mesh, Eigen::VectorXd(mesh.n_nodes()), 0.3};
  for (int i = 0; i < mesh.n_nodes(); ++i) field.E[i] = rng.uniform(0.1, 1.0);
  Eigen::VectorXd U(mesh.n_dofs());
  for (int i = 0; i < mesh.n_dofs(); ++i) U[i] = rng.uniform(-1.0, 1.0);
  Eigen::MatrixXd s1 = recover_stress(mesh, field, U);
  Eigen::MatrixXd s2 = recover_stress(mesh, field, 2.0 * U);
  CHECK((s2 - 2.0 * s1).cwiseAbs().maxCoeff() < 1e-12);
}
