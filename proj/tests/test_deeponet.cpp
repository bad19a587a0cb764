#include <doctest.h>

#include <cmath>

#include "fol/deeponet.hpp"
#include "helpers.hpp"

using namespace fol;

namespace {

std::vector<DirichletSpec> stretch_bcs() {
  return {{"left", 0, 0.0}, {"left", 1, 0.0}, {"right", 0, 0.05}, {"right", 1, 0.05}};
}

DeepONetConfig tiny_config() {
  DeepONetConfig config;
  config.branch_hidden = {3};
  config.trunk_hidden = {3};
  config.p = 2;
  config.batch_size = 1;
  config.epochs = 3;
  config.learning_rate = 1e-3;
  config.seed = 5;
  return config;
}

}  // namespace

TEST_CASE("network shapes and seeded init") {
  DeepONetConfig config;
  config.branch_hidden = {20, 20};
  config.trunk_hidden = {10};
  config.p = 3;
  config.seed = 9;
  DeepONetParams params = make_deeponet(5, 2, config);
  CHECK(params.branch.layer_sizes == std::vector<int>{5, 20, 20, 6});
  CHECK(params.trunk.layer_sizes == std::vector<int>{2, 10, 6});
  CHECK(params.p == 3);

  // identical architectures still get distinct branch / trunk init streams
  DeepONetConfig mirrored = config;
  mirrored.branch_hidden = mirrored.trunk_hidden = {4};
  DeepONetParams twin = make_deeponet(2, 2, mirrored);
  CHECK((twin.branch.W[0] - twin.trunk.W[0]).cwiseAbs().maxCoeff() > 0.0);

  DeepONetParams again = make_deeponet(5, 2, config);
  CHECK((params.branch.W[0] - again.branch.W[0]).cwiseAbs().maxCoeff() == 0.0);
  config.seed = 10;
  DeepONetParams other = make_deeponet(5, 2, config);
  CHECK((params.branch.W[0] - other.branch.W[0]).cwiseAbs().maxCoeff() > 0.0);

  config.p = 0;
  CHECK_THROWS_AS(make_deeponet(5, 2, config), std::invalid_argument);
}

TEST_CASE("evaluation is the pairwise dot of branch and trunk halves") {
  DeepONetConfig config = tiny_config();
  DeepONetParams params = make_deeponet(4, 2, config);
  Rng rng(31);
  Eigen::VectorXd E(4);
  for (int i = 0; i < 4; ++i) E[i] = rng.uniform(0.1, 1.0);
  Eigen::Vector2d X(0.3, 0.7);

  Eigen::VectorXd b = test_helpers::naive_forward(params.branch, E);
  Eigen::VectorXd t = test_helpers::naive_forward(params.trunk, X);
  Eigen::Vector2d uv = deeponet_eval(params, E, X);
  CHECK(uv[0] == doctest::Approx(b.head(2).dot(t.head(2))).epsilon(1e-13));
  CHECK(uv[1] == doctest::Approx(b.tail(2).dot(t.tail(2))).epsilon(1e-13));

  params.p = 3;  // no longer matches the 2p = 4 net outputs
  CHECK_THROWS_AS(deeponet_eval(params, E, X), std::invalid_argument);
}

TEST_CASE("field prediction matches pointwise evaluation") {
  Mesh mesh = build_structured_grid(3, 1.0);
  DeepONetConfig config = tiny_config();
  DeepONetParams params = make_deeponet(mesh.n_nodes(), 2, config);
  Rng rng(7);
  Eigen::VectorXd E(mesh.n_nodes());
  for (int i = 0; i < E.size(); ++i) E[i] = rng.uniform(0.1, 1.0);

  Eigen::VectorXd u = deeponet_predict(params, E, mesh);
  REQUIRE(u.size() == mesh.n_dofs());
  for (int j = 0; j < mesh.n_nodes(); ++j) {
    Eigen::Vector2d uv = deeponet_eval(params, E, mesh.nodes.row(j).transpose());
    CHECK(u[2 * j] == doctest::Approx(uv[0]).epsilon(1e-13));
    CHECK(u[2 * j + 1] == doctest::Approx(uv[1]).epsilon(1e-13));
  }
}

TEST_CASE("dataset build solves every sample") {
  Mesh mesh = build_structured_grid(5, 1.0);
  DofMap dof = build_dof_map(mesh, stretch_bcs());
  SampleSet set = generate_two_phase_samples(3, 5, 1.0, 0.1, 21);

  DeepONetDataset data = build_deeponet_dataset(set, mesh, dof, 0.3);
  REQUIRE(data.n_samples() == 3);
  CHECK(data.ids == set.ids);
  for (int s = 0; s < 3; ++s) {
    CHECK((data.E.col(s) - set.inputs[s]).cwiseAbs().maxCoeff() == 0.0);
    ElasticityField field{&mesh, set.inputs[s], 0.3};
    SolutionField sol = solve_reference(mesh, dof, field);
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      CHECK(data.U(i, s) == sol.u[2 * i]);
      CHECK(data.V(i, s) == sol.u[2 * i + 1]);
    }
  }

  // per-sample independence makes the threaded build bitwise identical
  DeepONetDataset threaded = build_deeponet_dataset(set, mesh, dof, 0.3, {}, 3);
  CHECK((threaded.U - data.U).cwiseAbs().maxCoeff() == 0.0);
  CHECK((threaded.V - data.V).cwiseAbs().maxCoeff() == 0.0);

  SampleSet empty;
  CHECK_THROWS_AS(build_deeponet_dataset(empty, mesh, dof, 0.3), std::invalid_argument);
  SampleSet short_inputs;
  short_inputs.inputs.push_back(Eigen::VectorXd::Ones(4));
  short_inputs.ids.push_back(1);
  CHECK_THROWS_AS(build_deeponet_dataset(short_inputs, mesh, dof, 0.3), std::invalid_argument);
}

TEST_CASE("training is deterministic and resumable") {
  Mesh mesh = build_structured_grid(3, 1.0);
  DofMap dof = build_dof_map(mesh, stretch_bcs());
  SampleSet set = generate_two_phase_samples(2, 3, 1.0, 0.1, 4);
  DeepONetDataset data = build_deeponet_dataset(set, mesh, dof, 0.3);

  DeepONetConfig config = tiny_config();
  DeepONetTrainer a = train_deeponet(data, config);
  CHECK(a.epochs_done == 3);
  CHECK(a.history.size() == 3);
  for (double loss : a.history) {
    CHECK(std::isfinite(loss));
    CHECK(loss >= 0.0);
  }

  DeepONetTrainer b = train_deeponet(data, config);
  for (std::size_t l = 0; l < a.params.branch.W.size(); ++l)
    CHECK((a.params.branch.W[l] - b.params.branch.W[l]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.history == b.history);

  DeepONetTrainer c = make_deeponet_trainer(data, config);
  c.train(data, 1);
  c.train(data, 2);
  CHECK(c.epochs_done == 3);
  for (std::size_t l = 0; l < a.params.branch.W.size(); ++l) {
    CHECK((a.params.branch.W[l] - c.params.branch.W[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.params.trunk.W[l] - c.params.trunk.W[l]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(a.history == c.history);
}

TEST_CASE("first optimizer step follows the loss gradient") {
  Mesh mesh = build_structured_grid(2, 1.0);
  DofMap dof = build_dof_map(mesh, stretch_bcs());
  SampleSet set = generate_two_phase_samples(2, 2, 1.0, 0.1, 13);
  DeepONetDataset data = build_deeponet_dataset(set, mesh, dof, 0.3);

  DeepONetConfig config = tiny_config();
  config.batch_size = 0;  // full batch: one step, so the FD gradient applies exactly
  const double lr = config.learning_rate;
  DeepONetTrainer trainer = make_deeponet_trainer(data, config);
  Mlp branch0 = trainer.params.branch;
  Mlp trunk0 = trainer.params.trunk;

  // the trainer's per-step objective: mean squared residual over both
  // components, nodes and samples
  auto loss = [&] {
    double sse = 0.0;
    for (int s = 0; s < data.n_samples(); ++s)
      for (int j = 0; j < mesh.n_nodes(); ++j) {
        Eigen::Vector2d uv =
            deeponet_eval(trainer.params, data.E.col(s), mesh.nodes.row(j).transpose());
        sse += std::pow(uv[0] - data.U(j, s), 2) + std::pow(uv[1] - data.V(j, s), 2);
      }
    return sse / (data.n_samples() * mesh.n_nodes());
  };

  std::vector<double*> slots = test_helpers::param_ptrs(trainer.params.branch);
  for (double* slot : test_helpers::param_ptrs(trainer.params.trunk)) slots.push_back(slot);
  std::vector<double> g_fd(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i)
    g_fd[i] = test_helpers::central_fd(loss, slots[i], 1e-6);

  trainer.train(data, 1);

  std::vector<double*> before = test_helpers::param_ptrs(branch0);
  for (double* slot : test_helpers::param_ptrs(trunk0)) before.push_back(slot);
  int checked = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (std::abs(g_fd[i]) < 1e-6) continue;  // Adam's epsilon blurs tiny gradients
    const double delta = *slots[i] - *before[i];
    // first Adam step is -lr * g / (|g| + eps): full length, opposite sign
    CHECK(delta * g_fd[i] < 0.0);
    CHECK(std::abs(delta) > 0.9 * lr);
    CHECK(std::abs(delta) < 1.0000001 * lr);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("training validation and non-finite abort") {
  Mesh mesh = build_structured_grid(2, 1.0);
  DofMap dof = build_dof_map(mesh, stretch_bcs());
  SampleSet set = generate_two_phase_samples(2, 2, 1.0, 0.1, 2);
  DeepONetDataset data = build_deeponet_dataset(set, mesh, dof, 0.3);

  DeepONetConfig config = tiny_config();
  config.batch_size = 5;  // larger than the dataset
  CHECK_THROWS_AS(train_deeponet(data, config), std::invalid_argument);

  config = tiny_config();
  data.U.setConstant(1e300);  // residual square overflows on the first step
  try {
    train_deeponet(data, config);
    FAIL("expected a non-finite-loss abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }

  Mesh tet;
  tet.dim = 3;
  CHECK_THROWS_AS(build_deeponet_dataset(set, tet, dof, 0.3), std::invalid_argument);
}
