#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fol/fem.hpp"
#include "fol/mesh.hpp"
#include "fol/microstructure.hpp"
#include "fol/neural.hpp"
#include "fol/solver.hpp"

namespace fol {

// Branch net over the N sensed modulus values and trunk net over coordinates,
// both ending in 2p outputs; the first p pairs dot into U, the last p into V.
struct DeepONetParams {
  Mlp branch;
  Mlp trunk;
  int p = 10;
};

struct DeepONetConfig {
  std::vector<int> branch_hidden = {20, 20, 20, 20, 20, 20};
  std::vector<int> trunk_hidden = {20, 20, 20, 20, 20, 20};
  int p = 10;
  Activation activation = Activation::Swish;
  int batch_size = 100;  // 0 = full dataset per step
  int epochs = 4000;
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;
};

// Supervised pairs: modulus samples and their FEM displacement components.
struct DeepONetDataset {
  const Mesh* mesh = nullptr;
  Eigen::MatrixXd E;  // n_nodes x n_samples
  Eigen::MatrixXd U;  // n_nodes x n_samples, FEM u_x
  Eigen::MatrixXd V;  // n_nodes x n_samples, FEM u_y
  std::vector<std::uint64_t> ids;

  int n_samples() const { return static_cast<int>(E.cols()); }
};

// Solves every sample with the reference solver to build the training set.
DeepONetDataset build_deeponet_dataset(const SampleSet& samples, const Mesh& mesh,
                                       const DofMap& dof_map, double nu,
                                       const SolveOptions& options = {}, int threads = 1);

DeepONetParams make_deeponet(int n_sensors, int dim, const DeepONetConfig& config);

// (U, V) at one coordinate.
Eigen::Vector2d deeponet_eval(const DeepONetParams& params, const Eigen::VectorXd& E_values,
                              const Eigen::VectorXd& X);

// Displacement field over all mesh nodes for one sample, as a full DOF vector.
Eigen::VectorXd deeponet_predict(const DeepONetParams& params, const Eigen::VectorXd& E_values,
                                 const Mesh& mesh);

struct DeepONetTrainer {
  DeepONetParams params;
  DeepONetConfig config;
  AdamState opt_branch, opt_trunk;
  std::vector<double> history;  // epoch-mean MSE (mm^2)
  int epochs_done = 0;

  void train(const DeepONetDataset& dataset, int n_epochs);
};

DeepONetTrainer make_deeponet_trainer(const DeepONetDataset& dataset, const DeepONetConfig& config);

DeepONetTrainer train_deeponet(const DeepONetDataset& dataset, const DeepONetConfig& config);

}  // namespace fol
