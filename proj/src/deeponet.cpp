#include "fol/deeponet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fol/common.hpp"

namespace fol {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;     // "init"
constexpr std::uint64_t kShuffleStream = 0x73687566;  // "shuf"

}  // namespace

DeepONetDataset build_deeponet_dataset(const SampleSet& samples, const Mesh& mesh,
                                       const DofMap& dof_map, double nu,
                                       const SolveOptions& options, int threads) {
  if (mesh.dim != 2) throw std::invalid_argument("deeponet dataset: 2D meshes only");
  int n = static_cast<int>(samples.inputs.size());
  if (n == 0) throw std::invalid_argument("deeponet dataset: empty sample set");
  for (int s = 0; s < n; ++s)
    if (samples.inputs[s].size() != mesh.n_nodes())
      throw std::invalid_argument("deeponet dataset: sample length does not match mesh");
  DeepONetDataset data;
  data.mesh = &mesh;
  data.E.resize(mesh.n_nodes(), n);
  data.U.resize(mesh.n_nodes(), n);
  data.V.resize(mesh.n_nodes(), n);
  data.ids = samples.ids;
  parallel_for(n, threads, [&](int s, int) {
    ElasticityField field{&mesh, samples.inputs[s], nu};
    SolutionField sol = solve_reference(mesh, dof_map, field, options);
    data.E.col(s) = samples.inputs[s];
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      data.U(i, s) = sol.u[DofMap::dof_index(i, 0, 2)];
      data.V(i, s) = sol.u[DofMap::dof_index(i, 1, 2)];
    }
  });
  return data;
}

DeepONetParams make_deeponet(int n_sensors, int dim, const DeepONetConfig& config) {
  if (config.p < 1) throw std::invalid_argument("deeponet: p must be >= 1");
  DeepONetParams params;
  params.p = config.p;
  std::uint64_t init_seed = mix_seed(config.seed, kInitStream);
  std::vector<int> sizes;
  sizes.push_back(n_sensors);
  sizes.insert(sizes.end(), config.branch_hidden.begin(), config.branch_hidden.end());
  sizes.push_back(2 * config.p);
  params.branch = init_params(sizes, config.activation, mix_seed(init_seed, 0));
  sizes.clear();
  sizes.push_back(dim);
  sizes.insert(sizes.end(), config.trunk_hidden.begin(), config.trunk_hidden.end());
  sizes.push_back(2 * config.p);
  params.trunk = init_params(sizes, config.activation, mix_seed(init_seed, 1));
  return params;
}

Eigen::Vector2d deeponet_eval(const DeepONetParams& params, const Eigen::VectorXd& E_values,
                              const Eigen::VectorXd& X) {
  Eigen::VectorXd b = forward(params.branch, E_values);
  Eigen::VectorXd t = forward(params.trunk, X);
  int p = params.p;
  if (b.size() != 2 * p || t.size() != 2 * p)
    throw std::invalid_argument("deeponet_eval: net outputs do not match 2p");
  return {b.head(p).dot(t.head(p)), b.tail(p).dot(t.tail(p))};
}

Eigen::VectorXd deeponet_predict(const DeepONetParams& params, const Eigen::VectorXd& E_values,
                                 const Mesh& mesh) {
  Tape tape_b, tape_t;
  const Eigen::MatrixXd& b = forward(params.branch, E_values, tape_b);
  const Eigen::MatrixXd& t = forward(params.trunk, mesh.nodes.transpose(), tape_t);
  int p = params.p;
  Eigen::VectorXd u(mesh.n_dofs());
  for (int j = 0; j < mesh.n_nodes(); ++j) {
    u[DofMap::dof_index(j, 0, 2)] = b.col(0).head(p).dot(t.col(j).head(p));
    u[DofMap::dof_index(j, 1, 2)] = b.col(0).tail(p).dot(t.col(j).tail(p));
  }
  return u;
}

DeepONetTrainer make_deeponet_trainer(const DeepONetDataset& dataset,
                                      const DeepONetConfig& config) {
  DeepONetTrainer trainer;
  trainer.config = config;
  trainer.params =
      make_deeponet(static_cast<int>(dataset.E.rows()), dataset.mesh->dim, config);
  trainer.opt_branch.resize_like(trainer.params.branch);
  trainer.opt_trunk.resize_like(trainer.params.trunk);
  return trainer;
}

void DeepONetTrainer::train(const DeepONetDataset& dataset, int n_epochs) {
  int n_samples = dataset.n_samples();
  int n_nodes = static_cast<int>(dataset.E.rows());
  if (n_samples == 0) throw std::invalid_argument("deeponet training: empty dataset");
  int batch_size = config.batch_size == 0 ? n_samples : config.batch_size;
  if (batch_size < 1 || batch_size > n_samples)
    throw std::invalid_argument("deeponet training: batch_size must be in [0, n_samples]");
  int p = params.p;

  // Trunk inputs are the mesh nodes, fixed across steps.
  Eigen::MatrixXd trunk_in = dataset.mesh->nodes.transpose();

  Tape tape_b, tape_t;
  MlpGrads grads_b, grads_t;
  grads_b.resize_like(params.branch);
  grads_t.resize_like(params.trunk);
  Eigen::MatrixXd batch_E(n_nodes, batch_size), target_U(n_nodes, batch_size),
      target_V(n_nodes, batch_size);
  Eigen::MatrixXd pred_U, pred_V, dB, dT;

  std::vector<int> order(n_samples);
  std::uint64_t shuffle_seed = mix_seed(config.seed, kShuffleStream);

  for (int epoch = 0; epoch < n_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(shuffle_seed, static_cast<std::uint64_t>(epochs_done)));
    shuffle_rng.shuffle(order);

    double epoch_sse = 0.0;
    for (int start = 0; start < n_samples; start += batch_size) {
      int batch = std::min(batch_size, n_samples - start);
      for (int b = 0; b < batch; ++b) {
        int s = order[start + b];
        batch_E.col(b) = dataset.E.col(s);
        target_U.col(b) = dataset.U.col(s);
        target_V.col(b) = dataset.V.col(s);
      }
      auto E_block = batch_E.leftCols(batch);

      const Eigen::MatrixXd& b_out = forward(params.branch, E_block, tape_b);  // 2p x batch
      const Eigen::MatrixXd& t_out = forward(params.trunk, trunk_in, tape_t);  // 2p x n_nodes

      // Predictions per (node, sample) via the two dot products.
      pred_U.noalias() = t_out.topRows(p).transpose() * b_out.topRows(p);
      pred_V.noalias() = t_out.bottomRows(p).transpose() * b_out.bottomRows(p);
      pred_U -= target_U.leftCols(batch);
      pred_V -= target_V.leftCols(batch);  // both now hold residuals

      double sse = pred_U.squaredNorm() + pred_V.squaredNorm();
      if (!std::isfinite(sse))
        throw std::runtime_error("deeponet training aborted: non-finite loss in epoch " +
                                 std::to_string(epochs_done + 1));
      epoch_sse += sse;

      double scale = 2.0 / (static_cast<double>(batch) * n_nodes);
      dB.resize(2 * p, batch);
      dB.topRows(p).noalias() = scale * (t_out.topRows(p) * pred_U);
      dB.bottomRows(p).noalias() = scale * (t_out.bottomRows(p) * pred_V);
      dT.resize(2 * p, n_nodes);
      dT.topRows(p).noalias() = scale * (b_out.topRows(p) * pred_U.transpose());
      dT.bottomRows(p).noalias() = scale * (b_out.bottomRows(p) * pred_V.transpose());

      grads_b.set_zero();
      grads_t.set_zero();
      backward(params.branch, tape_b, dB, grads_b);
      backward(params.trunk, tape_t, dT, grads_t);
      adam_step(params.branch, grads_b, opt_branch, config.learning_rate);
      adam_step(params.trunk, grads_t, opt_trunk, config.learning_rate);
    }
    history.push_back(epoch_sse / (static_cast<double>(n_samples) * n_nodes));
    ++epochs_done;
  }
}

DeepONetTrainer train_deeponet(const DeepONetDataset& dataset, const DeepONetConfig& config) {
  DeepONetTrainer trainer = make_deeponet_trainer(dataset, config);
  trainer.train(dataset, config.epochs);
  return trainer;
}

}  // namespace fol
