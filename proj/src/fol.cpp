#include "fol/fol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "fol/common.hpp"

namespace fol {

namespace {

// Independent sub-seed streams so initialization and shuffling never share
// engine state with sample generation.
constexpr std::uint64_t kInitStream = 0x696e6974;     // "init"
constexpr std::uint64_t kShuffleStream = 0x73687566;  // "shuf"

double sign(double x) { return x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0; }

int count_prescribed_nodes(const DofMap& dof_map) {
  int n = 0;
  int last_node = -1;
  // std::map iterates DOFs in ascending order, so nodes arrive grouped.
  for (const auto& [dof, value] : dof_map.prescribed) {
    int node = dof / dof_map.dofs_per_node;
    if (node != last_node) {
      ++n;
      last_node = node;
    }
  }
  return n;
}

std::string id_string(std::uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(id));
  return std::string(buf);
}

}  // namespace

BcMode bc_mode_from_string(const std::string& name) {
  if (name == "soft_bc" || name == "soft") return BcMode::Soft;
  if (name == "hard_bc" || name == "hard") return BcMode::Hard;
  throw std::invalid_argument("unknown BC mode: " + name);
}

FolArch fol_arch_from_string(const std::string& name) {
  if (name == "single_net") return FolArch::SingleNet;
  if (name == "subnet_bank") return FolArch::SubnetBank;
  throw std::invalid_argument("unknown architecture: " + name);
}

InputEncoding input_encoding_from_string(const std::string& name) {
  if (name == "nodal_E" || name == "nodal_e") return InputEncoding::NodalE;
  if (name == "fourier_coeffs") return InputEncoding::FourierCoeffs;
  throw std::invalid_argument("unknown input encoding: " + name);
}

std::string to_string(BcMode mode) { return mode == BcMode::Soft ? "soft_bc" : "hard_bc"; }

std::string to_string(FolArch arch) {
  return arch == FolArch::SingleNet ? "single_net" : "subnet_bank";
}

std::string to_string(InputEncoding encoding) {
  return encoding == InputEncoding::NodalE ? "nodal_E" : "fourier_coeffs";
}

FourierSpec default_fourier_2d() {
  FourierSpec spec;
  spec.fx = (Eigen::VectorXd(3) << 3, 5, 7).finished();
  spec.fy = (Eigen::VectorXd(3) << 2, 4, 7).finished();
  return spec;
}

FourierSpec default_fourier_3d() {
  FourierSpec spec;
  spec.fx = (Eigen::VectorXd(3) << 2, 4, 6).finished();
  spec.fy = spec.fx;
  spec.fz = spec.fx;
  return spec;
}

LossBreakdown fol_loss(const StiffnessKernel& kernel, const DofMap& dof_map,
                       const Eigen::Ref<const Eigen::VectorXd>& E, Eigen::VectorXd& U_pred,
                       const FolConfig& config, Eigen::VectorXd& dL_dU) {
  if (U_pred.size() != dof_map.n_dofs())
    throw std::invalid_argument("fol_loss: U_pred length does not match DOF count");
  if (config.mode == BcMode::Hard)
    for (const auto& [dof, value] : dof_map.prescribed) U_pred[dof] = value;

  LossBreakdown out;
  out.energy_term = kernel.energy(E, U_pred, dL_dU);  // dL_dU = K U

  if (config.mode == BcMode::Soft) {
    int n_db = count_prescribed_nodes(dof_map);
    if (n_db > 0) {
      double w = config.a_b / n_db;
      for (const auto& [dof, value] : dof_map.prescribed) {
        double diff = U_pred[dof] - value;
        out.dirichlet_term += w * std::abs(diff);
        dL_dU[dof] += w * sign(diff);
      }
    }
  } else {
    for (const auto& [dof, value] : dof_map.prescribed) dL_dU[dof] = 0.0;
  }
  out.total = out.energy_term + out.dirichlet_term;
  return out;
}

LossBreakdown fol_loss(const Mesh& mesh, const DofMap& dof_map, const ElasticityField& field,
                       Eigen::VectorXd& U_pred, const FolConfig& config, Eigen::VectorXd& dL_dU) {
  StiffnessKernel kernel(mesh, field.nu);
  return fol_loss(kernel, dof_map, field.E, U_pred, config, dL_dU);
}

std::vector<int> fol_output_dofs(const DofMap& dof_map, BcMode mode) {
  if (mode == BcMode::Hard) return dof_map.free_dofs;
  std::vector<int> all(dof_map.n_dofs());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

int FolModel::input_size() const {
  return config.encoding == InputEncoding::NodalE ? mesh->n_nodes() : config.fourier.n_terms();
}

Eigen::VectorXd FolModel::eval(const Eigen::VectorXd& input) const {
  Eigen::VectorXd x = ((input.array() - config.input_shift) / config.input_scale).matrix();
  return config.architecture == FolArch::SingleNet ? forward(net, x) : forward(bank, x);
}

FolModel make_fol_model(const Mesh& mesh, const DofMap& dof_map, const FolConfig& config) {
  if (config.encoding == InputEncoding::FourierCoeffs && config.fourier.fx.size() == 0)
    throw std::invalid_argument("fol: fourier_coeffs encoding needs a frequency layout");
  if (config.mode == BcMode::Soft && !(config.a_b > 0))
    throw std::invalid_argument("fol: soft mode needs a_b > 0");
  if (!(config.input_scale > 0) || !std::isfinite(config.input_scale) ||
      !std::isfinite(config.input_shift))
    throw std::invalid_argument("fol: input_scale must be positive and finite");
  FolModel model;
  model.config = config;
  model.mesh = &mesh;
  model.dof_map = dof_map;
  model.output_dofs = fol_output_dofs(dof_map, config.mode);
  int n_in = model.input_size();
  int n_out = model.output_size();
  if (n_out == 0) throw std::invalid_argument("fol: no output DOFs (everything prescribed)");

  std::uint64_t init_seed = mix_seed(config.seed, kInitStream);
  if (config.architecture == FolArch::SingleNet) {
    std::vector<int> sizes;
    sizes.push_back(n_in);
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(n_out);
    model.net = init_params(sizes, config.activation, mix_seed(init_seed, 0));
  } else {
    std::vector<int> sizes;
    sizes.push_back(n_in);
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(1);
    model.bank.subnets.reserve(n_out);
    for (int k = 0; k < n_out; ++k)
      model.bank.subnets.push_back(
          init_params(sizes, config.activation, mix_seed(init_seed, 1 + k)));
  }
  return model;
}

Eigen::VectorXd nodal_modulus(const FolModel& model, const Eigen::VectorXd& input) {
  if (model.config.encoding == InputEncoding::NodalE) {
    if (input.size() != model.mesh->n_nodes())
      throw std::invalid_argument("nodal_modulus: input length does not match node count");
    return input;
  }
  FourierSpec spec = model.config.fourier;
  spec.coeffs = input;
  return fourier_field(spec, *model.mesh, model.config.nu).E;
}

void assemble_full_dofs(const FolModel& model, const Eigen::VectorXd& y, Eigen::VectorXd& U) {
  if (y.size() != model.output_size())
    throw std::invalid_argument("assemble_full_dofs: output length mismatch");
  U.resize(model.dof_map.n_dofs());
  for (int i = 0; i < model.output_size(); ++i) U[model.output_dofs[i]] = y[i];
  if (model.config.mode == BcMode::Hard)
    for (const auto& [dof, value] : model.dof_map.prescribed) U[dof] = value;
}

SolutionField predict(const FolModel& model, const Eigen::VectorXd& input) {
  Eigen::VectorXd y = model.eval(input);
  SolutionField sol;
  sol.mesh = model.mesh;
  assemble_full_dofs(model, y, sol.u);
  ElasticityField field;
  field.mesh = model.mesh;
  field.E = nodal_modulus(model, input);
  field.nu = model.config.nu;
  sol.stress = recover_stress(*model.mesh, field, sol.u);
  return sol;
}

FolTrainer make_fol_trainer(const Mesh& mesh, const DofMap& dof_map, const FolConfig& config) {
  FolTrainer trainer;
  trainer.model = make_fol_model(mesh, dof_map, config);
  if (config.architecture == FolArch::SingleNet) {
    trainer.opt.resize(1);
    trainer.opt[0].resize_like(trainer.model.net);
  } else {
    trainer.opt.resize(trainer.model.bank.subnets.size());
    for (std::size_t k = 0; k < trainer.opt.size(); ++k)
      trainer.opt[k].resize_like(trainer.model.bank.subnets[k]);
  }
  return trainer;
}

void FolTrainer::train(const SampleSet& samples, int n_epochs) {
  const FolConfig& config = model.config;
  const Mesh& mesh = *model.mesh;
  int n_samples = static_cast<int>(samples.inputs.size());
  if (n_samples == 0) throw std::invalid_argument("fol training: empty sample set");
  if (config.batch_size < 1 || config.batch_size > n_samples)
    throw std::invalid_argument("fol training: batch_size must be in [1, n_samples]");
  if (samples.inputs[0].size() != model.input_size())
    throw std::invalid_argument("fol training: sample input size does not match the network");

  StiffnessKernel kernel(mesh, config.nu);

  // Nodal modulus and scaled net input per sample, decoded once; reused every epoch.
  Eigen::MatrixXd E_cache(mesh.n_nodes(), n_samples);
  Eigen::MatrixXd X_cache(model.input_size(), n_samples);
  for (int s = 0; s < n_samples; ++s) {
    E_cache.col(s) = nodal_modulus(model, samples.inputs[s]);
    X_cache.col(s) = (samples.inputs[s].array() - config.input_shift) / config.input_scale;
  }

  bool single = config.architecture == FolArch::SingleNet;
  int n_nets = single ? 1 : model.output_size();
  std::vector<MlpGrads> grads(n_nets);
  for (int k = 0; k < n_nets; ++k)
    grads[k].resize_like(single ? model.net : model.bank.subnets[k]);
  std::vector<Tape> tapes(n_nets);
  Eigen::VectorXd y(model.output_size()), U(model.dof_map.n_dofs()), dL(model.dof_map.n_dofs());
  Eigen::MatrixXd dy(model.output_size(), 1), dyk(1, 1);

  std::vector<int> order(n_samples);
  std::uint64_t shuffle_seed = mix_seed(config.seed, kShuffleStream);

  for (int epoch = 0; epoch < n_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(shuffle_seed, static_cast<std::uint64_t>(epochs_done)));
    shuffle_rng.shuffle(order);

    LossBreakdown epoch_mean;
    for (int start = 0; start < n_samples; start += config.batch_size) {
      int batch = std::min(config.batch_size, n_samples - start);
      double inv_batch = 1.0 / batch;
      for (auto& g : grads) g.set_zero();

      for (int b = 0; b < batch; ++b) {
        int s = order[start + b];
        auto x = X_cache.col(s);
        if (single) {
          y = forward(model.net, x, tapes[0]);
        } else {
          for (int k = 0; k < n_nets; ++k)
            y[k] = forward(model.bank.subnets[k], x, tapes[k])(0, 0);
        }
        assemble_full_dofs(model, y, U);
        LossBreakdown lb = fol_loss(kernel, model.dof_map, E_cache.col(s), U, config, dL);
        if (!std::isfinite(lb.total))
          throw std::runtime_error("fol training aborted: non-finite loss at sample id " +
                                   id_string(s < static_cast<int>(samples.ids.size())
                                                 ? samples.ids[s]
                                                 : static_cast<std::uint64_t>(s)));
        epoch_mean.energy_term += lb.energy_term;
        epoch_mean.dirichlet_term += lb.dirichlet_term;
        epoch_mean.total += lb.total;

        // Batch-mean gradients: scale each sample's upstream gradient.
        if (single) {
          for (int i = 0; i < model.output_size(); ++i)
            dy(i, 0) = inv_batch * dL[model.output_dofs[i]];
          backward(model.net, tapes[0], dy, grads[0]);
        } else {
          for (int k = 0; k < n_nets; ++k) {
            dyk(0, 0) = inv_batch * dL[model.output_dofs[k]];
            backward(model.bank.subnets[k], tapes[k], dyk, grads[k]);
          }
        }
      }

      for (int k = 0; k < n_nets; ++k)
        adam_step(single ? model.net : model.bank.subnets[k], grads[k], opt[k],
                  config.learning_rate);
    }
    epoch_mean.energy_term /= n_samples;
    epoch_mean.dirichlet_term /= n_samples;
    epoch_mean.total /= n_samples;
    history.push_back(epoch_mean);
    ++epochs_done;
  }
}

FolTrainer train_fol(const SampleSet& samples, const Mesh& mesh, const DofMap& dof_map,
                     const FolConfig& config) {
  FolTrainer trainer = make_fol_trainer(mesh, dof_map, config);
  trainer.train(samples, config.epochs);
  return trainer;
}

}  // namespace fol
