#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fol/fem.hpp"
#include "fol/mesh.hpp"
#include "fol/microstructure.hpp"
#include "fol/neural.hpp"
#include "fol/solver.hpp"

namespace fol {

// Soft: Dirichlet values enter the loss as a weighted L1 penalty.
// Hard: prescribed DOFs are removed from the network output entirely.
enum class BcMode { Soft, Hard };
// One net with all DOFs as outputs, or one scalar-output subnet per DOF.
enum class FolArch { SingleNet, SubnetBank };
enum class InputEncoding { NodalE, FourierCoeffs };

BcMode bc_mode_from_string(const std::string& name);
FolArch fol_arch_from_string(const std::string& name);
InputEncoding input_encoding_from_string(const std::string& name);
std::string to_string(BcMode mode);
std::string to_string(FolArch arch);
std::string to_string(InputEncoding encoding);

struct FolConfig {
  BcMode mode = BcMode::Hard;
  FolArch architecture = FolArch::SingleNet;
  InputEncoding encoding = InputEncoding::NodalE;
  std::vector<int> hidden = {300, 300};
  Activation activation = Activation::Swish;
  int batch_size = 100;
  int epochs = 4000;
  double learning_rate = 5e-4;
  double a_b = 10.0;  // soft-mode boundary weight
  // Net input is (x - input_shift) / input_scale; the modulus decode always
  // sees the raw input. Keeps coefficient-scale inputs near [-1, 1].
  double input_shift = 0.0;
  double input_scale = 1.0;
  double nu = 0.3;
  std::uint64_t seed = 0;
  int threads = 1;
  FourierSpec fourier;  // layout only (coeffs ignored); used by fourier_coeffs encoding
};

// Frequency layouts used throughout the study; coefficients left empty.
FourierSpec default_fourier_2d();
FourierSpec default_fourier_3d();

struct LossBreakdown {
  double energy_term = 0.0;
  double dirichlet_term = 0.0;
  double total = 0.0;
};

// Energy plus (soft mode) boundary penalty, with the loss gradient in the
// full DOF vector. Hard mode overwrites prescribed entries of U_pred before
// evaluating and zeroes their gradient entries.
LossBreakdown fol_loss(const StiffnessKernel& kernel, const DofMap& dof_map,
                       const Eigen::Ref<const Eigen::VectorXd>& E, Eigen::VectorXd& U_pred,
                       const FolConfig& config, Eigen::VectorXd& dL_dU);
LossBreakdown fol_loss(const Mesh& mesh, const DofMap& dof_map, const ElasticityField& field,
                       Eigen::VectorXd& U_pred, const FolConfig& config, Eigen::VectorXd& dL_dU);

struct FolModel {
  FolConfig config;
  const Mesh* mesh = nullptr;
  DofMap dof_map;
  std::vector<int> output_dofs;  // network output i feeds this DOF index
  Mlp net;                       // single_net
  SubnetBank bank;               // subnet_bank

  int input_size() const;
  int output_size() const { return static_cast<int>(output_dofs.size()); }
  Eigen::VectorXd eval(const Eigen::VectorXd& input) const;
};

// All DOFs in soft mode; free DOFs (ascending) in hard mode.
std::vector<int> fol_output_dofs(const DofMap& dof_map, BcMode mode);

FolModel make_fol_model(const Mesh& mesh, const DofMap& dof_map, const FolConfig& config);

// Decode a network input into the nodal modulus field it represents.
Eigen::VectorXd nodal_modulus(const FolModel& model, const Eigen::VectorXd& input);

// Network outputs scattered into a full DOF vector; hard mode inserts the
// prescribed values, soft mode has no prescribed slots left open.
void assemble_full_dofs(const FolModel& model, const Eigen::VectorXd& y, Eigen::VectorXd& U);

// Forward pass + stress recovery on the modulus field the input encodes.
SolutionField predict(const FolModel& model, const Eigen::VectorXd& input);

// Model plus optimizer state; training may stop and resume at epoch
// boundaries with bit-identical trajectories because every epoch's shuffle is
// seeded by (seed, epoch) alone.
struct FolTrainer {
  FolModel model;
  std::vector<AdamState> opt;  // one entry per net
  std::vector<LossBreakdown> history;
  int epochs_done = 0;

  // Appends n_epochs of training; history gains one epoch-mean entry each.
  void train(const SampleSet& samples, int n_epochs);
};

FolTrainer make_fol_trainer(const Mesh& mesh, const DofMap& dof_map, const FolConfig& config);

// Fresh trainer run for config.epochs.
FolTrainer train_fol(const SampleSet& samples, const Mesh& mesh, const DofMap& dof_map,
                     const FolConfig& config);

}  // namespace fol
