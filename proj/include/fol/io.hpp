#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "fol/deeponet.hpp"
#include "fol/fol.hpp"
#include "fol/metrics.hpp"
#include "fol/microstructure.hpp"
#include "fol/solver.hpp"

namespace fol {

// %.17g: shortest text that round-trips doubles bit-for-bit through strtod.
std::string format_double(double value);

// ---- CSV -------------------------------------------------------------
// Sample sets: header "id,phase_fraction,E_0.." for nodal sets and "id,c_0.."
// for coefficient sets. All files use '.' decimals and LF endings.
void write_sample_csv(const std::string& path, const SampleSet& set);
SampleSet read_sample_csv(const std::string& path);

void write_fol_history_csv(const std::string& path, const std::vector<LossBreakdown>& history);
void write_deeponet_history_csv(const std::string& path, const std::vector<double>& history);
void write_solution_csv(const std::string& path, const SolutionField& solution);
void write_error_csv(const std::string& path, const ErrorReport& report);

// ---- VTK legacy ASCII ------------------------------------------------
// One point-data block per field: n_nodes x 1 scalars or n_nodes x dim
// vectors (padded to 3 components in the file).
struct VtkField {
  std::string name;
  Eigen::MatrixXd data;
};

void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title = "fol export");

// displacement vector + stress scalars (+ modulus when given).
std::vector<VtkField> solution_vtk_fields(const SolutionField& solution,
                                          const Eigen::VectorXd* E = nullptr);

// ---- config <-> JSON --------------------------------------------------
nlohmann::json fourier_spec_to_json(const FourierSpec& spec);
FourierSpec fourier_spec_from_json(const nlohmann::json& j);
nlohmann::json fol_config_to_json(const FolConfig& config);
FolConfig fol_config_from_json(const nlohmann::json& j);
nlohmann::json deeponet_config_to_json(const DeepONetConfig& config);
DeepONetConfig deeponet_config_from_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key, compact) JSON dump.
std::string config_hash(const nlohmann::json& config);

// Throws when obj carries a key outside `allowed` (fail-fast config parsing).
void require_keys_subset(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                         const std::string& context);

// ---- checkpoints -------------------------------------------------------
// Versioned JSON documents carrying params, optimizer state, history, and
// the config so training resumes bit-identically.
void save_fol_checkpoint(const std::string& path, const FolTrainer& trainer,
                         const std::string& hash);
FolTrainer load_fol_checkpoint(const std::string& path, const Mesh& mesh,
                               std::string* hash = nullptr);
void save_deeponet_checkpoint(const std::string& path, const DeepONetTrainer& trainer,
                              const std::string& hash);
DeepONetTrainer load_deeponet_checkpoint(const std::string& path, std::string* hash = nullptr);

// ---- manifest ----------------------------------------------------------
// Every command writes one: the command, the fully-resolved config, and its
// hash; enough to reproduce the run.
void write_manifest(const std::string& path, const std::string& command,
                    const nlohmann::json& resolved_config);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace fol
