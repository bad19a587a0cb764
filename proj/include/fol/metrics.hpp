#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "fol/solver.hpp"

namespace fol {

// Per-component RMSE / max-abs / homogenized-mean errors between a predicted
// field and a reference. When the reference mean is below 1e-14 the
// homogenized entry holds the absolute difference and is flagged.
struct ErrorReport {
  std::vector<std::string> components;
  std::vector<std::string> units;
  Eigen::VectorXd err_mse;  // sqrt(mean squared pointwise difference)
  Eigen::VectorXd err_max;
  Eigen::VectorXd homogenized_rel;
  std::vector<bool> homogenized_absolute;

  std::string to_text() const;
};

double err_mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double err_max(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
// |<a> - <b>| / |<b>|, or the absolute difference (flag set) for tiny <b>.
double homogenized_rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       bool* absolute = nullptr);

// Columns of a and b are matched components.
ErrorReport compare_components(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                               const std::vector<std::string>& names,
                               const std::vector<std::string>& units);

// Displacement components plus stress components when both fields carry them.
ErrorReport compare_fields(const SolutionField& a, const SolutionField& b);

// Bilinearly resamples both fields onto an eval_n x eval_n grid first.
ErrorReport compare_fields_resampled(const SolutionField& a, const SolutionField& b,
                                     int eval_n = 100);

// Nodal values of one named component: u, v (, w) or sigma_xx, sigma_yy, ...
Eigen::VectorXd component_values(const SolutionField& field, const std::string& component);
std::vector<std::string> field_components(const SolutionField& field);

// Values along the grid line nearest `coordinate`, walking in `axis`
// direction; pairs are (position, value) ordered by position.
std::vector<std::pair<double, double>> extract_cross_section(const SolutionField& field, char axis,
                                                             double coordinate,
                                                             const std::string& component);

}  // namespace fol
