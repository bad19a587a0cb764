#include "fol/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fol/microstructure.hpp"

namespace fol {

namespace {

constexpr double kMeanGuard = 1e-14;

void check_sizes(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() == 0)
    throw std::invalid_argument("metrics: component sizes differ or are empty");
}

}  // namespace

double err_mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_sizes(a, b);
  return std::sqrt((a - b).squaredNorm() / a.size());
}

double err_max(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_sizes(a, b);
  return (a - b).cwiseAbs().maxCoeff();
}

double homogenized_rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, bool* absolute) {
  check_sizes(a, b);
  double mean_a = a.mean();
  double mean_b = b.mean();
  bool abs_mode = std::abs(mean_b) < kMeanGuard;
  if (absolute) *absolute = abs_mode;
  return abs_mode ? std::abs(mean_a - mean_b) : std::abs(mean_a - mean_b) / std::abs(mean_b);
}

ErrorReport compare_components(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                               const std::vector<std::string>& names,
                               const std::vector<std::string>& units) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("compare_components: shape mismatch");
  if (static_cast<int>(names.size()) != a.cols() || names.size() != units.size())
    throw std::invalid_argument("compare_components: name/unit count mismatch");
  ErrorReport report;
  report.components = names;
  report.units = units;
  report.err_mse.resize(a.cols());
  report.err_max.resize(a.cols());
  report.homogenized_rel.resize(a.cols());
  report.homogenized_absolute.resize(names.size());
  for (int c = 0; c < a.cols(); ++c) {
    bool abs_mode = false;
    report.err_mse[c] = err_mse(a.col(c), b.col(c));
    report.err_max[c] = err_max(a.col(c), b.col(c));
    report.homogenized_rel[c] = homogenized_rel(a.col(c), b.col(c), &abs_mode);
    report.homogenized_absolute[c] = abs_mode;
  }
  return report;
}

std::vector<std::string> field_components(const SolutionField& field) {
  const Mesh& mesh = *field.mesh;
  std::vector<std::string> names =
      mesh.dim == 2 ? std::vector<std::string>{"u", "v"} : std::vector<std::string>{"u", "v", "w"};
  if (field.stress.rows() == mesh.n_nodes()) {
    if (mesh.dim == 2) {
      names.insert(names.end(), {"sigma_xx", "sigma_yy", "sigma_xy"});
    } else {
      names.insert(names.end(),
                   {"sigma_xx", "sigma_yy", "sigma_zz", "sigma_yz", "sigma_xz", "sigma_xy"});
    }
  }
  return names;
}

Eigen::VectorXd component_values(const SolutionField& field, const std::string& component) {
  const Mesh& mesh = *field.mesh;
  int dpn = mesh.dofs_per_node();
  int disp = component == "u" ? 0 : component == "v" ? 1 : component == "w" ? 2 : -1;
  if (disp >= 0) {
    if (disp >= dpn) throw std::invalid_argument("component_values: no component " + component);
    Eigen::VectorXd out(mesh.n_nodes());
    for (int i = 0; i < mesh.n_nodes(); ++i) out[i] = field.u[DofMap::dof_index(i, disp, dpn)];
    return out;
  }
  std::vector<std::string> stress_names =
      mesh.dim == 2
          ? std::vector<std::string>{"sigma_xx", "sigma_yy", "sigma_xy"}
          : std::vector<std::string>{"sigma_xx", "sigma_yy", "sigma_zz",
                                     "sigma_yz", "sigma_xz", "sigma_xy"};
  for (std::size_t c = 0; c < stress_names.size(); ++c) {
    if (component == stress_names[c]) {
      if (field.stress.rows() != mesh.n_nodes())
        throw std::invalid_argument("component_values: field has no recovered stress");
      return field.stress.col(static_cast<int>(c));
    }
  }
  throw std::invalid_argument("component_values: unknown component " + component);
}

ErrorReport compare_fields(const SolutionField& a, const SolutionField& b) {
  if (!a.mesh || !b.mesh || a.mesh->n_nodes() != b.mesh->n_nodes() || a.mesh->dim != b.mesh->dim)
    throw std::invalid_argument("compare_fields: fields live on different meshes");
  bool with_stress =
      a.stress.rows() == a.mesh->n_nodes() && b.stress.rows() == b.mesh->n_nodes() &&
      a.stress.cols() == b.stress.cols();
  std::vector<std::string> names = field_components(a);
  if (!with_stress)
    names.resize(a.mesh->dofs_per_node());  // displacement components only
  Eigen::MatrixXd ma(a.mesh->n_nodes(), names.size()), mb(a.mesh->n_nodes(), names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    ma.col(c) = component_values(a, names[c]);
    mb.col(c) = component_values(b, names[c]);
  }
  std::vector<std::string> units(names.size(), "mm");
  for (std::size_t c = 0; c < names.size(); ++c)
    if (names[c].rfind("sigma", 0) == 0) units[c] = "MPa";
  return compare_components(ma, mb, names, units);
}

ErrorReport compare_fields_resampled(const SolutionField& a, const SolutionField& b, int eval_n) {
  if (!a.mesh || !b.mesh || !a.mesh->structured() || !b.mesh->structured())
    throw std::invalid_argument("compare_fields_resampled: structured grids only");
  if (std::abs(a.mesh->side_length - b.mesh->side_length) > 1e-12)
    throw std::invalid_argument("compare_fields_resampled: domains differ");
  Mesh eval_mesh = build_structured_grid(eval_n, a.mesh->side_length);
  SolutionField fa = upsample_bilinear(a, eval_mesh);
  SolutionField fb = upsample_bilinear(b, eval_mesh);
  return compare_fields(fa, fb);
}

std::vector<std::pair<double, double>> extract_cross_section(const SolutionField& field, char axis,
                                                             double coordinate,
                                                             const std::string& component) {
  const Mesh& mesh = *field.mesh;
  if (!mesh.structured())
    throw std::invalid_argument("extract_cross_section: structured grids only");
  if (axis != 'x' && axis != 'y')
    throw std::invalid_argument("extract_cross_section: axis must be 'x' or 'y'");
  int n = mesh.grid_n;
  double h = mesh.side_length / (n - 1);
  int line = static_cast<int>(std::lround(coordinate / h));
  line = std::max(0, std::min(n - 1, line));
  Eigen::VectorXd values = component_values(field, component);
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    int node = axis == 'x' ? line * n + i : i * n + line;
    double position = axis == 'x' ? mesh.nodes(node, 0) : mesh.nodes(node, 1);
    out.emplace_back(position, values[node]);
  }
  return out;
}

std::string ErrorReport::to_text() const {
  std::string text;
  char buf[160];
  for (std::size_t c = 0; c < components.size(); ++c) {
    std::snprintf(buf, sizeof(buf), "%-10s err_mse=%.6e err_max=%.6e homogenized_%s=%.6e [%s]\n",
                  components[c].c_str(), err_mse[c], err_max[c],
                  homogenized_absolute[c] ? "abs" : "rel", homogenized_rel[c], units[c].c_str());
    text += buf;
  }
  return text;
}

}  // namespace fol
