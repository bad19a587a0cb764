#include "fol/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fol {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void sort_by_phase_fraction(SampleSet& set) {
  if (set.phase_fraction.size() != set.inputs.size()) return;
  std::vector<int> order(set.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return set.phase_fraction[a] < set.phase_fraction[b];
  });
  SampleSet sorted;
  sorted.seed = set.seed;
  sorted.inputs.reserve(order.size());
  sorted.phase_fraction.reserve(order.size());
  sorted.ids.reserve(order.size());
  for (int i : order) {
    sorted.inputs.push_back(std::move(set.inputs[i]));
    sorted.phase_fraction.push_back(set.phase_fraction[i]);
    sorted.ids.push_back(set.ids[i]);
  }
  set = std::move(sorted);
}

int FourierSpec::n_terms() const {
  int nx = static_cast<int>(fx.size());
  int ny = static_cast<int>(fy.size());
  if (nx == 0 || ny == 0) throw std::invalid_argument("FourierSpec: empty frequency list");
  if (is_3d()) {
    if (full_layout) throw std::invalid_argument("FourierSpec: full layout is 2D only");
    return 1 + nx * ny * static_cast<int>(fz.size());
  }
  return full_layout ? 1 + 4 * nx * ny : 1 + nx * ny;
}

// Column layout: constant first, then per-pair blocks in row-major (i, j)
// order. The full layout appends the blocks type by type, [A | B | C | D], so
// the reduced layout [c, D..] is the full one with A = B = C = 0 dropped.
Eigen::MatrixXd fourier_basis(const FourierSpec& spec, const Eigen::MatrixXd& points) {
  int m = spec.n_terms();
  int nx = static_cast<int>(spec.fx.size());
  int ny = static_cast<int>(spec.fy.size());
  int nz = static_cast<int>(spec.fz.size());
  int np = static_cast<int>(points.rows());
  if (spec.is_3d() && points.cols() < 3)
    throw std::invalid_argument("fourier_basis: 3D spec needs 3D points");
  Eigen::MatrixXd basis(np, m);
  basis.col(0).setOnes();
  for (int p = 0; p < np; ++p) {
    double x = points(p, 0);
    double y = points(p, 1);
    if (spec.is_3d()) {
      double z = points(p, 2);
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
          for (int k = 0; k < nz; ++k)
            basis(p, 1 + (i * ny + j) * nz + k) =
                std::cos(spec.fx[i] * x) * std::cos(spec.fy[j] * y) * std::cos(spec.fz[k] * z);
      continue;
    }
    for (int i = 0; i < nx; ++i) {
      double sx = std::sin(spec.fx[i] * x);
      double cx = std::cos(spec.fx[i] * x);
      for (int j = 0; j < ny; ++j) {
        double sy = std::sin(spec.fy[j] * y);
        double cy = std::cos(spec.fy[j] * y);
        int pair = i * ny + j;
        if (spec.full_layout) {
          basis(p, 1 + pair) = sx * cy;
          basis(p, 1 + nx * ny + pair) = cx * sy;
          basis(p, 1 + 2 * nx * ny + pair) = sx * sy;
          basis(p, 1 + 3 * nx * ny + pair) = cx * cy;
        } else {
          basis(p, 1 + pair) = cx * cy;
        }
      }
    }
  }
  return basis;
}

ElasticityField fourier_field(const FourierSpec& spec, const Mesh& mesh, double nu) {
  if (spec.coeffs.size() != spec.n_terms())
    throw std::invalid_argument("fourier_field: coefficient count does not match layout");
  Eigen::VectorXd ef = fourier_basis(spec, mesh.nodes) * spec.coeffs;
  ElasticityField field;
  field.mesh = &mesh;
  field.nu = nu;
  field.E.resize(ef.size());
  for (Eigen::Index i = 0; i < ef.size(); ++i)
    field.E[i] = (spec.E_max - spec.E_min) * sigmoid(spec.beta * (ef[i] - 0.5)) + spec.E_min;
  return field;
}

// Sum of 4-8 plane cosine waves with random frequency, orientation and phase.
// Wavelengths span roughly a sixth to the whole of the domain side, which
// yields blob-like morphologies after thresholding.
Eigen::VectorXd smooth_random_field(const Mesh& mesh, Rng& rng) {
  int n_waves = rng.uniform_int(4, 8);
  Eigen::VectorXd field = Eigen::VectorXd::Zero(mesh.n_nodes());
  double L = mesh.side_length > 0 ? mesh.side_length : 1.0;
  for (int w = 0; w < n_waves; ++w) {
    double kx = rng.uniform(1.0, 6.0) * kPi / L * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    double ky = rng.uniform(1.0, 6.0) * kPi / L * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    double phase = rng.uniform(0.0, 2.0 * kPi);
    double amp = rng.uniform(0.5, 1.5);
    for (int i = 0; i < mesh.n_nodes(); ++i)
      field[i] += amp * std::cos(kx * mesh.nodes(i, 0) + ky * mesh.nodes(i, 1) + phase);
  }
  return field;
}

Eigen::VectorXd threshold_two_phase(const Eigen::VectorXd& field, double level, double E_hard,
                                    double E_soft) {
  Eigen::VectorXd e(field.size());
  for (Eigen::Index i = 0; i < field.size(); ++i) e[i] = field[i] > level ? E_hard : E_soft;
  return e;
}

SampleSet generate_two_phase_samples(int n_samples, int grid_n, double E_hard, double E_soft,
                                     std::uint64_t seed, int threads) {
  if (n_samples < 1) throw std::invalid_argument("generate_two_phase_samples: n_samples < 1");
  if (!(E_hard > E_soft) || !(E_soft > 0))
    throw std::invalid_argument("generate_two_phase_samples: need E_hard > E_soft > 0");
  Mesh mesh = build_structured_grid(grid_n, 1.0);
  SampleSet set;
  set.seed = seed;
  set.inputs.resize(n_samples);
  set.phase_fraction.resize(n_samples);
  set.ids.resize(n_samples);
  parallel_for(n_samples, threads, [&](int s, int) {
    std::uint64_t sub = mix_seed(seed, static_cast<std::uint64_t>(s));
    Rng rng(sub);
    Eigen::VectorXd field = smooth_random_field(mesh, rng);
    // Threshold at a random interior quantile so both phases usually appear.
    std::vector<double> sorted(field.data(), field.data() + field.size());
    std::sort(sorted.begin(), sorted.end());
    double q = rng.uniform(0.15, 0.85);
    double level = sorted[static_cast<std::size_t>(q * (sorted.size() - 1))];
    Eigen::VectorXd e = threshold_two_phase(field, level, E_hard, E_soft);
    set.inputs[s] = e;
    set.phase_fraction[s] = (e.array() == E_hard).cast<double>().mean();
    set.ids[s] = sub;
  });
  return set;
}

SampleSet sample_fourier_coeffs(int n_samples, const FourierSpec& spec,
                                const Eigen::MatrixXd& ranges, std::uint64_t seed) {
  int m = spec.n_terms();
  if (ranges.rows() != m || ranges.cols() != 2)
    throw std::invalid_argument("sample_fourier_coeffs: ranges must be n_terms x 2");
  if (!ranges.allFinite()) throw std::invalid_argument("sample_fourier_coeffs: ranges not finite");
  SampleSet set;
  set.seed = seed;
  set.inputs.resize(n_samples);
  set.ids.resize(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    std::uint64_t sub = mix_seed(seed, static_cast<std::uint64_t>(s));
    Rng rng(sub);
    Eigen::VectorXd c(m);
    for (int j = 0; j < m; ++j) c[j] = rng.uniform(ranges(j, 0), ranges(j, 1));
    set.inputs[s] = std::move(c);
    set.ids[s] = sub;
  }
  return set;
}

Eigen::MatrixXd default_coeff_ranges(int n_terms) {
  Eigen::MatrixXd ranges(n_terms, 2);
  ranges.col(0).setConstant(-16.0);
  ranges.col(1).setConstant(18.0);
  return ranges;
}

Eigen::VectorXd downsample_nodal(const Eigen::VectorXd& fine, int fine_n, int target_n) {
  if (fine.size() != static_cast<Eigen::Index>(fine_n) * fine_n)
    throw std::invalid_argument("downsample: field size does not match fine grid");
  if (fine_n < target_n) throw std::invalid_argument("downsample: fine grid smaller than target");
  if (target_n < 2) throw std::invalid_argument("downsample: target grid needs n >= 2");
  if (fine_n == target_n) return fine;
  // Coarse node (cx, cy) sits at fine index (cx, cy) * ratio; the pool covers
  // fine nodes within half a coarse spacing along each axis.
  double ratio = static_cast<double>(fine_n - 1) / (target_n - 1);
  double half = ratio / 2 + 1e-12;
  Eigen::VectorXd coarse(static_cast<Eigen::Index>(target_n) * target_n);
  for (int cy = 0; cy < target_n; ++cy) {
    int y_lo = std::max(0, static_cast<int>(std::ceil(cy * ratio - half)));
    int y_hi = std::min(fine_n - 1, static_cast<int>(std::floor(cy * ratio + half)));
    for (int cx = 0; cx < target_n; ++cx) {
      int x_lo = std::max(0, static_cast<int>(std::ceil(cx * ratio - half)));
      int x_hi = std::min(fine_n - 1, static_cast<int>(std::floor(cx * ratio + half)));
      double best = fine[static_cast<Eigen::Index>(y_lo) * fine_n + x_lo];
      for (int y = y_lo; y <= y_hi; ++y)
        for (int x = x_lo; x <= x_hi; ++x)
          best = std::max(best, fine[static_cast<Eigen::Index>(y) * fine_n + x]);
      coarse[static_cast<Eigen::Index>(cy) * target_n + cx] = best;
    }
  }
  return coarse;
}

ElasticityField downsample(const ElasticityField& field, const Mesh& coarse_mesh) {
  if (!field.mesh || !field.mesh->structured() || !coarse_mesh.structured())
    throw std::invalid_argument("downsample: both meshes must be structured grids");
  if (std::abs(field.mesh->side_length - coarse_mesh.side_length) > 1e-12)
    throw std::invalid_argument("downsample: meshes cover different domains");
  ElasticityField out;
  out.mesh = &coarse_mesh;
  out.nu = field.nu;
  out.E = downsample_nodal(field.E, field.mesh->grid_n, coarse_mesh.grid_n);
  return out;
}

Eigen::MatrixXd upsample_bilinear_nodal(const Eigen::MatrixXd& coarse, int coarse_n, int target_n,
                                        int values_per_node) {
  if (coarse.rows() != static_cast<Eigen::Index>(coarse_n) * coarse_n ||
      coarse.cols() != values_per_node)
    throw std::invalid_argument("upsample: coarse matrix shape mismatch");
  Eigen::MatrixXd fine(static_cast<Eigen::Index>(target_n) * target_n, values_per_node);
  double hc = 1.0 / (coarse_n - 1);  // positions normalized to [0, 1]
  for (int fy = 0; fy < target_n; ++fy) {
    double y = static_cast<double>(fy) / (target_n - 1);
    int cy = std::min(static_cast<int>(y / hc), coarse_n - 2);
    double eta = 2.0 * (y - cy * hc) / hc - 1.0;
    for (int fx = 0; fx < target_n; ++fx) {
      double x = static_cast<double>(fx) / (target_n - 1);
      int cx = std::min(static_cast<int>(x / hc), coarse_n - 2);
      double xi = 2.0 * (x - cx * hc) / hc - 1.0;
      Eigen::Vector4d n;
      Eigen::Matrix<double, 4, 2> dn;
      shape_quad4(xi, eta, n, dn);
      int c00 = cy * coarse_n + cx;
      int c10 = c00 + 1;
      int c11 = c10 + coarse_n;
      int c01 = c00 + coarse_n;
      fine.row(static_cast<Eigen::Index>(fy) * target_n + fx) =
          n[0] * coarse.row(c00) + n[1] * coarse.row(c10) + n[2] * coarse.row(c11) +
          n[3] * coarse.row(c01);
    }
  }
  return fine;
}

SolutionField upsample_bilinear(const SolutionField& solution, const Mesh& fine_mesh) {
  const Mesh* coarse_mesh = solution.mesh;
  if (!coarse_mesh || !coarse_mesh->structured() || !fine_mesh.structured())
    throw std::invalid_argument("upsample: both meshes must be structured grids");
  int cn = coarse_mesh->grid_n;
  int fn = fine_mesh.grid_n;
  int dpn = coarse_mesh->dofs_per_node();
  Eigen::MatrixXd u_nodes(coarse_mesh->n_nodes(), dpn);
  for (int i = 0; i < coarse_mesh->n_nodes(); ++i)
    for (int c = 0; c < dpn; ++c) u_nodes(i, c) = solution.u[DofMap::dof_index(i, c, dpn)];
  Eigen::MatrixXd u_fine = upsample_bilinear_nodal(u_nodes, cn, fn, dpn);
  SolutionField out;
  out.mesh = &fine_mesh;
  out.u.resize(fine_mesh.n_dofs());
  for (int i = 0; i < fine_mesh.n_nodes(); ++i)
    for (int c = 0; c < dpn; ++c) out.u[DofMap::dof_index(i, c, dpn)] = u_fine(i, c);
  if (solution.stress.rows() == coarse_mesh->n_nodes() && solution.stress.cols() > 0)
    out.stress = upsample_bilinear_nodal(solution.stress, cn, fn,
                                         static_cast<int>(solution.stress.cols()));
  return out;
}

FourierFit fit_fourier_coeffs(const ElasticityField& field, const Mesh& mesh,
                              const FourierSpec& layout) {
  double span = layout.E_max - layout.E_min;
  if (!(span > 0)) throw std::invalid_argument("fit_fourier_coeffs: E_min must be below E_max");
  double eps = 1e-6 * span;
  Eigen::VectorXd ef(field.E.size());
  for (Eigen::Index i = 0; i < field.E.size(); ++i) {
    double e = std::clamp(field.E[i], layout.E_min + eps, layout.E_max - eps);
    double s = (e - layout.E_min) / span;
    ef[i] = 0.5 + std::log(s / (1.0 - s)) / layout.beta;
  }
  Eigen::MatrixXd basis = fourier_basis(layout, mesh.nodes);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1]
                                      : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12))
    throw std::runtime_error("fit_fourier_coeffs: ill-conditioned basis (condition estimate " +
                             std::to_string(cond) + ")");
  FourierFit fit;
  fit.coeffs = svd.solve(ef);
  fit.residual = std::sqrt((basis * fit.coeffs - ef).squaredNorm() / ef.size());
  return fit;
}

}  // namespace fol
