#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fol/common.hpp"
#include "fol/fem.hpp"
#include "fol/solver.hpp"

namespace fol {

// A batch of training inputs: nodal modulus vectors or Fourier coefficient
// vectors. Identical (config, seed) pairs reproduce bit-identical sets.
struct SampleSet {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<double> phase_fraction;  // empty for coefficient sets
  std::vector<std::uint64_t> ids;      // seed-derived, stable across reorderings
  std::uint64_t seed = 0;
};

void sort_by_phase_fraction(SampleSet& set);

// Continuous modulus parameterization: a constant plus products of sines and
// cosines at fixed frequency pairs, squashed through a sigmoid into
// (E_min, E_max). The reduced layout keeps the constant and the cos*cos terms
// only; coefficients are ordered [c, D_11, D_12, ..] row-major over (fx, fy)
// (and over (fx, fy, fz) in 3D).
struct FourierSpec {
  Eigen::VectorXd fx;
  Eigen::VectorXd fy;
  Eigen::VectorXd fz;  // empty in 2D
  Eigen::VectorXd coeffs;
  double beta = 1.0;
  double E_min = 0.1;  // MPa
  double E_max = 1.0;  // MPa
  bool full_layout = false;  // enable the sin*cos, cos*sin, sin*sin terms too

  int n_terms() const;
  bool is_3d() const { return fz.size() > 0; }
};

// Design matrix of the enabled basis terms at the given points (n x dim).
Eigen::MatrixXd fourier_basis(const FourierSpec& spec, const Eigen::MatrixXd& points);

ElasticityField fourier_field(const FourierSpec& spec, const Mesh& mesh, double nu);

// Thresholded smooth random fields: each sample draws 4-8 cosine waves with
// random frequency, phase and amplitude, then splits at a random level.
// Per-sample sub-seeds make parallel and serial generation bit-identical.
SampleSet generate_two_phase_samples(int n_samples, int grid_n, double E_hard, double E_soft,
                                     std::uint64_t seed, int threads = 1);

// Exposed pieces of the generator.
Eigen::VectorXd smooth_random_field(const Mesh& mesh, Rng& rng);
Eigen::VectorXd threshold_two_phase(const Eigen::VectorXd& field, double level, double E_hard,
                                    double E_soft);

// Seeded uniform draws per coefficient; ranges is n_terms x 2 (lo, hi).
SampleSet sample_fourier_coeffs(int n_samples, const FourierSpec& spec,
                                const Eigen::MatrixXd& ranges, std::uint64_t seed);
Eigen::MatrixXd default_coeff_ranges(int n_terms);  // [-16, 18] everywhere

// Max-pooling over the patch of fine nodes nearest each coarse node; the
// pool radius is fine_spacing * ratio / 2, so the hard phase survives.
Eigen::VectorXd downsample_nodal(const Eigen::VectorXd& fine, int fine_n, int target_n);
ElasticityField downsample(const ElasticityField& field, const Mesh& coarse_mesh);

// Per-component bilinear interpolation with quad4 shape functions; exact at
// coarse-node positions.
Eigen::MatrixXd upsample_bilinear_nodal(const Eigen::MatrixXd& coarse, int coarse_n, int target_n,
                                        int values_per_node);
SolutionField upsample_bilinear(const SolutionField& solution, const Mesh& fine_mesh);

struct FourierFit {
  Eigen::VectorXd coeffs;
  double residual = 0.0;  // rms of the pre-sigmoid least-squares misfit
};

// Least-squares fit of the inverse-sigmoid field onto the enabled basis.
// Throws when the normal-equations condition estimate exceeds 1e12.
FourierFit fit_fourier_coeffs(const ElasticityField& field, const Mesh& mesh, const FourierSpec& layout);

}  // namespace fol
