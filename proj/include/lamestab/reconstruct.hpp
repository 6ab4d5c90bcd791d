#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lamestab/fitting.hpp"
#include "lamestab/norms.hpp"

namespace lamestab {

struct InteriorMeasurement {
  DisplacementField u;
  /// Standard deviation of the noise added per dof, in length units.
  double noise_level = 0.0;
};

/// Adds independent N(0, sigma^2) noise to every dof. The generator is
/// mt19937_64 seeded with `seed`.
InteriorMeasurement add_noise(const DisplacementField& u, double sigma, std::uint64_t seed);

struct ReconstructionOptions {
  /// Weight of the ||grad mu||^2 penalty. Defaults to 1e-6 times the mean
  /// strain energy density of the measurement.
  std::optional<double> reg_weight;
  double shear_factor = 1.0;
  int quadrature_degree = 4;
  /// Smallest admissible Gram eigenvalue relative to the Gram trace.
  double ill_posed_threshold = 1e-12;
};

struct ReconstructionResult {
  /// P1 shear modulus; boundary vertices carry the imposed values.
  ScalarField mu_rec;
  /// Euclidean norm of the weak residual over interior test functions.
  double residual_norm = 0.0;
  double regularization_weight = 0.0;
  /// Inverse-iteration estimate of the smallest eigenvalue of the Gram
  /// matrix, divided by its trace.
  double relative_min_eigenvalue = 0.0;
  std::optional<double> linf_error_on_interior;
};

/// Minimizes sum over interior P2 test functions z of
///   | int lambda div u div z + s mu e(u) : e(z) |^2 + reg ||grad mu||^2
/// over P1 mu with mu fixed to `mu_boundary` on boundary_loop() vertices
/// (same order). Throws IllPosedError when the Gram matrix is numerically
/// singular, naming the disk that supports the near-null vector.
ReconstructionResult reconstruct_mu(const InteriorMeasurement& meas, const ScalarField& lambda,
                                    const std::vector<double>& mu_boundary,
                                    const ReconstructionOptions& options = {});
/// Boundary values taken from a known field.
std::vector<double> boundary_values(const ScalarField& field);

/// Weak residual norm of a candidate mu (any degree) for measurement u.
double reconstruction_residual(const DisplacementField& u, const ScalarField& lambda,
                               const ScalarField& mu, double shear_factor = 1.0,
                               int quadrature_degree = 4);

/// max over vertices of Omega_d of |mu_rec - mu_true|, with mu_true sampled
/// at the vertices.
double interior_error(const ScalarField& mu_rec, const ScalarField& mu_true, double d);

struct NoiseSweepRow {
  double sigma = 0.0;
  std::vector<double> errors;
  double median_error = 0.0;
};
struct NoiseSweepResult {
  std::vector<NoiseSweepRow> rows;
  /// Median error against sigma over the nonzero levels.
  PowerLawFit fit;
  double p = 0.0;
  /// Adjacent decreases of the median error.
  int inversions = 0;
  double noiseless_error = 0.0;
};
/// Forward-solves with `truth`, then reconstructs from noisy copies. Each
/// nonzero level uses `repeats` seeds derived from `seed`; sigma = 0 is
/// reconstructed once.
NoiseSweepResult noise_sweep(const LamePair& truth, const BoundaryTrace& g, double d,
                             const std::vector<double>& noise_levels, std::uint64_t seed,
                             const ReconstructionOptions& options = {}, int repeats = 3,
                             const ElasticityOptions& forward = {});

}  // namespace lamestab
