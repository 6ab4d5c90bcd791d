#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lamestab/elasticity.hpp"
#include "lamestab/estimates.hpp"

namespace lamestab {

enum class CheckKind {
  kIntegralEstimate,
  kInterpolation,
  kThreeSphere,
  kDoubling,
  kPropagationOfSmallness,
  kStrainLowerBound,
  kHolderStability,
  kReconstruction,
};

std::string_view check_name(CheckKind kind);
/// Every accepted check name, in declaration order.
const std::vector<std::string_view>& valid_check_names();
/// Throws ConfigError listing the valid names.
CheckKind parse_check_name(const std::string& name, int line = -1);

struct BoundaryDataSpec {
  enum class Kind { kAffine, kFourierModes };
  Kind kind = Kind::kFourierModes;
  Mat2 A = Mat2::Identity();
  Vec2 b = Vec2::Zero();
  std::vector<FourierMode> modes = {{1, 1.0, 0.0, 0.0}, {2, 0.3, 0.5, 0.4}};

  BoundaryTrace realize(std::shared_ptr<const TriMesh> mesh) const;
};

/// Smooth bump of height 1 around (0.1, 0.05), radius 0.3, vanishing near
/// the boundary of the unit disk.
PhantomSpec default_perturbation_shape();

struct LameSpec {
  double alpha0 = 0.5;
  double beta0 = 1.0;
  double M = 20.0;
  /// Polynomial degree of the realized coefficient fields.
  int degree = 1;
  PhantomSpec lambda = {2.0, {}, 0.1, std::nullopt};
  PhantomSpec mu;
  /// Shape of mu1 - mu2 up to the scale t; interior support keeps eta = 0.
  PhantomSpec perturbation = default_perturbation_shape();
};

struct ThreeSphereParams {
  std::vector<double> radii = {0.05, 0.1, 0.2};
  int num_centers = 20;
  double max_center_radius = 0.55;
  /// Constant used on the phantom is this factor times the constant-strain
  /// calibration.
  double constant_factor = 1.5;
  double delta_window = 0.05;
};

struct DoublingParams {
  Vec2 center = Vec2::Zero();
  std::vector<double> radii = {0.02, 0.04, 0.06, 0.08, 0.1};
  DoublingMode mode = DoublingMode::kStrain;
  /// Ball placement margin; B_2r(center) must lie in Omega_d.
  double d = 0.1;
};

struct PropagationParams {
  std::vector<double> rho = {0.1};
  /// <= 0 selects rho / 2.
  double spacing = 0.0;
};

struct StrainLowerBoundParams {
  Vec2 x0 = Vec2::Zero();
  double d = 0.5;
  std::vector<double> radii = {0.0625, 0.125, 0.25, 0.5};
};

struct ReconstructionParams {
  std::vector<double> noise_levels = {0.0, 1e-6, 1e-5, 1e-4, 1e-3};
  int repeats = 3;
  std::optional<double> reg_weight;
  /// Interior margin of the error norm; unset means the top-level d.
  std::optional<double> d;
};

struct ExperimentConfig {
  DomainSpec domain = DomainSpec::unit_disk();
  double mesh_h = 0.05;
  LinearSolver solver = LinearSolver::kConjugateGradient;
  double shear_factor = 1.0;
  LameSpec lame;
  BoundaryDataSpec boundary_g;
  /// Interior margin of the stability estimate.
  double d = 0.1;
  std::vector<double> scales;
  std::vector<CheckKind> checks;
  /// Empty means: LAMESTAB_OUTPUT_DIR, else "lamestab_output".
  std::string output_dir;
  std::uint64_t seed = 0;

  ThreeSphereParams three_sphere;
  DoublingParams doubling;
  PropagationParams propagation;
  StrainLowerBoundParams strain_lower_bound;
  ReconstructionParams reconstruction;

  bool wants(CheckKind kind) const;
  /// Integral estimate, interpolation and Hoelder share one perturbation family.
  bool needs_family() const;
  ElasticityOptions elasticity_options() const;
};

/// Parses the YAML experiment format. Errors carry the line and the dotted
/// field path; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Structural checks that need no mesh (positive lengths, sorted levels,
/// scales present for the family checks). Throws ConfigError.
void validate_config(const ExperimentConfig& config);

/// Seed of an independent random stream derived from the config seed:
/// mt19937_64 initialised by seed_seq{low(seed), high(seed), stream}.
enum class SeedStream : std::uint32_t { kThreeSphereCenters = 1, kNoise = 2 };
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

}  // namespace lamestab
