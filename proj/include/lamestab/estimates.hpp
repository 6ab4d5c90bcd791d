#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lamestab/fitting.hpp"
#include "lamestab/norms.hpp"

namespace lamestab {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One row of a numerical certificate lhs <= C * rhs (lower-bound checks use
/// lhs >= C * rhs). The constant C is fitted on a calibration set that never
/// contains the rows it judges.
struct EstimateCheck {
  std::string experiment_id;
  std::string name;
  double param = kNaN;
  double lhs = 0.0;
  /// Right-hand side without the constant.
  double rhs = 0.0;
  double ratio = kNaN;
  double fitted_constant = kNaN;
  double exponent = kNaN;
  bool pass = false;
  /// Row took part in fitting the constant.
  bool calibration = false;
  /// Precondition failed (zero denominator, rigid data); not a failure.
  bool degenerate = false;
  std::string note;
};

/// Forward solutions u (shear modulus mu1) and v_t (mu1 + t * shape) with
/// shared lambda and Dirichlet data g, one v per scale.
struct PerturbationFamily {
  LamePair base;
  ScalarField shape;
  BoundaryTrace g;
  /// Sorted descending.
  std::vector<double> scales;
  DisplacementField u;
  std::vector<DisplacementField> v;
  double shear_factor = 1.0;

  /// mu1 - mu2 at scale index i.
  ScalarField phi(std::size_t i) const { return shape.scaled(-scales[i]); }
  LamePair perturbed(std::size_t i) const;
};

/// Checks every mu1 + t * shape against the (alpha0, beta0, M) budget of
/// `base` before any solve; throws PreconditionError naming the first
/// offending scale.
PerturbationFamily solve_perturbation_family(const LamePair& base, const ScalarField& shape,
                                             std::vector<double> scales, const BoundaryTrace& g,
                                             const ElasticityOptions& options = {});

/// int |mu1 - mu2| |e(u)|^2 <= C (eta + ||u - v||^{1/4}) with
/// eta = max over the boundary of |mu1 - mu2|. C is the largest ratio over all
/// scales except the smallest, which is held out and must satisfy the bound
/// with C * margin.
struct IntegralEstimateResult {
  std::vector<EstimateCheck> rows;
  double fitted_constant = 0.0;
  /// max / min of the ratio over scales with a positive ratio.
  double spread = 0.0;
  bool held_out_pass = false;
  bool pass() const { return held_out_pass; }
};
/// Needs at least 4 positive scales spanning 2 decades.
IntegralEstimateResult integral_estimate_check(const PerturbationFamily& family,
                                               const std::string& experiment_id = "",
                                               double margin = 1.05);

/// ||D(u - v)|| <= C (||g||_{3/2} + ||k||_{3/2} + 1) ||u - v||^{1/2}; D is
/// the full gradient. Ratio 0 when u = v.
EstimateCheck interpolation_row(const DisplacementField& u, const DisplacementField& v);

struct InterpolationResult {
  std::vector<EstimateCheck> rows;
  /// log ||D(u - v)|| against log ||u - v|| over the positive scales.
  LineFit slope_fit;
  double fitted_constant = 0.0;
  bool held_out_pass = false;
};
InterpolationResult interpolation_check(const PerturbationFamily& family,
                                        const std::string& experiment_id = "",
                                        double margin = 1.05);

/// I_k = int_{B_{r_k}} |e(u)|^2. The admissible exponents of
/// I2 <= C I1^delta I3^{1 - delta} form the interval (0, delta_max] with
/// delta_max = log(C I3 / I2) / log(I3 / I1).
struct ThreeSphereResult {
  EstimateCheck row;
  double i1 = 0.0, i2 = 0.0, i3 = 0.0;
  double delta_max = kNaN;
};
/// Pass when delta_max > delta_window, i.e. some delta in
/// (delta_window, 1 - delta_window) works with the given constant. Requires
/// 0 < r1 < r2 < r3 and r3 at most half the distance from the centre to the
/// boundary; a vanishing inner integral is reported as degenerate.
ThreeSphereResult three_sphere_check(const DisplacementField& u, const Vec2& center, double r1,
                                     double r2, double r3, double constant,
                                     double delta_window = 0.01);
/// Exponent log(r3 / r2) / log(r3 / r1) that is sharp for constant strain.
double three_sphere_reference_delta(double r1, double r2, double r3);
/// Smallest C making the inequality hold at the reference exponent.
double three_sphere_calibration(const DisplacementField& u, const Vec2& center, double r1,
                                double r2, double r3);

/// Square lattice of the given spacing through the origin, restricted to
/// points at distance >= margin from the boundary.
std::vector<Vec2> interior_grid(const Domain& domain, double margin, double spacing);
/// `n` points uniform in the disk of radius `max_radius`, from mt19937_64
/// seeded with `seed`.
std::vector<Vec2> random_centers(int n, double max_radius, std::uint64_t seed);

/// C_rho = min over centres x in Omega_{5 rho} of
/// int_{B_rho(x)} |e(u)|^2 / int_Omega |e(u)|^2.
struct LpsResult {
  EstimateCheck row;
  double c_rho = 0.0;
  Vec2 argmin = Vec2::Zero();
  int num_centers = 0;
};
/// spacing <= 0 selects rho / 2. Throws EmptySubdomainError when
/// Omega_{5 rho} has no grid point, PreconditionError for zero strain.
LpsResult lps_check(const DisplacementField& u, double rho, double spacing = 0.0);

enum class DoublingMode { kDisplacement, kStrain };

struct DoublingResult {
  /// lhs = I(2r), rhs = I(r).
  EstimateCheck row;
  /// Strain mode: r^2 int_{B_r} |e(u)|^2 / int_{B_2r} |u - c - W (x - x0)|^2
  /// with c, W the averages of u and of the skew gradient over B_2r.
  double caccioppoli = kNaN;
  RigidMotion local_rigid;
};
/// Requires B_2r(center) inside Omega_d.
DoublingResult doubling_check(const DisplacementField& u, DoublingMode mode, const Vec2& center,
                              double r, double d);

struct DoublingSweepResult {
  std::vector<DoublingResult> rows;
  double fitted_constant = 0.0;
  /// max / min ratio over the sweep.
  double spread = 0.0;
  bool pass = false;
};
/// Constant fitted on all radii but the smallest, which is held out.
DoublingSweepResult doubling_sweep(const DisplacementField& u, DoublingMode mode,
                                   const Vec2& center, const std::vector<double>& radii, double d,
                                   const std::string& experiment_id = "", double margin = 1.05);

/// Least-squares fit int_{B_r(x0)} |e(u)|^2 = C_d (r/d)^K ||g||^2_{H^{1/2}}.
struct StrainLowerBoundResult {
  std::vector<EstimateCheck> rows;
  double K = 0.0;
  double c_d = 0.0;
  double r_squared = 0.0;
  double g_norm_sq = 0.0;
  bool pass = false;
};
/// Pass when R^2 >= 0.9 and K >= 2 - k_tolerance. Throws PreconditionError
/// for fewer than 3 radii, radii outside (0, d], x0 outside Omega_d or zero
/// strain.
StrainLowerBoundResult strain_lower_bound_check(const DisplacementField& u, const BoundaryTrace& g,
                                                const Vec2& x0, double d,
                                                const std::vector<double>& radii,
                                                const std::string& experiment_id = "",
                                                double k_tolerance = 1e-3);

struct StabilityReport {
  double scale = 0.0;
  /// max over the boundary of |mu1 - mu2|.
  double eta = 0.0;
  double l2_mismatch = 0.0;
  /// C (eta + ||u - v||^{1/4}).
  double epsilon_sq = 0.0;
  double linf_gap = 0.0;
  Vec2 gap_point = Vec2::Zero();
  double d = 0.0;
  /// (N1 eps^2 / (2 M d))^{1 / (N2 + 1)}.
  double lambda_bar = 0.0;
  bool small_branch = true;
  /// Right-hand side of the final estimate on the active branch.
  double bound = 0.0;
};

struct HolderResult {
  std::vector<StabilityReport> reports;
  std::vector<EstimateCheck> rows;
  /// Slope of log linf_gap against log eps^2 on the fitted branch.
  double observed_exponent = kNaN;
  double r_squared = kNaN;
  /// min(1, observed exponent); 0 when the slope is not positive.
  double fitted_delta = 0.0;
  /// 1 / (N2 + 1).
  double guaranteed_delta = kNaN;
  double n1 = 0.0;
  double n2 = 0.0;
  /// Number of rows used by the fit and whether they are the small branch.
  int fitted_rows = 0;
  bool fitted_small_branch = true;
  bool pass() const { return fitted_delta > 0.0 && fitted_delta <= 1.0 && r_squared >= 0.9; }
};
/// N1 = 1 / (C_d ||g||^2) and N2 = K come from `lower`; epsilon_constant is
/// the C of the integral estimate. Rows with t = 0 are reported but not fitted.
HolderResult holder_stability_experiment(const PerturbationFamily& family, double d,
                                         double epsilon_constant,
                                         const StrainLowerBoundResult& lower,
                                         const std::string& experiment_id = "");

}  // namespace lamestab
