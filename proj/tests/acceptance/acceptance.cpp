// Acceptance checks, one per criterion. Usage: lamestab_acceptance [N ...];
// without arguments every criterion runs. Prints one PASS/FAIL line per
// criterion and exits nonzero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "lamestab/errors.hpp"
#include "lamestab/estimates.hpp"
#include "lamestab/log.hpp"
#include "lamestab/reconstruct.hpp"
#include "lamestab/runner.hpp"

using namespace lamestab;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets, fixed by the acceptance criteria.
constexpr double kAffineTol = 1e-8;            // times |A|
constexpr double kRigidEnergyTol = 1e-16;
constexpr double kConvergenceFactor = 6.0;
constexpr double kWeakIdentityTol = 1e-8;
constexpr int kWeakIdentityFields = 10;
constexpr double kIntegralSpreadMax = 20.0;
constexpr double kHeldOutMargin = 1.05;
constexpr double kSlopeMin = 0.45;
constexpr double kSlopeMax = 1.0;
constexpr double kThreeSphereDeltaTol = 1e-3;
constexpr int kThreeSphereCenters = 20;
constexpr double kThreeSphereFactor = 1.5;
constexpr double kThreeSphereWindow = 0.05;
constexpr double kDoublingTol = 1e-3;
constexpr double kDoublingSpreadMax = 3.0;
constexpr double kDoublingMeshStability = 0.25;
constexpr double kAreaRatioTol = 0.10;
constexpr int kMaxInversions = 1;
constexpr double kMinRSquared = 0.9;
constexpr double kReconstructionFactor = 1.4;

const std::vector<double> kScales = {1e-1, 1e-2, 1e-3, 1e-4};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::shared_ptr<const TriMesh> disk(double h) { return build_mesh(DomainSpec::unit_disk(), h); }

ElasticityOptions direct() {
  ElasticityOptions o;
  o.solver = LinearSolver::kDirect;
  return o;
}

LamePair constant_pair(const std::shared_ptr<const TriMesh>& mesh, double lambda, double mu) {
  return {ScalarField::constant(mesh, lambda), ScalarField::constant(mesh, mu), 0.5 * mu,
          std::min(2 * mu + 2 * lambda, 2 * lambda + mu), 10 * (std::abs(lambda) + mu)};
}

// Same coefficients and data as the bundled suite.
struct Phantom {
  std::shared_ptr<const TriMesh> mesh;
  LamePair pair;
  ScalarField bump;
  BoundaryTrace g;
};

Phantom phantom(double h, int degree = 1, double width = 0.15) {
  auto mesh = disk(h);
  PhantomSpec mu;
  mu.inclusions = {{Vec2(-0.2, 0.1), 0.3, 0.5}};
  mu.mollification_width = width;
  PhantomSpec lam;
  lam.background = 2.0;
  lam.inclusions = {{Vec2(0.25, -0.2), 0.25, 0.5}};
  lam.mollification_width = width;
  PhantomSpec bump;
  bump.background = 0.0;
  bump.inclusions = {{Vec2(0.1, 0.05), 0.3, 1.0}};
  bump.mollification_width = 0.15;
  return {mesh,
          {make_phantom(mesh, lam, degree), make_phantom(mesh, mu, degree), 0.5, 1.0, 20.0},
          make_phantom(mesh, bump, degree),
          trace_from_modes(mesh, {{1, 1.0, 0.0, 0.0}, {2, 0.3, 0.5, 0.4}})};
}

Mat2 sample_matrix() {
  Mat2 A;
  A << 0.8, 0.3, -0.1, -0.4;
  return A;
}

double l2_error(const DisplacementField& u, const std::function<Vec2(const Vec2&)>& exact) {
  const auto& rule = triangle_rule(6);
  double total = 0.0;
  for (int e = 0; e < u.mesh().num_triangles(); ++e)
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& xi = rule.points[q];
      const double w = rule.weights[q] * u.mesh().jacobian(e, xi).determinant();
      total += w * (u.value(e, xi) - exact(u.mesh().map(e, xi))).squaredNorm();
    }
  return std::sqrt(total);
}

DisplacementField random_interior_field(const std::shared_ptr<const TriMesh>& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  const double a = nd(rng), b = nd(rng), c = nd(rng), d = nd(rng), k = 1.0 + 3.0 * std::abs(nd(rng));
  auto z = DisplacementField::interpolate(mesh, [&](const Vec2& x) {
    const double bump = 1.0 - x.squaredNorm();
    return Vec2(bump * (a * std::sin(k * x.x()) + b * x.y()), bump * (c * std::cos(k * x.y()) + d * x.x()));
  });
  Eigen::VectorXd dofs = z.dofs();
  for (int n : mesh->boundary_nodes()) dofs.segment<2>(2 * n).setZero();
  return DisplacementField(mesh, dofs);
}

std::string verdict(bool ok) { return ok ? "ok" : "FAIL"; }

// --- 1 -----------------------------------------------------------------

Outcome forward_exactness() {
  auto mesh = disk(0.04);
  const Mat2 A = sample_matrix();
  double worst = 0.0;
  for (const auto& pair : {constant_pair(mesh, 1.0, 1.0), constant_pair(mesh, 3.0, 0.4)}) {
    auto u = solve_dirichlet(*assemble(mesh, pair), trace_from_closure(mesh, affine_map(A)));
    for (int n = 0; n < mesh->num_nodes(); ++n)
      worst = std::max(worst, (u.node_value(n) - A * mesh->nodes()[n]).norm());
  }
  const bool affine_ok = worst <= kAffineTol * A.norm();

  const auto p = phantom(0.04);
  auto rigid = [](const Vec2& x) { return Vec2(0.5 + 0.2 * x.y(), -0.25 - 0.2 * x.x()); };
  auto u = solve_dirichlet(*assemble(p.mesh, p.pair), trace_from_closure(p.mesh, rigid));
  const double energy = strain_energy(u);
  const bool rigid_ok = energy <= kRigidEnergyTol;
  return {affine_ok && rigid_ok,
          fmt::format("affine max dof error {:.3g} (<= {:.3g}) {}; rigid strain energy {:.3g} (<= {:.0e}) {}", worst,
                      kAffineTol * A.norm(), verdict(affine_ok), energy, kRigidEnergyTol, verdict(rigid_ok))};
}

// --- 2 -----------------------------------------------------------------

Outcome manufactured_convergence() {
  // u* = (x^2, xy) with lambda = mu = 1 needs the body force (-5.5, 0).
  auto exact = [](const Vec2& x) { return Vec2(x.x() * x.x(), x.x() * x.y()); };
  std::function<Vec2(const Vec2&)> f = [](const Vec2&) { return Vec2(-5.5, 0.0); };
  std::vector<double> errors;
  for (double h : {0.08, 0.04, 0.02}) {
    auto mesh = disk(h);
    auto u = solve_dirichlet(*assemble(mesh, constant_pair(mesh, 1.0, 1.0), direct()),
                             trace_from_closure(mesh, exact), &f);
    errors.push_back(l2_error(u, exact));
  }
  const double f1 = errors[0] / errors[1], f2 = errors[1] / errors[2];
  return {f1 >= kConvergenceFactor && f2 >= kConvergenceFactor,
          fmt::format("L2 errors {:.3e} {:.3e} {:.3e}; factors {:.2f} {:.2f} (>= {}), orders {:.2f} {:.2f}", errors[0],
                      errors[1], errors[2], f1, f2, kConvergenceFactor, std::log2(f1), std::log2(f2))};
}

// --- 3 -----------------------------------------------------------------

Outcome weak_identity() {
  const auto p = phantom(0.04);
  const auto phi = p.bump.scaled(0.3);
  LamePair pair2{p.pair.lambda, p.pair.mu - phi, p.pair.alpha0, p.pair.beta0, p.pair.M};
  auto u = solve_dirichlet(*assemble(p.mesh, p.pair, direct()), p.g);
  auto v = solve_dirichlet(*assemble(p.mesh, pair2, direct()), p.g);
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < kWeakIdentityFields; ++i) {
    const auto z = random_interior_field(p.mesh, rng);
    worst = std::max(worst, weak_identity_gap(u, v, p.pair.lambda, pair2.mu, phi, z).relative());
  }
  return {worst <= kWeakIdentityTol,
          fmt::format("max relative gap {:.3e} over {} interior test fields (<= {:.0e})", worst, kWeakIdentityFields,
                      kWeakIdentityTol)};
}

// --- 4, 5, 10: shared perturbation family --------------------------------

PerturbationFamily reference_family() {
  const auto p = phantom(0.02);
  return solve_perturbation_family(p.pair, p.bump, kScales, p.g, direct());
}

Outcome integral_estimate() {
  const auto family = reference_family();
  const auto res = integral_estimate_check(family, "acceptance", kHeldOutMargin);
  std::vector<std::string> ratios;
  for (const auto& r : res.rows) ratios.push_back(fmt::format("{:.3g}", r.ratio));
  const bool spread_ok = res.spread <= kIntegralSpreadMax;
  return {spread_ok && res.held_out_pass,
          fmt::format("ratios [{}]; max/min {:.4g} (<= {}) {}; held-out scale {} with C = {:.4g} x {}",
                      fmt::join(ratios, ", "), res.spread, kIntegralSpreadMax, verdict(spread_ok),
                      res.held_out_pass ? "passes" : "FAILS", res.fitted_constant, kHeldOutMargin)};
}

Outcome interpolation() {
  const auto family = reference_family();
  const auto res = interpolation_check(family, "acceptance", kHeldOutMargin);
  const double slope = res.slope_fit.slope;
  return {slope >= kSlopeMin && slope <= kSlopeMax,
          fmt::format("log-log slope {:.5f} (R^2 {:.6f}) in [{}, {}]", slope, res.slope_fit.r_squared, kSlopeMin,
                      kSlopeMax)};
}

// --- 6 -----------------------------------------------------------------

Outcome three_sphere() {
  const auto p = phantom(0.02);
  const auto affine = DisplacementField::interpolate(p.mesh, affine_map(sample_matrix()));
  const double a1 = 0.1, a2 = 0.2, a3 = 0.4;
  const auto analytic = three_sphere_check(affine, Vec2::Zero(), a1, a2, a3, 1.0, 0.0);
  const double reference = three_sphere_reference_delta(a1, a2, a3);
  const double delta_err = std::abs(analytic.delta_max - reference);
  const bool analytic_ok = analytic.row.pass && delta_err <= kThreeSphereDeltaTol;

  const double r1 = 0.05, r2 = 0.1, r3 = 0.2;
  const double constant = kThreeSphereFactor * three_sphere_calibration(affine, Vec2::Zero(), r1, r2, r3);
  auto u = solve_dirichlet(*assemble(p.mesh, p.pair, direct()), p.g);
  const auto centers = random_centers(kThreeSphereCenters, 0.55, 99);
  int passed = 0;
  double min_delta = 1.0;
  for (const auto& c : centers) {
    const auto res = three_sphere_check(u, c, r1, r2, r3, constant, kThreeSphereWindow);
    if (res.row.pass && !res.row.degenerate) ++passed;
    min_delta = std::min(min_delta, res.delta_max);
  }
  const bool random_ok = passed == kThreeSphereCenters;
  return {analytic_ok && random_ok,
          fmt::format("constant strain delta {:.6f} vs {:.6f} (|diff| {:.2e} <= {:.0e}) {}; phantom {}/{} centres admit "
                      "delta in ({}, {}) with C = {:.4g}, smallest delta_max {:.3f} {}",
                      analytic.delta_max, reference, delta_err, kThreeSphereDeltaTol, verdict(analytic_ok), passed,
                      kThreeSphereCenters, kThreeSphereWindow, 1.0 - kThreeSphereWindow, constant, min_delta,
                      verdict(random_ok))};
}

// --- 7 -----------------------------------------------------------------

Outcome doubling() {
  const std::vector<double> radii = {0.02, 0.04, 0.06, 0.08, 0.1};
  const double d = 0.1;

  auto mesh = disk(0.02);
  const auto affine = DisplacementField::interpolate(mesh, affine_map(sample_matrix()));
  const double disp = doubling_check(affine, DoublingMode::kDisplacement, Vec2::Zero(), 0.1, d).row.ratio;
  const double strain = doubling_check(affine, DoublingMode::kStrain, Vec2::Zero(), 0.1, d).row.ratio;
  const bool constant_ok =
      std::abs(disp / 16.0 - 1.0) <= kDoublingTol && std::abs(strain / 4.0 - 1.0) <= kDoublingTol;

  std::vector<std::vector<double>> ratios;
  std::vector<double> spreads;
  for (double h : {0.04, 0.02}) {
    const auto p = phantom(h);
    auto u = solve_dirichlet(*assemble(p.mesh, p.pair, direct()), p.g);
    const auto sweep = doubling_sweep(u, DoublingMode::kStrain, Vec2::Zero(), radii, d);
    std::vector<double> r;
    for (const auto& row : sweep.rows) r.push_back(row.row.ratio);
    ratios.push_back(r);
    spreads.push_back(sweep.spread);
  }
  double worst_change = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i)
    worst_change = std::max(worst_change, std::abs(ratios[0][i] / ratios[1][i] - 1.0));
  const double spread_change = std::abs(spreads[0] / spreads[1] - 1.0);
  const bool spread_ok = spreads[0] <= kDoublingSpreadMax && spreads[1] <= kDoublingSpreadMax;
  const bool stable_ok = worst_change <= kDoublingMeshStability && spread_change <= kDoublingMeshStability;
  return {constant_ok && spread_ok && stable_ok,
          fmt::format("constant field ratios {:.6f} (16) and {:.6f} (4) {}; phantom spread {:.4f} (h=0.04) {:.4f} "
                      "(h=0.02) (<= {}) {}; largest change between meshes {:.2f}% (<= {:.0f}%) {}",
                      disp, strain, verdict(constant_ok), spreads[0], spreads[1], kDoublingSpreadMax,
                      verdict(spread_ok), 100 * std::max(worst_change, spread_change), 100 * kDoublingMeshStability,
                      verdict(stable_ok))};
}

// --- 8 -----------------------------------------------------------------

Outcome propagation_of_smallness() {
  const double rho = 0.1;
  const auto p = phantom(0.02);
  const auto affine = DisplacementField::interpolate(p.mesh, affine_map(sample_matrix()));
  const double c_const = lps_check(affine, rho).c_rho;
  const double analytic = rho * rho;  // pi rho^2 / |unit disk|
  const bool const_ok = std::abs(c_const / analytic - 1.0) <= kAreaRatioTol;

  auto system = assemble(p.mesh, p.pair, direct());
  const auto phantom_res = lps_check(solve_dirichlet(*system, p.g), rho);
  const bool phantom_ok = phantom_res.c_rho > 0.0;

  std::vector<double> trend;
  for (int k = 1; k <= 4; ++k) {
    const auto g = trace_from_modes(p.mesh, {{k, 1.0, 0.0, 0.0}});
    trend.push_back(lps_check(solve_dirichlet(*system, g), rho).c_rho);
  }
  const int inversions = count_inversions(trend, true);
  const bool trend_ok = inversions <= kMaxInversions;
  std::vector<std::string> t;
  for (double c : trend) t.push_back(fmt::format("{:.4g}", c));
  return {const_ok && phantom_ok && trend_ok,
          fmt::format("constant strain C_rho {:.6f} vs area ratio {:.6f} (within {:.0f}%) {}; phantom C_rho {:.4g} over {} "
                      "centres {}; modes k=1..4 C_rho [{}], {} inversions (<= {}) {}",
                      c_const, analytic, 100 * kAreaRatioTol, verdict(const_ok), phantom_res.c_rho,
                      phantom_res.num_centers, verdict(phantom_ok), fmt::join(t, ", "), inversions, kMaxInversions,
                      verdict(trend_ok))};
}

// --- 9 -----------------------------------------------------------------

Outcome strain_lower_bound() {
  auto mesh = disk(0.02);
  const std::vector<double> radii = {0.0625, 0.125, 0.25, 0.5};
  const double d = 0.5;
  auto system = assemble(mesh, constant_pair(mesh, 2.0, 1.0), direct());
  const auto g_affine = trace_from_closure(mesh, affine_map(sample_matrix()));
  const auto g_mode4 = trace_from_modes(mesh, {{4, 1.0, 0.0, 0.0}});
  const auto affine = strain_lower_bound_check(solve_dirichlet(*system, g_affine), g_affine, Vec2::Zero(), d, radii);
  const auto mode4 = strain_lower_bound_check(solve_dirichlet(*system, g_mode4), g_mode4, Vec2::Zero(), d, radii);
  const auto p = phantom(0.02);
  const auto ph = strain_lower_bound_check(solve_dirichlet(*assemble(p.mesh, p.pair, direct()), p.g), p.g,
                                           Vec2::Zero(), d, radii);
  const bool all_ok = affine.pass && mode4.pass && ph.pass;
  const bool order_ok = mode4.K > affine.K;
  return {all_ok && order_ok,
          fmt::format("K (R^2): affine {:.5f} ({:.5f}), cos 4theta {:.4f} ({:.4f}), phantom {:.4f} ({:.4f}); all R^2 >= "
                      "{} and K >= 2 up to the 1e-3 quadrature tolerance {}; K(cos 4theta) > K(affine) {}",
                      affine.K, affine.r_squared, mode4.K, mode4.r_squared, ph.K, ph.r_squared, kMinRSquared,
                      verdict(all_ok), verdict(order_ok))};
}

// --- 10 ----------------------------------------------------------------

Outcome holder_stability() {
  const auto family = reference_family();
  const auto integral = integral_estimate_check(family);
  const auto lower = strain_lower_bound_check(family.u, family.g, Vec2::Zero(), 0.5, {0.0625, 0.125, 0.25, 0.5});
  const auto res = holder_stability_experiment(family, 0.1, integral.fitted_constant, lower);

  double eta = 0.0;
  bool flags_ok = true;
  std::vector<std::string> branches;
  for (const auto& r : res.reports) {
    eta = std::max(eta, r.eta);
    flags_ok = flags_ok && (r.small_branch == (r.lambda_bar <= 1.0));
    branches.push_back(fmt::format("t={:.0e}: lambda_bar={:.3f} {}", r.scale, r.lambda_bar,
                                   r.small_branch ? "small" : "large"));
  }
  const double decades = std::log10(kScales.front() / kScales.back());
  const bool fit_ok = res.fitted_delta > 0.0 && res.fitted_delta <= 1.0 && res.r_squared >= kMinRSquared;
  const bool span_ok = decades >= 3.0 && res.fitted_rows >= 4;
  const bool eta_ok = eta == 0.0;
  return {fit_ok && span_ok && eta_ok && flags_ok,
          fmt::format("fitted delta {:.4f} (observed slope {:.4f}, R^2 {:.6f}, guaranteed {:.4f}) {}; {:.0f} decades over "
                      "{} rows {}; max eta {:.1e} {}; branch flags [{}] {}",
                      res.fitted_delta, res.observed_exponent, res.r_squared, res.guaranteed_delta, verdict(fit_ok),
                      decades, res.fitted_rows, verdict(span_ok), eta, verdict(eta_ok), fmt::join(branches, "; "),
                      verdict(flags_ok))};
}

// --- 11 ----------------------------------------------------------------

Outcome reconstruction() {
  ReconstructionOptions unregularized;
  unregularized.reg_weight = 0.0;
  std::vector<double> errors;
  std::optional<Phantom> last;
  for (double h : {0.04, 0.02}) {
    last = phantom(h, 2, 0.25);
    auto u = solve_dirichlet(*assemble(last->mesh, last->pair, direct()), last->g);
    const auto r = reconstruct_mu({u, 0.0}, last->pair.lambda, boundary_values(last->pair.mu), unregularized);
    errors.push_back(interior_error(r.mu_rec, last->pair.mu, 0.1));
  }
  const Phantom& fine = *last;
  const double factor = errors[0] / errors[1];
  const bool refine_ok = factor >= kReconstructionFactor;

  bool ill_posed_ok = false;
  const auto rigid = DisplacementField::interpolate(fine.mesh, [](const Vec2& x) { return Vec2(0.2 - x.y(), x.x()); });
  try {
    reconstruct_mu({rigid, 0.0}, fine.pair.lambda, boundary_values(fine.pair.mu));
  } catch (const IllPosedError&) {
    ill_posed_ok = true;
  }

  const auto sweep = noise_sweep(fine.pair, fine.g, 0.1, {0.0, 1e-6, 1e-5, 1e-4, 1e-3}, 7, {}, 3, direct());
  const bool sweep_ok = sweep.p > 0.0 && sweep.p <= 1.0;
  return {refine_ok && ill_posed_ok && sweep_ok,
          fmt::format("noiseless error on Omega_0.1 {:.3e} -> {:.3e}, factor {:.2f} (>= {}) {}; zero strain {}; noise "
                      "sweep p {:.3f} (R^2 {:.3f}, {} inversions) {}",
                      errors[0], errors[1], factor, kReconstructionFactor, verdict(refine_ok),
                      ill_posed_ok ? "raises ill-posed error" : "FAILS to raise", sweep.p, sweep.fit.r_squared,
                      sweep.inversions, verdict(sweep_ok))};
}

// --- 12 ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto config = load_config(LAMESTAB_SUITE_CONFIG);
  const auto base = fs::temp_directory_path() / fmt::format("lamestab_determinism_{}", ::getpid());
  fs::remove_all(base);
  std::vector<RunResult> runs;
  for (const char* sub : {"first", "second"}) {
    RunOptions o;
    o.output_dir = (base / sub).string();
    runs.push_back(run(config, o));
  }
  int csvs = 0, identical = 0;
  for (const auto& e : runs[0].experiments) {
    ++csvs;
    if (slurp(base / "first" / (e.id + ".csv")) == slurp(base / "second" / (e.id + ".csv"))) ++identical;
  }
  ++csvs;
  if (slurp(base / "first" / "boundary_norms.csv") == slurp(base / "second" / "boundary_norms.csv")) ++identical;
  fs::remove_all(base);
  return {csvs == identical && runs[0].experiments.size() == config.checks.size(),
          fmt::format("{}/{} CSVs byte-identical across two runs of the bundled suite (seed {})", identical, csvs,
                      config.seed)};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "forward exactness", 10, forward_exactness},
      {2, "manufactured convergence", 60, manufactured_convergence},
      {3, "discrete weak-comparison identity", 30, weak_identity},
      {4, "integral estimate certificate", 300, integral_estimate},
      {5, "interpolation bound", 300, interpolation},
      {6, "three-sphere inequality", 120, three_sphere},
      {7, "doubling inequality", 120, doubling},
      {8, "propagation of smallness", 180, propagation_of_smallness},
      {9, "strain lower bound", 120, strain_lower_bound},
      {10, "Hoelder stability", 300, holder_stability},
      {11, "reconstruction oracle", 300, reconstruction},
      {12, "determinism", 600, determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& c : criteria()) selected.push_back(c.id);

  set_warning_handler(nullptr);
  int failures = 0;
  for (int id : selected) {
    const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.id == id; });
    if (it == criteria().end()) {
      fmt::print(stderr, "unknown criterion {}\n", id);
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = it->run();
    } catch (const std::exception& e) {
      out = {false, fmt::format("error: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= it->budget_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    fmt::print("[{}] criterion {:>2} {}: {}; runtime {:.1f} s (<= {:.0f} s){}\n", pass ? "PASS" : "FAIL", it->id,
               it->title, out.detail, seconds, it->budget_seconds, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
