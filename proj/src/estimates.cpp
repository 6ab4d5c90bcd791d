#include "lamestab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "lamestab/errors.hpp"

namespace lamestab {
namespace {

constexpr int kBallOrder = 4;

BoundaryTrace trace_of(const DisplacementField& u) {
  if (u.boundary_trace()) return *u.boundary_trace();
  std::vector<Vec2> values;
  for (int n : u.mesh().boundary_nodes()) values.push_back(u.node_value(n));
  return BoundaryTrace(u.mesh_ptr(), std::move(values));
}

// Rigid fields have strain energy at round-off level relative to |u|^2.
void require_strain(const DisplacementField& u, const char* what) {
  const double e = strain_energy(u);
  const double l2 = l2_norm(u);
  if (!(e > 1e-20 * l2 * l2) || e == 0.0)
    throw PreconditionError(fmt::format("{}: strain vanishes identically (rigid data)", what));
}

double ball_strain(const DisplacementField& u, const Vec2& c, double r) {
  return strain_energy_on_ball(u, ball_quadrature(u.mesh(), c, r, kBallOrder));
}

std::string point_note(const Vec2& c) { return fmt::format("center=({:.6g},{:.6g})", c.x(), c.y()); }

// Indices of strictly positive scales in descending order of scale.
std::vector<std::size_t> positive_scales(const PerturbationFamily& family) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < family.scales.size(); ++i)
    if (family.scales[i] > 0.0) idx.push_back(i);
  return idx;
}

void require_family_span(const PerturbationFamily& family, const char* what) {
  const auto idx = positive_scales(family);
  if (idx.size() < 4 || family.scales[idx.front()] < 100.0 * family.scales[idx.back()])
    throw PreconditionError(
        fmt::format("{}: need at least 4 positive scales spanning 2 decades", what));
}

// Fits C = max ratio over `calibration` rows and judges `held_out` with
// lhs <= margin * C * rhs.
double calibrate(std::vector<EstimateCheck*> calibration, EstimateCheck* held_out, double margin) {
  double c = 0.0;
  for (auto* row : calibration) c = std::max(c, row->ratio);
  for (auto* row : calibration) {
    row->fitted_constant = c;
    row->calibration = true;
    row->pass = true;
  }
  if (held_out) {
    held_out->fitted_constant = c;
    held_out->pass = held_out->lhs <= margin * c * held_out->rhs;
  }
  return c;
}

}  // namespace

LamePair PerturbationFamily::perturbed(std::size_t i) const {
  LamePair p = base;
  p.mu = base.mu + shape.scaled(scales[i]);
  return p;
}

PerturbationFamily solve_perturbation_family(const LamePair& base, const ScalarField& shape,
                                             std::vector<double> scales, const BoundaryTrace& g,
                                             const ElasticityOptions& options) {
  if (scales.empty()) throw PreconditionError("perturbation family without scales");
  if (shape.mesh_ptr() != base.mu.mesh_ptr() || g.mesh_ptr() != base.mu.mesh_ptr())
    throw PreconditionError("perturbation shape, data and coefficients must share one mesh");
  for (double t : scales)
    if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("perturbation scales must be >= 0");
  std::sort(scales.begin(), scales.end(), std::greater<>());

  PerturbationFamily family{base, shape, g, scales, DisplacementField::zero(base.mu.mesh_ptr()), {},
                            options.shear_factor};
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const auto report = validate_lame(family.perturbed(i), options.shear_factor);
    for (const auto& check : report.checks)
      if (!check.pass)
        throw PreconditionError(fmt::format("scale {:.6g} leaves the coefficient budget: {} ({:.6g} vs {:.6g})",
                                            scales[i], check.name, check.worst_value, check.bound));
  }

  auto system = assemble(base.mu.mesh_ptr(), base, options);
  family.u = solve_dirichlet(*system, g);
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] == 0.0) {
      family.v.push_back(family.u);
      continue;
    }
    auto perturbed_system = assemble(base.mu.mesh_ptr(), family.perturbed(i), options);
    family.v.push_back(solve_dirichlet(*perturbed_system, g, nullptr, &family.u));
  }
  return family;
}

IntegralEstimateResult integral_estimate_check(const PerturbationFamily& family,
                                               const std::string& experiment_id, double margin) {
  require_family_span(family, "integral estimate");
  IntegralEstimateResult out;
  for (std::size_t i = 0; i < family.scales.size(); ++i) {
    const ScalarField phi = family.phi(i);
    EstimateCheck row;
    row.experiment_id = experiment_id;
    row.name = "integral_estimate";
    row.param = family.scales[i];
    row.lhs = weighted_strain_energy(family.u, phi);
    const double eta = boundary_sup(phi).value;
    const double mismatch = l2_norm(family.u - family.v[i]);
    row.rhs = eta + std::pow(mismatch, 0.25);
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
    row.pass = true;
    row.note = fmt::format("eta={:.6g} h={:.6g}", eta, std::pow(mismatch, 0.25));
    out.rows.push_back(row);
  }

  const auto idx = positive_scales(family);
  std::vector<EstimateCheck*> calibration;
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) calibration.push_back(&out.rows[idx[j]]);
  EstimateCheck* held_out = &out.rows[idx.back()];
  out.fitted_constant = calibrate(calibration, held_out, margin);
  out.held_out_pass = held_out->pass;
  for (auto& row : out.rows) row.fitted_constant = out.fitted_constant;

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i : idx) {
    if (!(out.rows[i].ratio > 0.0)) continue;
    lo = std::min(lo, out.rows[i].ratio);
    hi = std::max(hi, out.rows[i].ratio);
  }
  out.spread = hi > 0.0 ? hi / lo : 0.0;
  return out;
}

EstimateCheck interpolation_row(const DisplacementField& u, const DisplacementField& v) {
  if (u.mesh_ptr() != v.mesh_ptr()) throw PreconditionError("interpolation check on different meshes");
  const DisplacementField w = u - v;
  EstimateCheck row;
  row.name = "interpolation";
  row.lhs = gradient_l2_norm(w);
  const double mismatch = l2_norm(w);
  const double g32 = boundary_sobolev_norm(trace_of(u), 1.5);
  const double k32 = boundary_sobolev_norm(trace_of(v), 1.5);
  row.rhs = (g32 + k32 + 1.0) * std::sqrt(mismatch);
  row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
  row.pass = true;
  row.note = fmt::format("l2_mismatch={:.6g}", mismatch);
  return row;
}

InterpolationResult interpolation_check(const PerturbationFamily& family,
                                        const std::string& experiment_id, double margin) {
  require_family_span(family, "interpolation check");
  InterpolationResult out;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < family.scales.size(); ++i) {
    EstimateCheck row = interpolation_row(family.u, family.v[i]);
    row.experiment_id = experiment_id;
    row.param = family.scales[i];
    if (family.scales[i] > 0.0) {
      lx.push_back(std::log(l2_norm(family.u - family.v[i])));
      ly.push_back(std::log(row.lhs));
    }
    out.rows.push_back(row);
  }
  out.slope_fit = fit_line(lx, ly);

  const auto idx = positive_scales(family);
  std::vector<EstimateCheck*> calibration;
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) calibration.push_back(&out.rows[idx[j]]);
  out.fitted_constant = calibrate(calibration, &out.rows[idx.back()], margin);
  out.held_out_pass = out.rows[idx.back()].pass;
  for (auto& row : out.rows) {
    row.fitted_constant = out.fitted_constant;
    row.exponent = out.slope_fit.slope;
  }
  return out;
}

double three_sphere_reference_delta(double r1, double r2, double r3) {
  return std::log(r3 / r2) / std::log(r3 / r1);
}

namespace {

void require_three_balls(const DisplacementField& u, const Vec2& center, double r1, double r2,
                         double r3) {
  if (!(r1 > 0.0 && r1 < r2 && r2 < r3)) throw PreconditionError("three-sphere radii must satisfy 0 < r1 < r2 < r3");
  const double dist = u.mesh().domain().signed_distance(center);
  if (!(r3 <= 0.5 * dist))
    throw PreconditionError(fmt::format("three-sphere outer radius {:.6g} exceeds half the boundary distance {:.6g}",
                                        r3, dist));
}

}  // namespace

ThreeSphereResult three_sphere_check(const DisplacementField& u, const Vec2& center, double r1,
                                     double r2, double r3, double constant, double delta_window) {
  require_three_balls(u, center, r1, r2, r3);
  ThreeSphereResult out;
  out.i1 = ball_strain(u, center, r1);
  out.i2 = ball_strain(u, center, r2);
  const auto outer = ball_quadrature(u.mesh(), center, r3, kBallOrder);
  out.i3 = strain_energy_on_ball(u, outer);

  EstimateCheck& row = out.row;
  row.name = "three_sphere";
  row.param = r2;
  row.fitted_constant = constant;
  row.lhs = out.i2;
  row.note = fmt::format("{} r=({:.6g},{:.6g},{:.6g})", point_note(center), r1, r2, r3);

  const double scale = std::max(out.i3, displacement_energy_on_ball(u, outer) / (r3 * r3));
  if (!(out.i1 > 1e-20 * scale)) {
    row.degenerate = true;
    row.note += " degenerate: no strain on the inner ball";
    return out;
  }
  const double spread = std::log(out.i3 / out.i1);
  const double room = std::log(constant * out.i3 / out.i2);
  if (spread > 0.0)
    out.delta_max = room / spread;
  else
    out.delta_max = room >= 0.0 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
  row.exponent = out.delta_max;
  row.pass = out.delta_max > delta_window;
  const double delta = std::clamp(out.delta_max, delta_window, 1.0 - delta_window);
  row.rhs = std::pow(out.i1, delta) * std::pow(out.i3, 1.0 - delta);
  row.ratio = row.lhs / row.rhs;
  return out;
}

double three_sphere_calibration(const DisplacementField& u, const Vec2& center, double r1,
                                double r2, double r3) {
  require_three_balls(u, center, r1, r2, r3);
  const double delta = three_sphere_reference_delta(r1, r2, r3);
  const double i1 = ball_strain(u, center, r1);
  const double i2 = ball_strain(u, center, r2);
  const double i3 = ball_strain(u, center, r3);
  if (!(i1 > 0.0)) throw PreconditionError("three-sphere calibration field has no strain");
  return i2 / (std::pow(i1, delta) * std::pow(i3, 1.0 - delta));
}

std::vector<Vec2> interior_grid(const Domain& domain, double margin, double spacing) {
  if (!(spacing > 0.0)) throw PreconditionError("grid spacing must be positive");
  const int n = static_cast<int>(std::floor(domain.outer_radius() / spacing));
  std::vector<Vec2> points;
  for (int j = -n; j <= n; ++j)
    for (int i = -n; i <= n; ++i) {
      const Vec2 p(i * spacing, j * spacing);
      if (domain.signed_distance(p) >= margin) points.push_back(p);
    }
  return points;
}

std::vector<Vec2> random_centers(int n, double max_radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-max_radius, max_radius);
  std::vector<Vec2> out;
  while (static_cast<int>(out.size()) < n) {
    const Vec2 p(coord(rng), coord(rng));
    if (p.norm() <= max_radius) out.push_back(p);
  }
  return out;
}

LpsResult lps_check(const DisplacementField& u, double rho, double spacing) {
  if (!(rho > 0.0)) throw PreconditionError("lps radius must be positive");
  require_strain(u, "propagation of smallness");
  if (spacing <= 0.0) spacing = 0.5 * rho;
  const auto centers = interior_grid(u.mesh().domain(), 5.0 * rho, spacing);
  if (centers.empty()) throw EmptySubdomainError(5.0 * rho, "propagation of smallness: no centre in the interior region");

  const double total = strain_energy(u);
  LpsResult out;
  out.num_centers = static_cast<int>(centers.size());
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& c : centers) {
    const double e = ball_strain(u, c, rho);
    if (e < best) {
      best = e;
      out.argmin = c;
    }
  }
  out.c_rho = best / total;
  EstimateCheck& row = out.row;
  row.name = "lps";
  row.param = rho;
  row.lhs = best;
  row.rhs = total;
  row.ratio = out.c_rho;
  row.fitted_constant = out.c_rho;
  row.pass = out.c_rho > 0.0;
  row.note = fmt::format("argmin {} centers={}", point_note(out.argmin), out.num_centers);
  return out;
}

DoublingResult doubling_check(const DisplacementField& u, DoublingMode mode, const Vec2& center,
                              double r, double d) {
  if (!(r > 0.0)) throw PreconditionError("doubling radius must be positive");
  const double dist = u.mesh().domain().signed_distance(center);
  if (!(dist >= 2.0 * r + d))
    throw PreconditionError(fmt::format("doubling ball of radius {:.6g} at distance {:.6g} leaves the interior region d = {:.6g}",
                                        2.0 * r, dist, d));
  const auto inner = ball_quadrature(u.mesh(), center, r, kBallOrder);
  const auto outer = ball_quadrature(u.mesh(), center, 2.0 * r, kBallOrder);

  DoublingResult out;
  EstimateCheck& row = out.row;
  row.param = r;
  row.note = point_note(center);
  if (mode == DoublingMode::kDisplacement) {
    row.name = "doubling_displacement";
    row.lhs = displacement_energy_on_ball(u, outer);
    row.rhs = displacement_energy_on_ball(u, inner);
  } else {
    row.name = "doubling_strain";
    row.lhs = strain_energy_on_ball(u, outer);
    row.rhs = strain_energy_on_ball(u, inner);

    const double area = outer.area();
    Vec2 mean = outer.integrate([&](int e, const Vec2& xi, const Vec2&) { return u.value(e, xi).x(); }) *
                    Vec2::UnitX() +
                outer.integrate([&](int e, const Vec2& xi, const Vec2&) { return u.value(e, xi).y(); }) *
                    Vec2::UnitY();
    mean /= area;
    const double w = outer.integrate([&](int e, const Vec2& xi, const Vec2&) {
                       const Mat2 g = u.gradient(e, xi);
                       return 0.5 * (g(1, 0) - g(0, 1));
                     }) /
                     area;
    // c + W (x - x0) rewritten around the origin.
    out.local_rigid.w = w;
    out.local_rigid.a = mean - w * Vec2(-center.y(), center.x());
    const double remainder = displacement_energy_on_ball(u, outer, out.local_rigid);
    if (remainder > 0.0) out.caccioppoli = r * r * row.rhs / remainder;
    row.note += fmt::format(" caccioppoli={:.6g}", out.caccioppoli);
  }
  if (!(row.rhs > 1e-20 * row.lhs) || row.lhs == 0.0) {
    row.degenerate = true;
    row.note += " degenerate: zero inner integral";
    return out;
  }
  row.ratio = row.lhs / row.rhs;
  row.pass = true;
  return out;
}

DoublingSweepResult doubling_sweep(const DisplacementField& u, DoublingMode mode,
                                   const Vec2& center, const std::vector<double>& radii, double d,
                                   const std::string& experiment_id, double margin) {
  if (radii.size() < 2) throw PreconditionError("doubling sweep needs at least two radii");
  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());
  DoublingSweepResult out;
  for (double r : sorted) {
    out.rows.push_back(doubling_check(u, mode, center, r, d));
    out.rows.back().row.experiment_id = experiment_id;
  }
  std::vector<EstimateCheck*> calibration;
  EstimateCheck* held_out = nullptr;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (auto& res : out.rows) {
    if (res.row.degenerate) continue;
    if (!held_out)
      held_out = &res.row;
    else
      calibration.push_back(&res.row);
    lo = std::min(lo, res.row.ratio);
    hi = std::max(hi, res.row.ratio);
  }
  if (!held_out || calibration.empty()) {
    out.pass = false;
    return out;
  }
  out.fitted_constant = calibrate(calibration, held_out, margin);
  out.spread = hi / lo;
  out.pass = held_out->pass;
  return out;
}

StrainLowerBoundResult strain_lower_bound_check(const DisplacementField& u, const BoundaryTrace& g,
                                                const Vec2& x0, double d,
                                                const std::vector<double>& radii,
                                                const std::string& experiment_id,
                                                double k_tolerance) {
  if (radii.size() < 3) throw PreconditionError("strain lower bound needs at least 3 radii");
  if (!(d > 0.0)) throw PreconditionError("strain lower bound needs d > 0");
  for (double r : radii)
    if (!(r > 0.0 && r <= d)) throw PreconditionError(fmt::format("radius {:.6g} outside (0, d]", r));
  if (!(u.mesh().domain().signed_distance(x0) >= d))
    throw PreconditionError(fmt::format("x0 {} lies outside Omega_d", point_note(x0)));
  require_strain(u, "strain lower bound");

  StrainLowerBoundResult out;
  out.g_norm_sq = std::pow(boundary_sobolev_norm(g, 0.5), 2);
  if (!(out.g_norm_sq > 0.0)) throw PreconditionError("strain lower bound: boundary datum vanishes");
  std::vector<double> x, y;
  for (double r : radii) {
    x.push_back(r / d);
    y.push_back(ball_strain(u, x0, r));
  }
  const PowerLawFit fit = fit_power_law(x, y);
  out.K = fit.exponent;
  out.c_d = fit.prefactor / out.g_norm_sq;
  out.r_squared = fit.r_squared;
  out.pass = out.r_squared >= 0.9 && out.K >= 2.0 - k_tolerance;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    EstimateCheck row;
    row.experiment_id = experiment_id;
    row.name = "strain_lower_bound";
    row.param = radii[i];
    row.lhs = y[i];
    row.rhs = std::pow(x[i], out.K) * out.g_norm_sq;
    row.ratio = row.lhs / row.rhs;
    row.fitted_constant = out.c_d;
    row.exponent = out.K;
    row.pass = out.pass;
    row.note = fmt::format("{} r2={:.6g}", point_note(x0), out.r_squared);
    out.rows.push_back(row);
  }
  return out;
}

HolderResult holder_stability_experiment(const PerturbationFamily& family, double d,
                                         double epsilon_constant,
                                         const StrainLowerBoundResult& lower,
                                         const std::string& experiment_id) {
  if (!(epsilon_constant > 0.0)) throw PreconditionError("epsilon constant must be positive");
  if (!(lower.c_d > 0.0 && lower.g_norm_sq > 0.0))
    throw PreconditionError("Holder experiment needs a fitted strain lower bound");
  const double M = family.base.M;
  if (!(M > 0.0)) throw PreconditionError("Holder experiment needs the Lipschitz budget M > 0");
  const auto mask = interior_mask(family.u.mesh(), d);

  HolderResult out;
  out.n1 = 1.0 / (lower.c_d * lower.g_norm_sq);
  out.n2 = lower.K;
  out.guaranteed_delta = 1.0 / (out.n2 + 1.0);
  const double p = 1.0 / (out.n2 + 1.0);

  for (std::size_t i = 0; i < family.scales.size(); ++i) {
    const ScalarField phi = family.phi(i);
    StabilityReport rep;
    rep.scale = family.scales[i];
    rep.d = d;
    rep.eta = boundary_sup(phi).value;
    rep.l2_mismatch = l2_norm(family.u - family.v[i]);
    rep.epsilon_sq = epsilon_constant * (rep.eta + std::pow(rep.l2_mismatch, 0.25));
    const auto gap = linf_on_mask(phi, mask);
    rep.linf_gap = gap.value;
    rep.gap_point = gap.point;
    rep.lambda_bar = std::pow(out.n1 * rep.epsilon_sq / (2.0 * M * d), p);
    rep.small_branch = rep.lambda_bar <= 1.0;
    rep.bound = rep.small_branch
                    ? 2.0 * std::pow(out.n1 * rep.epsilon_sq, p) * std::pow(2.0 * M * d, out.n2 * p)
                    : 2.0 * M * rep.lambda_bar;
    out.reports.push_back(rep);
  }

  std::vector<double> xs[2], ys[2];
  for (const auto& rep : out.reports) {
    if (!(rep.scale > 0.0 && rep.linf_gap > 0.0 && rep.epsilon_sq > 0.0)) continue;
    const int b = rep.small_branch ? 0 : 1;
    xs[b].push_back(rep.epsilon_sq);
    ys[b].push_back(rep.linf_gap);
  }
  int use = xs[0].size() >= 3 ? 0 : xs[1].size() >= 3 ? 1 : -1;
  std::vector<double> fx, fy;
  if (use >= 0) {
    fx = xs[use];
    fy = ys[use];
  } else {
    for (int b = 0; b < 2; ++b) {
      fx.insert(fx.end(), xs[b].begin(), xs[b].end());
      fy.insert(fy.end(), ys[b].begin(), ys[b].end());
    }
  }
  out.fitted_small_branch = use != 1;
  out.fitted_rows = static_cast<int>(fx.size());
  if (fx.size() >= 2) {
    const PowerLawFit fit = fit_power_law(fx, fy);
    out.observed_exponent = fit.exponent;
    out.r_squared = fit.r_squared;
    out.fitted_delta = fit.exponent > 0.0 ? std::min(1.0, fit.exponent) : 0.0;
  }

  for (const auto& rep : out.reports) {
    EstimateCheck row;
    row.experiment_id = experiment_id;
    row.name = "holder_stability";
    row.param = rep.scale;
    row.lhs = rep.linf_gap;
    row.rhs = rep.bound;
    row.ratio = rep.bound > 0.0 ? rep.linf_gap / rep.bound : 0.0;
    row.fitted_constant = epsilon_constant;
    row.exponent = out.fitted_delta;
    row.pass = rep.linf_gap <= rep.bound;
    row.note = fmt::format("eps2={:.6g} lambda_bar={:.6g} branch={}", rep.epsilon_sq, rep.lambda_bar,
                           rep.small_branch ? "small" : "large");
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace lamestab
