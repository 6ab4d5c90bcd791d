#include "lamestab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "lamestab/errors.hpp"
#include "lamestab/reconstruct.hpp"

namespace fs = std::filesystem;

namespace lamestab {
namespace {

constexpr int kSchemaVersion = 1;

// Constant-strain field for the three-sphere calibration; any constant
// strain gives the same calibration constant.
Mat2 calibration_matrix() {
  Mat2 A;
  A << 1.0, 0.5, 0.0, -1.0;
  return A;
}

std::string domain_label(const DomainSpec& d) {
  switch (d.kind) {
    case DomainKind::kUnitDisk: return fmt::format("unit disk (scale {})", d.scale);
    case DomainKind::kEllipse: return fmt::format("ellipse a={} b={} (scale {})", d.a, d.b, d.scale);
    case DomainKind::kSmoothedSquare:
      return fmt::format("smoothed square corner_radius={} (scale {})", d.corner_radius, d.scale);
  }
  return "unknown";
}

std::string real(double v) { return fmt::format("{:.17g}", v); }

// Everything the experiments share; built once, read concurrently.
struct Problem {
  std::shared_ptr<const TriMesh> mesh;
  LamePair pair;
  BoundaryTrace g;
  std::optional<DisplacementField> u;
  std::optional<PerturbationFamily> family;
};

LamePair realize_pair(const ExperimentConfig& c, const std::shared_ptr<const TriMesh>& mesh) {
  LamePair pair{make_phantom(mesh, c.lame.lambda, c.lame.degree), make_phantom(mesh, c.lame.mu, c.lame.degree),
                c.lame.alpha0, c.lame.beta0, c.lame.M};
  const auto report = validate_lame(pair, c.shear_factor);
  if (!report.pass()) {
    std::vector<std::string> failed;
    for (const auto& check : report.checks)
      if (!check.pass) failed.push_back(fmt::format("{} (value {:.6g}, bound {:.6g})", check.name, check.worst_value, check.bound));
    throw PreconditionError(fmt::format("Lame pair violates its a-priori bounds: {}", fmt::join(failed, "; ")));
  }
  return pair;
}

ExperimentReport report_for(CheckKind kind) {
  ExperimentReport r;
  r.id = std::string(check_name(kind));
  return r;
}

void finish(ExperimentReport& r, bool verdict) {
  r.pass = verdict;
  for (auto& row : r.rows) {
    row.experiment_id = r.id;
    if (!row.degenerate && !row.pass) r.pass = false;
  }
}

// Summary row for verdicts that come from a fit rather than a single row.
EstimateCheck fit_row(const std::string& name, double param, double exponent, double constant, bool pass,
                      std::string note) {
  EstimateCheck row;
  row.name = name;
  row.param = param;
  row.lhs = kNaN;
  row.rhs = kNaN;
  row.exponent = exponent;
  row.fitted_constant = constant;
  row.pass = pass;
  row.note = std::move(note);
  return row;
}

ExperimentReport run_integral_estimate(const ExperimentConfig&, const Problem& p) {
  auto r = report_for(CheckKind::kIntegralEstimate);
  const auto res = integral_estimate_check(*p.family, r.id);
  r.rows = res.rows;
  r.metrics = {{"fitted_constant", res.fitted_constant},
               {"spread", res.spread},
               {"held_out_pass", res.held_out_pass ? 1.0 : 0.0}};
  finish(r, res.pass());
  return r;
}

ExperimentReport run_interpolation(const ExperimentConfig&, const Problem& p) {
  auto r = report_for(CheckKind::kInterpolation);
  const auto res = interpolation_check(*p.family, r.id);
  r.rows = res.rows;
  const double slope = res.slope_fit.slope;
  const bool slope_ok = slope >= 0.45 && slope <= 1.0;
  r.rows.push_back(fit_row("interpolation_slope", kNaN, slope, res.fitted_constant, slope_ok,
                           fmt::format("r_squared={:.6g} accepted=[0.45,1]", res.slope_fit.r_squared)));
  r.metrics = {{"slope", slope},
               {"slope_r_squared", res.slope_fit.r_squared},
               {"fitted_constant", res.fitted_constant}};
  finish(r, res.held_out_pass && slope_ok);
  return r;
}

ExperimentReport run_three_sphere(const ExperimentConfig& c, const Problem& p) {
  auto r = report_for(CheckKind::kThreeSphere);
  const auto& tp = c.three_sphere;
  const double r1 = tp.radii[0], r2 = tp.radii[1], r3 = tp.radii[2];
  const auto affine = DisplacementField::interpolate(p.mesh, affine_map(calibration_matrix()));
  const double c_cal = three_sphere_calibration(affine, Vec2::Zero(), r1, r2, r3);
  const double constant = tp.constant_factor * c_cal;
  const auto centers = random_centers(tp.num_centers, tp.max_center_radius,
                                      derive_seed(c.seed, SeedStream::kThreeSphereCenters));
  double min_delta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    auto res = three_sphere_check(*p.u, centers[i], r1, r2, r3, constant, tp.delta_window);
    res.row.param = static_cast<double>(i);
    r.rows.push_back(res.row);
    if (!res.row.degenerate) min_delta = std::min(min_delta, res.delta_max);
  }
  r.metrics = {{"calibration_constant", c_cal},
               {"constant", constant},
               {"reference_delta", three_sphere_reference_delta(r1, r2, r3)},
               {"min_delta_max", min_delta}};
  r.notes.push_back("param is the centre index; centres from the three-sphere seed stream");
  finish(r, true);
  return r;
}

ExperimentReport run_doubling(const ExperimentConfig& c, const Problem& p) {
  auto r = report_for(CheckKind::kDoubling);
  const auto& dp = c.doubling;
  const auto res = doubling_sweep(*p.u, dp.mode, dp.center, dp.radii, dp.d, r.id);
  for (const auto& row : res.rows) r.rows.push_back(row.row);
  r.metrics = {{"fitted_constant", res.fitted_constant}, {"spread", res.spread}};
  finish(r, res.pass);
  return r;
}

ExperimentReport run_propagation(const ExperimentConfig& c, const Problem& p) {
  auto r = report_for(CheckKind::kPropagationOfSmallness);
  for (double rho : c.propagation.rho) {
    const auto res = lps_check(*p.u, rho, c.propagation.spacing);
    r.rows.push_back(res.row);
    r.metrics.emplace_back(fmt::format("c_rho[{}]", rho), res.c_rho);
  }
  finish(r, true);
  return r;
}

StrainLowerBoundResult lower_bound(const ExperimentConfig& c, const Problem& p, const std::string& id) {
  const auto& lp = c.strain_lower_bound;
  return strain_lower_bound_check(*p.u, p.g, lp.x0, lp.d, lp.radii, id);
}

ExperimentReport run_strain_lower_bound(const ExperimentConfig& c, const Problem& p) {
  auto r = report_for(CheckKind::kStrainLowerBound);
  const auto res = lower_bound(c, p, r.id);
  r.rows = res.rows;
  r.metrics = {{"K", res.K}, {"c_d", res.c_d}, {"r_squared", res.r_squared}, {"g_norm_sq", res.g_norm_sq}};
  finish(r, res.pass);
  return r;
}

ExperimentReport run_holder(const ExperimentConfig& c, const Problem& p, std::vector<StabilityReport>& reports) {
  auto r = report_for(CheckKind::kHolderStability);
  const auto integral = integral_estimate_check(*p.family, r.id);
  const auto lower = lower_bound(c, p, r.id);
  const auto res = holder_stability_experiment(*p.family, c.d, integral.fitted_constant, lower, r.id);
  r.rows = res.rows;
  r.rows.push_back(fit_row("holder_fit", kNaN, res.fitted_delta, kNaN, res.pass(),
                           fmt::format("observed_exponent={:.6g} r_squared={:.6g} rows={} branch={} guaranteed_delta={:.6g}",
                                       res.observed_exponent, res.r_squared, res.fitted_rows,
                                       res.fitted_small_branch ? "small" : "large", res.guaranteed_delta)));
  r.metrics = {{"fitted_delta", res.fitted_delta},
               {"observed_exponent", res.observed_exponent},
               {"r_squared", res.r_squared},
               {"guaranteed_delta", res.guaranteed_delta},
               {"N1", res.n1},
               {"N2", res.n2},
               {"epsilon_constant", integral.fitted_constant}};
  reports = res.reports;
  finish(r, res.pass());
  return r;
}

ExperimentReport run_reconstruction(const ExperimentConfig& c, const Problem& p) {
  auto r = report_for(CheckKind::kReconstruction);
  const auto& rp = c.reconstruction;
  ReconstructionOptions opts;
  opts.reg_weight = rp.reg_weight;
  opts.shear_factor = c.shear_factor;
  const double d = rp.d.value_or(c.d);
  const auto sweep = noise_sweep(p.pair, p.g, d, rp.noise_levels, derive_seed(c.seed, SeedStream::kNoise), opts,
                                 rp.repeats, c.elasticity_options());
  for (const auto& level : sweep.rows) {
    EstimateCheck row;
    row.name = "noise_sweep";
    row.param = level.sigma;
    row.lhs = level.median_error;
    if (level.sigma > 0.0) {
      row.rhs = std::pow(level.sigma, sweep.p);
      row.ratio = row.lhs / row.rhs;
    } else {
      row.rhs = kNaN;
    }
    row.fitted_constant = sweep.fit.prefactor;
    row.exponent = sweep.p;
    row.pass = true;
    row.note = fmt::format("samples={}", level.errors.size());
    r.rows.push_back(row);
  }
  const bool ok = sweep.p > 0.0 && sweep.p <= 1.0 && sweep.inversions <= 1;
  r.rows.push_back(fit_row("noise_sweep_fit", kNaN, sweep.p, sweep.fit.prefactor, ok,
                           fmt::format("r_squared={:.6g} inversions={}", sweep.fit.r_squared, sweep.inversions)));
  r.metrics = {{"p", sweep.p},
               {"p_r_squared", sweep.fit.r_squared},
               {"inversions", static_cast<double>(sweep.inversions)},
               {"noiseless_error", sweep.noiseless_error},
               {"d", d}};
  finish(r, ok);
  return r;
}

std::string summary_json(const ExperimentConfig& c, const RunResult& res, const TriMesh& mesh) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = res.seed;
  j["domain"] = domain_label(c.domain);
  j["mesh"] = {{"h", c.mesh_h},
               {"h_max", mesh.h_max()},
               {"vertices", mesh.num_vertices()},
               {"triangles", mesh.num_triangles()},
               {"nodes", mesh.num_nodes()},
               {"displacement_dofs", 2 * mesh.num_nodes()}};
  const auto& b = res.boundary_norms;
  j["boundary_norms"] = {{"h_half", b.h_half},         {"h_one", b.h_one},
                         {"h_three_half", b.h_three_half}, {"theta", b.rigid.theta},
                         {"frequency", b.frequency}};
  ordered_json experiments = ordered_json::array();
  for (const auto& e : res.experiments) {
    int failed = 0, degenerate = 0;
    for (const auto& row : e.rows) {
      if (row.degenerate)
        ++degenerate;
      else if (!row.pass)
        ++failed;
    }
    ordered_json metrics = ordered_json::object();
    for (const auto& [k, v] : e.metrics) metrics[k] = v;
    experiments.push_back({{"id", e.id},
                           {"csv", e.id + ".csv"},
                           {"pass", e.pass},
                           {"rows", e.rows.size()},
                           {"failed_rows", failed},
                           {"degenerate_rows", degenerate},
                           {"metrics", metrics},
                           {"notes", e.notes}});
  }
  j["experiments"] = experiments;
  ordered_json reports = ordered_json::array();
  for (const auto& s : res.stability_reports)
    reports.push_back({{"scale", s.scale},
                       {"eta", s.eta},
                       {"l2_mismatch", s.l2_mismatch},
                       {"epsilon_sq", s.epsilon_sq},
                       {"linf_gap", s.linf_gap},
                       {"gap_point", {s.gap_point.x(), s.gap_point.y()}},
                       {"d", s.d},
                       {"lambda_bar", s.lambda_bar},
                       {"small_branch", s.small_branch},
                       {"bound", s.bound}});
  j["stability_reports"] = reports;
  j["exit_status"] = res.exit_status;
  return j.dump(2) + "\n";
}

}  // namespace

std::string resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (options.output_dir && !options.output_dir->empty()) return *options.output_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("LAMESTAB_OUTPUT_DIR"); env && *env) return env;
  return "lamestab_output";
}

std::string format_csv(const std::vector<EstimateCheck>& rows) {
  std::string out = "experiment_id,check_name,param,lhs,rhs,ratio,fitted_constant,exponent,pass\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.experiment_id, r.name, real(r.param), real(r.lhs),
                       real(r.rhs), real(r.ratio), real(r.fitted_constant), real(r.exponent),
                       r.degenerate ? "degenerate" : (r.pass ? "true" : "false"));
  return out;
}

std::string format_boundary_norms_csv(const BoundaryNormTable& t) {
  std::string out = "s,norm,theta,frequency\n";
  const std::pair<double, double> rows[] = {{0.5, t.h_half}, {1.0, t.h_one}, {1.5, t.h_three_half}};
  for (const auto& [s, norm] : rows)
    out += fmt::format("{},{},{},{}\n", real(s), real(norm), real(t.rigid.theta), real(t.frequency));
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open '{}' for writing", tmp.string()));
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error(fmt::format("write to '{}' failed", tmp.string()));
    }
  }
  fs::rename(tmp, target);
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  validate_config(config);
  ExperimentConfig c = config;
  if (options.seed) c.seed = *options.seed;

  RunResult res;
  res.seed = c.seed;
  res.output_dir = resolve_output_dir(c, options);

  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!options.verbose) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    fmt::print(stderr, "{}\n", msg);
  };
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  auto t0 = clock::now();
  auto mesh = build_mesh(c.domain, c.mesh_h);
  log(fmt::format("mesh: {} vertices, {} triangles ({:.2f} s)", mesh->num_vertices(), mesh->num_triangles(),
                  seconds_since(t0)));
  Problem p{mesh, realize_pair(c, mesh), c.boundary_g.realize(mesh), {}, {}};
  res.boundary_norms = boundary_norm_table(p.g);

  const bool needs_u = std::any_of(c.checks.begin(), c.checks.end(),
                                   [](CheckKind k) { return k != CheckKind::kReconstruction; });
  try {
    t0 = clock::now();
    if (c.needs_family()) {
      const auto shape = make_phantom(p.mesh, c.lame.perturbation, c.lame.degree);
      p.family = solve_perturbation_family(p.pair, shape, c.scales, p.g, c.elasticity_options());
      p.u = p.family->u;
      log(fmt::format("perturbation family: {} scales ({:.2f} s)", c.scales.size(), seconds_since(t0)));
    } else if (needs_u) {
      p.u = solve_dirichlet(*assemble(p.mesh, p.pair, c.elasticity_options()), p.g);
      log(fmt::format("forward solve ({:.2f} s)", seconds_since(t0)));
    }
  } catch (const Error& e) {
    throw Error(fmt::format("forward problem: {}", e.what()));
  }

  using Task = std::function<ExperimentReport()>;
  std::vector<Task> tasks;
  std::vector<StabilityReport> stability;
  for (CheckKind kind : c.checks) {
    switch (kind) {
      case CheckKind::kIntegralEstimate: tasks.push_back([&] { return run_integral_estimate(c, p); }); break;
      case CheckKind::kInterpolation: tasks.push_back([&] { return run_interpolation(c, p); }); break;
      case CheckKind::kThreeSphere: tasks.push_back([&] { return run_three_sphere(c, p); }); break;
      case CheckKind::kDoubling: tasks.push_back([&] { return run_doubling(c, p); }); break;
      case CheckKind::kPropagationOfSmallness: tasks.push_back([&] { return run_propagation(c, p); }); break;
      case CheckKind::kStrainLowerBound: tasks.push_back([&] { return run_strain_lower_bound(c, p); }); break;
      case CheckKind::kHolderStability: tasks.push_back([&] { return run_holder(c, p, stability); }); break;
      case CheckKind::kReconstruction: tasks.push_back([&] { return run_reconstruction(c, p); }); break;
    }
  }

  std::vector<std::optional<ExperimentReport>> reports(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto name = std::string(check_name(c.checks[i]));
      const auto start = clock::now();
      try {
        reports[i] = tasks[i]();
        log(fmt::format("{}: {} ({:.2f} s)", name, reports[i]->pass ? "pass" : "FAIL", seconds_since(start)));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, std::max<int>(1, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Rethrow the first failure in experiment-id order.
  std::vector<std::size_t> order(tasks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return check_name(c.checks[a]) < check_name(c.checks[b]); });
  for (std::size_t i : order) {
    if (!errors[i]) continue;
    const auto id = std::string(check_name(c.checks[i]));
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw Error(fmt::format("experiment {}: {}", id, e.what()));
    }
  }
  for (std::size_t i : order) res.experiments.push_back(std::move(*reports[i]));
  res.stability_reports = std::move(stability);

  res.exit_status = 0;
  for (const auto& e : res.experiments)
    if (!e.pass) res.exit_status = 1;

  const fs::path dir(res.output_dir);
  for (const auto& e : res.experiments) {
    const auto path = (dir / (e.id + ".csv")).string();
    write_file_atomic(path, format_csv(e.rows));
    res.files.push_back(path);
  }
  const auto norms_path = (dir / "boundary_norms.csv").string();
  write_file_atomic(norms_path, format_boundary_norms_csv(res.boundary_norms));
  res.files.push_back(norms_path);
  const auto summary_path = (dir / "summary.json").string();
  write_file_atomic(summary_path, summary_json(c, res, *p.mesh));
  res.files.push_back(summary_path);
  return res;
}

RunPlan describe(const ExperimentConfig& config, const RunOptions& options) {
  validate_config(config);
  RunPlan plan;
  plan.seed = options.seed.value_or(config.seed);
  plan.output_dir = resolve_output_dir(config, options);
  plan.domain = domain_label(config.domain);
  plan.mesh_h = config.mesh_h;
  const auto mesh = build_mesh(config.domain, config.mesh_h);
  plan.vertices = mesh->num_vertices();
  plan.triangles = mesh->num_triangles();
  plan.edges = mesh->num_edges();
  plan.nodes = mesh->num_nodes();
  plan.displacement_dofs = 2 * plan.nodes;
  plan.interior_dofs = 2 * (plan.nodes - static_cast<int>(mesh->boundary_nodes().size()));
  plan.coefficient_dofs = config.lame.degree == 1 ? plan.vertices : plan.nodes;
  for (auto k : config.checks) plan.checks.emplace_back(check_name(k));
  plan.scales = config.scales;

  const bool needs_u = std::any_of(config.checks.begin(), config.checks.end(),
                                   [](CheckKind k) { return k != CheckKind::kReconstruction; });
  if (config.needs_family()) {
    const int n = static_cast<int>(config.scales.size());
    plan.forward_solves.push_back({fmt::format("perturbation family ({} scales, u and v per scale)", n), 2 * n});
    const auto positive = std::count_if(config.scales.begin(), config.scales.end(), [](double t) { return t > 0.0; });
    plan.distinct_forward_solves += 1 + static_cast<int>(positive);
  } else if (needs_u) {
    plan.forward_solves.push_back({"unperturbed solution u", 1});
    plan.distinct_forward_solves += 1;
  }
  if (config.wants(CheckKind::kReconstruction)) {
    plan.forward_solves.push_back({"reconstruction truth", 1});
    plan.distinct_forward_solves += 1;
    const int levels = static_cast<int>(config.reconstruction.noise_levels.size());
    plan.reconstructions = 1 + (levels - 1) * config.reconstruction.repeats;
  }
  for (const auto& s : plan.forward_solves) plan.total_forward_solves += s.count;
  return plan;
}

std::string format_plan(const RunPlan& plan) {
  std::string out;
  out += fmt::format("domain: {}\n", plan.domain);
  out += fmt::format("mesh_h: {}\n", plan.mesh_h);
  out += fmt::format("mesh: {} vertices, {} edges, {} triangles, {} P2 nodes\n", plan.vertices, plan.edges,
                     plan.triangles, plan.nodes);
  out += fmt::format("displacement dofs: {} ({} interior)\n", plan.displacement_dofs, plan.interior_dofs);
  out += fmt::format("coefficient dofs per field: {}\n", plan.coefficient_dofs);
  out += fmt::format("checks: {}\n", plan.checks.empty() ? "(none)" : fmt::format("{}", fmt::join(plan.checks, ", ")));
  if (!plan.scales.empty()) out += fmt::format("scales: {}\n", fmt::join(plan.scales, ", "));
  out += fmt::format("forward solves: {}\n", plan.total_forward_solves);
  for (const auto& s : plan.forward_solves) out += fmt::format("  {}: {}\n", s.label, s.count);
  out += fmt::format("distinct forward solves (u shared across scales): {}\n", plan.distinct_forward_solves);
  if (plan.reconstructions > 0) out += fmt::format("reconstructions: {}\n", plan.reconstructions);
  out += fmt::format("seed: {}\n", plan.seed);
  out += fmt::format("output dir: {}\n", plan.output_dir);
  return out;
}

}  // namespace lamestab
