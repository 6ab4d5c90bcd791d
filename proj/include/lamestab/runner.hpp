#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lamestab/config.hpp"

namespace lamestab {

/// Report of one experiment; the experiment id is the check name.
struct ExperimentReport {
  std::string id;
  std::vector<EstimateCheck> rows;
  /// Experiment-level verdict (held-out rows, fitted exponents, ...).
  bool pass = true;
  /// Scalar results written to the JSON summary, in insertion order.
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> notes;
};

struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  /// Progress lines on stderr.
  bool verbose = false;
};

struct RunResult {
  std::string output_dir;
  std::uint64_t seed = 0;
  BoundaryNormTable boundary_norms;
  std::vector<ExperimentReport> experiments;
  std::vector<StabilityReport> stability_reports;
  /// Paths written, in write order.
  std::vector<std::string> files;
  int exit_status = 0;
};

/// Precedence: explicit option, config, LAMESTAB_OUTPUT_DIR, "lamestab_output".
std::string resolve_output_dir(const ExperimentConfig& config, const RunOptions& options);

/// Runs every requested check and writes <id>.csv per experiment,
/// boundary_norms.csv and summary.json atomically. Exit status is 1 when any
/// experiment fails, 0 otherwise. Errors inside an experiment are rethrown as
/// Error with the experiment id prefixed.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

struct SolveCount {
  std::string label;
  int count = 0;
};

struct RunPlan {
  std::string domain;
  double mesh_h = 0.0;
  int vertices = 0;
  int triangles = 0;
  int edges = 0;
  int nodes = 0;
  /// Vector P2 unknowns, 2 * nodes = 2 * (vertices + edges).
  int displacement_dofs = 0;
  int interior_dofs = 0;
  int coefficient_dofs = 0;
  std::vector<std::string> checks;
  std::vector<double> scales;
  /// Planned forward solves; the perturbation family counts u and v per scale.
  std::vector<SolveCount> forward_solves;
  int total_forward_solves = 0;
  /// Solves actually performed, with the unperturbed u shared by all scales.
  int distinct_forward_solves = 0;
  int reconstructions = 0;
  std::string output_dir;
  std::uint64_t seed = 0;
};

/// Meshes the domain to count unknowns; performs no solve.
RunPlan describe(const ExperimentConfig& config, const RunOptions& options = {});
std::string format_plan(const RunPlan& plan);

/// CSV with header experiment_id,check_name,param,lhs,rhs,ratio,
/// fitted_constant,exponent,pass; reals in %.17g.
std::string format_csv(const std::vector<EstimateCheck>& rows);
std::string format_boundary_norms_csv(const BoundaryNormTable& table);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace lamestab
