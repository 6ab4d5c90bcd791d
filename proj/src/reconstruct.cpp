#include "lamestab/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "lamestab/errors.hpp"

namespace lamestab {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Visits every quadrature point with the physical gradients of the six P2
// basis functions, the strain of u and lambda * div u.
template <typename F>
void for_each_point(const DisplacementField& u, const ScalarField& lambda, int degree, F&& f) {
  const TriMesh& mesh = u.mesh();
  const auto& rule = triangle_rule(degree);
  std::array<Vec2, 6> grad;
  for (int e = 0; e < mesh.num_triangles(); ++e)
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& xi = rule.points[q];
      const Mat2 J = mesh.jacobian(e, xi);
      const double w = rule.weights[q] * std::abs(J.determinant());
      const Mat2 JinvT = J.inverse().transpose();
      const auto dN = p2_shape_grad(xi);
      for (int a = 0; a < 6; ++a) grad[a] = JinvT * dN[a];
      const Mat2 G = u.gradient(e, xi);
      const Mat2 eps = 0.5 * (G + G.transpose());
      f(e, xi, w, grad, eps, lambda.value(e, xi) * G.trace());
    }
}

void check_inputs(const DisplacementField& u, const ScalarField& lambda) {
  if (lambda.mesh_ptr() != u.mesh_ptr()) throw PreconditionError("lambda lives on another mesh");
  if (!u.dofs().allFinite()) throw PreconditionError("measurement contains non-finite values");
}

// Disk covering the vertices where |weight| is at least half its maximum.
IllPosedError degenerate_region(const TriMesh& mesh, const std::vector<int>& vertices,
                                const Eigen::VectorXd& weight, double ratio) {
  Vec2 center = Vec2::Zero();
  double radius = mesh.domain().outer_radius();
  const double peak = weight.size() ? weight.cwiseAbs().maxCoeff() : 0.0;
  if (peak > 0.0) {
    std::vector<Vec2> pts;
    for (int i = 0; i < weight.size(); ++i)
      if (std::abs(weight[i]) >= 0.5 * peak) pts.push_back(mesh.vertices()[vertices[i]]);
    center.setZero();
    for (const Vec2& p : pts) center += p;
    center /= static_cast<double>(pts.size());
    radius = 0.0;
    for (const Vec2& p : pts) radius = std::max(radius, (p - center).norm());
  }
  return IllPosedError(
      fmt::format("strain carries no information near ({:.4g}, {:.4g}) within radius {:.4g}: "
                  "Gram eigenvalue ratio {:.3g}",
                  center.x(), center.y(), radius, ratio),
      center.x(), center.y(), radius);
}

}  // namespace

InteriorMeasurement add_noise(const DisplacementField& u, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw PreconditionError("noise level must be >= 0");
  Eigen::VectorXd dofs = u.dofs();
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < dofs.size(); ++i) dofs[i] += noise(rng);
  }
  return {DisplacementField(u.mesh_ptr(), std::move(dofs)), sigma};
}

std::vector<double> boundary_values(const ScalarField& field) {
  std::vector<double> out;
  for (int v : field.mesh().boundary_loop()) out.push_back(field.values()[v]);
  return out;
}

ReconstructionResult reconstruct_mu(const InteriorMeasurement& meas, const ScalarField& lambda,
                                    const std::vector<double>& mu_boundary,
                                    const ReconstructionOptions& options) {
  const DisplacementField& u = meas.u;
  check_inputs(u, lambda);
  const TriMesh& mesh = u.mesh();
  const auto loop = mesh.boundary_loop();
  if (mu_boundary.size() != loop.size())
    throw PreconditionError(fmt::format("expected {} boundary values of mu, got {}", loop.size(), mu_boundary.size()));
  if (options.reg_weight && !(*options.reg_weight >= 0.0))
    throw PreconditionError("regularization weight must be >= 0");
  const double s = options.shear_factor;

  // Unknown vertices and test dofs.
  const int nv = mesh.num_vertices();
  std::vector<int> col(nv, -1), bcol(nv, -1), interior_vertices;
  for (std::size_t i = 0; i < loop.size(); ++i) bcol[loop[i]] = static_cast<int>(i);
  for (int v = 0; v < nv; ++v)
    if (bcol[v] < 0) {
      col[v] = static_cast<int>(interior_vertices.size());
      interior_vertices.push_back(v);
    }
  const int ni = static_cast<int>(interior_vertices.size());
  std::vector<int> row(2 * mesh.num_nodes(), -1);
  int nr = 0;
  for (int n = 0; n < mesh.num_nodes(); ++n)
    if (!mesh.is_boundary_node(n)) {
      row[2 * n] = nr++;
      row[2 * n + 1] = nr++;
    }
  if (ni == 0 || nr == 0) throw PreconditionError("mesh has no interior unknowns");

  std::vector<Triplet> ti, tb, tl;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nr);
  double energy = 0.0, area = 0.0;
  for_each_point(u, lambda, options.quadrature_degree,
                 [&](int e, const Vec2& xi, double w, const std::array<Vec2, 6>& grad, const Mat2& eps,
                     double lam_div) {
                   const auto& nodes = mesh.element_nodes(e);
                   const auto phi = p1_shape(xi);
                   energy += w * eps.squaredNorm();
                   area += w;
                   for (int a = 0; a < 6; ++a) {
                     const Vec2 t = eps * grad[a];
                     for (int comp = 0; comp < 2; ++comp) {
                       const int r = row[2 * nodes[a] + comp];
                       if (r < 0) continue;
                       c[r] += w * lam_div * grad[a][comp];
                       for (int j = 0; j < 3; ++j) {
                         const int v = nodes[j];
                         const double val = w * s * phi[j] * t[comp];
                         if (col[v] >= 0)
                           ti.emplace_back(r, col[v], val);
                         else
                           tb.emplace_back(r, bcol[v], val);
                       }
                     }
                   }
                   // P1 Laplacian for the penalty, on the vertices.
                   const Mat2 JinvT = mesh.jacobian(e, xi).inverse().transpose();
                   const auto dphi = p1_shape_grad();
                   for (int i = 0; i < 3; ++i)
                     for (int j = 0; j < 3; ++j)
                       tl.emplace_back(nodes[i], nodes[j], w * (JinvT * dphi[i]).dot(JinvT * dphi[j]));
                 });

  SpMat BI(nr, ni), BB(nr, static_cast<int>(loop.size())), L(nv, nv);
  BI.setFromTriplets(ti.begin(), ti.end());
  BB.setFromTriplets(tb.begin(), tb.end());
  L.setFromTriplets(tl.begin(), tl.end());
  const Eigen::VectorXd mu_b = Eigen::Map<const Eigen::VectorXd>(mu_boundary.data(), mu_boundary.size());
  const Eigen::VectorXd data = c + BB * mu_b;

  const SpMat G = SpMat(BI.transpose()) * BI;
  const double trace = G.diagonal().sum();
  const double threshold = options.ill_posed_threshold;
  ReconstructionResult out{ScalarField::constant(u.mesh_ptr(), 0.0), 0.0, 0.0, 0.0, std::nullopt};
  // Rigid measurements leave only round-off strain.
  const double l2 = l2_norm(u);
  if (!(trace > 0.0) || !(energy > 1e-20 * l2 * l2))
    throw degenerate_region(mesh, interior_vertices, Eigen::VectorXd::Ones(ni), 0.0);

  // Smallest Gram eigenvalue by inverse iteration on the Cholesky factor.
  Eigen::SimplicialLDLT<SpMat> gram(G);
  if (gram.info() != Eigen::Success || gram.vectorD().minCoeff() <= threshold * trace) {
    Eigen::VectorXd weak = G.diagonal();
    for (Eigen::Index i = 0; i < weak.size(); ++i) weak[i] = weak[i] <= threshold * trace ? 1.0 : 0.0;
    if (weak.sum() == 0.0) weak.setOnes();
    throw degenerate_region(mesh, interior_vertices, weak, 0.0);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Ones(ni);
  for (int i = 0; i < ni; ++i) x[i] += 0.5 * std::sin(1.0 + 7.0 * i);
  x.normalize();
  double lambda_min = 0.0;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd y = gram.solve(x);
    lambda_min = 1.0 / x.dot(y);
    x = y.normalized();
  }
  out.relative_min_eigenvalue = lambda_min / trace;
  if (!(out.relative_min_eigenvalue >= threshold))
    throw degenerate_region(mesh, interior_vertices, x, out.relative_min_eigenvalue);

  out.regularization_weight = options.reg_weight ? *options.reg_weight : 1e-6 * energy / area;
  Eigen::VectorXd rhs = -(BI.transpose() * data);
  Eigen::VectorXd sol;
  if (out.regularization_weight > 0.0) {
    std::vector<Triplet> lii, lib;
    for (int k = 0; k < L.outerSize(); ++k)
      for (SpMat::InnerIterator it(L, k); it; ++it) {
        const int r = static_cast<int>(it.row()), q = static_cast<int>(it.col());
        if (col[r] < 0) continue;
        if (col[q] >= 0)
          lii.emplace_back(col[r], col[q], it.value());
        else
          lib.emplace_back(col[r], bcol[q], it.value());
      }
    SpMat LII(ni, ni), LIB(ni, static_cast<int>(loop.size()));
    LII.setFromTriplets(lii.begin(), lii.end());
    LIB.setFromTriplets(lib.begin(), lib.end());
    const SpMat A = G + out.regularization_weight * LII;
    rhs -= out.regularization_weight * (LIB * mu_b);
    Eigen::SimplicialLDLT<SpMat> solver(A);
    if (solver.info() != Eigen::Success) throw SolverError("regularized normal equations are not factorizable", 0, 0.0);
    sol = solver.solve(rhs);
    const double rel = rhs.norm() > 0.0 ? (A * sol - rhs).norm() / rhs.norm() : 0.0;
    if (!(rel <= 1e-10)) throw SolverError("normal equations not solved to 1e-10", 0, rel);
  } else {
    sol = gram.solve(rhs);
    const double rel = rhs.norm() > 0.0 ? (G * sol - rhs).norm() / rhs.norm() : 0.0;
    if (!(rel <= 1e-10)) throw SolverError("normal equations not solved to 1e-10", 0, rel);
  }

  std::vector<double> values(nv);
  for (int v = 0; v < nv; ++v) values[v] = col[v] >= 0 ? sol[col[v]] : mu_boundary[bcol[v]];
  out.mu_rec = ScalarField(u.mesh_ptr(), 1, std::move(values));
  out.residual_norm = (BI * sol + data).norm();
  return out;
}

double reconstruction_residual(const DisplacementField& u, const ScalarField& lambda,
                               const ScalarField& mu, double shear_factor, int quadrature_degree) {
  check_inputs(u, lambda);
  if (mu.mesh_ptr() != u.mesh_ptr()) throw PreconditionError("mu lives on another mesh");
  const TriMesh& mesh = u.mesh();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
  for_each_point(u, lambda, quadrature_degree,
                 [&](int e, const Vec2& xi, double w, const std::array<Vec2, 6>& grad, const Mat2& eps,
                     double lam_div) {
                   const auto& nodes = mesh.element_nodes(e);
                   const double m = shear_factor * mu.value(e, xi);
                   for (int a = 0; a < 6; ++a) {
                     const Vec2 t = lam_div * grad[a] + m * (eps * grad[a]);
                     r[2 * nodes[a]] += w * t.x();
                     r[2 * nodes[a] + 1] += w * t.y();
                   }
                 });
  double sum = 0.0;
  for (int n = 0; n < mesh.num_nodes(); ++n)
    if (!mesh.is_boundary_node(n)) sum += r[2 * n] * r[2 * n] + r[2 * n + 1] * r[2 * n + 1];
  return std::sqrt(sum);
}

double interior_error(const ScalarField& mu_rec, const ScalarField& mu_true, double d) {
  if (mu_rec.mesh_ptr() != mu_true.mesh_ptr()) throw PreconditionError("fields live on different meshes");
  const auto mask = interior_mask(mu_rec.mesh(), d);
  double worst = 0.0;
  for (int v = 0; v < mu_rec.mesh().num_vertices(); ++v)
    if (mask.vertex_flags[v]) worst = std::max(worst, std::abs(mu_rec.values()[v] - mu_true.values()[v]));
  return worst;
}

NoiseSweepResult noise_sweep(const LamePair& truth, const BoundaryTrace& g, double d,
                             const std::vector<double>& noise_levels, std::uint64_t seed,
                             const ReconstructionOptions& options, int repeats,
                             const ElasticityOptions& forward) {
  if (noise_levels.empty() || noise_levels.front() != 0.0 ||
      !std::is_sorted(noise_levels.begin(), noise_levels.end()))
    throw PreconditionError("noise levels must be sorted ascending and start at 0");
  if (repeats < 1) throw PreconditionError("noise sweep needs at least one repeat");
  auto system = assemble(truth.mu.mesh_ptr(), truth, forward);
  const DisplacementField u = solve_dirichlet(*system, g);
  const auto mu_b = boundary_values(truth.mu);

  NoiseSweepResult out;
  std::mt19937_64 seeds(seed);
  for (double sigma : noise_levels) {
    NoiseSweepRow row;
    row.sigma = sigma;
    const int n = sigma > 0.0 ? repeats : 1;
    for (int k = 0; k < n; ++k) {
      const auto meas = add_noise(u, sigma, seeds());
      const auto rec = reconstruct_mu(meas, truth.lambda, mu_b, options);
      row.errors.push_back(interior_error(rec.mu_rec, truth.mu, d));
    }
    std::vector<double> sorted = row.errors;
    std::sort(sorted.begin(), sorted.end());
    row.median_error = sorted[sorted.size() / 2];
    out.rows.push_back(row);
  }
  out.noiseless_error = out.rows.front().median_error;
  std::vector<double> x, y, medians;
  for (const auto& row : out.rows) {
    medians.push_back(row.median_error);
    if (row.sigma > 0.0) {
      x.push_back(row.sigma);
      y.push_back(row.median_error);
    }
  }
  out.inversions = count_inversions(medians, false);
  if (x.size() >= 2) {
    out.fit = fit_power_law(x, y);
    out.p = out.fit.exponent;
  }
  return out;
}

}  // namespace lamestab
