#include "lamestab/elasticity.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include <Eigen/IterativeLinearSolvers>

#include "lamestab/errors.hpp"

namespace lamestab {
namespace {

// Physical gradients of the six P2 shape functions and |det J| at xi.
struct P2Geometry {
  std::array<Vec2, 6> grad;
  double det = 0.0;
};

P2Geometry p2_geometry(const TriMesh& mesh, int e, const Vec2& xi) {
  const Mat2 J = mesh.jacobian(e, xi);
  P2Geometry out;
  out.det = J.determinant();
  const Mat2 jinv_t = J.inverse().transpose();
  const auto dN = p2_shape_grad(xi);
  for (int i = 0; i < 6; ++i) out.grad[i] = jinv_t * dN[i];
  return out;
}

double frobenius(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

}  // namespace

// ---------------------------------------------------------------------------
// DisplacementField

DisplacementField::DisplacementField(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd dofs,
                                     std::optional<BoundaryTrace> trace)
    : mesh_(std::move(mesh)), dofs_(std::move(dofs)), trace_(std::move(trace)) {
  if (!mesh_) throw PreconditionError("displacement field needs a mesh");
  if (dofs_.size() != 2 * mesh_->num_nodes())
    throw PreconditionError(fmt::format("displacement field needs {} dofs, got {}",
                                        2 * mesh_->num_nodes(), dofs_.size()));
  if (!dofs_.allFinite()) throw PreconditionError("displacement values must be finite");
  if (trace_ && trace_->mesh_ptr() != mesh_)
    throw PreconditionError("boundary trace lives on another mesh");
}

DisplacementField DisplacementField::zero(std::shared_ptr<const TriMesh> mesh) {
  const int n = 2 * mesh->num_nodes();
  return DisplacementField(std::move(mesh), Eigen::VectorXd::Zero(n));
}

DisplacementField DisplacementField::interpolate(std::shared_ptr<const TriMesh> mesh,
                                                 const std::function<Vec2(const Vec2&)>& f) {
  Eigen::VectorXd dofs(2 * mesh->num_nodes());
  for (int n = 0; n < mesh->num_nodes(); ++n) dofs.segment<2>(2 * n) = f(mesh->nodes()[n]);
  return DisplacementField(std::move(mesh), std::move(dofs));
}

Vec2 DisplacementField::value(int e, const Vec2& xi) const {
  const auto& nodes = mesh_->element_nodes(e);
  const auto N = p2_shape(xi);
  Vec2 u = Vec2::Zero();
  for (int i = 0; i < 6; ++i) u += N[i] * dofs_.segment<2>(2 * nodes[i]);
  return u;
}

Mat2 DisplacementField::gradient(int e, const Vec2& xi) const {
  const auto& nodes = mesh_->element_nodes(e);
  const auto dN = p2_shape_grad(xi);
  Mat2 ref = Mat2::Zero();  // d u / d xi
  for (int i = 0; i < 6; ++i) ref += dofs_.segment<2>(2 * nodes[i]) * dN[i].transpose();
  return ref * mesh_->jacobian(e, xi).inverse();
}

Mat2 DisplacementField::strain(int e, const Vec2& xi) const {
  const Mat2 G = gradient(e, xi);
  return 0.5 * (G + G.transpose());
}

double DisplacementField::divergence(int e, const Vec2& xi) const { return gradient(e, xi).trace(); }

DisplacementField DisplacementField::operator-(const DisplacementField& other) const {
  if (other.mesh_ != mesh_) throw PreconditionError("displacement fields live on different meshes");
  return DisplacementField(mesh_, dofs_ - other.dofs_);
}

DisplacementField DisplacementField::operator+(const DisplacementField& other) const {
  if (other.mesh_ != mesh_) throw PreconditionError("displacement fields live on different meshes");
  return DisplacementField(mesh_, dofs_ + other.dofs_);
}

DisplacementField DisplacementField::scaled(double c) const {
  return DisplacementField(mesh_, c * dofs_, trace_ ? std::optional(trace_->scaled(c)) : std::nullopt);
}

void write_displacement(std::ostream& out, const DisplacementField& u) {
  out << u.num_nodes() << " 2\n";
  for (int n = 0; n < u.num_nodes(); ++n) {
    const Vec2& p = u.mesh().nodes()[n];
    const Vec2 v = u.node_value(n);
    out << fmt::format("{:.17g} {:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), v.x(), v.y());
  }
}

DisplacementField read_displacement(std::istream& in, std::shared_ptr<const TriMesh> mesh) {
  long nd = -1, ncomp = -1;
  if (!(in >> nd >> ncomp) || ncomp != 2)
    throw PreconditionError("displacement file: expected header \"nd 2\"");
  if (nd != mesh->num_nodes())
    throw PreconditionError(fmt::format("displacement file has {} dofs, the mesh has {} P2 nodes", nd,
                                        mesh->num_nodes()));
  Eigen::VectorXd dofs(2 * nd);
  const double tol = 1e-9 * mesh->domain().scale();
  for (long n = 0; n < nd; ++n) {
    std::string xs, ys, us, vs;
    if (!(in >> xs >> ys >> us >> vs)) throw PreconditionError("displacement file: truncated");
    if ((Vec2(std::stod(xs), std::stod(ys)) - mesh->nodes()[n]).norm() > tol)
      throw PreconditionError(fmt::format("displacement file: dof {} is not at its mesh node", n));
    dofs[2 * n] = std::stod(us);
    dofs[2 * n + 1] = std::stod(vs);
  }
  return DisplacementField(std::move(mesh), std::move(dofs));
}

std::vector<StrainSample> strain(const DisplacementField& u, int quadrature_degree) {
  const auto& rule = triangle_rule(quadrature_degree);
  const TriMesh& mesh = u.mesh();
  std::vector<StrainSample> out;
  out.reserve(mesh.num_triangles() * rule.points.size());
  for (int e = 0; e < mesh.num_triangles(); ++e)
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& xi = rule.points[q];
      out.push_back({e, mesh.map(e, xi), rule.weights[q] * std::abs(mesh.jacobian(e, xi).determinant()),
                     u.strain(e, xi)});
    }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

Eigen::Matrix<double, 6, 6> p1_element_stiffness(const std::array<Vec2, 3>& v, double lambda,
                                                 double mu, double shear_factor) {
  Mat2 J;
  J.col(0) = v[1] - v[0];
  J.col(1) = v[2] - v[0];
  const double area = 0.5 * std::abs(J.determinant());
  const Mat2 jinv_t = J.inverse().transpose();
  const auto dN = p1_shape_grad();
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) g[i] = jinv_t * dN[i];
  Eigen::Matrix<double, 6, 6> K;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < 3; ++j)
        for (int d = 0; d < 2; ++d) {
          const double strain_term =
              0.5 * ((c == d ? g[i].dot(g[j]) : 0.0) + g[i][d] * g[j][c]);
          K(2 * i + c, 2 * j + d) = area * (lambda * g[i][c] * g[j][d] + shear_factor * mu * strain_term);
        }
  return K;
}

StiffnessSystem::StiffnessSystem(std::shared_ptr<const TriMesh> mesh, LamePair pair,
                                 ElasticityOptions options)
    : mesh_(std::move(mesh)), pair_(std::move(pair)), options_(options) {
  if (pair_.lambda.mesh_ptr() != mesh_ || pair_.mu.mesh_ptr() != mesh_)
    throw GeometryError("coefficient fields are defined on a different mesh than the system");

  const int ndof = 2 * mesh_->num_nodes();
  const auto& rule = triangle_rule(options_.quadrature_degree);
  const double s = options_.shear_factor;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh_->num_triangles()) * 144);
  Eigen::Matrix<double, 12, 12> Ke;
  for (int e = 0; e < mesh_->num_triangles(); ++e) {
    Ke.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& xi = rule.points[q];
      const auto geo = p2_geometry(*mesh_, e, xi);
      const double w = rule.weights[q] * geo.det;
      const double lam = pair_.lambda.value(e, xi);
      const double mu = pair_.mu.value(e, xi);
      const auto& g = geo.grad;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          const double gg = g[i].dot(g[j]);
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d) {
              const double strain_term = 0.5 * ((c == d ? gg : 0.0) + g[i][d] * g[j][c]);
              Ke(2 * i + c, 2 * j + d) += w * (lam * g[i][c] * g[j][d] + s * mu * strain_term);
            }
        }
    }
    const auto& nodes = mesh_->element_nodes(e);
    for (int i = 0; i < 6; ++i)
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < 6; ++j)
          for (int d = 0; d < 2; ++d)
            trips.emplace_back(2 * nodes[i] + c, 2 * nodes[j] + d, Ke(2 * i + c, 2 * j + d));
  }
  matrix_.resize(ndof, ndof);
  matrix_.setFromTriplets(trips.begin(), trips.end());

  std::vector<int> local(ndof, -1);
  std::vector<char> on_boundary(ndof, 0);
  for (int n : mesh_->boundary_nodes()) on_boundary[2 * n] = on_boundary[2 * n + 1] = 1;
  for (int i = 0; i < ndof; ++i) {
    if (on_boundary[i]) {
      local[i] = static_cast<int>(boundary_.size());
      boundary_.push_back(i);
    } else {
      local[i] = static_cast<int>(interior_.size());
      interior_.push_back(i);
    }
  }
  std::vector<Eigen::Triplet<double>> ii, ib;
  for (int col = 0; col < matrix_.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      if (on_boundary[r]) continue;
      if (on_boundary[col])
        ib.emplace_back(local[r], local[col], it.value());
      else
        ii.emplace_back(local[r], local[col], it.value());
    }
  k_ii_.resize(interior_.size(), interior_.size());
  k_ii_.setFromTriplets(ii.begin(), ii.end());
  k_ib_.resize(interior_.size(), boundary_.size());
  k_ib_.setFromTriplets(ib.begin(), ib.end());

  if (options_.solver == LinearSolver::kDirect) {
    factor_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(k_ii_);
    if (factor_->info() != Eigen::Success)
      throw SolverError("sparse LDL^T factorization of the stiffness matrix failed", 0, NAN);
  }
}

double StiffnessSystem::energy(const DisplacementField& u, const DisplacementField& z) const {
  if (u.mesh_ptr() != mesh_ || z.mesh_ptr() != mesh_)
    throw PreconditionError("fields are defined on a different mesh than the system");
  return u.dofs().dot(matrix_ * z.dofs());
}

Eigen::VectorXd StiffnessSystem::load(const std::function<Vec2(const Vec2&)>& f) const {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(num_dofs());
  const auto& rule = triangle_rule(6);
  for (int e = 0; e < mesh_->num_triangles(); ++e) {
    const auto& nodes = mesh_->element_nodes(e);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& xi = rule.points[q];
      const double w = rule.weights[q] * std::abs(mesh_->jacobian(e, xi).determinant());
      const Vec2 fx = f(mesh_->map(e, xi));
      const auto N = p2_shape(xi);
      for (int i = 0; i < 6; ++i) F.segment<2>(2 * nodes[i]) += w * N[i] * fx;
    }
  }
  return F;
}

Eigen::VectorXd StiffnessSystem::solve_interior(const Eigen::VectorXd& rhs, const Eigen::VectorXd* guess,
                                                SolveInfo* info) const {
  const double bnorm = rhs.norm();
  SolveInfo local;
  Eigen::VectorXd x;
  if (bnorm == 0.0) {
    x = Eigen::VectorXd::Zero(rhs.size());
  } else if (factor_) {
    x = factor_->solve(rhs);
    local.iterations = 1;
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options_.cg_tolerance);
    const long cap = static_cast<long>(std::ceil(options_.cg_iteration_factor * std::sqrt(double(rhs.size()))));
    cg.setMaxIterations(cap);
    cg.compute(k_ii_);
    if (guess)
      x = cg.solveWithGuess(rhs, *guess);
    else
      x = cg.solve(rhs);
    local.iterations = cg.iterations();
    if (cg.info() != Eigen::Success && cg.error() > options_.residual_tolerance)
      throw SolverError(fmt::format("conjugate gradient stopped after {} iterations at relative residual {:.3g}",
                                    cg.iterations(), cg.error()),
                        cg.iterations(), cg.error());
  }
  local.relative_residual = bnorm == 0.0 ? 0.0 : (k_ii_ * x - rhs).norm() / bnorm;
  if (!(local.relative_residual <= options_.residual_tolerance))
    throw SolverError(fmt::format("linear solve ended at relative residual {:.3g} above {:.3g}",
                                  local.relative_residual, options_.residual_tolerance),
                      local.iterations, local.relative_residual);
  if (info) *info = local;
  return x;
}

std::shared_ptr<const StiffnessSystem> assemble(std::shared_ptr<const TriMesh> mesh, const LamePair& pair,
                                                const ElasticityOptions& options) {
  const auto report = validate_lame(pair, options.shear_factor);
  if (!report.pass()) {
    std::string failed;
    for (const auto& c : report.checks)
      if (!c.pass)
        failed += fmt::format("{}{} (worst {:.6g} vs {:.6g})", failed.empty() ? "" : "; ", c.name,
                              c.worst_value, c.bound);
    throw PreconditionError("coefficients violate the a-priori bounds: " + failed);
  }
  return std::make_shared<const StiffnessSystem>(std::move(mesh), pair, options);
}

DisplacementField solve_dirichlet(const StiffnessSystem& system, const BoundaryTrace& g,
                                  const std::function<Vec2(const Vec2&)>* body_force,
                                  const DisplacementField* guess, SolveInfo* info) {
  const TriMesh& mesh = system.mesh();
  if (g.mesh_ptr() != system.mesh_ptr())
    throw PreconditionError("boundary datum lives on a different mesh than the system");

  Eigen::VectorXd full = Eigen::VectorXd::Zero(system.num_dofs());
  const auto bnodes = mesh.boundary_nodes();
  for (std::size_t j = 0; j < bnodes.size(); ++j) full.segment<2>(2 * bnodes[j]) = g.values()[j];

  const auto& interior = system.interior_dofs();
  const auto& boundary = system.boundary_dofs();
  Eigen::VectorXd gb(boundary.size());
  for (std::size_t k = 0; k < boundary.size(); ++k) gb[k] = full[boundary[k]];

  Eigen::VectorXd rhs = -(system.boundary_coupling() * gb);
  if (body_force) {
    const Eigen::VectorXd F = system.load(*body_force);
    for (std::size_t k = 0; k < interior.size(); ++k) rhs[k] += F[interior[k]];
  }
  Eigen::VectorXd x0;
  if (guess) {
    x0.resize(interior.size());
    for (std::size_t k = 0; k < interior.size(); ++k) x0[k] = guess->dofs()[interior[k]];
  }
  const Eigen::VectorXd x = system.solve_interior(rhs, guess ? &x0 : nullptr, info);
  for (std::size_t k = 0; k < interior.size(); ++k) full[interior[k]] = x[k];
  return DisplacementField(system.mesh_ptr(), std::move(full), g);
}

// ---------------------------------------------------------------------------
// Weak comparison identity

WeakIdentityGap weak_identity_gap(const DisplacementField& u, const DisplacementField& v,
                                  const ScalarField& lambda, const ScalarField& mu2,
                                  const ScalarField& phi, const DisplacementField& zeta,
                                  double shear_factor, int quadrature_degree) {
  const auto& mesh_ptr = u.mesh_ptr();
  if (v.mesh_ptr() != mesh_ptr || zeta.mesh_ptr() != mesh_ptr || lambda.mesh_ptr() != mesh_ptr ||
      mu2.mesh_ptr() != mesh_ptr || phi.mesh_ptr() != mesh_ptr)
    throw PreconditionError("weak identity inputs must share one mesh");
  const TriMesh& mesh = *mesh_ptr;
  const double zmax = zeta.dofs().cwiseAbs().maxCoeff();
  for (int n : mesh.boundary_nodes())
    if (zeta.node_value(n).cwiseAbs().maxCoeff() > 1e-14 * std::max(zmax, 1e-300))
      throw PreconditionError("test field must vanish on the boundary");

  const double s = shear_factor;
  const auto& rule = triangle_rule(quadrature_degree);
  double lhs = 0.0, rhs = 0.0, eu = 0.0, ev = 0.0, ez = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e)
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& xi = rule.points[q];
      const double w = rule.weights[q] * std::abs(mesh.jacobian(e, xi).determinant());
      const Mat2 Gu = u.gradient(e, xi), Gv = v.gradient(e, xi), Gz = zeta.gradient(e, xi);
      const Mat2 su = 0.5 * (Gu + Gu.transpose()), sv = 0.5 * (Gv + Gv.transpose());
      const Mat2 sz = 0.5 * (Gz + Gz.transpose());
      lhs += w * s * phi.value(e, xi) * frobenius(su, sz);
      rhs -= w * (lambda.value(e, xi) * (Gu.trace() - Gv.trace()) * Gz.trace() +
                  s * mu2.value(e, xi) * frobenius(su - sv, sz));
      eu += w * su.squaredNorm();
      ev += w * sv.squaredNorm();
      ez += w * sz.squaredNorm();
    }
  WeakIdentityGap out;
  out.lhs = lhs;
  out.rhs = rhs;
  out.gap = lhs - rhs;
  const double coeff = lambda.sup_norm() + s * mu2.sup_norm() + s * phi.sup_norm();
  out.scale = coeff * (std::sqrt(eu) + std::sqrt(ev)) * std::sqrt(ez);
  return out;
}

}  // namespace lamestab
