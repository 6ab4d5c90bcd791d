#include "lamestab/norms.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "lamestab/errors.hpp"

namespace lamestab {
namespace {

template <typename F>
double volume_integral(const TriMesh& mesh, F&& f) {
  const auto& rule = triangle_rule(6);
  double total = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e)
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& xi = rule.points[q];
      total += rule.weights[q] * std::abs(mesh.jacobian(e, xi).determinant()) * f(e, xi);
    }
  return total;
}

BoundaryTrace rigid_basis(const std::shared_ptr<const TriMesh>& mesh, int i) {
  return trace_from_closure(mesh, [i](const Vec2& x) -> Vec2 {
    if (i == 0) return Vec2(1.0, 0.0);
    if (i == 1) return Vec2(0.0, 1.0);
    return Vec2(-x.y(), x.x());
  });
}

}  // namespace

double boundary_sobolev_inner(const BoundaryTrace& f, const BoundaryTrace& g, double s) {
  if (f.mesh_ptr() != g.mesh_ptr()) throw PreconditionError("traces live on different meshes");
  double total = 0.0;
  for (int k = -f.max_mode(); k <= f.max_mode(); ++k) {
    const double kt = f.wavenumber(k);
    const double weight = std::pow(1.0 + kt * kt, s);
    for (int c = 0; c < 2; ++c)
      total += weight * (f.coefficient(c, k) * std::conj(g.coefficient(c, k))).real();
  }
  return f.perimeter() * total;
}

double boundary_sobolev_norm(const BoundaryTrace& g, double s) {
  return std::sqrt(std::max(0.0, boundary_sobolev_inner(g, g, s)));
}

RigidDistance rigid_motion_distance(const BoundaryTrace& g) {
  const auto& mesh = g.mesh_ptr();
  const BoundaryTrace basis[3] = {rigid_basis(mesh, 0), rigid_basis(mesh, 1), rigid_basis(mesh, 2)};
  Eigen::Matrix3d G;
  Eigen::Vector3d b;
  for (int i = 0; i < 3; ++i) {
    b[i] = boundary_sobolev_inner(g, basis[i], 0.5);
    for (int j = 0; j < 3; ++j) G(i, j) = boundary_sobolev_inner(basis[i], basis[j], 0.5);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(G);
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * G.trace()))
    throw GeometryError("rigid-motion Gram matrix is singular: the boundary degenerates");
  const Eigen::Vector3d c = G.ldlt().solve(b);

  RigidDistance out;
  out.minimizer.a = Vec2(c[0], c[1]);
  out.minimizer.w = c[2];
  const BoundaryTrace residual =
      g - (basis[0].scaled(c[0]) + basis[1].scaled(c[1]) + basis[2].scaled(c[2]));
  out.theta = boundary_sobolev_norm(residual, 0.5);
  out.projection_norm = std::sqrt(std::max(0.0, c.dot(G * c)));
  return out;
}

double frequency(const BoundaryTrace& g) {
  const double theta = rigid_motion_distance(g).theta;
  const double scale = boundary_sobolev_norm(g, 0.5);
  if (!(theta > 1e-10 * scale) || theta == 0.0)
    throw PreconditionError("frequency is infinite: the boundary datum is a rigid motion");
  return boundary_sobolev_norm(g, 1.0) / theta;
}

BoundaryNormTable boundary_norm_table(const BoundaryTrace& g) {
  BoundaryNormTable t;
  t.h_half = boundary_sobolev_norm(g, 0.5);
  t.h_one = boundary_sobolev_norm(g, 1.0);
  t.h_three_half = boundary_sobolev_norm(g, 1.5);
  t.rigid = rigid_motion_distance(g);
  t.frequency = t.rigid.theta > 1e-10 * t.h_half && t.rigid.theta > 0.0
                    ? t.h_one / t.rigid.theta
                    : std::numeric_limits<double>::infinity();
  t.exact_norm = g.mesh().domain().spec().kind == DomainKind::kUnitDisk;
  return t;
}

LinfResult linf_on_mask(const ScalarField& field, const SubdomainMask& mask) {
  const auto& flags = field.degree() == 1 ? mask.vertex_flags : mask.node_flags;
  if (static_cast<int>(flags.size()) < field.num_dofs())
    throw PreconditionError("mask was built on a different mesh");
  LinfResult best;
  for (int i = 0; i < field.num_dofs(); ++i) {
    if (!flags[i]) continue;
    const double v = std::abs(field.values()[i]);
    if (best.dof < 0 || v > best.value) {
      best.value = v;
      best.dof = i;
    }
  }
  if (best.dof < 0) throw EmptySubdomainError(mask.d, "L-infinity over an empty subdomain");
  best.point = field.dof_point(best.dof);
  return best;
}

LinfResult boundary_sup(const ScalarField& field) {
  const TriMesh& mesh = field.mesh();
  LinfResult best;
  auto consider = [&](int dof) {
    const double v = std::abs(field.values()[dof]);
    if (best.dof < 0 || v > best.value || (v == best.value && dof < best.dof)) {
      best.value = v;
      best.dof = dof;
    }
  };
  if (field.degree() == 1)
    for (int v : mesh.boundary_loop()) consider(v);
  else
    for (int n : mesh.boundary_nodes()) consider(n);
  best.point = field.dof_point(best.dof);
  return best;
}

double strain_energy_on_ball(const DisplacementField& u, const BallQuadrature& ball) {
  return ball.integrate([&](int e, const Vec2& xi, const Vec2&) { return u.strain(e, xi).squaredNorm(); });
}

double displacement_energy_on_ball(const DisplacementField& u, const BallQuadrature& ball,
                                   const RigidMotion& r) {
  return ball.integrate(
      [&](int e, const Vec2& xi, const Vec2& x) { return (u.value(e, xi) - r(x)).squaredNorm(); });
}

double l2_norm(const DisplacementField& u) {
  return std::sqrt(volume_integral(u.mesh(), [&](int e, const Vec2& xi) { return u.value(e, xi).squaredNorm(); }));
}

double gradient_l2_norm(const DisplacementField& u) {
  return std::sqrt(
      volume_integral(u.mesh(), [&](int e, const Vec2& xi) { return u.gradient(e, xi).squaredNorm(); }));
}

double strain_energy(const DisplacementField& u) {
  return volume_integral(u.mesh(), [&](int e, const Vec2& xi) { return u.strain(e, xi).squaredNorm(); });
}

double weighted_strain_energy(const DisplacementField& u, const ScalarField& weight) {
  if (weight.mesh_ptr() != u.mesh_ptr()) throw PreconditionError("weight lives on another mesh");
  return volume_integral(u.mesh(), [&](int e, const Vec2& xi) {
    return std::abs(weight.value(e, xi)) * u.strain(e, xi).squaredNorm();
  });
}

}  // namespace lamestab
