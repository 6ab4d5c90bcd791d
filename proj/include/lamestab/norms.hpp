#pragma once

#include "lamestab/elasticity.hpp"

namespace lamestab {

/// Infinitesimal rigid displacement a + W x with W = [[0, -w], [w, 0]].
struct RigidMotion {
  Vec2 a = Vec2::Zero();
  double w = 0.0;

  Mat2 W() const {
    Mat2 m;
    m << 0.0, -w, w, 0.0;
    return m;
  }
  Vec2 operator()(const Vec2& x) const { return a + w * Vec2(-x.y(), x.x()); }
};

/// Fourier-weighted boundary norm (P sum_k (1 + k~^2)^s |g_k|^2)^{1/2} summed
/// over both components, k~ = 2 pi k / P. Exact Sobolev norm on the circle,
/// an equivalent norm on other smooth loops.
double boundary_sobolev_norm(const BoundaryTrace& g, double s);
/// Matching inner product.
double boundary_sobolev_inner(const BoundaryTrace& f, const BoundaryTrace& g, double s);

struct RigidDistance {
  double theta = 0.0;
  RigidMotion minimizer;
  /// H^{1/2} norm of the rigid part; theta^2 + projection^2 = ||g||^2.
  double projection_norm = 0.0;
};

/// min over rigid motions r of ||g - r||_{H^{1/2}} from the 3x3 normal
/// equations. Throws GeometryError when the Gram matrix is singular.
RigidDistance rigid_motion_distance(const BoundaryTrace& g);

/// ||g||_{H^1} / theta(g). Throws PreconditionError when g is rigid.
double frequency(const BoundaryTrace& g);

struct BoundaryNormTable {
  double h_half = 0.0;
  double h_one = 0.0;
  double h_three_half = 0.0;
  RigidDistance rigid;
  /// Infinite when the trace is rigid.
  double frequency = 0.0;
  /// True when the boundary is a circle and the norms are the exact ones.
  bool exact_norm = false;
};
BoundaryNormTable boundary_norm_table(const BoundaryTrace& g);

struct LinfResult {
  double value = 0.0;
  int dof = -1;
  Vec2 point = Vec2::Zero();
};
/// max |field| over dofs of elements flagged in `mask`; ties resolve to the
/// lowest dof index.
LinfResult linf_on_mask(const ScalarField& field, const SubdomainMask& mask);
/// max |field| over boundary dofs.
LinfResult boundary_sup(const ScalarField& field);

/// int_{ball} |e(u)|^2.
double strain_energy_on_ball(const DisplacementField& u, const BallQuadrature& ball);
/// int_{ball} |u - r|^2 for an optional rigid motion r.
double displacement_energy_on_ball(const DisplacementField& u, const BallQuadrature& ball,
                                   const RigidMotion& r = {});

/// Volume integrals over Omega_h with the degree-6 rule.
double l2_norm(const DisplacementField& u);
double gradient_l2_norm(const DisplacementField& u);
double strain_energy(const DisplacementField& u);
/// int |weight| |e(u)|^2.
double weighted_strain_energy(const DisplacementField& u, const ScalarField& weight);

}  // namespace lamestab
