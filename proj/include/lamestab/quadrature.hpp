#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace lamestab {

using Vec2 = Eigen::Vector2d;

/// Symmetric quadrature rule on the reference triangle (0,0), (1,0), (0,1).
/// Weights sum to the reference area 1/2.
struct TriangleRule {
  int degree = 0;
  std::vector<Vec2> points;
  std::vector<double> weights;
};

/// Smallest tabulated rule that integrates polynomials of total degree
/// `degree` exactly. Degrees above 6 are rejected.
const TriangleRule& triangle_rule(int degree);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const LineRule& gauss_legendre(int n);

// Reference-element Lagrange bases. Local P2 node order: vertices 0, 1, 2,
// then midpoints of edges (0,1), (1,2), (2,0).
std::array<double, 3> p1_shape(const Vec2& xi);
std::array<Vec2, 3> p1_shape_grad();
std::array<double, 6> p2_shape(const Vec2& xi);
std::array<Vec2, 6> p2_shape_grad(const Vec2& xi);

}  // namespace lamestab
