#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lamestab/quadrature.hpp"

namespace lamestab {

using Mat2 = Eigen::Matrix2d;

enum class DomainKind { kUnitDisk, kEllipse, kSmoothedSquare };

/// Shape of Omega. Lengths are relative to `scale`: the disk has radius
/// `scale`, the ellipse semi-axes `a*scale` and `b*scale`, the smoothed
/// square half-side `scale` with fillet radius `corner_radius*scale`.
struct DomainSpec {
  DomainKind kind = DomainKind::kUnitDisk;
  double scale = 1.0;
  double a = 1.0;
  double b = 1.0;
  double corner_radius = 0.0;

  static DomainSpec unit_disk(double scale = 1.0);
  static DomainSpec ellipse(double a, double b, double scale = 1.0);
  static DomainSpec smoothed_square(double corner_radius, double scale = 1.0);
};

/// Analytic description of a C^{1,1} closed convex domain centred at the
/// origin, parametrised by arclength counter-clockwise.
class Domain {
 public:
  explicit Domain(const DomainSpec& spec);

  const DomainSpec& spec() const { return spec_; }
  double scale() const { return spec_.scale; }
  double perimeter() const { return perimeter_; }
  double area() const;
  double inradius() const;
  /// Largest distance from the origin to the boundary.
  double outer_radius() const;
  /// Curvature bound of the boundary (the M0 metadata of the C^{1,1} class).
  double max_curvature() const;

  /// Boundary point at arclength `s`, periodic with period perimeter().
  Vec2 boundary_point(double s) const;
  /// Arclength parameter in [0, perimeter) of the boundary point closest in
  /// angle to `p`. Exact for points on the boundary.
  double arclength_of(const Vec2& p) const;
  /// Euclidean distance to the boundary; positive inside, negative outside.
  double signed_distance(const Vec2& p) const;
  bool contains(const Vec2& p) const { return signed_distance(p) > 0.0; }

 private:
  double ellipse_arclength(double t) const;
  double ellipse_parameter(double s) const;

  DomainSpec spec_;
  double perimeter_ = 0.0;
  std::vector<double> ellipse_table_;  // cumulative arclength at t_i = 2*pi*i/n
};

using Triangle = std::array<int, 3>;

/// Conforming triangulation of Omega with its quadratic (P2) node layout.
/// Nodes [0, nv) are the vertices, [nv, nv + ne) the edge midpoints. Midpoints
/// of boundary edges sit on the analytic curve, so elements touching the
/// boundary are curved (isoparametric).
class TriMesh {
 public:
  /// Validates every invariant; throws GeometryError on violation.
  TriMesh(std::shared_ptr<const Domain> domain, std::vector<Vec2> vertices,
          std::vector<Triangle> triangles, std::vector<int> boundary_loop);

  const Domain& domain() const { return *domain_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  std::span<const Vec2> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const std::array<int, 2>> edges() const { return edges_; }
  /// Boundary vertices in counter-clockwise order.
  std::span<const int> boundary_loop() const { return boundary_loop_; }
  /// Unwrapped arclength of each loop vertex, increasing from the first.
  std::span<const double> boundary_arclength() const { return boundary_arclength_; }
  double h_max() const { return h_max_; }
  double min_angle_degrees() const;
  double polygon_area() const;

  std::span<const Vec2> nodes() const { return nodes_; }
  const std::array<int, 6>& element_nodes(int e) const { return element_nodes_[e]; }
  bool is_curved(int e) const { return curved_[e]; }
  bool is_boundary_node(int n) const { return boundary_node_flag_[n]; }
  /// P2 boundary nodes (vertices and curved midpoints) in loop order.
  std::span<const int> boundary_nodes() const { return boundary_nodes_; }
  std::span<const double> boundary_node_arclength() const { return boundary_node_arclength_; }

  /// Isoparametric map of element `e` at reference point `xi`.
  Vec2 map(int e, const Vec2& xi) const;
  /// Jacobian d x / d xi, columns are the images of the reference axes.
  Mat2 jacobian(int e, const Vec2& xi) const;

 private:
  void build_quadratic_layout();
  void validate() const;

  std::shared_ptr<const Domain> domain_;
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<int> boundary_loop_;
  std::vector<double> boundary_arclength_;
  double h_max_ = 0.0;

  std::vector<std::array<int, 2>> edges_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 6>> element_nodes_;
  std::vector<char> curved_;
  std::vector<char> boundary_node_flag_;
  std::vector<int> boundary_nodes_;
  std::vector<double> boundary_node_arclength_;
};

/// Structured ring layout followed by Delaunay edge flips. Requires
/// 0 < h_target < scale / 4.
std::shared_ptr<const TriMesh> build_mesh(const DomainSpec& spec, double h_target);

/// Plain-text mesh exchange: "nv nt nb", vertices, triangles, loop.
void write_mesh(std::ostream& out, const TriMesh& mesh);
std::shared_ptr<const TriMesh> read_mesh(std::istream& in, const DomainSpec& spec);

/// Elements (and their nodes) lying in Omega_d = {dist(x, boundary) > d}.
struct SubdomainMask {
  double d = 0.0;
  std::vector<char> element_flags;
  std::vector<char> vertex_flags;
  std::vector<char> node_flags;

  int count() const;
  bool element(int e) const { return element_flags[e] != 0; }
};

/// Throws EmptySubdomainError when no element qualifies.
SubdomainMask interior_mask(const TriMesh& mesh, double d);

/// Quadrature over B_r(center) ∩ Omega_h. Each point carries its element and
/// reference coordinates so element fields can be evaluated directly.
struct BallQuadrature {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::vector<int> elements;
  std::vector<Vec2> reference_points;
  /// True when the ball is not contained in Omega.
  bool clipped = false;
  /// Total area of straddling leaves classified by their centroid.
  double area_error_bound = 0.0;

  int size() const { return static_cast<int>(points.size()); }
  double area() const;
  template <typename F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t q = 0; q < points.size(); ++q)
      sum += weights[q] * f(elements[q], reference_points[q], points[q]);
    return sum;
  }
};

/// Elements cut by the circle are subdivided in reference coordinates until
/// the area of still-straddling leaves is below 1e-3 r^2 (tightened for
/// elements much smaller than the circumference); those leaves are kept or
/// dropped by their centroid. Fully inside elements use the degree-`order`
/// rule, deep subdivision leaves the centroid rule.
BallQuadrature ball_quadrature(const TriMesh& mesh, const Vec2& center, double r, int order);

}  // namespace lamestab
