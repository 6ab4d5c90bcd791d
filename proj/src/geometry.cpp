#include "lamestab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

#include <fmt/format.h>

#include "lamestab/errors.hpp"

namespace lamestab {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr int kEllipseTable = 1024;

double wrap(double s, double period) {
  double r = std::fmod(s, period);
  if (r < 0.0) r += period;
  return r;
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Vec2 rotate_quarter(const Vec2& p, int quarters) {
  Vec2 q = p;
  for (int i = 0; i < ((quarters % 4) + 4) % 4; ++i) q = Vec2(-q.y(), q.x());
  return q;
}

// Bisection root of the Eberly distance function, e0 >= e1, first quadrant.
double ellipse_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = z1 / (s + 1.0);
    g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
    if (g > 0.0)
      s0 = s;
    else if (g < 0.0)
      s1 = s;
    else
      break;
  }
  return s;
}

double ellipse_distance(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double sbar = ellipse_root(r0, z0, z1, g);
      const double x0 = r0 * y0 / (sbar + r0);
      const double x1 = y1 / (sbar + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(1.0 - xde0 * xde0);
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

}  // namespace

// ---------------------------------------------------------------------------
// DomainSpec / Domain

DomainSpec DomainSpec::unit_disk(double scale) {
  DomainSpec s;
  s.kind = DomainKind::kUnitDisk;
  s.scale = scale;
  return s;
}

DomainSpec DomainSpec::ellipse(double a, double b, double scale) {
  DomainSpec s;
  s.kind = DomainKind::kEllipse;
  s.a = a;
  s.b = b;
  s.scale = scale;
  return s;
}

DomainSpec DomainSpec::smoothed_square(double corner_radius, double scale) {
  DomainSpec s;
  s.kind = DomainKind::kSmoothedSquare;
  s.corner_radius = corner_radius;
  s.scale = scale;
  return s;
}

Domain::Domain(const DomainSpec& spec) : spec_(spec) {
  if (!(spec.scale > 0.0)) throw GeometryError("domain scale must be positive");
  switch (spec.kind) {
    case DomainKind::kUnitDisk:
      perimeter_ = kTwoPi * spec.scale;
      break;
    case DomainKind::kEllipse: {
      if (!(spec.a > 0.0) || !(spec.b > 0.0))
        throw GeometryError("ellipse semi-axes must be positive");
      const double ratio = std::max(spec.a, spec.b) / std::min(spec.a, spec.b);
      if (ratio > 2.0)
        throw GeometryError("ellipse aspect ratio above 2 is not supported by the ring mesher");
      const double A = spec.a * spec.scale, B = spec.b * spec.scale;
      const auto& gl = gauss_legendre(16);
      ellipse_table_.assign(kEllipseTable + 1, 0.0);
      const double dt = kTwoPi / kEllipseTable;
      for (int i = 0; i < kEllipseTable; ++i) {
        double seg = 0.0;
        for (std::size_t q = 0; q < gl.points.size(); ++q) {
          const double t = dt * (i + 0.5 * (gl.points[q] + 1.0));
          seg += 0.5 * dt * gl.weights[q] * std::hypot(A * std::sin(t), B * std::cos(t));
        }
        ellipse_table_[i + 1] = ellipse_table_[i] + seg;
      }
      perimeter_ = ellipse_table_.back();
      break;
    }
    case DomainKind::kSmoothedSquare: {
      if (!(spec.corner_radius > 0.0))
        throw GeometryError(
            "smoothed_square needs corner_radius > 0: a sharp corner is not C^{1,1}");
      if (spec.corner_radius > 1.0)
        throw GeometryError("smoothed_square corner_radius must not exceed the half-side");
      const double s = spec.scale, rc = spec.corner_radius * spec.scale;
      perimeter_ = 8.0 * (s - rc) + kTwoPi * rc;
      break;
    }
  }
}

double Domain::area() const {
  const double s = spec_.scale;
  switch (spec_.kind) {
    case DomainKind::kUnitDisk:
      return M_PI * s * s;
    case DomainKind::kEllipse:
      return M_PI * spec_.a * spec_.b * s * s;
    case DomainKind::kSmoothedSquare: {
      const double rc = spec_.corner_radius * s;
      return 4.0 * s * s - (4.0 - M_PI) * rc * rc;
    }
  }
  return 0.0;
}

double Domain::inradius() const {
  switch (spec_.kind) {
    case DomainKind::kUnitDisk:
      return spec_.scale;
    case DomainKind::kEllipse:
      return std::min(spec_.a, spec_.b) * spec_.scale;
    case DomainKind::kSmoothedSquare:
      return spec_.scale;
  }
  return 0.0;
}

double Domain::outer_radius() const {
  switch (spec_.kind) {
    case DomainKind::kUnitDisk:
      return spec_.scale;
    case DomainKind::kEllipse:
      return std::max(spec_.a, spec_.b) * spec_.scale;
    case DomainKind::kSmoothedSquare: {
      const double s = spec_.scale, rc = spec_.corner_radius * s;
      return std::sqrt(2.0) * (s - rc) + rc;
    }
  }
  return 0.0;
}

double Domain::max_curvature() const {
  const double s = spec_.scale;
  switch (spec_.kind) {
    case DomainKind::kUnitDisk:
      return 1.0 / s;
    case DomainKind::kEllipse: {
      const double A = spec_.a * s, B = spec_.b * s;
      return std::max(A / (B * B), B / (A * A));
    }
    case DomainKind::kSmoothedSquare:
      return 1.0 / (spec_.corner_radius * s);
  }
  return 0.0;
}

double Domain::ellipse_arclength(double t) const {
  const double A = spec_.a * spec_.scale, B = spec_.b * spec_.scale;
  const double dt = kTwoPi / kEllipseTable;
  const int turns = static_cast<int>(std::floor(t / kTwoPi));
  const double tw = t - turns * kTwoPi;
  int i = std::min(static_cast<int>(tw / dt), kEllipseTable - 1);
  const double t0 = i * dt;
  const double len = tw - t0;
  const auto& gl = gauss_legendre(16);
  double seg = 0.0;
  for (std::size_t q = 0; q < gl.points.size(); ++q) {
    const double tt = t0 + 0.5 * len * (gl.points[q] + 1.0);
    seg += 0.5 * len * gl.weights[q] * std::hypot(A * std::sin(tt), B * std::cos(tt));
  }
  return turns * perimeter_ + ellipse_table_[i] + seg;
}

double Domain::ellipse_parameter(double s) const {
  const double A = spec_.a * spec_.scale, B = spec_.b * spec_.scale;
  const double sw = wrap(s, perimeter_);
  auto it = std::upper_bound(ellipse_table_.begin(), ellipse_table_.end(), sw);
  const int i = std::clamp(static_cast<int>(it - ellipse_table_.begin()) - 1, 0, kEllipseTable - 1);
  const double dt = kTwoPi / kEllipseTable;
  double t = i * dt + dt * (sw - ellipse_table_[i]) / (ellipse_table_[i + 1] - ellipse_table_[i]);
  for (int k = 0; k < 30; ++k) {
    const double f = ellipse_arclength(t) - sw;
    const double step = f / std::hypot(A * std::sin(t), B * std::cos(t));
    t -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return t;
}

Vec2 Domain::boundary_point(double s) const {
  const double sc = spec_.scale;
  switch (spec_.kind) {
    case DomainKind::kUnitDisk: {
      const double th = wrap(s, perimeter_) / sc;
      return Vec2(sc * std::cos(th), sc * std::sin(th));
    }
    case DomainKind::kEllipse: {
      const double t = ellipse_parameter(s);
      return Vec2(spec_.a * sc * std::cos(t), spec_.b * sc * std::sin(t));
    }
    case DomainKind::kSmoothedSquare: {
      const double rc = spec_.corner_radius * sc;
      const double flat = sc - rc;
      const double quarter = perimeter_ / 4.0;
      const double sw = wrap(s, perimeter_);
      const int q = std::min(static_cast<int>(sw / quarter), 3);
      const double tau = sw - q * quarter;
      Vec2 p;
      if (tau < flat) {
        p = Vec2(sc, tau);
      } else if (tau < flat + 0.5 * M_PI * rc) {
        const double alpha = (tau - flat) / rc;
        p = Vec2(flat + rc * std::cos(alpha), flat + rc * std::sin(alpha));
      } else {
        p = Vec2(flat - (tau - flat - 0.5 * M_PI * rc), sc);
      }
      return rotate_quarter(p, q);
    }
  }
  return Vec2::Zero();
}

double Domain::arclength_of(const Vec2& p) const {
  const double sc = spec_.scale;
  switch (spec_.kind) {
    case DomainKind::kUnitDisk:
      return wrap(std::atan2(p.y(), p.x()), kTwoPi) * sc;
    case DomainKind::kEllipse: {
      const double t = wrap(std::atan2(p.y() / (spec_.b * sc), p.x() / (spec_.a * sc)), kTwoPi);
      return wrap(ellipse_arclength(t), perimeter_);
    }
    case DomainKind::kSmoothedSquare: {
      const double rc = spec_.corner_radius * sc;
      const double flat = sc - rc;
      const double quarter = perimeter_ / 4.0;
      const double phi = wrap(std::atan2(p.y(), p.x()), kTwoPi);
      const int q = std::min(static_cast<int>(phi / (0.5 * M_PI)), 3);
      const Vec2 r = rotate_quarter(p, -q);
      double tau;
      if (r.y() <= flat) {
        tau = std::max(r.y(), 0.0);
      } else if (r.x() <= flat) {
        tau = flat + 0.5 * M_PI * rc + (flat - r.x());
      } else {
        tau = flat + rc * std::atan2(r.y() - flat, r.x() - flat);
      }
      return wrap(q * quarter + tau, perimeter_);
    }
  }
  return 0.0;
}

double Domain::signed_distance(const Vec2& p) const {
  const double sc = spec_.scale;
  switch (spec_.kind) {
    case DomainKind::kUnitDisk:
      return sc - p.norm();
    case DomainKind::kEllipse: {
      double e0 = spec_.a * sc, e1 = spec_.b * sc;
      double y0 = std::abs(p.x()), y1 = std::abs(p.y());
      if (e1 > e0) {
        std::swap(e0, e1);
        std::swap(y0, y1);
      }
      const double dist = ellipse_distance(e0, e1, y0, y1);
      const double level = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1);
      return level <= 1.0 ? dist : -dist;
    }
    case DomainKind::kSmoothedSquare: {
      const double rc = spec_.corner_radius * sc;
      const double flat = sc - rc;
      const double qx = std::abs(p.x()) - flat, qy = std::abs(p.y()) - flat;
      const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
      const double inside = std::min(std::max(qx, qy), 0.0);
      return -(outside + inside - rc);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// TriMesh

TriMesh::TriMesh(std::shared_ptr<const Domain> domain, std::vector<Vec2> vertices,
                 std::vector<Triangle> triangles, std::vector<int> boundary_loop)
    : domain_(std::move(domain)),
      vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_loop_(std::move(boundary_loop)) {
  if (!domain_) throw GeometryError("mesh requires a domain");
  if (triangles_.empty() || boundary_loop_.size() < 3)
    throw GeometryError("mesh needs triangles and a boundary loop of at least 3 vertices");
  for (const auto& t : triangles_)
    for (int v : t)
      if (v < 0 || v >= num_vertices()) throw GeometryError("triangle references a missing vertex");
  for (int v : boundary_loop_)
    if (v < 0 || v >= num_vertices()) throw GeometryError("boundary loop references a missing vertex");

  const double P = domain_->perimeter();
  boundary_arclength_.resize(boundary_loop_.size() + 1);
  double prev = domain_->arclength_of(vertices_[boundary_loop_[0]]);
  boundary_arclength_[0] = prev;
  for (std::size_t i = 1; i <= boundary_loop_.size(); ++i) {
    const double raw = domain_->arclength_of(vertices_[boundary_loop_[i % boundary_loop_.size()]]);
    double step = wrap(raw - wrap(prev, P), P);
    if (i == boundary_loop_.size() && step == 0.0) step = P;
    prev += step;
    boundary_arclength_[i] = prev;
  }

  build_quadratic_layout();
  validate();
}

void TriMesh::build_quadratic_layout() {
  const int nt = num_triangles();
  struct HalfEdge {
    int lo, hi, tri, local;
  };
  std::vector<HalfEdge> half;
  half.reserve(3 * nt);
  for (int e = 0; e < nt; ++e)
    for (int k = 0; k < 3; ++k) {
      const int a = triangles_[e][k], b = triangles_[e][(k + 1) % 3];
      half.push_back({std::min(a, b), std::max(a, b), e, k});
    }
  std::sort(half.begin(), half.end(), [](const HalfEdge& x, const HalfEdge& y) {
    return std::tie(x.lo, x.hi, x.tri) < std::tie(y.lo, y.hi, y.tri);
  });

  std::vector<std::array<int, 3>> tri_edge(nt);
  std::vector<int> edge_use;
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({half[i].lo, half[i].hi});
    while (j < half.size() && half[j].lo == half[i].lo && half[j].hi == half[i].hi) {
      tri_edge[half[j].tri][half[j].local] = id;
      ++j;
    }
    edge_use.push_back(static_cast<int>(j - i));
    if (j - i > 2) throw GeometryError("non-manifold edge shared by more than two triangles");
    i = j;
  }

  const int nv = num_vertices();
  const int nb = static_cast<int>(boundary_loop_.size());
  nodes_.assign(vertices_.begin(), vertices_.end());
  nodes_.resize(nv + edges_.size());
  for (std::size_t k = 0; k < edges_.size(); ++k)
    nodes_[nv + k] = 0.5 * (vertices_[edges_[k][0]] + vertices_[edges_[k][1]]);

  boundary_node_flag_.assign(nodes_.size(), 0);
  std::map<std::pair<int, int>, int> loop_edge;
  for (int i = 0; i < nb; ++i) {
    const int a = boundary_loop_[i], b = boundary_loop_[(i + 1) % nb];
    loop_edge[{std::min(a, b), std::max(a, b)}] = i;
  }
  std::vector<int> loop_mid(nb, -1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (edge_use[k] != 1) continue;
    auto it = loop_edge.find({edges_[k][0], edges_[k][1]});
    if (it == loop_edge.end())
      throw GeometryError("boundary edge not covered by the boundary loop");
    const int i = it->second;
    const double s_mid = 0.5 * (boundary_arclength_[i] + boundary_arclength_[i + 1]);
    nodes_[nv + k] = domain_->boundary_point(s_mid);
    loop_mid[i] = nv + static_cast<int>(k);
  }
  for (int i = 0; i < nb; ++i) {
    if (loop_mid[i] < 0) throw GeometryError("boundary loop edge is not a mesh boundary edge");
    boundary_nodes_.push_back(boundary_loop_[i]);
    boundary_node_arclength_.push_back(boundary_arclength_[i]);
    boundary_nodes_.push_back(loop_mid[i]);
    boundary_node_arclength_.push_back(0.5 * (boundary_arclength_[i] + boundary_arclength_[i + 1]));
  }
  for (int n : boundary_nodes_) boundary_node_flag_[n] = 1;

  element_nodes_.resize(nt);
  curved_.assign(nt, 0);
  for (int e = 0; e < nt; ++e) {
    const auto& t = triangles_[e];
    element_nodes_[e] = {t[0], t[1], t[2], nv + tri_edge[e][0], nv + tri_edge[e][1],
                         nv + tri_edge[e][2]};
    for (int k = 0; k < 3; ++k)
      if (edge_use[tri_edge[e][k]] == 1) curved_[e] = 1;
  }

  h_max_ = 0.0;
  for (const auto& ed : edges_)
    h_max_ = std::max(h_max_, (vertices_[ed[0]] - vertices_[ed[1]]).norm());
}

void TriMesh::validate() const {
  const double scale = domain_->scale();
  const double area_tol = 1e-14 * scale * scale;
  for (int e = 0; e < num_triangles(); ++e) {
    const auto& t = triangles_[e];
    const double a2 = cross(vertices_[t[1]] - vertices_[t[0]], vertices_[t[2]] - vertices_[t[0]]);
    if (!(a2 > area_tol))
      throw GeometryError(fmt::format("triangle {} is not positively oriented", e));
  }

  // Interior edges must be traversed in opposite directions by their two
  // triangles, boundary edges in the loop direction.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : triangles_)
    for (int k = 0; k < 3; ++k) {
      const auto key = std::make_pair(t[k], t[(k + 1) % 3]);
      if (++directed[key] > 1) throw GeometryError("non-conforming mesh: duplicated directed edge");
    }
  const int nb = static_cast<int>(boundary_loop_.size());
  std::vector<char> seen(num_vertices(), 0);
  for (int i = 0; i < nb; ++i) {
    const int a = boundary_loop_[i], b = boundary_loop_[(i + 1) % nb];
    if (seen[a]++) throw GeometryError("boundary loop visits a vertex twice");
    if (!directed.count({a, b}) || directed.count({b, a}))
      throw GeometryError("boundary loop is not a counter-clockwise boundary curve");
  }
  int boundary_edges = 0;
  for (const auto& [key, count] : directed)
    if (!directed.count({key.second, key.first})) ++boundary_edges;
  if (boundary_edges != nb)
    throw GeometryError("boundary loop does not cover every boundary edge");

  for (int v : boundary_loop_) {
    if (std::abs(domain_->signed_distance(vertices_[v])) > 1e-10 * scale)
      throw GeometryError(fmt::format("boundary vertex {} is off the analytic boundary", v));
  }

  // Triangle areas must tile the boundary polygon exactly.
  double loop_area = 0.0;
  for (int i = 0; i < nb; ++i)
    loop_area += 0.5 * cross(vertices_[boundary_loop_[i]], vertices_[boundary_loop_[(i + 1) % nb]]);
  if (std::abs(polygon_area() - loop_area) > 1e-9 * std::abs(loop_area))
    throw GeometryError("triangles overlap or leave gaps inside the boundary loop");

  const auto& rule = triangle_rule(4);
  for (int e = 0; e < num_triangles(); ++e) {
    if (!curved_[e]) continue;
    for (const auto& xi : rule.points)
      if (!(jacobian(e, xi).determinant() > 0.0))
        throw GeometryError(fmt::format("curved element {} has a folded map", e));
  }
}

double TriMesh::polygon_area() const {
  double total = 0.0;
  for (const auto& t : triangles_)
    total += 0.5 * cross(vertices_[t[1]] - vertices_[t[0]], vertices_[t[2]] - vertices_[t[0]]);
  return total;
}

double TriMesh::min_angle_degrees() const {
  double worst = 180.0;
  for (const auto& t : triangles_)
    for (int k = 0; k < 3; ++k) {
      const Vec2 u = vertices_[t[(k + 1) % 3]] - vertices_[t[k]];
      const Vec2 w = vertices_[t[(k + 2) % 3]] - vertices_[t[k]];
      const double ang = std::atan2(std::abs(cross(u, w)), u.dot(w)) * 180.0 / M_PI;
      worst = std::min(worst, ang);
    }
  return worst;
}

Vec2 TriMesh::map(int e, const Vec2& xi) const {
  const auto& n = element_nodes_[e];
  if (!curved_[e]) {
    const Vec2& p0 = nodes_[n[0]];
    return p0 + xi.x() * (nodes_[n[1]] - p0) + xi.y() * (nodes_[n[2]] - p0);
  }
  const auto N = p2_shape(xi);
  Vec2 x = Vec2::Zero();
  for (int i = 0; i < 6; ++i) x += N[i] * nodes_[n[i]];
  return x;
}

Mat2 TriMesh::jacobian(int e, const Vec2& xi) const {
  const auto& n = element_nodes_[e];
  Mat2 J;
  if (!curved_[e]) {
    const Vec2& p0 = nodes_[n[0]];
    J.col(0) = nodes_[n[1]] - p0;
    J.col(1) = nodes_[n[2]] - p0;
    return J;
  }
  const auto dN = p2_shape_grad(xi);
  J.setZero();
  for (int i = 0; i < 6; ++i) J += nodes_[n[i]] * dN[i].transpose();
  return J;
}

// ---------------------------------------------------------------------------
// Mesh text format

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.boundary_loop().size()
      << '\n';
  for (const auto& v : mesh.vertices()) out << fmt::format("{:.17g} {:.17g}\n", v.x(), v.y());
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (int v : mesh.boundary_loop()) out << v << '\n';
}

std::shared_ptr<const TriMesh> read_mesh(std::istream& in, const DomainSpec& spec) {
  long nv = -1, nt = -1, nb = -1;
  if (!(in >> nv >> nt >> nb) || nv <= 0 || nt <= 0 || nb <= 0)
    throw GeometryError("mesh file: bad header, expected \"nv nt nb\"");
  std::vector<Vec2> vertices(nv);
  for (auto& v : vertices) {
    std::string xs, ys;
    if (!(in >> xs >> ys)) throw GeometryError("mesh file: truncated vertex block");
    v = Vec2(std::stod(xs), std::stod(ys));
  }
  std::vector<Triangle> triangles(nt);
  for (auto& t : triangles)
    if (!(in >> t[0] >> t[1] >> t[2])) throw GeometryError("mesh file: truncated triangle block");
  std::vector<int> loop(nb);
  for (auto& v : loop)
    if (!(in >> v)) throw GeometryError("mesh file: truncated boundary loop");
  return std::make_shared<const TriMesh>(std::make_shared<const Domain>(spec), std::move(vertices),
                                         std::move(triangles), std::move(loop));
}

// ---------------------------------------------------------------------------
// Omega_d

int SubdomainMask::count() const {
  return static_cast<int>(std::count(element_flags.begin(), element_flags.end(), 1));
}

SubdomainMask interior_mask(const TriMesh& mesh, double d) {
  if (!(d > 0.0)) throw PreconditionError("interior_mask requires d > 0");
  SubdomainMask mask;
  mask.d = d;
  const auto verts = mesh.vertices();
  std::vector<double> dist(verts.size());
  for (std::size_t v = 0; v < verts.size(); ++v) dist[v] = mesh.domain().signed_distance(verts[v]);
  mask.element_flags.assign(mesh.num_triangles(), 0);
  mask.vertex_flags.assign(mesh.num_vertices(), 0);
  mask.node_flags.assign(mesh.num_nodes(), 0);
  int flagged = 0;
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    if (dist[t[0]] > d && dist[t[1]] > d && dist[t[2]] > d) {
      mask.element_flags[e] = 1;
      ++flagged;
      for (int v : t) mask.vertex_flags[v] = 1;
      for (int n : mesh.element_nodes(e)) mask.node_flags[n] = 1;
    }
  }
  if (flagged == 0)
    throw EmptySubdomainError(d, fmt::format("Omega_d is empty at this resolution (d = {})", d));
  return mask;
}

// ---------------------------------------------------------------------------
// Ball quadrature

double BallQuadrature::area() const {
  double a = 0.0;
  for (double w : weights) a += w;
  return a;
}

namespace {

enum class Side { kInside, kOutside, kStraddle };

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

Side classify(const Vec2& c, double r, const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  const double r2 = r * r;
  if ((p0 - c).squaredNorm() <= r2 && (p1 - c).squaredNorm() <= r2 && (p2 - c).squaredNorm() <= r2)
    return Side::kInside;
  const double s0 = cross(p1 - p0, c - p0), s1 = cross(p2 - p1, c - p1), s2 = cross(p0 - p2, c - p2);
  const bool contains = (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
  if (contains) return Side::kStraddle;
  const double dist = std::min({point_segment_distance(c, p0, p1), point_segment_distance(c, p1, p2),
                                point_segment_distance(c, p2, p0)});
  return dist >= r ? Side::kOutside : Side::kStraddle;
}

struct RefTri {
  Vec2 a, b, c;
};

}  // namespace

BallQuadrature ball_quadrature(const TriMesh& mesh, const Vec2& center, double r, int order) {
  BallQuadrature ball;
  ball.center = center;
  ball.radius = r;
  if (!(r > 0.0)) return ball;
  ball.clipped = mesh.domain().signed_distance(center) < r;

  const auto& rule = triangle_rule(order);
  const auto& centroid_rule = triangle_rule(1);
  constexpr int kMaxDepth = 14;

  auto emit = [&](int e, const RefTri& t, const TriangleRule& use) {
    const double det_sub = std::abs(cross(t.b - t.a, t.c - t.a));
    for (std::size_t q = 0; q < use.points.size(); ++q) {
      const Vec2 xi = t.a + use.points[q].x() * (t.b - t.a) + use.points[q].y() * (t.c - t.a);
      const double w = use.weights[q] * det_sub * std::abs(mesh.jacobian(e, xi).determinant());
      ball.points.push_back(mesh.map(e, xi));
      ball.weights.push_back(w);
      ball.elements.push_back(e);
      ball.reference_points.push_back(xi);
    }
  };

  const auto verts = mesh.vertices();
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    const auto& n = mesh.element_nodes(e);
    // Bounding-box rejection (curved midpoints included).
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (int k = 0; k < 6; ++k) {
      const Vec2& p = mesh.nodes()[n[k]];
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
    const double dx = std::max({xmin - center.x(), 0.0, center.x() - xmax});
    const double dy = std::max({ymin - center.y(), 0.0, center.y() - ymax});
    if (dx * dx + dy * dy >= r * r) continue;

    const RefTri root{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    const Vec2 p0 = mesh.map(e, root.a), p1 = mesh.map(e, root.b), p2 = mesh.map(e, root.c);
    const Side side0 = classify(center, r, p0, p1, p2);
    if (side0 == Side::kOutside && !mesh.is_curved(e)) continue;
    if (side0 == Side::kInside && !mesh.is_curved(e)) {
      emit(e, root, rule);
      continue;
    }

    const double elem_area = 0.5 * std::abs(cross(p1 - p0, p2 - p0));
    const double h_e = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
    const double budget = 1e-3 * r * r * std::min(1.0, 4.0 * h_e / (2.0 * M_PI * r));

    std::vector<RefTri> level{root};
    for (int depth = 0; !level.empty(); ++depth) {
      std::vector<RefTri> straddle;
      double straddle_area = 0.0;
      for (const auto& t : level) {
        const Vec2 q0 = mesh.map(e, t.a), q1 = mesh.map(e, t.b), q2 = mesh.map(e, t.c);
        const Side s = classify(center, r, q0, q1, q2);
        if (s == Side::kInside) {
          emit(e, t, depth <= 1 ? rule : centroid_rule);
        } else if (s == Side::kStraddle) {
          straddle.push_back(t);
          straddle_area += 0.5 * std::abs(cross(q1 - q0, q2 - q0));
        }
      }
      if (straddle.empty()) break;
      if (straddle_area <= budget || depth >= kMaxDepth || straddle_area <= 1e-16 * elem_area) {
        for (const auto& t : straddle) {
          const Vec2 xc = mesh.map(e, (t.a + t.b + t.c) / 3.0);
          if ((xc - center).squaredNorm() <= r * r) emit(e, t, depth <= 1 ? rule : centroid_rule);
        }
        ball.area_error_bound += straddle_area;
        break;
      }
      level.clear();
      level.reserve(4 * straddle.size());
      for (const auto& t : straddle) {
        const Vec2 ab = 0.5 * (t.a + t.b), bc = 0.5 * (t.b + t.c), ca = 0.5 * (t.c + t.a);
        level.push_back({t.a, ab, ca});
        level.push_back({ab, t.b, bc});
        level.push_back({ca, bc, t.c});
        level.push_back({ab, bc, ca});
      }
    }
  }
  return ball;
}

}  // namespace lamestab
