#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "lamestab/errors.hpp"
#include "lamestab/geometry.hpp"

using namespace lamestab;

namespace {

double curved_area(const TriMesh& mesh) {
  const auto& rule = triangle_rule(4);
  double total = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e)
    for (std::size_t q = 0; q < rule.points.size(); ++q)
      total += rule.weights[q] * mesh.jacobian(e, rule.points[q]).determinant();
  return total;
}

}  // namespace

TEST(Domain, DiskMetadata) {
  Domain disk(DomainSpec::unit_disk());
  EXPECT_NEAR(disk.perimeter(), 2 * M_PI, 1e-14);
  EXPECT_NEAR(disk.area(), M_PI, 1e-14);
  EXPECT_DOUBLE_EQ(disk.max_curvature(), 1.0);
  EXPECT_NEAR(disk.signed_distance(Vec2(0.3, 0.4)), 0.5, 1e-15);
  EXPECT_NEAR(disk.signed_distance(Vec2(2.0, 0.0)), -1.0, 1e-15);
}

TEST(Domain, EllipsePerimeterMatchesRamanujan) {
  Domain ell(DomainSpec::ellipse(1.0, 0.6));
  const double a = 1.0, b = 0.6;
  const double hh = std::pow(a - b, 2) / std::pow(a + b, 2);
  // Ramanujan's second approximation is accurate to ~1e-10 at this eccentricity.
  const double ramanujan = M_PI * (a + b) * (1 + 3 * hh / (10 + std::sqrt(4 - 3 * hh)));
  EXPECT_NEAR(ell.perimeter(), ramanujan, 1e-8);
  EXPECT_NEAR(ell.max_curvature(), 1.0 / 0.36, 1e-12);
}

TEST(Domain, EllipseArclengthRoundTrip) {
  Domain ell(DomainSpec::ellipse(1.0, 0.6, 2.0));
  for (int i = 0; i < 50; ++i) {
    const double s = ell.perimeter() * i / 50.0;
    const Vec2 p = ell.boundary_point(s);
    EXPECT_NEAR(ell.signed_distance(p), 0.0, 1e-12);
    EXPECT_NEAR(ell.arclength_of(p), s, 1e-10);
  }
  // Consecutive points are equally spaced in arclength: chord ~ ds.
  const double ds = ell.perimeter() / 2000.0;
  for (int i = 0; i < 2000; i += 97) {
    const double chord = (ell.boundary_point((i + 1) * ds) - ell.boundary_point(i * ds)).norm();
    EXPECT_NEAR(chord, ds, 1e-6);
  }
}

TEST(Domain, EllipseDistanceAgainstBruteForce) {
  Domain ell(DomainSpec::ellipse(1.0, 0.7));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int k = 0; k < 30; ++k) {
    const Vec2 p(u(rng), 0.7 * u(rng));
    double best = 1e300;
    for (int i = 0; i < 200000; ++i) {
      const double t = 2 * M_PI * i / 200000.0;
      best = std::min(best, (p - Vec2(std::cos(t), 0.7 * std::sin(t))).norm());
    }
    const double sign = std::pow(p.x(), 2) + std::pow(p.y() / 0.7, 2) < 1 ? 1.0 : -1.0;
    EXPECT_NEAR(ell.signed_distance(p), sign * best, 1e-7);
  }
}

TEST(Domain, SmoothedSquare) {
  Domain sq(DomainSpec::smoothed_square(0.25));
  EXPECT_NEAR(sq.area(), 4.0 - (4.0 - M_PI) * 0.0625, 1e-14);
  EXPECT_NEAR(sq.perimeter(), 8 * 0.75 + 2 * M_PI * 0.25, 1e-14);
  EXPECT_DOUBLE_EQ(sq.max_curvature(), 4.0);
  for (int i = 0; i < 64; ++i) {
    const double s = sq.perimeter() * (i + 0.3) / 64.0;
    const Vec2 p = sq.boundary_point(s);
    EXPECT_NEAR(sq.signed_distance(p), 0.0, 1e-13);
    EXPECT_NEAR(sq.arclength_of(p), s, 1e-12);
  }
  EXPECT_NEAR(sq.signed_distance(Vec2(0.5, 0.0)), 0.5, 1e-15);
  EXPECT_THROW(Domain(DomainSpec::smoothed_square(0.0)), GeometryError);
}

TEST(BuildMesh, CoarseDiskVerticesOnCircle) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.24);
  for (const auto& v : mesh->vertices()) EXPECT_LE(v.norm(), 1.0 + 1e-12);
  for (int b : mesh->boundary_loop()) EXPECT_NEAR(mesh->vertices()[b].norm(), 1.0, 1e-10);
}

TEST(BuildMesh, RejectsBadSizes) {
  EXPECT_THROW(build_mesh(DomainSpec::unit_disk(), 0.5), PreconditionError);
  EXPECT_THROW(build_mesh(DomainSpec::unit_disk(), 0.0), PreconditionError);
  EXPECT_THROW(build_mesh(DomainSpec::smoothed_square(0.0), 0.1), GeometryError);
}

TEST(BuildMesh, DiskAreaAndQuality) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.1);
  EXPECT_LT(std::abs(mesh->polygon_area() - M_PI), 0.01);
  EXPECT_LE(mesh->h_max(), 0.15);
  EXPECT_GE(mesh->min_angle_degrees(), 20.0);
  // Curved elements recover the disk area far beyond the polygonal bound.
  EXPECT_NEAR(curved_area(*mesh), M_PI, 1e-5);
}

TEST(BuildMesh, AreaConsistencyForAllKinds) {
  for (const auto& spec : {DomainSpec::unit_disk(), DomainSpec::ellipse(1.0, 0.6),
                           DomainSpec::smoothed_square(0.3)}) {
    auto mesh = build_mesh(spec, 0.08);
    const Domain& dom = mesh->domain();
    EXPECT_LE(std::abs(mesh->polygon_area() - dom.area()), 2 * mesh->h_max() * dom.perimeter());
    EXPECT_LE(mesh->h_max(), 1.5 * 0.08);
    EXPECT_GE(mesh->min_angle_degrees(), 20.0);
    EXPECT_NEAR(curved_area(*mesh), dom.area(), 1e-4 * dom.area());
  }
}

TEST(BuildMesh, BoundaryApproximationConvergesUnderRefinement) {
  for (const auto& spec : {DomainSpec::unit_disk(), DomainSpec::smoothed_square(0.4)}) {
    const double e1 = std::abs(build_mesh(spec, 0.1)->polygon_area() - Domain(spec).area());
    const double e2 = std::abs(build_mesh(spec, 0.05)->polygon_area() - Domain(spec).area());
    EXPECT_GE(e1 / e2, 1.8);
  }
}

TEST(BuildMesh, QuadraticLayout) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.2);
  EXPECT_EQ(mesh->num_nodes(), mesh->num_vertices() + mesh->num_edges());
  EXPECT_EQ(mesh->boundary_nodes().size(), 2 * mesh->boundary_loop().size());
  for (int n : mesh->boundary_nodes()) EXPECT_NEAR(mesh->nodes()[n].norm(), 1.0, 1e-12);
  // Euler characteristic of a disk.
  EXPECT_EQ(mesh->num_vertices() - mesh->num_edges() + mesh->num_triangles(), 1);
}

TEST(MeshIo, RoundTripIsExact) {
  auto mesh = build_mesh(DomainSpec::ellipse(1.0, 0.8), 0.15);
  std::stringstream buf;
  write_mesh(buf, *mesh);
  auto back = read_mesh(buf, DomainSpec::ellipse(1.0, 0.8));
  ASSERT_EQ(back->num_vertices(), mesh->num_vertices());
  for (int v = 0; v < mesh->num_vertices(); ++v)
    EXPECT_EQ(back->vertices()[v], mesh->vertices()[v]);
  std::stringstream again;
  write_mesh(again, *back);
  std::stringstream first;
  write_mesh(first, *mesh);
  EXPECT_EQ(first.str(), again.str());
}

TEST(MeshIo, RejectsInvertedTriangle) {
  std::stringstream buf;
  buf << "4 2 4\n1 0\n0 1\n-1 0\n0 -1\n0 2 1\n0 2 3\n0\n1\n2\n3\n";
  EXPECT_THROW(read_mesh(buf, DomainSpec::unit_disk()), GeometryError);
}

TEST(MeshIo, RejectsOffBoundaryVertex) {
  std::stringstream buf;
  buf << "4 2 4\n1 0\n0 1\n-0.9 0\n0 -1\n0 1 2\n0 2 3\n0\n1\n2\n3\n";
  EXPECT_THROW(read_mesh(buf, DomainSpec::unit_disk()), GeometryError);
}

TEST(InteriorMask, HalfRadiusArea) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.02);
  const auto mask = interior_mask(*mesh, 0.5);
  double area = 0.0;
  for (int e = 0; e < mesh->num_triangles(); ++e) {
    if (!mask.element(e)) continue;
    const auto& t = mesh->triangles()[e];
    const auto v = mesh->vertices();
    const Vec2 a = v[t[1]] - v[t[0]], b = v[t[2]] - v[t[0]];
    area += 0.5 * (a.x() * b.y() - a.y() * b.x());
    for (int k : t) EXPECT_GT(1.0 - v[k].norm(), 0.5);
  }
  EXPECT_NEAR(area, M_PI / 4, 0.1 * M_PI / 4);
}

TEST(InteriorMask, NestingAndLimits) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.1);
  EXPECT_THROW(interior_mask(*mesh, 1.0), EmptySubdomainError);
  EXPECT_THROW(interior_mask(*mesh, 0.0), PreconditionError);
  const auto tiny = interior_mask(*mesh, 1e-9);
  int interior = 0;
  for (int e = 0; e < mesh->num_triangles(); ++e) {
    bool off_boundary = true;
    for (int v : mesh->triangles()[e])
      if (std::abs(mesh->vertices()[v].norm() - 1.0) < 1e-10) off_boundary = false;
    if (off_boundary) ++interior;
  }
  EXPECT_EQ(tiny.count(), interior);
  const double ds[] = {0.05, 0.1, 0.2, 0.4, 0.7};
  for (int i = 0; i + 1 < 5; ++i) {
    const auto outer = interior_mask(*mesh, ds[i]);
    const auto inner = interior_mask(*mesh, ds[i + 1]);
    for (int e = 0; e < mesh->num_triangles(); ++e)
      if (inner.element(e)) EXPECT_TRUE(outer.element(e));
  }
}

TEST(BallQuadratureTest, AreaOfInteriorBall) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.05);
  const auto ball = ball_quadrature(*mesh, Vec2::Zero(), 0.3, 4);
  EXPECT_FALSE(ball.clipped);
  EXPECT_NEAR(ball.area(), M_PI * 0.09, 1e-3 * M_PI * 0.09);
  for (const auto& p : ball.points) EXPECT_LE(p.norm(), 0.3 + 1e-12);
  for (double w : ball.weights) EXPECT_GT(w, 0.0);
  const double first_moment = ball.integrate([](int, const Vec2&, const Vec2& x) { return x.x(); });
  EXPECT_NEAR(first_moment, 0.0, 1e-6);
}

TEST(BallQuadratureTest, ZeroRadiusIsEmpty) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.1);
  const auto ball = ball_quadrature(*mesh, Vec2(0.1, 0.2), 0.0, 4);
  EXPECT_EQ(ball.size(), 0);
  EXPECT_EQ(ball.area(), 0.0);
}

TEST(BallQuadratureTest, RandomBallsMatchAnalyticArea) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.04);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double r = 0.02 + 0.2 * (u(rng) + 1.0) / 2.0;
    Vec2 c(u(rng), u(rng));
    c *= (1.0 - r - 0.01) * std::min(1.0, 1.0 / c.norm()) * 0.9;
    const auto ball = ball_quadrature(*mesh, c, r, 4);
    EXPECT_NEAR(ball.area(), M_PI * r * r, 1e-3 * M_PI * r * r) << "r=" << r;
    // Per-element straddle budget is 1e-3 r^2.
    std::set<int> touched(ball.elements.begin(), ball.elements.end());
    EXPECT_LE(ball.area_error_bound, 1e-3 * r * r * touched.size());
  }
}

TEST(BallQuadratureTest, ClippedBallIsFlaggedAndStaysInside) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.05);
  const auto ball = ball_quadrature(*mesh, Vec2(0.9, 0.0), 0.3, 2);
  EXPECT_TRUE(ball.clipped);
  // Lens area of two intersecting circles, radii 1 and 0.3, distance 0.9.
  const double d = 0.9, R = 1.0, r = 0.3;
  const double lens = r * r * std::acos((d * d + r * r - R * R) / (2 * d * r)) +
                      R * R * std::acos((d * d + R * R - r * r) / (2 * d * R)) -
                      0.5 * std::sqrt((-d + r + R) * (d + r - R) * (d - r + R) * (d + r + R));
  EXPECT_NEAR(ball.area(), lens, 1e-3 * lens);
  for (const auto& p : ball.points) EXPECT_LE(p.norm(), 1.0 + 1e-12);
}

TEST(BallQuadratureTest, NestedBallsAreMonotone) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.05);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  auto f = [](int, const Vec2&, const Vec2& x) { return 1.0 + std::sin(5 * x.x()) * std::sin(5 * x.x()); };
  for (int k = 0; k < 10; ++k) {
    const Vec2 c(u(rng), u(rng));
    const double r1 = 0.05 + 0.1 * (u(rng) + 0.4), r2 = r1 + 0.05;
    EXPECT_LE(ball_quadrature(*mesh, c, r1, 4).integrate(f), ball_quadrature(*mesh, c, r2, 4).integrate(f));
  }
}
