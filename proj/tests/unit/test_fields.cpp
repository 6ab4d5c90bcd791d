#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lamestab/errors.hpp"
#include "lamestab/fields.hpp"
#include "lamestab/log.hpp"

using namespace lamestab;

namespace {

std::shared_ptr<const TriMesh> disk(double h) { return build_mesh(DomainSpec::unit_disk(), h); }

struct WarningCapture {
  std::vector<std::string> messages;
  WarningHandler previous;
  WarningCapture() {
    previous = set_warning_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_handler(previous); }
};

}  // namespace

TEST(ScalarField, InterpolatesLinearFunctionsExactly) {
  auto mesh = disk(0.2);
  auto f = ScalarField::interpolate(mesh, [](const Vec2& x) { return 2 * x.x() - 3 * x.y() + 1; });
  // Curved boundary elements distort the interpolant slightly.
  EXPECT_GE(f.lipschitz_bound(), std::sqrt(13.0) - 1e-12);
  EXPECT_LE(f.lipschitz_bound(), 1.1 * std::sqrt(13.0));
  for (int e = 0; e < mesh->num_triangles(); e += 7) {
    if (mesh->is_curved(e)) continue;
    const Vec2 xi(0.2, 0.3);
    const Vec2 x = mesh->map(e, xi);
    EXPECT_NEAR(f.value(e, xi), 2 * x.x() - 3 * x.y() + 1, 1e-12);
    EXPECT_NEAR((f.gradient(e, xi) - Vec2(2, -3)).norm(), 0.0, 1e-12);
  }
}

TEST(ScalarField, QuadraticFieldIsExactOnStraightElements) {
  auto mesh = disk(0.2);
  auto f = ScalarField::interpolate(mesh, [](const Vec2& x) { return x.x() * x.y(); }, 2);
  double curved_err = 0.0;
  for (int e = 0; e < mesh->num_triangles(); ++e) {
    const Vec2 xi(0.25, 0.25);
    const Vec2 x = mesh->map(e, xi);
    if (mesh->is_curved(e)) {
      curved_err = std::max(curved_err, std::abs(f.value(e, xi) - x.x() * x.y()));
      continue;
    }
    EXPECT_NEAR(f.value(e, xi), x.x() * x.y(), 1e-12);
    EXPECT_NEAR((f.gradient(e, xi) - Vec2(x.y(), x.x())).norm(), 0.0, 1e-11);
  }
  // Isoparametric interpolation error on curved elements is O(h^3).
  EXPECT_LT(curved_err, 0.2 * 0.2 * 0.2);
}

TEST(ScalarField, LipschitzBoundDominatesEdgeQuotients) {
  auto mesh = disk(0.15);
  auto f = ScalarField::interpolate(mesh, [](const Vec2& x) { return std::sin(3 * x.x()) * x.y(); });
  const auto v = mesh->vertices();
  for (const auto& ed : mesh->edges()) {
    const double q = std::abs(f.values()[ed[0]] - f.values()[ed[1]]) / (v[ed[0]] - v[ed[1]]).norm();
    EXPECT_LE(q, f.lipschitz_bound() + 1e-14);
  }
  EXPECT_LE(f.min_value(), f.max_value());
}

TEST(ScalarField, TextRoundTrip) {
  auto mesh = disk(0.2);
  auto f = ScalarField::interpolate(mesh, [](const Vec2& x) { return std::exp(x.x()) / 3.0; }, 2);
  std::stringstream buf;
  write_scalar_field(buf, f);
  auto g = read_scalar_field(buf, mesh);
  EXPECT_EQ(g.degree(), 2);
  EXPECT_EQ(g.values(), f.values());
}

TEST(Phantom, NoInclusionsIsConstant) {
  auto mesh = disk(0.2);
  PhantomSpec spec;
  auto f = make_phantom(mesh, spec);
  EXPECT_EQ(f.min_value(), 1.0);
  EXPECT_EQ(f.max_value(), 1.0);
  EXPECT_EQ(f.lipschitz_bound(), 0.0);
}

TEST(Phantom, RampSlopeMatchesDenseSampling) {
  // Oracle: dense difference quotients of the radial profile.
  PhantomSpec spec;
  spec.background = 0.0;
  spec.mollification_width = 0.1;
  spec.inclusions = {{Vec2::Zero(), 0.3, 1.0}};
  double max_slope = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double a = 0.6 * i / n, b = 0.6 * (i + 1) / n;
    max_slope = std::max(max_slope, std::abs(spec.value(Vec2(b, 0)) - spec.value(Vec2(a, 0))) / (b - a));
  }
  EXPECT_NEAR(max_slope, 1.0 / 0.1, 1e-3);

  auto mesh = disk(0.02);
  auto f = make_phantom(mesh, spec);
  EXPECT_LE(f.lipschitz_bound(), 1.1 / 0.1);
  EXPECT_GT(f.lipschitz_bound(), 0.8 / 0.1);
}

TEST(Phantom, ValueBoundsAndFloor) {
  auto mesh = disk(0.05);
  PhantomSpec spec;
  spec.background = 1.0;
  spec.mollification_width = 0.1;
  spec.inclusions = {{Vec2(0.1, 0.0), 0.3, -0.5}};
  spec.floor = 0.5;
  auto f = make_phantom(mesh, spec);
  EXPECT_DOUBLE_EQ(f.min_value(), 0.5);
  EXPECT_DOUBLE_EQ(f.max_value(), 1.0);
}

TEST(Phantom, OppositeOverlapWarnsAndClamps) {
  auto mesh = disk(0.05);
  PhantomSpec spec;
  spec.background = 1.0;
  spec.mollification_width = 0.1;
  spec.inclusions = {{Vec2(0.0, 0.0), 0.3, -0.8}, {Vec2(0.2, 0.0), 0.3, -0.8}, {Vec2(-0.3, 0.2), 0.2, 0.5}};
  spec.floor = 0.3;
  WarningCapture cap;
  auto f = make_phantom(mesh, spec);
  EXPECT_GE(f.min_value(), 0.3);
  EXPECT_GE(cap.messages.size(), 2u);
}

TEST(Phantom, MonotoneInContrast) {
  auto mesh = disk(0.1);
  PhantomSpec spec;
  spec.mollification_width = 0.2;
  spec.inclusions = {{Vec2(0.2, 0.1), 0.25, 0.3}, {Vec2(-0.3, -0.2), 0.2, -0.2}};
  auto lo = make_phantom(mesh, spec);
  spec.inclusions[1].contrast = 0.4;
  auto hi = make_phantom(mesh, spec);
  for (int i = 0; i < lo.num_dofs(); ++i) EXPECT_GE(hi.values()[i], lo.values()[i]);
}

TEST(Phantom, RejectsBadSpecs) {
  auto mesh = disk(0.1);
  PhantomSpec spec;
  spec.mollification_width = 0.0;
  EXPECT_THROW(make_phantom(mesh, spec), PreconditionError);
  spec.mollification_width = 0.2;
  spec.inclusions = {{Vec2(0.9, 0.0), 0.3, 1.0}};
  EXPECT_THROW(make_phantom(mesh, spec), PreconditionError);
}

TEST(ValidateLame, PaperExamples) {
  auto mesh = disk(0.2);
  auto one = ScalarField::constant(mesh, 1.0);
  LamePair ok{one, one, 0.5, 4.0, 10.0};
  EXPECT_TRUE(validate_lame(ok).pass());

  LamePair zero_mu{one, ScalarField::constant(mesh, 0.0), 0.1, 0.1, 10.0};
  const auto r0 = validate_lame(zero_mu);
  EXPECT_FALSE(r0.find("mu >= alpha0").pass);

  LamePair negative{ScalarField::constant(mesh, -1.2), one, 0.5, 0.1, 10.0};
  const auto r1 = validate_lame(negative);
  EXPECT_FALSE(r1.find("2 mu + n lambda >= beta0").pass);
  EXPECT_NEAR(r1.find("2 mu + n lambda >= beta0").worst_value, -0.4, 1e-14);
  EXPECT_FALSE(r1.pass());
}

TEST(ValidateLame, ReportsWorstLocationAndBudget) {
  auto mesh = disk(0.1);
  PhantomSpec spec;
  spec.mollification_width = 0.2;
  spec.inclusions = {{Vec2(0.3, 0.0), 0.2, -0.5}};
  auto mu = make_phantom(mesh, spec);
  auto lam = ScalarField::constant(mesh, 1.0);
  LamePair pair{lam, mu, 0.4, 2.0, 1.0};
  const auto report = validate_lame(pair);
  const auto& m = report.find("mu >= alpha0");
  EXPECT_TRUE(m.pass);
  EXPECT_NEAR(m.worst_point.x(), 0.3, 0.1);
  EXPECT_FALSE(report.find("C01 norms of mu and lambda <= M").pass);
  pair.M = 10.0;
  EXPECT_TRUE(validate_lame(pair).pass());
}

TEST(ValidateLame, CoercivityDependsOnShearConvention) {
  auto mesh = disk(0.2);
  // 2 mu + 2 lambda = 0.4 > 0, but 2 lambda + mu = -0.6 < 0.
  LamePair pair{ScalarField::constant(mesh, -0.8), ScalarField::constant(mesh, 1.0), 0.5, 0.3, 10.0};
  EXPECT_FALSE(validate_lame(pair, 1.0).pass());
  EXPECT_TRUE(validate_lame(pair, 2.0).pass());
}

TEST(BoundaryTraceTest, IdentityMapIsModeOne) {
  auto mesh = disk(0.1);
  auto g = trace_from_closure(mesh, [](const Vec2& x) { return x; });
  for (int k = -g.max_mode(); k <= g.max_mode(); ++k) {
    const double mag = std::abs(g.coefficient(0, k)) + std::abs(g.coefficient(1, k));
    if (std::abs(k) == 1)
      EXPECT_NEAR(mag, 1.0, 1e-12);
    else
      EXPECT_LT(mag, 1e-12);
  }
}

TEST(BoundaryTraceTest, ConstantIsModeZero) {
  auto mesh = disk(0.1);
  auto g = trace_from_closure(mesh, [](const Vec2&) { return Vec2(2.0, -1.0); });
  EXPECT_NEAR(g.coefficient(0, 0).real(), 2.0, 1e-13);
  EXPECT_NEAR(g.coefficient(1, 0).real(), -1.0, 1e-13);
  for (int k = 1; k <= g.max_mode(); ++k) EXPECT_LT(std::abs(g.coefficient(0, k)), 1e-13);
}

TEST(BoundaryTraceTest, CosineThreeHasAnalyticCoefficients) {
  auto mesh = disk(0.1);
  auto g = trace_from_closure(mesh, [](const Vec2& x) {
    const double th = std::atan2(x.y(), x.x());
    return Vec2(std::cos(3 * th), 0.0);
  });
  EXPECT_NEAR(g.coefficient(0, 3).real(), 0.5, 1e-12);
  EXPECT_NEAR(g.coefficient(0, -3).real(), 0.5, 1e-12);
  double rest = 0.0;
  for (int k = -g.max_mode(); k <= g.max_mode(); ++k)
    if (std::abs(k) != 3) rest += std::abs(g.coefficient(0, k)) + std::abs(g.coefficient(1, k));
  EXPECT_LT(rest, 1e-11);
}

TEST(BoundaryTraceTest, SynthesisReproducesTrigonometricPolynomials) {
  for (const auto& spec : {DomainSpec::unit_disk(), DomainSpec::smoothed_square(0.4)}) {
    auto mesh = build_mesh(spec, 0.1);
    const double P = mesh->domain().perimeter();
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    std::vector<FourierMode> modes;
    const int K = static_cast<int>(mesh->boundary_nodes().size()) / 2;
    for (int k = 0; k <= K / 2; k += 3) modes.push_back({k, nd(rng), nd(rng), nd(rng)});
    auto g = trace_from_modes(mesh, modes);
    const auto sigma = mesh->boundary_node_arclength();
    for (std::size_t j = 0; j < sigma.size(); ++j)
      EXPECT_NEAR((g.synthesize(sigma[j]) - g.values()[j]).norm(), 0.0, 1e-8);
    // Synthesis between nodes matches the closed form too.
    const double s = 0.123 * P;
    Vec2 exact = Vec2::Zero();
    for (const auto& m : modes) {
      const double c = std::cos(m.k * 2 * M_PI * s / P + m.phase);
      exact += Vec2(m.amp_x * c, m.amp_y * c);
    }
    EXPECT_NEAR((g.synthesize(s) - exact).norm(), 0.0, 1e-8);
  }
}
