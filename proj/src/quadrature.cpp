#include "lamestab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace lamestab {
namespace {

// Dunavant rules, with weights normalised to sum to 1 and scaled below.
void add_orbit3(TriangleRule& rule, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  rule.points.emplace_back(a, a);
  rule.points.emplace_back(b, a);
  rule.points.emplace_back(a, b);
  for (int i = 0; i < 3; ++i) rule.weights.push_back(w);
}

void add_orbit6(TriangleRule& rule, double a, double b, double w) {
  const double c = 1.0 - a - b;
  const double perm[6][2] = {{a, b}, {b, a}, {a, c}, {c, a}, {b, c}, {c, b}};
  for (const auto& p : perm) {
    rule.points.emplace_back(p[0], p[1]);
    rule.weights.push_back(w);
  }
}

TriangleRule make_rule(int degree) {
  TriangleRule rule;
  rule.degree = degree;
  switch (degree) {
    case 1:
      rule.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
      rule.weights.push_back(1.0);
      break;
    case 2:
      add_orbit3(rule, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 4:
      add_orbit3(rule, 0.445948490915965, 0.223381589678011);
      add_orbit3(rule, 0.091576213509771, 0.109951743655322);
      break;
    case 5:
      rule.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
      rule.weights.push_back(0.225);
      add_orbit3(rule, 0.470142064105115, 0.132394152788506);
      add_orbit3(rule, 0.101286507323456, 0.125939180544827);
      break;
    case 6:
      add_orbit3(rule, 0.249286745170910, 0.116786275726379);
      add_orbit3(rule, 0.063089014491502, 0.050844906370207);
      add_orbit6(rule, 0.053145049844817, 0.310352451033784, 0.082851075618374);
      break;
    default:
      throw std::invalid_argument("no triangle rule of this degree");
  }
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w *= 0.5 / total;
  return rule;
}

LineRule make_line_rule(int n) {
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n starting from the Chebyshev guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.points[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const TriangleRule& triangle_rule(int degree) {
  static const TriangleRule rules[] = {make_rule(1), make_rule(2), make_rule(4),
                                       make_rule(5), make_rule(6)};
  if (degree <= 1) return rules[0];
  if (degree == 2) return rules[1];
  if (degree <= 4) return rules[2];
  if (degree == 5) return rules[3];
  if (degree == 6) return rules[4];
  throw std::invalid_argument("triangle quadrature degree above 6 is not tabulated");
}

const LineRule& gauss_legendre(int n) {
  static const LineRule r8 = make_line_rule(8);
  static const LineRule r16 = make_line_rule(16);
  if (n <= 8) return r8;
  return r16;
}

std::array<double, 3> p1_shape(const Vec2& xi) {
  return {1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
}

std::array<Vec2, 3> p1_shape_grad() {
  return {Vec2(-1.0, -1.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
}

std::array<double, 6> p2_shape(const Vec2& xi) {
  const double l1 = xi.x(), l2 = xi.y(), l0 = 1.0 - l1 - l2;
  return {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
          4.0 * l0 * l1,         4.0 * l1 * l2,         4.0 * l2 * l0};
}

std::array<Vec2, 6> p2_shape_grad(const Vec2& xi) {
  const double l1 = xi.x(), l2 = xi.y(), l0 = 1.0 - l1 - l2;
  // dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1)
  return {Vec2(-(4.0 * l0 - 1.0), -(4.0 * l0 - 1.0)),
          Vec2(4.0 * l1 - 1.0, 0.0),
          Vec2(0.0, 4.0 * l2 - 1.0),
          Vec2(4.0 * (l0 - l1), -4.0 * l1),
          Vec2(4.0 * l2, 4.0 * l1),
          Vec2(-4.0 * l2, 4.0 * (l0 - l2))};
}

}  // namespace lamestab
