#include "lamestab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "lamestab/errors.hpp"
#include "lamestab/log.hpp"

namespace lamestab {

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(std::shared_ptr<const TriMesh> mesh, int degree, std::vector<double> values)
    : mesh_(std::move(mesh)), degree_(degree), values_(std::move(values)) {
  if (!mesh_) throw PreconditionError("scalar field needs a mesh");
  if (degree_ != 1 && degree_ != 2) throw PreconditionError("scalar field degree must be 1 or 2");
  const int expected = degree_ == 1 ? mesh_->num_vertices() : mesh_->num_nodes();
  if (static_cast<int>(values_.size()) != expected)
    throw PreconditionError(fmt::format("scalar field of degree {} needs {} values, got {}", degree_,
                                        expected, values_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw PreconditionError("scalar field values must be finite");
  refresh_metadata();
}

ScalarField ScalarField::constant(std::shared_ptr<const TriMesh> mesh, double c, int degree) {
  const int n = degree == 1 ? mesh->num_vertices() : mesh->num_nodes();
  return ScalarField(std::move(mesh), degree, std::vector<double>(n, c));
}

ScalarField ScalarField::interpolate(std::shared_ptr<const TriMesh> mesh,
                                     const std::function<double(const Vec2&)>& f, int degree) {
  const int n = degree == 1 ? mesh->num_vertices() : mesh->num_nodes();
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) values[i] = f(mesh->nodes()[i]);
  return ScalarField(std::move(mesh), degree, std::move(values));
}

double ScalarField::value(int e, const Vec2& xi) const {
  const auto& n = mesh_->element_nodes(e);
  double v = 0.0;
  if (degree_ == 1) {
    const auto N = p1_shape(xi);
    for (int i = 0; i < 3; ++i) v += N[i] * values_[n[i]];
  } else {
    const auto N = p2_shape(xi);
    for (int i = 0; i < 6; ++i) v += N[i] * values_[n[i]];
  }
  return v;
}

Vec2 ScalarField::gradient(int e, const Vec2& xi) const {
  const auto& n = mesh_->element_nodes(e);
  Vec2 g = Vec2::Zero();
  if (degree_ == 1) {
    const auto dN = p1_shape_grad();
    for (int i = 0; i < 3; ++i) g += values_[n[i]] * dN[i];
  } else {
    const auto dN = p2_shape_grad(xi);
    for (int i = 0; i < 6; ++i) g += values_[n[i]] * dN[i];
  }
  return mesh_->jacobian(e, xi).transpose().lu().solve(g);
}

std::vector<double> ScalarField::node_values() const {
  if (degree_ == 2) return values_;
  std::vector<double> out(mesh_->num_nodes());
  const int nv = mesh_->num_vertices();
  std::copy(values_.begin(), values_.end(), out.begin());
  const auto edges = mesh_->edges();
  for (int k = 0; k < mesh_->num_edges(); ++k)
    out[nv + k] = 0.5 * (values_[edges[k][0]] + values_[edges[k][1]]);
  return out;
}

void ScalarField::refresh_metadata() {
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;

  double lip = 0.0;
  const auto& rule = triangle_rule(2);
  const Vec2 corners[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  for (int e = 0; e < mesh_->num_triangles(); ++e) {
    for (const auto& xi : corners) lip = std::max(lip, gradient(e, xi).norm());
    if (degree_ == 2 || mesh_->is_curved(e))
      for (const auto& xi : rule.points) lip = std::max(lip, gradient(e, xi).norm());
  }
  const auto nodes = mesh_->nodes();
  const auto edges = mesh_->edges();
  const int nv = mesh_->num_vertices();
  const auto nodal = node_values();
  for (int k = 0; k < mesh_->num_edges(); ++k) {
    const int a = edges[k][0], b = edges[k][1], m = nv + k;
    lip = std::max(lip, std::abs(nodal[a] - nodal[b]) / (nodes[a] - nodes[b]).norm());
    if (degree_ == 2) {
      lip = std::max(lip, std::abs(nodal[a] - nodal[m]) / (nodes[a] - nodes[m]).norm());
      lip = std::max(lip, std::abs(nodal[m] - nodal[b]) / (nodes[m] - nodes[b]).norm());
    }
  }
  lipschitz_ = lip;
}

ScalarField ScalarField::operator-(const ScalarField& other) const {
  if (other.mesh_ != mesh_) throw PreconditionError("scalar fields live on different meshes");
  if (other.degree_ == degree_) {
    auto v = values_;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= other.values_[i];
    return ScalarField(mesh_, degree_, std::move(v));
  }
  auto a = node_values();
  const auto b = other.node_values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return ScalarField(mesh_, 2, std::move(a));
}

ScalarField ScalarField::operator+(const ScalarField& other) const {
  return *this - other.scaled(-1.0);
}

ScalarField ScalarField::scaled(double c) const {
  auto v = values_;
  for (double& x : v) x *= c;
  return ScalarField(mesh_, degree_, std::move(v));
}

void write_scalar_field(std::ostream& out, const ScalarField& field) {
  out << field.num_dofs() << " 1\n";
  for (int i = 0; i < field.num_dofs(); ++i) {
    const Vec2& p = field.dof_point(i);
    out << fmt::format("{:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), field.values()[i]);
  }
}

ScalarField read_scalar_field(std::istream& in, std::shared_ptr<const TriMesh> mesh) {
  long nd = -1, ncomp = -1;
  if (!(in >> nd >> ncomp) || ncomp != 1)
    throw PreconditionError("scalar field file: expected header \"nd 1\"");
  int degree;
  if (nd == mesh->num_vertices())
    degree = 1;
  else if (nd == mesh->num_nodes())
    degree = 2;
  else
    throw PreconditionError("scalar field file: dof count matches neither P1 nor P2 on this mesh");
  std::vector<double> values(nd);
  const double tol = 1e-9 * mesh->domain().scale();
  for (long i = 0; i < nd; ++i) {
    std::string xs, ys, vs;
    if (!(in >> xs >> ys >> vs)) throw PreconditionError("scalar field file: truncated");
    const Vec2 p(std::stod(xs), std::stod(ys));
    if ((p - mesh->nodes()[i]).norm() > tol)
      throw PreconditionError(fmt::format("scalar field file: dof {} is not at its mesh node", i));
    values[i] = std::stod(vs);
  }
  return ScalarField(std::move(mesh), degree, std::move(values));
}

// ---------------------------------------------------------------------------
// Coefficient constraints

bool LameReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.pass; });
}

const InequalityCheck& LameReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw PreconditionError("no coefficient check named " + name);
}

LameReport validate_lame(const LamePair& pair, double shear_factor) {
  if (pair.lambda.mesh_ptr() != pair.mu.mesh_ptr())
    throw PreconditionError("lambda and mu must share one mesh");
  constexpr int n = 2;
  const auto lam = pair.lambda.node_values();
  const auto mu = pair.mu.node_values();
  const auto nodes = pair.mu.mesh().nodes();

  auto argmin = [&](auto&& f) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(lam.size()); ++i)
      if (f(i) < f(best)) best = i;
    return best;
  };

  LameReport report;
  {
    const int i = argmin([&](int k) { return mu[k]; });
    report.checks.push_back({"mu >= alpha0", pair.alpha0 > 0.0 && mu[i] >= pair.alpha0, mu[i],
                             pair.alpha0, i, nodes[i]});
  }
  {
    auto f = [&](int k) { return 2.0 * mu[k] + n * lam[k]; };
    const int i = argmin(f);
    report.checks.push_back({"2 mu + n lambda >= beta0", pair.beta0 > 0.0 && f(i) >= pair.beta0,
                             f(i), pair.beta0, i, nodes[i]});
  }
  {
    const double budget = pair.mu.sup_norm() + pair.mu.lipschitz_bound() +
                          pair.lambda.sup_norm() + pair.lambda.lipschitz_bound();
    report.checks.push_back({"C01 norms of mu and lambda <= M", budget <= pair.M, budget, pair.M, -1,
                             Vec2::Zero()});
  }
  {
    auto f = [&](int k) { return std::min(mu[k], n * lam[k] + shear_factor * mu[k]); };
    const int i = argmin(f);
    report.checks.push_back(
        {fmt::format("energy coercivity (mu > 0, n lambda + {:g} mu > 0)", shear_factor), f(i) > 0.0,
         f(i), 0.0, i, nodes[i]});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Phantoms

double smoothstep5(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// The smoothstep's steepest slope is 15/8, reached at t = 1/2.
double PhantomSpec::ramp_width() const { return 1.875 * mollification_width; }

double PhantomSpec::raw_value(const Vec2& x) const {
  const double W = ramp_width();
  double v = background;
  for (const auto& inc : inclusions) {
    const double rho = (x - inc.center).norm();
    v += inc.contrast * smoothstep5((inc.radius + 0.5 * W - rho) / W);
  }
  return v;
}

double PhantomSpec::value(const Vec2& x) const {
  const double v = raw_value(x);
  return floor ? std::max(v, *floor) : v;
}

ScalarField make_phantom(std::shared_ptr<const TriMesh> mesh, const PhantomSpec& spec, int degree) {
  if (!(spec.mollification_width > 0.0))
    throw PreconditionError("phantom mollification_width must be positive (Lipschitz coefficients)");
  const Domain& dom = mesh->domain();
  for (const auto& inc : spec.inclusions) {
    if (!(inc.radius > 0.0)) throw PreconditionError("phantom inclusion radius must be positive");
    if (dom.signed_distance(inc.center) < inc.radius)
      throw PreconditionError(fmt::format("phantom inclusion at ({}, {}) with radius {} leaves the domain",
                                          inc.center.x(), inc.center.y(), inc.radius));
  }
  if (spec.mollification_width < 2.0 * mesh->h_max())
    warn(fmt::format("phantom mollification width {} is below 2 h_max = {}; the ramp is under-resolved",
                     spec.mollification_width, 2.0 * mesh->h_max()));
  const double W = spec.ramp_width();
  for (std::size_t i = 0; i < spec.inclusions.size(); ++i)
    for (std::size_t j = i + 1; j < spec.inclusions.size(); ++j) {
      const auto& a = spec.inclusions[i];
      const auto& b = spec.inclusions[j];
      if (a.contrast * b.contrast < 0.0 && (a.center - b.center).norm() < a.radius + b.radius + W)
        warn(fmt::format("phantom inclusions {} and {} overlap with opposite contrasts", i, j));
    }

  auto field = ScalarField::interpolate(mesh, [&](const Vec2& x) { return spec.value(x); }, degree);
  if (spec.floor) {
    int clamped = 0;
    for (int i = 0; i < field.num_dofs(); ++i)
      if (spec.raw_value(field.dof_point(i)) < *spec.floor) ++clamped;
    if (clamped > 0)
      warn(fmt::format("phantom values clamped to the floor {} at {} dofs", *spec.floor, clamped));
  }
  return field;
}

// ---------------------------------------------------------------------------
// Boundary traces

BoundaryTrace::BoundaryTrace(std::shared_ptr<const TriMesh> mesh, std::vector<Vec2> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  const auto sigma = mesh_->boundary_node_arclength();
  const int m = static_cast<int>(sigma.size());
  if (static_cast<int>(values_.size()) != m)
    throw PreconditionError("boundary trace needs one value per boundary node");
  for (const auto& v : values_)
    if (!v.allFinite()) throw PreconditionError("boundary trace values must be finite");
  perimeter_ = mesh_->domain().perimeter();
  kmax_ = m / 2;

  // Trapezoid weights on the (possibly non-uniform) periodic grid.
  std::vector<double> weight(m);
  for (int j = 0; j < m; ++j) {
    const double next = j + 1 < m ? sigma[j + 1] : sigma[0] + perimeter_;
    const double prev = j > 0 ? sigma[j - 1] : sigma[m - 1] - perimeter_;
    weight[j] = 0.5 * (next - prev);
  }
  for (int c = 0; c < 2; ++c) coeffs_[c].assign(2 * kmax_ + 1, 0.0);
  for (int k = -kmax_; k <= kmax_; ++k) {
    const double kt = wavenumber(k);
    std::complex<double> acc[2] = {0.0, 0.0};
    for (int j = 0; j < m; ++j) {
      const std::complex<double> phase = std::polar(weight[j] / perimeter_, -kt * sigma[j]);
      acc[0] += values_[j].x() * phase;
      acc[1] += values_[j].y() * phase;
    }
    const double split = (m % 2 == 0 && std::abs(k) == kmax_) ? 0.5 : 1.0;
    coeffs_[0][k + kmax_] = split * acc[0];
    coeffs_[1][k + kmax_] = split * acc[1];
  }
}

double BoundaryTrace::wavenumber(int k) const { return 2.0 * M_PI * k / perimeter_; }

Vec2 BoundaryTrace::synthesize(double s) const {
  Vec2 out = Vec2::Zero();
  for (int k = -kmax_; k <= kmax_; ++k) {
    const std::complex<double> e = std::polar(1.0, wavenumber(k) * s);
    out.x() += (coeffs_[0][k + kmax_] * e).real();
    out.y() += (coeffs_[1][k + kmax_] * e).real();
  }
  return out;
}

BoundaryTrace BoundaryTrace::operator+(const BoundaryTrace& other) const {
  if (other.mesh_ != mesh_) throw PreconditionError("boundary traces live on different meshes");
  auto v = values_;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += other.values_[i];
  return BoundaryTrace(mesh_, std::move(v));
}

BoundaryTrace BoundaryTrace::operator-(const BoundaryTrace& other) const {
  return *this + other.scaled(-1.0);
}

BoundaryTrace BoundaryTrace::scaled(double c) const {
  auto v = values_;
  for (auto& x : v) x *= c;
  return BoundaryTrace(mesh_, std::move(v));
}

BoundaryTrace trace_from_closure(std::shared_ptr<const TriMesh> mesh,
                                 const std::function<Vec2(const Vec2&)>& g) {
  std::vector<Vec2> values;
  values.reserve(mesh->boundary_nodes().size());
  for (int n : mesh->boundary_nodes()) values.push_back(g(mesh->nodes()[n]));
  return BoundaryTrace(std::move(mesh), std::move(values));
}

std::function<Vec2(const Vec2&)> affine_map(const Mat2& A, const Vec2& b) {
  return [A, b](const Vec2& x) -> Vec2 { return A * x + b; };
}

BoundaryTrace trace_from_modes(std::shared_ptr<const TriMesh> mesh,
                               const std::vector<FourierMode>& modes) {
  const auto sigma = mesh->boundary_node_arclength();
  const double P = mesh->domain().perimeter();
  std::vector<Vec2> values(sigma.size(), Vec2::Zero());
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    const double theta = 2.0 * M_PI * sigma[j] / P;
    for (const auto& m : modes) {
      const double c = std::cos(m.k * theta + m.phase);
      values[j] += Vec2(m.amp_x * c, m.amp_y * c);
    }
  }
  return BoundaryTrace(std::move(mesh), std::move(values));
}

}  // namespace lamestab
