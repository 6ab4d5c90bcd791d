#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lamestab/geometry.hpp"

namespace lamestab {

/// Continuous piecewise-polynomial scalar on a TriMesh. Degree 1 stores one
/// value per vertex, degree 2 one value per P2 node.
class ScalarField {
 public:
  ScalarField(std::shared_ptr<const TriMesh> mesh, int degree, std::vector<double> values);

  static ScalarField constant(std::shared_ptr<const TriMesh> mesh, double c, int degree = 1);
  /// Nodal interpolation of `f` (vertices for degree 1, all P2 nodes for 2).
  static ScalarField interpolate(std::shared_ptr<const TriMesh> mesh,
                                 const std::function<double(const Vec2&)>& f, int degree = 1);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  const std::vector<double>& values() const { return values_; }
  int num_dofs() const { return static_cast<int>(values_.size()); }
  /// Coordinates of dof `i`.
  const Vec2& dof_point(int i) const { return mesh_->nodes()[i]; }

  double value(int e, const Vec2& xi) const;
  Vec2 gradient(int e, const Vec2& xi) const;
  /// Values at every P2 node, whatever the storage degree.
  std::vector<double> node_values() const;

  /// Upper bound for the Lipschitz constant: the larger of the maximal
  /// element gradient (sampled at vertices and quadrature points) and the
  /// maximal difference quotient along mesh edges.
  double lipschitz_bound() const { return lipschitz_; }
  double min_value() const { return min_; }
  double max_value() const { return max_; }
  double sup_norm() const { return std::max(std::abs(min_), std::abs(max_)); }

  ScalarField operator-(const ScalarField& other) const;
  ScalarField operator+(const ScalarField& other) const;
  ScalarField scaled(double c) const;

 private:
  void refresh_metadata();

  std::shared_ptr<const TriMesh> mesh_;
  int degree_;
  std::vector<double> values_;
  double lipschitz_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// "nd 1" header then "x y value" per dof.
void write_scalar_field(std::ostream& out, const ScalarField& field);
/// Reads values written by write_scalar_field; the dof count selects the
/// degree (vertices or P2 nodes) and coordinates must match the mesh.
ScalarField read_scalar_field(std::istream& in, std::shared_ptr<const TriMesh> mesh);

/// Coefficient pair with the a-priori constants it is meant to satisfy.
struct LamePair {
  ScalarField lambda;
  ScalarField mu;
  double alpha0 = 0.0;
  double beta0 = 0.0;
  double M = 0.0;
};

struct InequalityCheck {
  std::string name;
  bool pass = false;
  double worst_value = 0.0;  // left-hand side at the worst dof
  double bound = 0.0;        // the constant it is compared with
  int worst_dof = -1;        // -1 for global quantities
  Vec2 worst_point = Vec2::Zero();
};

struct LameReport {
  std::vector<InequalityCheck> checks;
  bool pass() const;
  const InequalityCheck& find(const std::string& name) const;
};

/// Checks mu >= alpha0, 2 mu + n lambda >= beta0 and the C^{0,1} budget at
/// every P2 node, plus coercivity of the energy actually assembled, which for
/// stress lambda div(u) I + s mu e(u) needs mu > 0 and n lambda + s mu > 0.
LameReport validate_lame(const LamePair& pair, double shear_factor = 1.0);

struct Inclusion {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double contrast = 0.0;
};

/// Background value plus smoothly ramped disk inclusions. Each ramp is a
/// quintic smoothstep centred on the inclusion radius whose steepest slope is
/// |contrast| / mollification_width.
struct PhantomSpec {
  double background = 1.0;
  std::vector<Inclusion> inclusions;
  double mollification_width = 0.1;
  /// Values are clamped from below to this level when given.
  std::optional<double> floor;

  /// Width of the region over which one ramp goes from 0 to 1.
  double ramp_width() const;
  /// Unclamped value at x.
  double raw_value(const Vec2& x) const;
  double value(const Vec2& x) const;
};

/// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 on [0, 1], clamped outside.
double smoothstep5(double t);

ScalarField make_phantom(std::shared_ptr<const TriMesh> mesh, const PhantomSpec& spec,
                         int degree = 1);

/// Dirichlet datum sampled at the P2 boundary nodes with its Fourier series
/// in the arclength variable. Coefficients are stored for k = -K..K with
/// K = (number of boundary nodes) / 2; the Nyquist mode is split evenly
/// between +K and -K.
class BoundaryTrace {
 public:
  BoundaryTrace(std::shared_ptr<const TriMesh> mesh, std::vector<Vec2> values);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  /// Values at mesh.boundary_nodes(), same order.
  const std::vector<Vec2>& values() const { return values_; }
  int max_mode() const { return kmax_; }
  double perimeter() const { return perimeter_; }
  /// Coefficient of mode k in component c (0 or 1).
  std::complex<double> coefficient(int component, int k) const {
    return coeffs_[component][k + kmax_];
  }
  /// Angular frequency 2 pi k / perimeter.
  double wavenumber(int k) const;
  /// Fourier synthesis at arclength s.
  Vec2 synthesize(double s) const;

  BoundaryTrace operator+(const BoundaryTrace& other) const;
  BoundaryTrace operator-(const BoundaryTrace& other) const;
  BoundaryTrace scaled(double c) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  std::vector<Vec2> values_;
  double perimeter_ = 0.0;
  int kmax_ = 0;
  std::vector<std::complex<double>> coeffs_[2];
};

BoundaryTrace trace_from_closure(std::shared_ptr<const TriMesh> mesh,
                                 const std::function<Vec2(const Vec2&)>& g);

/// g(x) = A x + b.
std::function<Vec2(const Vec2&)> affine_map(const Mat2& A, const Vec2& b = Vec2::Zero());

/// One Fourier mode of boundary data in the arclength angle
/// theta = 2 pi s / perimeter: (amp_x cos(k theta + phase), amp_y ...).
struct FourierMode {
  int k = 1;
  double amp_x = 1.0;
  double amp_y = 0.0;
  double phase = 0.0;
};
BoundaryTrace trace_from_modes(std::shared_ptr<const TriMesh> mesh,
                               const std::vector<FourierMode>& modes);

}  // namespace lamestab
