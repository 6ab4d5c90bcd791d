#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "lamestab/fields.hpp"

namespace lamestab {

/// Vector P2 field, dofs interleaved as (2 * node, 2 * node + 1).
class DisplacementField {
 public:
  DisplacementField(std::shared_ptr<const TriMesh> mesh, Eigen::VectorXd dofs,
                    std::optional<BoundaryTrace> trace = std::nullopt);

  static DisplacementField zero(std::shared_ptr<const TriMesh> mesh);
  static DisplacementField interpolate(std::shared_ptr<const TriMesh> mesh,
                                       const std::function<Vec2(const Vec2&)>& f);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXd& dofs() const { return dofs_; }
  int num_nodes() const { return mesh_->num_nodes(); }
  Vec2 node_value(int n) const { return Vec2(dofs_[2 * n], dofs_[2 * n + 1]); }
  const std::optional<BoundaryTrace>& boundary_trace() const { return trace_; }

  Vec2 value(int e, const Vec2& xi) const;
  /// Full gradient, entry (c, k) = d u_c / d x_k.
  Mat2 gradient(int e, const Vec2& xi) const;
  Mat2 strain(int e, const Vec2& xi) const;
  double divergence(int e, const Vec2& xi) const;

  DisplacementField operator-(const DisplacementField& other) const;
  DisplacementField operator+(const DisplacementField& other) const;
  DisplacementField scaled(double c) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  Eigen::VectorXd dofs_;
  std::optional<BoundaryTrace> trace_;
};

/// "nd 2" header then "x y ux uy" per P2 node.
void write_displacement(std::ostream& out, const DisplacementField& u);
DisplacementField read_displacement(std::istream& in, std::shared_ptr<const TriMesh> mesh);

/// Symmetric strain at one quadrature point.
struct StrainSample {
  int element = 0;
  Vec2 point = Vec2::Zero();
  double weight = 0.0;
  Mat2 strain = Mat2::Zero();
};
std::vector<StrainSample> strain(const DisplacementField& u, int quadrature_degree = 4);

enum class LinearSolver { kConjugateGradient, kDirect };

struct ElasticityOptions {
  /// Stress is lambda div(u) I + shear_factor * mu e(u). The default 1
  /// follows the paper's constitutive law; 2 gives the textbook form.
  double shear_factor = 1.0;
  int quadrature_degree = 4;
  LinearSolver solver = LinearSolver::kConjugateGradient;
  double cg_tolerance = 1e-12;
  /// Iteration cap is this factor times sqrt(number of unknowns).
  double cg_iteration_factor = 50.0;
  /// Required relative residual ||K x - b|| / ||b|| after the solve.
  double residual_tolerance = 1e-10;
};

/// Element matrix of the bilinear form on one straight P1 triangle with
/// constant coefficients. Dof order (node0 x, node0 y, node1 x, ...).
Eigen::Matrix<double, 6, 6> p1_element_stiffness(const std::array<Vec2, 3>& vertices,
                                                 double lambda, double mu,
                                                 double shear_factor = 1.0);

struct SolveInfo {
  long iterations = 0;
  double relative_residual = 0.0;
};

/// Assembled bilinear form a(u, z) = int lambda div u div z + s mu e(u) : e(z)
/// on all P2 vector dofs, with the interior/boundary split used for
/// Dirichlet elimination.
class StiffnessSystem {
 public:
  StiffnessSystem(std::shared_ptr<const TriMesh> mesh, LamePair pair, ElasticityOptions options);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  const LamePair& pair() const { return pair_; }
  const ElasticityOptions& options() const { return options_; }
  int num_dofs() const { return static_cast<int>(matrix_.rows()); }
  int num_interior_dofs() const { return static_cast<int>(interior_.size()); }

  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  const Eigen::SparseMatrix<double>& interior_matrix() const { return k_ii_; }
  /// Block coupling unknowns (rows) to boundary dofs (columns).
  const Eigen::SparseMatrix<double>& boundary_coupling() const { return k_ib_; }
  /// Global dof indices of the unknowns, ascending.
  const std::vector<int>& interior_dofs() const { return interior_; }
  const std::vector<int>& boundary_dofs() const { return boundary_; }

  double energy(const DisplacementField& u, const DisplacementField& z) const;
  /// Load vector int f . z over all dofs.
  Eigen::VectorXd load(const std::function<Vec2(const Vec2&)>& body_force) const;

  /// Solves K_II x = b. Throws SolverError on non-convergence.
  Eigen::VectorXd solve_interior(const Eigen::VectorXd& rhs, const Eigen::VectorXd* guess,
                                 SolveInfo* info) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  LamePair pair_;
  ElasticityOptions options_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SparseMatrix<double> k_ii_;
  Eigen::SparseMatrix<double> k_ib_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
};

/// Throws PreconditionError when validate_lame fails for the convention in
/// `options`, GeometryError if the coefficient fields live on another mesh.
std::shared_ptr<const StiffnessSystem> assemble(std::shared_ptr<const TriMesh> mesh,
                                                const LamePair& pair,
                                                const ElasticityOptions& options = {});

/// Solves -div(C e(u)) = f in Omega, u = g on the boundary. `guess` warm-starts
/// the iterative solver.
DisplacementField solve_dirichlet(const StiffnessSystem& system, const BoundaryTrace& g,
                                  const std::function<Vec2(const Vec2&)>* body_force = nullptr,
                                  const DisplacementField* guess = nullptr,
                                  SolveInfo* info = nullptr);

/// Both sides of the identity obtained by subtracting the weak forms of the
/// problems with shear moduli mu1 = mu2 + phi and mu2 (same lambda):
///   s int phi e(u) : e(z) = -int lambda div(u - v) div z - s int mu2 e(u - v) : e(z).
struct WeakIdentityGap {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  /// Natural magnitude of either side: coefficient bound times
  /// (||e(u)|| + ||e(v)||) * ||e(z)|| in L2.
  double scale = 0.0;
  double relative() const { return scale > 0.0 ? std::abs(gap) / scale : std::abs(gap); }
};
WeakIdentityGap weak_identity_gap(const DisplacementField& u, const DisplacementField& v,
                                  const ScalarField& lambda, const ScalarField& mu2,
                                  const ScalarField& phi, const DisplacementField& zeta,
                                  double shear_factor = 1.0, int quadrature_degree = 4);

}  // namespace lamestab
