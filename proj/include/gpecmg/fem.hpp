#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "gpecmg/mesh.hpp"

namespace gpecmg {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// Sparse matrix over free dofs. Symmetric forms are stored in full with
/// bit-identical (i,j)/(j,i) entries.
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric quadrature on the reference triangle in barycentric form.
/// Weights sum to one; integrate as `area * sum(w_q f(x_q))`.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};

/// Six-point rule, exact for polynomials of total degree <= 4.
const QuadratureRule& degree4_rule();

/// P1 Lagrange space with homogeneous Dirichlet conditions on every
/// boundary vertex. Free dofs are the interior vertices in increasing order.
class FeSpace {
 public:
  static constexpr int kConstrained = -1;
  /// `Natural` keeps every vertex free (no Dirichlet elimination).
  enum class Boundary { Dirichlet, Natural };

  explicit FeSpace(std::shared_ptr<const Mesh> mesh, Boundary boundary = Boundary::Dirichlet);

  const Mesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
  int num_dofs() const noexcept { return static_cast<int>(free_dofs_.size()); }
  const std::vector<int>& free_dofs() const noexcept { return free_dofs_; }
  /// Dof index of a vertex, or kConstrained.
  int dof_of_vertex(int v) const { return dof_of_vertex_[static_cast<std::size_t>(v)]; }

  /// Coefficients extended by zero to every vertex.
  Vector to_vertex_values(const Vector& coeffs) const;
  /// Nodal interpolant of `f` on the free dofs.
  template <class F>
  Vector interpolate(F&& f) const {
    Vector out(num_dofs());
    for (int i = 0; i < num_dofs(); ++i) {
      const auto& p = mesh_->vertices()[static_cast<std::size_t>(free_dofs_[static_cast<std::size_t>(i)])];
      out[i] = f(p.x, p.y);
    }
    return out;
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<int> free_dofs_;
  std::vector<int> dof_of_vertex_;
};

/// Finite element function: one coefficient per free dof.
struct FeFunction {
  std::shared_ptr<const FeSpace> space;
  Vector values;
};

/// Stiffness matrix of the Laplacian, ∫∇φ_i·∇φ_j.
SparseMatrix assemble_laplace(const FeSpace& space);
/// Mass matrix ∫φ_iφ_j.
SparseMatrix assemble_mass(const FeSpace& space);
/// ∫(γ₁x² + γ₂y²)φ_iφ_j. Throws std::invalid_argument for negative γ.
SparseMatrix assemble_potential(const FeSpace& space, std::array<double, 2> gamma);
/// Frozen cubic term ζ∫|u|²φ_iφ_j for the P1 function with coefficients `u`.
SparseMatrix assemble_cubic(const FeSpace& space, const Vector& u, double zeta);

/// Mass matrix including boundary vertices (indexed by vertex).
SparseMatrix assemble_full_mass(const Mesh& mesh);

double l2_norm(const Vector& u, const SparseMatrix& mass);
double h1_seminorm(const Vector& u, const SparseMatrix& laplace);
/// Discrete H1 norm, sqrt(uᵀ(A+M)u).
double h1_norm(const Vector& u, const SparseMatrix& laplace, const SparseMatrix& mass);

/// Value at barycentric coordinates `bary` of triangle `t` for a function
/// given by per-vertex values.
double evaluate(const Mesh& mesh, const Vector& vertex_values, int t, const std::array<double, 3>& bary);

/// Nodal interpolation between the free dofs of two consecutive chain
/// meshes described by `parents`.
SparseMatrix single_step_prolongation(const FeSpace& coarse, const FeSpace& fine,
                                      const std::vector<VertexParent>& parents);

/// Matrix mapping free-dof vectors on hierarchy level `from_level` to level
/// `to_level` (level 0 is the coarse mesh).
SparseMatrix prolongation_matrix(const Hierarchy& hierarchy, int from_level, int to_level);

/// Prolongs a function on level `k` to level `k + 1` by nodal interpolation.
Vector prolongate(const Vector& u_coarse, const Hierarchy& hierarchy, int k);

/// Coordinate-format text, one `i j value` line per stored entry.
std::string to_coordinate_text(const SparseMatrix& m);

}  // namespace gpecmg
