#pragma once

#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpecmg/fem.hpp"

namespace gpecmg {

/// Continuous problem: -Δu + Wu + ζ|u|²u = λu on Ω, u = 0 on ∂Ω, ‖u‖₀ = 1,
/// with W(x) = γ₁x₁² + γ₂x₂².
struct GpeProblem {
  std::array<double, 2> gamma{1.0, 1.0};
  double zeta = 1.0;

  void validate() const;
};

/// Assembled discrete problem on one mesh. Immutable after construction.
class LevelSystem {
 public:
  LevelSystem(std::shared_ptr<const Mesh> mesh, const GpeProblem& problem);

  const FeSpace& space() const noexcept { return *space_; }
  const std::shared_ptr<const FeSpace>& space_ptr() const noexcept { return space_; }
  const Mesh& mesh() const noexcept { return space_->mesh(); }
  int num_dofs() const noexcept { return space_->num_dofs(); }
  double mesh_size() const noexcept { return mesh_size_; }
  double zeta() const noexcept { return zeta_; }

  const SparseMatrix& laplace() const noexcept { return laplace_; }
  const SparseMatrix& mass() const noexcept { return mass_; }
  const SparseMatrix& potential() const noexcept { return potential_; }
  /// A + M_W.
  const SparseMatrix& linear_part() const noexcept { return linear_; }

  SparseMatrix cubic(const Vector& u) const { return assemble_cubic(*space_, u, zeta_); }
  /// a(u, u) = uᵀ(A + M_W + M_cubic(u))u.
  double energy_form(const Vector& u) const;

 private:
  std::shared_ptr<const FeSpace> space_;
  double mesh_size_;
  double zeta_;
  SparseMatrix laplace_;
  SparseMatrix mass_;
  SparseMatrix potential_;
  SparseMatrix linear_;
};

struct Eigenpair {
  double lambda = 0.0;
  Vector u;
};

/// Scales `u` to unit M-norm and makes its largest-magnitude entry positive.
void normalize_in_place(Vector& u, const SparseMatrix& mass);

/// Eigenpair from a function: normalized, sign fixed, λ = a(u, u).
Eigenpair make_eigenpair(const LevelSystem& system, Vector u);

struct EigenpairDefects {
  double normalization = 0.0;  // |uᵀMu − 1|
  double consistency = 0.0;    // |λ − a(u,u)|
  bool sign_ok = true;
};
EigenpairDefects eigenpair_defects(const LevelSystem& system, const Eigenpair& pair);

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScfConfig {
  double tol_lambda = 1e-10;
  int max_iter = 50;
  /// Eigenvalue tolerance of the linearized solves.
  double inner_tol = 1e-12;

  static ScfConfig full_space() { return {}; }
  static ScfConfig correction_space() { return {1e-10, 3, 1e-12}; }
  void validate() const;
};

enum class Backend { Dense, Sparse };

struct ScfResult {
  Eigenpair pair;
  int iterations = 0;
  bool converged = false;
  bool mixing_engaged = false;
  int cubic_assemblies = 0;
  /// Eigenvalues of the successive linearized problems.
  std::vector<double> lambda_history;
};

struct DenseEigenResult {
  double lambda = 0.0;
  Vector x;
};

/// Smallest eigenpair of K x = λ M x for small dense symmetric K and SPD M,
/// via Cholesky of M and a symmetric standard eigensolve. `x` is
/// M-normalized; its sign makes xᵀM x0 ≥ 0 when `x0` is given, otherwise
/// its largest entry positive.
DenseEigenResult smallest_eig_dense(const DenseMatrix& k, const DenseMatrix& m,
                                    const std::optional<Vector>& x0 = std::nullopt);

struct SparseEigenResult {
  double lambda = 0.0;
  Vector x;
  int iterations = 0;
  int inner_iterations = 0;
  std::vector<double> trace;
};

/// Smallest eigenpair of K x = λ M x by inverse iteration with inner
/// Jacobi-preconditioned CG (relative residual tol/10), warm-started from
/// x0. Stops once the Rayleigh quotient moves by at most `tol` (scaled by
/// max(1, |λ|)) and the M-norm update of x is at most `vector_tol`.
SparseEigenResult smallest_eig_sparse(const SparseMatrix& k, const SparseMatrix& m, const Vector& x0, double tol,
                                      double vector_tol = 1e-9, int max_iter = 2000);

/// Self-consistent field iteration on the full space of `system`.
ScfResult scf_solve(const LevelSystem& system, const Vector& u0, const ScfConfig& cfg, Backend backend);

/// Self-consistent field iteration restricted to span(basis) ⊆ V_h. The
/// cubic term is reassembled on the full mesh of `system` at every sweep
/// and projected. `u0` is the starting fine-level function.
ScfResult scf_solve_projected(const LevelSystem& system, const SparseMatrix& basis, const Vector& u0,
                              const ScfConfig& cfg);

/// Interpolant of 16x(1-x)y(1-y), M-normalized: start for level-one solves.
Vector bubble_initial_guess(const LevelSystem& system);

/// Dense copy of a sparse matrix.
DenseMatrix to_dense(const SparseMatrix& m);

}  // namespace gpecmg
