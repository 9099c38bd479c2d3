#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gpecmg/fem.hpp"

namespace gpecmg {

enum class SmootherType { ConjugateGradient, DampedJacobi, SymmetricGaussSeidel, Ssor, Richardson };

/// Iterative method used as the smoothing operator S_h.
///
/// `omega` is the damping/relaxation factor for Jacobi and SSOR and must lie
/// in (0, 1]. `tau` is the Richardson step; when unset it is resolved to
/// 1/λ_max with λ_max estimated by 20 power-iteration steps.
struct SmootherKind {
  SmootherType type = SmootherType::ConjugateGradient;
  double omega = 1.0;
  std::optional<double> tau;

  static SmootherKind conjugate_gradient() { return {SmootherType::ConjugateGradient, 1.0, {}}; }
  static SmootherKind damped_jacobi(double omega = 0.5) { return {SmootherType::DampedJacobi, omega, {}}; }
  static SmootherKind symmetric_gauss_seidel() { return {SmootherType::SymmetricGaussSeidel, 1.0, {}}; }
  static SmootherKind ssor(double omega = 0.8) { return {SmootherType::Ssor, omega, {}}; }
  static SmootherKind richardson(std::optional<double> tau = {}) { return {SmootherType::Richardson, 1.0, tau}; }

  /// Parses `cg`, `jacobi`, `sgs`, `ssor` or `richardson`; optional
  /// overrides replace the defaults. Throws std::invalid_argument.
  static SmootherKind parse(std::string_view name, std::optional<double> omega = {}, std::optional<double> tau = {});

  /// Exponent of the smoothing estimate: 1 for CG, 1/2 otherwise.
  double alpha() const noexcept { return type == SmootherType::ConjugateGradient ? 1.0 : 0.5; }
  std::string name() const;

  void validate() const;
};

/// Largest eigenvalue estimate of an SPD matrix from `steps` power
/// iterations with a fixed start vector.
double estimate_lambda_max(const SparseMatrix& a, int steps = 20);

/// Fills in the Richardson step for matrix `a` when it is unset.
SmootherKind resolve_for(const SmootherKind& kind, const SparseMatrix& a);

/// m steps of the chosen iteration on `a x = rhs` starting at `x0`.
/// CG starts a fresh Krylov sequence and stops early only once the residual
/// has vanished to round-off (1e-15 relative to the initial residual).
Vector smooth(const SparseMatrix& a, const Vector& rhs, const Vector& x0, int m, const SmootherKind& kind);

/// Solves `a x = rhs` by CG to the given relative residual.
struct SolveReport {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};
SolveReport cg_solve(const SparseMatrix& a, const Vector& rhs, const Vector& x0, double rel_tol, int max_iter);

/// Energy-norm distance of `x` from the solution of `a x = rhs`.
double energy_error(const SparseMatrix& a, const Vector& rhs, const Vector& x);

/// Energy norm sqrt(xᵀ a x).
double energy_norm(const SparseMatrix& a, const Vector& x);

}  // namespace gpecmg
