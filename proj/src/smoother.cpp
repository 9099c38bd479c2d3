#include "gpecmg/smoother.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gpecmg {
namespace {

void check_dimensions(const SparseMatrix& a, const Vector& rhs, const Vector& x0) {
  if (a.rows() != a.cols() || rhs.size() != a.rows() || x0.size() != a.rows()) {
    throw std::invalid_argument("smoother: dimension mismatch");
  }
}

// One Gauss-Seidel/SOR sweep. Columns of the symmetric column-major matrix
// double as rows.
void sor_sweep(const SparseMatrix& a, const Vector& rhs, const Vector& diag, double omega, bool forward, Vector& x) {
  const Eigen::Index n = a.cols();
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index i = forward ? step : n - 1 - step;
    double sum = rhs[i];
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (it.row() != i) sum -= it.value() * x[it.row()];
    }
    x[i] = (1.0 - omega) * x[i] + omega * sum / diag[i];
  }
}

Vector conjugate_gradient_steps(const SparseMatrix& a, const Vector& rhs, const Vector& x0, int m) {
  Vector x = x0;
  Vector r = rhs - a * x;
  Vector p = r;
  double rr = r.squaredNorm();
  const double stop = 1e-30 * rr;
  for (int k = 0; k < m; ++k) {
    if (rr <= stop || rr == 0.0) break;
    const Vector ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

}  // namespace

SmootherKind SmootherKind::parse(std::string_view name, std::optional<double> omega, std::optional<double> tau) {
  SmootherKind kind;
  if (name == "cg") {
    kind = conjugate_gradient();
  } else if (name == "jacobi") {
    kind = damped_jacobi();
  } else if (name == "sgs") {
    kind = symmetric_gauss_seidel();
  } else if (name == "ssor") {
    kind = ssor();
  } else if (name == "richardson") {
    kind = richardson();
  } else {
    throw std::invalid_argument("unknown smoother '" + std::string(name) + "' (expected cg, jacobi, sgs, ssor, richardson)");
  }
  if (omega) kind.omega = *omega;
  if (tau) kind.tau = *tau;
  kind.validate();
  return kind;
}

std::string SmootherKind::name() const {
  switch (type) {
    case SmootherType::ConjugateGradient: return "cg";
    case SmootherType::DampedJacobi: return "jacobi";
    case SmootherType::SymmetricGaussSeidel: return "sgs";
    case SmootherType::Ssor: return "ssor";
    case SmootherType::Richardson: return "richardson";
  }
  return "unknown";
}

void SmootherKind::validate() const {
  if (!(omega > 0.0 && omega <= 1.0)) throw std::invalid_argument("omega must lie in (0, 1]");
  if (tau && !(*tau > 0.0)) throw std::invalid_argument("tau must be positive");
}

double estimate_lambda_max(const SparseMatrix& a, int steps) {
  if (a.rows() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(a.rows());
  for (auto& v : x) v = dist(rng);
  x.normalize();
  double lambda = 0.0;
  for (int k = 0; k < steps; ++k) {
    Vector y = a * x;
    lambda = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) break;
    x = y / norm;
  }
  return lambda;
}

SmootherKind resolve_for(const SmootherKind& kind, const SparseMatrix& a) {
  SmootherKind out = kind;
  if (out.type == SmootherType::Richardson && !out.tau) out.tau = 1.0 / estimate_lambda_max(a);
  return out;
}

Vector smooth(const SparseMatrix& a, const Vector& rhs, const Vector& x0, int m, const SmootherKind& kind) {
  check_dimensions(a, rhs, x0);
  kind.validate();
  if (m <= 0) return x0;
  switch (kind.type) {
    case SmootherType::ConjugateGradient:
      return conjugate_gradient_steps(a, rhs, x0, m);
    case SmootherType::DampedJacobi: {
      const Vector inv_diag = a.diagonal().cwiseInverse();
      Vector x = x0;
      for (int k = 0; k < m; ++k) x += kind.omega * inv_diag.cwiseProduct(rhs - a * x);
      return x;
    }
    case SmootherType::SymmetricGaussSeidel:
    case SmootherType::Ssor: {
      const double omega = kind.type == SmootherType::Ssor ? kind.omega : 1.0;
      const Vector diag = a.diagonal();
      Vector x = x0;
      for (int k = 0; k < m; ++k) {
        sor_sweep(a, rhs, diag, omega, true, x);
        sor_sweep(a, rhs, diag, omega, false, x);
      }
      return x;
    }
    case SmootherType::Richardson: {
      const double tau = kind.tau ? *kind.tau : 1.0 / estimate_lambda_max(a);
      Vector x = x0;
      for (int k = 0; k < m; ++k) x += tau * (rhs - a * x);
      return x;
    }
  }
  return x0;
}

SolveReport cg_solve(const SparseMatrix& a, const Vector& rhs, const Vector& x0, double rel_tol, int max_iter) {
  check_dimensions(a, rhs, x0);
  SolveReport rep;
  rep.x = x0;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    rep.x.setZero();
    rep.converged = true;
    return rep;
  }
  const Vector inv_diag = a.diagonal().cwiseInverse();
  Vector r = rhs - a * rep.x;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  double rnorm = r.norm();
  while (rnorm > rel_tol * bnorm && rep.iterations < max_iter) {
    const Vector ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    rep.x += alpha * p;
    r -= alpha * ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    rnorm = r.norm();
    ++rep.iterations;
  }
  rep.relative_residual = rnorm / bnorm;
  rep.converged = rnorm <= rel_tol * bnorm;
  return rep;
}

double energy_norm(const SparseMatrix& a, const Vector& x) { return std::sqrt(std::max(0.0, x.dot(a * x))); }

double energy_error(const SparseMatrix& a, const Vector& rhs, const Vector& x) {
  const auto exact = cg_solve(a, rhs, x, 1e-14, 20 * static_cast<int>(a.rows()) + 100);
  return energy_norm(a, x - exact.x);
}

}  // namespace gpecmg
