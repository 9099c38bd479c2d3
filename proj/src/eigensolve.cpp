#include "gpecmg/eigensolve.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "gpecmg/smoother.hpp"

namespace gpecmg {
namespace {

// Increments alternating in sign over the last six sweeps.
bool oscillating(const std::vector<double>& history) {
  if (history.size() < 7) return false;
  const std::size_t n = history.size();
  for (std::size_t i = n - 6; i + 1 < n; ++i) {
    const double d0 = history[i] - history[i - 1];
    const double d1 = history[i + 1] - history[i];
    if (!(d0 * d1 < 0.0)) return false;
  }
  return true;
}

// Shared fixed-point loop. `linear_solve` returns the smallest eigenpair of
// the problem linearized with the given cubic matrix, warm-started at u.
ScfResult scf_loop(const LevelSystem& system, const Vector& u0, const ScfConfig& cfg,
                   const std::function<std::pair<double, Vector>(const SparseMatrix&, const Vector&)>& linear_solve) {
  cfg.validate();
  if (u0.size() != system.num_dofs()) throw std::invalid_argument("initial guess does not match the space");
  if (u0.squaredNorm() == 0.0) throw std::invalid_argument("initial guess must be nonzero");

  ScfResult result;
  Vector u = u0;
  normalize_in_place(u, system.mass());
  double lambda_prev = system.energy_form(u);
  SparseMatrix cubic = system.cubic(u);
  result.cubic_assemblies = 1;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    auto [lambda, next] = linear_solve(cubic, u);
    u = std::move(next);
    normalize_in_place(u, system.mass());
    result.lambda_history.push_back(lambda);
    result.iterations = it;
    if (system.zeta() == 0.0 || std::abs(lambda - lambda_prev) <= cfg.tol_lambda) {
      result.converged = true;
      break;
    }
    lambda_prev = lambda;
    if (!result.mixing_engaged && oscillating(result.lambda_history)) result.mixing_engaged = true;
    SparseMatrix fresh = system.cubic(u);
    ++result.cubic_assemblies;
    if (result.mixing_engaged) {
      // The cubic matrix is linear in |u|², so mixing matrices mixes densities.
      cubic = SparseMatrix(0.5 * cubic + 0.5 * fresh);
    } else {
      cubic = std::move(fresh);
    }
  }
  result.pair = make_eigenpair(system, std::move(u));
  return result;
}

}  // namespace

void GpeProblem::validate() const {
  if (gamma[0] < 0.0 || gamma[1] < 0.0) throw std::invalid_argument("potential coefficients must be nonnegative");
  if (!(zeta >= 0.0)) throw std::invalid_argument("nonlinearity strength must be nonnegative");
}

LevelSystem::LevelSystem(std::shared_ptr<const Mesh> mesh, const GpeProblem& problem)
    : space_(std::make_shared<const FeSpace>(std::move(mesh))),
      mesh_size_(space_->mesh().mesh_size()),
      zeta_(problem.zeta),
      laplace_(assemble_laplace(*space_)),
      mass_(assemble_mass(*space_)),
      potential_(assemble_potential(*space_, problem.gamma)) {
  problem.validate();
  if (space_->num_dofs() == 0) throw std::invalid_argument("mesh has no interior vertices");
  linear_ = laplace_ + potential_;
}

double LevelSystem::energy_form(const Vector& u) const {
  return u.dot(linear_ * u) + u.dot(cubic(u) * u);
}

void normalize_in_place(Vector& u, const SparseMatrix& mass) {
  const double norm = std::sqrt(u.dot(mass * u));
  if (!(norm > 0.0)) throw SolverError("cannot normalize a zero function");
  u /= norm;
  Eigen::Index imax = 0;
  u.cwiseAbs().maxCoeff(&imax);
  if (u[imax] < 0.0) u = -u;
}

Eigenpair make_eigenpair(const LevelSystem& system, Vector u) {
  normalize_in_place(u, system.mass());
  Eigenpair pair;
  pair.lambda = system.energy_form(u);
  pair.u = std::move(u);
  return pair;
}

EigenpairDefects eigenpair_defects(const LevelSystem& system, const Eigenpair& pair) {
  EigenpairDefects d;
  d.normalization = std::abs(pair.u.dot(system.mass() * pair.u) - 1.0);
  d.consistency = std::abs(pair.lambda - system.energy_form(pair.u));
  Eigen::Index imax = 0;
  pair.u.cwiseAbs().maxCoeff(&imax);
  d.sign_ok = pair.u[imax] > 0.0;
  return d;
}

void ScfConfig::validate() const {
  if (!(tol_lambda > 0.0)) throw std::invalid_argument("tol_lambda must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(inner_tol > 0.0)) throw std::invalid_argument("inner_tol must be positive");
}

DenseMatrix to_dense(const SparseMatrix& m) { return DenseMatrix(m); }

DenseEigenResult smallest_eig_dense(const DenseMatrix& k, const DenseMatrix& m, const std::optional<Vector>& x0) {
  if (k.rows() != k.cols() || m.rows() != m.cols() || k.rows() != m.rows() || k.rows() == 0) {
    throw std::invalid_argument("dense eigensolve: dimension mismatch");
  }
  const Eigen::LLT<DenseMatrix> llt(m);
  if (llt.info() != Eigen::Success) throw SolverError("dense eigensolve: mass matrix is not positive definite");
  // C = L⁻¹ K L⁻ᵀ
  DenseMatrix c = llt.matrixL().solve(k);
  c = llt.matrixL().solve(DenseMatrix(c.transpose()));
  c = 0.5 * (c + c.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(c);
  if (eig.info() != Eigen::Success) throw SolverError("dense eigensolve: symmetric eigensolver failed");
  DenseEigenResult out;
  out.lambda = eig.eigenvalues()[0];
  out.x = llt.matrixU().solve(Vector(eig.eigenvectors().col(0)));
  out.x /= std::sqrt(out.x.dot(m * out.x));
  if (x0 && x0->size() == out.x.size()) {
    if (out.x.dot(m * *x0) < 0.0) out.x = -out.x;
  } else {
    Eigen::Index imax = 0;
    out.x.cwiseAbs().maxCoeff(&imax);
    if (out.x[imax] < 0.0) out.x = -out.x;
  }
  return out;
}

SparseEigenResult smallest_eig_sparse(const SparseMatrix& k, const SparseMatrix& m, const Vector& x0, double tol,
                                      double vector_tol, int max_iter) {
  if (k.rows() != k.cols() || m.rows() != k.rows() || x0.size() != k.rows()) {
    throw std::invalid_argument("sparse eigensolve: dimension mismatch");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("sparse eigensolve: tolerance must be positive");
  SparseEigenResult out;
  Vector x = x0;
  const double x_norm = std::sqrt(x.dot(m * x));
  if (!(x_norm > 0.0)) throw std::invalid_argument("sparse eigensolve: zero start vector");
  x /= x_norm;
  double lambda_prev = x.dot(k * x);
  Vector guess = x / lambda_prev;
  const int inner_max = 50 * static_cast<int>(k.rows()) + 1000;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector rhs = m * x;
    auto solve = cg_solve(k, rhs, guess, tol / 10.0, inner_max);
    out.inner_iterations += solve.iterations;
    if (!solve.converged) {
      std::ostringstream msg;
      msg << "sparse eigensolve: inner CG stagnated at relative residual " << solve.relative_residual
          << " in outer iteration " << it << "; Rayleigh quotient trace:";
      for (double v : out.trace) msg << ' ' << v;
      throw SolverError(msg.str());
    }
    Vector next = solve.x / std::sqrt(solve.x.dot(m * solve.x));
    if (next.dot(m * x) < 0.0) next = -next;
    const double lambda = next.dot(k * next);
    const Vector dx = next - x;
    const double update = std::sqrt(std::max(0.0, dx.dot(m * dx)));
    x = std::move(next);
    out.trace.push_back(lambda);
    out.iterations = it;
    out.lambda = lambda;
    if (std::abs(lambda - lambda_prev) <= tol * std::max(1.0, std::abs(lambda)) && update <= vector_tol) break;
    lambda_prev = lambda;
    guess = x / lambda;
  }
  out.x = std::move(x);
  return out;
}

ScfResult scf_solve(const LevelSystem& system, const Vector& u0, const ScfConfig& cfg, Backend backend) {
  if (backend == Backend::Dense) {
    const DenseMatrix mass = to_dense(system.mass());
    return scf_loop(system, u0, cfg, [&](const SparseMatrix& cubic, const Vector& u) {
      const auto r = smallest_eig_dense(to_dense(system.linear_part()) + to_dense(cubic), mass, u);
      return std::pair{r.lambda, r.x};
    });
  }
  return scf_loop(system, u0, cfg, [&](const SparseMatrix& cubic, const Vector& u) {
    const SparseMatrix k = system.linear_part() + cubic;
    auto r = smallest_eig_sparse(k, system.mass(), u, cfg.inner_tol);
    return std::pair{r.lambda, std::move(r.x)};
  });
}

ScfResult scf_solve_projected(const LevelSystem& system, const SparseMatrix& basis, const Vector& u0,
                              const ScfConfig& cfg) {
  if (basis.rows() != system.num_dofs()) throw std::invalid_argument("basis does not live on this level");
  const SparseMatrix basis_t = basis.transpose();
  const DenseMatrix linear = to_dense(basis_t * (system.linear_part() * basis));
  const DenseMatrix mass = to_dense(basis_t * (system.mass() * basis));
  return scf_loop(system, u0, cfg, [&](const SparseMatrix& cubic, const Vector&) {
    const DenseMatrix projected = linear + to_dense(basis_t * (cubic * basis));
    const auto r = smallest_eig_dense(projected, mass);
    return std::pair{r.lambda, Vector(basis * r.x)};
  });
}

Vector bubble_initial_guess(const LevelSystem& system) {
  Vector u = system.space().interpolate([](double x, double y) { return 16.0 * x * (1.0 - x) * y * (1.0 - y); });
  if (u.squaredNorm() == 0.0) u.setOnes();
  normalize_in_place(u, system.mass());
  return u;
}

}  // namespace gpecmg
