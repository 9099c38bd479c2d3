#include "gpecmg/cascadic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gpecmg {
namespace {

// Solves the projected eigenproblem on span(coarse basis ∪ extra), dropping
// dependent extra columns first.
CorrectionResult solve_in_augmented_space(const CorrectionData& data, const std::vector<const Vector*>& extra,
                                          const Vector& start, const ScfConfig& scf) {
  const SparseMatrix full = augment_basis(data.coarse_basis, extra);
  const DenseMatrix gram = to_dense(SparseMatrix(full.transpose()) * (data.fine.mass() * full));
  const auto keep = independent_columns(gram);

  CorrectionResult result;
  result.dropped_columns = static_cast<int>(full.cols()) - static_cast<int>(keep.size());
  SparseMatrix basis = full;
  if (result.dropped_columns > 0) {
    std::vector<const Vector*> kept_extra;
    const auto n_coarse = static_cast<int>(data.coarse_basis.cols());
    std::vector<int> kept_coarse;
    for (int c : keep) {
      if (c < n_coarse) {
        kept_coarse.push_back(c);
      } else {
        kept_extra.push_back(extra[static_cast<std::size_t>(c - n_coarse)]);
      }
    }
    if (static_cast<int>(kept_coarse.size()) != n_coarse) {
      throw SolverError("coarse space basis is rank deficient on the fine level");
    }
    basis = augment_basis(data.coarse_basis, kept_extra);
  }
  auto scf_result = scf_solve_projected(data.fine, basis, start, scf);
  result.pair = std::move(scf_result.pair);
  result.scf_iterations = scf_result.iterations;
  result.scf_converged = scf_result.converged;
  result.cubic_assemblies = scf_result.cubic_assemblies;
  return result;
}

void check_previous(const CorrectionData& data, const Eigenpair& previous) {
  if (data.transfer.rows() != data.fine.num_dofs() || data.coarse_basis.rows() != data.fine.num_dofs()) {
    throw std::invalid_argument("correction step: operators do not match the fine level");
  }
  if (previous.u.size() != data.transfer.cols()) {
    throw std::invalid_argument("correction step: previous eigenfunction does not match the transfer operator");
  }
}

LevelRecord record_for(const LevelSystem& level, int k, const Eigenpair& pair) {
  LevelRecord r;
  r.level = k;
  r.h = level.mesh_size();
  r.dofs = level.num_dofs();
  r.lambda = pair.lambda;
  r.nnz = level.laplace().nonZeros();
  return r;
}

}  // namespace

void Schedule::validate() const {
  if (!(m_bar >= 1.0)) throw std::invalid_argument("m_bar must be at least 1");
  if (!(sigma >= 1.0)) throw std::invalid_argument("sigma must be at least 1");
  if (!(beta > 1.0)) throw std::invalid_argument("beta must exceed 1");
  if (!(zeta_sched > 1.0)) throw std::invalid_argument("schedule exponent must exceed 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("smoothing exponent must be positive");
}

int schedule_m(int k, int n, const Schedule& s) {
  s.validate();
  if (k < 2 || k > n) {
    throw std::out_of_range("schedule level " + std::to_string(k) + " outside 2.." + std::to_string(n));
  }
  const double value = s.m_bar * std::pow(s.sigma, 1.0 / s.alpha) *
                       std::pow(s.beta, s.zeta_sched * static_cast<double>(n - k) / s.alpha);
  // Guard the ceiling against round-off on exact integers.
  return static_cast<int>(std::ceil(value * (1.0 - 1e-12)));
}

MultilevelSystem::MultilevelSystem(Hierarchy hierarchy, const GpeProblem& problem)
    : hierarchy_(std::move(hierarchy)), problem_(problem) {
  problem_.validate();
  coarse_dofs_ = FeSpace(hierarchy_.level_ptr(0)).num_dofs();
  if (coarse_dofs_ == 0) throw std::invalid_argument("coarse mesh has no interior vertices");
  const int n = hierarchy_.num_levels();
  levels_.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    levels_.emplace_back(hierarchy_.level_ptr(k), problem_);
    coarse_basis_.push_back(prolongation_matrix(hierarchy_, 0, k));
    transfer_.push_back(k >= 2 ? prolongation_matrix(hierarchy_, k - 1, k) : SparseMatrix());
  }
}

const LevelSystem& MultilevelSystem::level(int k) const {
  if (k < 1 || k > num_levels()) throw std::out_of_range("level " + std::to_string(k) + " out of range");
  return levels_[static_cast<std::size_t>(k - 1)];
}

const SparseMatrix& MultilevelSystem::coarse_basis(int k) const {
  if (k < 1 || k > num_levels()) throw std::out_of_range("level " + std::to_string(k) + " out of range");
  return coarse_basis_[static_cast<std::size_t>(k - 1)];
}

const SparseMatrix& MultilevelSystem::transfer(int k) const {
  if (k < 2 || k > num_levels()) throw std::out_of_range("no transfer into level " + std::to_string(k));
  return transfer_[static_cast<std::size_t>(k - 1)];
}

Vector correction_rhs(const LevelSystem& fine, double lambda, const Vector& u) {
  if (u.size() != fine.num_dofs()) throw std::invalid_argument("correction_rhs: dimension mismatch");
  return lambda * (fine.mass() * u) - fine.potential() * u - fine.cubic(u) * u;
}

std::vector<int> independent_columns(const DenseMatrix& gram, double rel_tol) {
  const Eigen::Index n = gram.rows();
  // Unit-diagonal scaling makes the pivots scale-free.
  Vector scale(n);
  for (Eigen::Index i = 0; i < n; ++i) scale[i] = gram(i, i) > 0.0 ? 1.0 / std::sqrt(gram(i, i)) : 0.0;
  const DenseMatrix g = scale.asDiagonal() * gram * scale.asDiagonal();

  std::vector<int> keep;
  // Rows of the partial Cholesky factor for the kept columns.
  DenseMatrix l = DenseMatrix::Zero(n, n);
  double max_pivot = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (scale[j] == 0.0) continue;
    const auto r = static_cast<Eigen::Index>(keep.size());
    Vector row(r);
    for (Eigen::Index a = 0; a < r; ++a) {
      double s = g(keep[static_cast<std::size_t>(a)], j);
      for (Eigen::Index b = 0; b < a; ++b) s -= l(a, b) * row[b];
      row[a] = s / l(a, a);
    }
    const double pivot = g(j, j) - row.squaredNorm();
    if (pivot <= rel_tol * std::max(max_pivot, pivot) || pivot <= 0.0) continue;
    max_pivot = std::max(max_pivot, pivot);
    for (Eigen::Index a = 0; a < r; ++a) l(r, a) = row[a];
    l(r, r) = std::sqrt(pivot);
    keep.push_back(static_cast<int>(j));
  }
  return keep;
}

SparseMatrix augment_basis(const SparseMatrix& coarse_basis, const std::vector<const Vector*>& extra) {
  const Eigen::Index rows = coarse_basis.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(coarse_basis.nonZeros() + rows * static_cast<Eigen::Index>(extra.size())));
  for (int j = 0; j < coarse_basis.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(coarse_basis, j); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
  }
  Eigen::Index col = coarse_basis.cols();
  for (const Vector* v : extra) {
    if (v->size() != rows) throw std::invalid_argument("augment_basis: column length mismatch");
    for (Eigen::Index i = 0; i < rows; ++i) {
      if ((*v)[i] != 0.0) triplets.emplace_back(i, col, (*v)[i]);
    }
    ++col;
  }
  SparseMatrix basis(rows, col);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  return basis;
}

CorrectionResult one_correction_step(const CorrectionData& data, const Eigenpair& previous, int smoothing_steps,
                                     const SmootherKind& kind, const ScfConfig& scf) {
  check_previous(data, previous);
  if (smoothing_steps < 0) throw std::invalid_argument("smoothing steps must be nonnegative");
  const Vector start = data.transfer * previous.u;
  const Vector rhs = correction_rhs(data.fine, previous.lambda, start);
  Vector smoothed = smooth(data.fine.laplace(), rhs, start, smoothing_steps, resolve_for(kind, data.fine.laplace()));

  auto result = solve_in_augmented_space(data, {&smoothed}, smoothed, scf);
  result.cubic_assemblies += 1;  // right-hand side
  result.smoothing_steps = smoothing_steps;
  result.source_solution = std::move(smoothed);
  return result;
}

CorrectionResult auxiliary_correction_step(const CorrectionData& data, const Eigenpair& previous,
                                           const Vector& cascadic_smoothed, const ScfConfig& scf) {
  check_previous(data, previous);
  if (cascadic_smoothed.size() != data.fine.num_dofs()) {
    throw std::invalid_argument("auxiliary step: cascadic function does not live on the fine level");
  }
  const Vector start = data.transfer * previous.u;
  const Vector rhs = correction_rhs(data.fine, previous.lambda, start);
  auto exact = cg_solve(data.fine.laplace(), rhs, start, 1e-12, 50 * data.fine.num_dofs() + 1000);
  if (!exact.converged) {
    throw SolverError("auxiliary step: source solve stalled at relative residual " +
                      std::to_string(exact.relative_residual));
  }
  auto result = solve_in_augmented_space(data, {&exact.x, &cascadic_smoothed}, exact.x, scf);
  result.cubic_assemblies += 1;
  result.source_solution = std::move(exact.x);
  return result;
}

WorkReport summarize(const std::vector<LevelRecord>& trace) {
  WorkReport w;
  for (const auto& r : trace) {
    w.smoothing_work += r.work_units;
    w.scf_iterations += r.varpi;
    w.cubic_assemblies += r.cubic_assemblies;
    if (r.level >= 2 && !r.scf_converged) ++w.unconverged_corrections;
  }
  return w;
}

CascadicResult cascadic_solve(const MultilevelSystem& system, const CascadicOptions& options, int n_levels) {
  const int n = n_levels <= 0 ? system.num_levels() : n_levels;
  if (n > system.num_levels()) throw std::out_of_range("requested more levels than the hierarchy holds");
  options.schedule.validate();
  options.smoother.validate();

  CascadicResult out;
  const LevelSystem& first = system.level(1);
  auto initial = scf_solve(first, bubble_initial_guess(first), options.level_one, Backend::Sparse);
  if (!initial.converged) {
    throw SolverError("level-1 SCF did not converge in " + std::to_string(initial.iterations) + " iterations");
  }
  LevelRecord r1 = record_for(first, 1, initial.pair);
  r1.varpi = initial.iterations;
  r1.cubic_assemblies = initial.cubic_assemblies;
  out.trace.push_back(r1);
  out.pairs.push_back(std::move(initial.pair));
  out.smoothed.emplace_back();

  for (int k = 1; k < n; ++k) {
    const int fine = k + 1;
    const int m = options.steps_override.empty() ? schedule_m(fine, n, options.schedule)
                                                 : options.steps_override.at(static_cast<std::size_t>(fine));
    const CorrectionData data{system.level(fine), system.coarse_basis(fine), system.transfer(fine)};
    auto step = one_correction_step(data, out.pairs.back(), m, options.smoother, options.correction);

    LevelRecord r = record_for(system.level(fine), fine, step.pair);
    r.m = m;
    r.varpi = step.scf_iterations;
    r.scf_converged = step.scf_converged;
    r.dropped_columns = step.dropped_columns;
    r.work_units = static_cast<long long>(m) * r.nnz;
    r.cubic_assemblies = step.cubic_assemblies;
    out.trace.push_back(r);
    out.pairs.push_back(std::move(step.pair));
    out.smoothed.push_back(std::move(step.source_solution));
  }
  out.work = summarize(out.trace);
  return out;
}

AuxiliaryResult auxiliary_solve(const MultilevelSystem& system, const CascadicResult& paired, const ScfConfig& correction) {
  const int n = static_cast<int>(paired.pairs.size());
  if (n < 1 || n > system.num_levels()) throw std::invalid_argument("paired cascadic run does not match the system");
  AuxiliaryResult out;
  out.pairs.push_back(paired.pairs.front());
  out.trace.push_back(paired.trace.front());
  for (int k = 1; k < n; ++k) {
    const int fine = k + 1;
    const CorrectionData data{system.level(fine), system.coarse_basis(fine), system.transfer(fine)};
    auto step = auxiliary_correction_step(data, out.pairs.back(), paired.smoothed[static_cast<std::size_t>(k)], correction);
    LevelRecord r = record_for(system.level(fine), fine, step.pair);
    r.varpi = step.scf_iterations;
    r.scf_converged = step.scf_converged;
    r.dropped_columns = step.dropped_columns;
    r.cubic_assemblies = step.cubic_assemblies;
    out.trace.push_back(r);
    out.pairs.push_back(std::move(step.pair));
  }
  return out;
}

std::vector<ScfResult> direct_solve_levels(const MultilevelSystem& system, const ScfConfig& scf, int n_levels) {
  const int n = n_levels <= 0 ? system.num_levels() : n_levels;
  if (n > system.num_levels()) throw std::out_of_range("requested more levels than the hierarchy holds");
  std::vector<ScfResult> out;
  for (int k = 1; k <= n; ++k) {
    const LevelSystem& level = system.level(k);
    const Vector start = k == 1 ? bubble_initial_guess(level) : Vector(system.transfer(k) * out.back().pair.u);
    auto result = scf_solve(level, start, scf, Backend::Sparse);
    if (!result.converged) {
      throw SolverError("direct SCF on level " + std::to_string(k) + " did not converge in " +
                        std::to_string(result.iterations) + " iterations");
    }
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace gpecmg
