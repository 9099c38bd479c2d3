#pragma once

#include <vector>

#include "gpecmg/eigensolve.hpp"
#include "gpecmg/mesh.hpp"
#include "gpecmg/smoother.hpp"

namespace gpecmg {

/// Smoothing-step schedule m_k = ⌈m̄ σ^{1/α} β^{ζ_s (n−k)/α}⌉ for k = 2..n.
struct Schedule {
  double m_bar = 2.0;
  double sigma = 2.0;
  double beta = 2.0;
  double zeta_sched = 1.8;
  double alpha = 1.0;

  void validate() const;
};

int schedule_m(int k, int n, const Schedule& s);

/// Assembled problem on every level of a hierarchy, plus the transfer
/// operators the correction steps need.
class MultilevelSystem {
 public:
  MultilevelSystem(Hierarchy hierarchy, const GpeProblem& problem);

  const Hierarchy& hierarchy() const noexcept { return hierarchy_; }
  const GpeProblem& problem() const noexcept { return problem_; }
  int num_levels() const noexcept { return hierarchy_.num_levels(); }
  int coarse_dofs() const noexcept { return coarse_dofs_; }

  /// Level k in 1..n.
  const LevelSystem& level(int k) const;
  /// Prolonged V_H basis on level k: N_k × N_H.
  const SparseMatrix& coarse_basis(int k) const;
  /// Prolongation from level k−1 to level k (k ≥ 2).
  const SparseMatrix& transfer(int k) const;

 private:
  Hierarchy hierarchy_;
  GpeProblem problem_;
  int coarse_dofs_ = 0;
  std::vector<LevelSystem> levels_;
  std::vector<SparseMatrix> coarse_basis_;
  std::vector<SparseMatrix> transfer_;
};

/// Inputs of one correction step from level k to level k+1.
struct CorrectionData {
  const LevelSystem& fine;
  const SparseMatrix& coarse_basis;
  const SparseMatrix& transfer;
};

struct CorrectionResult {
  Eigenpair pair;
  /// Smoothed (cascadic) or exactly solved (auxiliary) source solution.
  Vector source_solution;
  int smoothing_steps = 0;
  int scf_iterations = 0;
  bool scf_converged = false;
  int cubic_assemblies = 0;
  /// Columns of the augmented space dropped as linearly dependent.
  int dropped_columns = 0;
};

/// λ M u − (M_W + M_cubic(u)) u on the fine level, for u already prolonged.
Vector correction_rhs(const LevelSystem& fine, double lambda, const Vector& u);

/// Indices of columns kept by a sequential Cholesky of the unit-diagonal
/// scaled Gram matrix; a column is dropped when its pivot falls below
/// `rel_tol` times the largest kept pivot.
std::vector<int> independent_columns(const DenseMatrix& gram, double rel_tol = 1e-12);

/// Coarse basis augmented by dense columns.
SparseMatrix augment_basis(const SparseMatrix& coarse_basis, const std::vector<const Vector*>& extra);

/// Cascadic one-correction step: smooth the source problem on the fine
/// level starting from the prolonged previous eigenfunction, then solve the
/// nonlinear eigenproblem on V_H + span{ũ}.
CorrectionResult one_correction_step(const CorrectionData& data, const Eigenpair& previous, int smoothing_steps,
                                     const SmootherKind& kind, const ScfConfig& scf);

/// Auxiliary one-correction step: exact source solve (CG, relative residual
/// 1e-12), then the eigenproblem on V_H + span{û} + span{ũ_cascadic}.
CorrectionResult auxiliary_correction_step(const CorrectionData& data, const Eigenpair& previous,
                                           const Vector& cascadic_smoothed, const ScfConfig& scf);

struct LevelRecord {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  int m = 0;
  double lambda = 0.0;
  int varpi = 0;
  bool scf_converged = true;
  int dropped_columns = 0;
  long long nnz = 0;
  long long work_units = 0;
  int cubic_assemblies = 0;
};

struct WorkReport {
  long long smoothing_work = 0;
  int scf_iterations = 0;
  int cubic_assemblies = 0;
  /// Correction levels whose SCF hit its cap without meeting the tolerance.
  int unconverged_corrections = 0;
};

WorkReport summarize(const std::vector<LevelRecord>& trace);

struct CascadicOptions {
  Schedule schedule;
  SmootherKind smoother = SmootherKind::conjugate_gradient();
  ScfConfig level_one = ScfConfig::full_space();
  ScfConfig correction = ScfConfig::correction_space();
  /// When non-empty, steps_override[k] replaces m_k (index 0 and 1 unused).
  std::vector<int> steps_override;
};

struct CascadicResult {
  /// pairs[k-1] lives on level k.
  std::vector<Eigenpair> pairs;
  /// smoothed[k-1] is ũ^{h_k}; empty for level 1.
  std::vector<Vector> smoothed;
  std::vector<LevelRecord> trace;
  WorkReport work;

  const Eigenpair& final_pair() const { return pairs.back(); }
};

/// Cascadic multigrid on levels 1..n_levels (all levels when n_levels <= 0).
CascadicResult cascadic_solve(const MultilevelSystem& system, const CascadicOptions& options, int n_levels = 0);

struct AuxiliaryResult {
  std::vector<Eigenpair> pairs;
  std::vector<LevelRecord> trace;
};

/// Auxiliary multilevel correction paired with a cascadic run; shares its
/// level-one solve.
AuxiliaryResult auxiliary_solve(const MultilevelSystem& system, const CascadicResult& paired, const ScfConfig& correction);

/// Standard FE solve on each of levels 1..n_levels, warm-started with the
/// prolonged solution of the previous level.
std::vector<ScfResult> direct_solve_levels(const MultilevelSystem& system, const ScfConfig& scf, int n_levels = 0);

}  // namespace gpecmg
