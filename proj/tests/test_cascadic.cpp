#include <doctest.h>

#include <cmath>

#include "gpecmg/cascadic.hpp"

using namespace gpecmg;

namespace {

constexpr double kTwoPiSquared = 2.0 * M_PI * M_PI;

SparseMatrix identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

double h1_distance(const LevelSystem& level, const Vector& a, const Vector& b) {
  return h1_norm(a - b, level.laplace(), level.mass());
}

}  // namespace

TEST_CASE("schedule values") {
  const Schedule s;  // m̄ = 2, σ = 2, β = 2, exponent 1.8, α = 1
  CHECK(schedule_m(5, 5, s) == 4);
  CHECK(schedule_m(4, 5, s) == 14);
  CHECK(schedule_m(2, 5, s) == 169);
  // Independent evaluation of ⌈m̄σβ^{1.8(n-k)}⌉.
  for (int k = 2; k <= 6; ++k) CHECK(schedule_m(k, 6, s) == static_cast<int>(std::ceil(4.0 * std::pow(2.0, 1.8 * (6 - k)))));

  Schedule half = s;
  half.alpha = 0.5;
  CHECK(schedule_m(4, 5, half) == static_cast<int>(std::ceil(2.0 * 4.0 * std::pow(2.0, 3.6))));

  CHECK_THROWS_AS(schedule_m(1, 5, s), std::out_of_range);
  CHECK_THROWS_AS(schedule_m(6, 5, s), std::out_of_range);
  Schedule bad = s;
  bad.zeta_sched = 1.0;
  CHECK_THROWS_AS(schedule_m(3, 5, bad), std::invalid_argument);
}

TEST_CASE("schedule bounds") {
  const Schedule s;
  for (int n = 3; n <= 9; ++n) {
    for (int k = 2; k <= n - 1; ++k) {
      const double ratio = std::pow(2.0, n - k);
      const double m = schedule_m(k, n, s) / s.m_bar;
      CHECK(m >= std::pow(ratio, s.zeta_sched));
      CHECK(m <= s.sigma * std::pow(ratio, s.zeta_sched) + 1.0 / s.m_bar);
    }
  }
}

TEST_CASE("correction right-hand side") {
  const MultilevelSystem lin(Hierarchy(build_structured_unit_square(4), 0, 2), GpeProblem{{0.0, 0.0}, 0.0});
  const LevelSystem& fine = lin.level(2);
  const Vector u = Vector::LinSpaced(fine.num_dofs(), 0.1, 1.0);
  CHECK((correction_rhs(fine, 3.5, u) - 3.5 * (fine.mass() * u)).norm() <= 1e-15);
  CHECK(correction_rhs(fine, 3.5, Vector::Zero(fine.num_dofs())).norm() == 0.0);
  CHECK_THROWS_AS(correction_rhs(fine, 1.0, Vector::Ones(3)), std::invalid_argument);

  // At a converged discrete solution Âu − rhs is the eigen-residual.
  const MultilevelSystem gpe(Hierarchy(build_structured_unit_square(6), 0, 1), GpeProblem{});
  const LevelSystem& level = gpe.level(1);
  const auto direct = scf_solve(level, bubble_initial_guess(level), ScfConfig{1e-13, 100, 1e-13}, Backend::Dense);
  REQUIRE(direct.converged);
  const Vector r = level.laplace() * direct.pair.u - correction_rhs(level, direct.pair.lambda, direct.pair.u);
  CHECK(r.norm() <= 1e-8);
}

TEST_CASE("independent columns") {
  DenseMatrix basis(4, 3);
  basis << 1, 0, 2, 0, 1, 0, 0, 0, 0, 1, 1, 2;  // third column = 2 × first
  const auto keep = independent_columns(basis.transpose() * basis);
  CHECK(keep == std::vector<int>{0, 1});
  DenseMatrix scaled = basis;
  scaled.col(1) *= 1e8;
  CHECK(independent_columns(scaled.transpose() * scaled) == std::vector<int>{0, 1});
  CHECK(independent_columns(DenseMatrix::Identity(3, 3)) == std::vector<int>{0, 1, 2});
}

TEST_CASE("degenerate correction space reproduces the direct solve") {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(6), 0, 1), GpeProblem{});
  const LevelSystem& level = system.level(1);
  const SparseMatrix id = identity(level.num_dofs());
  const CorrectionData data{level, id, id};
  const Eigenpair start = make_eigenpair(level, bubble_initial_guess(level));
  const ScfConfig scf = ScfConfig::full_space();
  const auto step = one_correction_step(data, start, 0, SmootherKind::conjugate_gradient(), scf);
  const auto direct = scf_solve(level, bubble_initial_guess(level), scf, Backend::Dense);
  CHECK(step.dropped_columns == 1);
  CHECK(std::abs(step.pair.lambda - direct.pair.lambda) <= 1e-10);
}

TEST_CASE("a converged solution is a fixed point of the correction step") {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(4), 0, 2), GpeProblem{});
  const LevelSystem& fine = system.level(2);
  const auto direct = scf_solve(fine, bubble_initial_guess(fine), ScfConfig{1e-13, 100, 1e-13}, Backend::Sparse);
  REQUIRE(direct.converged);
  const SparseMatrix id = identity(fine.num_dofs());
  const CorrectionData data{fine, system.coarse_basis(2), id};
  for (const auto& kind : {SmootherKind::damped_jacobi(), SmootherKind::symmetric_gauss_seidel(), SmootherKind::ssor(),
                           SmootherKind::richardson()}) {
    const auto step = one_correction_step(data, direct.pair, 10, kind, ScfConfig{1e-14, 50, 1e-13});
    CHECK(std::abs(step.pair.lambda - direct.pair.lambda) <= 1e-8);
    CHECK((step.pair.u - direct.pair.u).norm() <= 1e-8);
  }
}

TEST_CASE("saturated smoothing makes the cascadic and auxiliary steps coincide") {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(4), 0, 2), GpeProblem{});
  const auto first = scf_solve(system.level(1), bubble_initial_guess(system.level(1)), ScfConfig{}, Backend::Sparse);
  const CorrectionData data{system.level(2), system.coarse_basis(2), system.transfer(2)};
  const ScfConfig scf{1e-13, 50, 1e-13};
  const auto casc = one_correction_step(data, first.pair, 10 * system.level(2).num_dofs(),
                                        SmootherKind::conjugate_gradient(), scf);
  const auto aux = auxiliary_correction_step(data, first.pair, casc.source_solution, scf);
  CHECK(aux.dropped_columns == 1);
  CHECK(std::abs(casc.pair.lambda - aux.pair.lambda) <= 1e-8);
}

TEST_CASE("cascadic and auxiliary runs") {
  const int n = 3;
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(6), 0, n), GpeProblem{});
  const CascadicOptions options;
  const auto run = cascadic_solve(system, options);
  const auto aux = auxiliary_solve(system, run, options.correction);
  const auto direct = direct_solve_levels(system, ScfConfig{1e-12, 100, 1e-12});
  REQUIRE(run.pairs.size() == static_cast<std::size_t>(n));

  long long work = 0;
  for (int k = 1; k <= n; ++k) {
    const LevelSystem& level = system.level(k);
    for (const Eigenpair* p : {&run.pairs[k - 1], &aux.pairs[k - 1]}) {
      const auto d = eigenpair_defects(level, *p);
      CHECK(d.normalization <= 1e-12);
      CHECK(d.consistency <= 1e-10);
      CHECK(d.sign_ok);
    }
    const auto& r = run.trace[k - 1];
    CHECK(r.dofs == level.num_dofs());
    if (k >= 2) {
      CHECK(r.m == schedule_m(k, n, options.schedule));
      CHECK(r.work_units == r.m * level.laplace().nonZeros());
      CHECK(r.varpi <= options.correction.max_iter);
      // Exact source solves are at least as accurate as smoothing.
      const Vector& ref = direct[k - 1].pair.u;
      CHECK(h1_distance(level, aux.pairs[k - 1].u, ref) <= h1_distance(level, run.pairs[k - 1].u, ref) + 1e-10);
    }
    work += r.work_units;
  }
  CHECK(run.work.smoothing_work == work);
  CHECK(run.smoothed.front().size() == 0);

  // One level is the direct solve.
  const auto single = cascadic_solve(system, options, 1);
  const auto same_config = direct_solve_levels(system, options.level_one, 1);
  CHECK(std::abs(single.final_pair().lambda - same_config.front().pair.lambda) <= 1e-12);
  CHECK(single.work.smoothing_work == 0);
  CHECK_THROWS_AS(cascadic_solve(system, options, n + 1), std::out_of_range);
}

TEST_CASE("linear limit approaches the Laplace eigenvalue") {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(8), 0, 4), GpeProblem{{0.0, 0.0}, 0.0});
  const auto run = cascadic_solve(system, CascadicOptions{});
  CHECK(std::abs(run.final_pair().lambda - kTwoPiSquared) <= 0.01 * kTwoPiSquared);
  const auto direct = direct_solve_levels(system, ScfConfig{});
  CHECK(run.final_pair().lambda >= direct.back().pair.lambda - 1e-10);
}

TEST_CASE("steps override") {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(4), 0, 3), GpeProblem{});
  CascadicOptions options;
  options.steps_override = {0, 0, 7, 3};
  const auto run = cascadic_solve(system, options);
  CHECK(run.trace[1].m == 7);
  CHECK(run.trace[2].m == 3);
}

TEST_CASE("operator mismatch is rejected") {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(4), 0, 2), GpeProblem{});
  const CorrectionData data{system.level(2), system.coarse_basis(2), system.transfer(2)};
  Eigenpair wrong{1.0, Vector::Ones(5)};
  CHECK_THROWS_AS(one_correction_step(data, wrong, 1, SmootherKind::conjugate_gradient(), ScfConfig{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(system.transfer(1), std::out_of_range);
  CHECK_THROWS_AS(system.level(3), std::out_of_range);
}
