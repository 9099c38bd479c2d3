#include <cmath>
#include <random>
#include <sstream>

#include "gpecmg/harness.hpp"

namespace gpecmg {
namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CheckResult mesh_counts() {
  CheckResult c{"mesh conformity and refinement counts", true, ""};
  const Hierarchy h(build_structured_unit_square(3), 1, 3);
  for (int k = 1; k <= 3; ++k) {
    const Mesh& prev = h.level(k - 1);
    const Mesh& cur = h.level(k);
    if (cur.num_vertices() != prev.num_vertices() + prev.num_edges() || cur.num_triangles() != 4 * prev.num_triangles()) {
      c.passed = false;
    }
    for (int t = 0; t < cur.num_triangles(); ++t) {
      if (!(cur.signed_area(t) > 0.0)) c.passed = false;
    }
    for (int e = 0; e < cur.num_edges(); ++e) {
      if (cur.edge_multiplicity(e) < 1 || cur.edge_multiplicity(e) > 2) c.passed = false;
    }
  }
  c.detail = "levels 0..3 from a 3x3 structured mesh";
  return c;
}

CheckResult quadrature() {
  const auto& rule = degree4_rule();
  double worst = 0.0;
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) {
      double q = 0.0;
      for (std::size_t i = 0; i < rule.points.size(); ++i) {
        q += rule.weights[i] * std::pow(rule.points[i][1], a) * std::pow(rule.points[i][2], b);
      }
      q *= 0.5;
      worst = std::max(worst, std::abs(q - factorial(a) * factorial(b) / factorial(a + b + 2)));
    }
  }
  return {"degree-4 quadrature exactness", worst <= 1e-14, "max monomial error " + sci(worst)};
}

CheckResult symmetry(std::mt19937_64& rng) {
  const Hierarchy h(build_structured_unit_square(4), 0, 2);
  const FeSpace space(h.level_ptr(2));
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector u(space.num_dofs());
  for (auto& v : u) v = dist(rng);
  bool ok = true;
  for (const SparseMatrix& m : {assemble_laplace(space), assemble_mass(space), assemble_potential(space, {1.0, 2.0}),
                                assemble_cubic(space, u, 1.0)}) {
    if ((m - SparseMatrix(m.transpose())).norm() != 0.0) ok = false;
  }
  return {"assembled matrices exactly symmetric", ok, "laplace, mass, potential, cubic"};
}

CheckResult prolongation(std::mt19937_64& rng) {
  const Hierarchy h(build_structured_unit_square(3), 0, 3);
  const FeSpace coarse(h.level_ptr(1)), fine(h.level_ptr(3));
  const SparseMatrix p = prolongation_matrix(h, 1, 3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Vector u(coarse.num_dofs());
    for (auto& v : u) v = dist(rng);
    const Vector pu = p * u;
    worst = std::max(worst, std::abs(l2_norm(u, assemble_mass(coarse)) - l2_norm(pu, assemble_mass(fine))));
    worst = std::max(worst, std::abs(h1_seminorm(u, assemble_laplace(coarse)) - h1_seminorm(pu, assemble_laplace(fine))));
  }
  return {"prolongation preserves functions", worst <= 1e-12, "max norm drift " + sci(worst)};
}

CheckResult non_expansion(std::mt19937_64& rng) {
  const FeSpace space(std::make_shared<const Mesh>(build_structured_unit_square(8)));
  const SparseMatrix a = assemble_laplace(space);
  const Vector zero = Vector::Zero(space.num_dofs());
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  int violations = 0;
  for (const auto& kind : {SmootherKind::conjugate_gradient(), SmootherKind::damped_jacobi(),
                           SmootherKind::symmetric_gauss_seidel(), SmootherKind::ssor(), SmootherKind::richardson()}) {
    const SmootherKind k = resolve_for(kind, a);
    for (int trial = 0; trial < 10; ++trial) {
      Vector x(space.num_dofs());
      for (auto& v : x) v = dist(rng);
      double prev = energy_norm(a, x);
      for (int step = 0; step < 8; ++step) {
        x = smooth(a, zero, x, 1, k);
        const double cur = energy_norm(a, x);
        if (cur > prev * (1.0 + 1e-12)) ++violations;
        prev = cur;
      }
    }
  }
  return {"smoothers do not expand the energy norm", violations == 0,
          std::to_string(violations) + " violations over 5 kinds x 10 trials x 8 steps"};
}

CheckResult schedule_bounds() {
  const Schedule s;
  bool ok = true;
  for (int n = 3; n <= 8; ++n) {
    for (int k = 2; k <= n - 1; ++k) {
      const double ratio = std::pow(s.beta, n - k);  // h_k / h_n
      const double m = static_cast<double>(schedule_m(k, n, s)) / s.m_bar;
      if (m < std::pow(ratio, s.zeta_sched) || m > s.sigma * std::pow(ratio, s.zeta_sched) + 1.0 / s.m_bar) ok = false;
    }
  }
  return {"smoothing schedule bounds", ok, "n = 3..8, k = 2..n-1"};
}

CheckResult eigenpair_invariants() {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(4), 0, 3), GpeProblem{});
  const auto run = cascadic_solve(system, CascadicOptions{});
  const auto aux = auxiliary_solve(system, run, ScfConfig::correction_space());
  DefectSummary d;
  for (int k = 1; k <= 3; ++k) {
    d.add(system.level(k), run.pairs[static_cast<std::size_t>(k - 1)]);
    d.add(system.level(k), aux.pairs[static_cast<std::size_t>(k - 1)]);
  }
  return {"eigenpair normalization, sign and consistency", d.clean(),
          "max |uMu-1| " + sci(d.max_normalization) + ", max |lambda-a(u,u)| " + sci(d.max_consistency)};
}

CheckResult single_level() {
  const MultilevelSystem system(Hierarchy(build_structured_unit_square(6), 0, 1), GpeProblem{});
  const auto run = cascadic_solve(system, CascadicOptions{}, 1);
  const auto direct = direct_solve_levels(system, ScfConfig::full_space(), 1);
  const double diff = std::abs(run.final_pair().lambda - direct.front().pair.lambda);
  return {"one-level cascadic equals the direct solve", diff <= 1e-12, "|dlambda| " + sci(diff)};
}

CheckResult backends() {
  const LevelSystem level(std::make_shared<const Mesh>(build_structured_unit_square(8)), GpeProblem{});
  const Vector u0 = bubble_initial_guess(level);
  const auto dense = scf_solve(level, u0, ScfConfig::full_space(), Backend::Dense);
  const auto sparse = scf_solve(level, u0, ScfConfig::full_space(), Backend::Sparse);
  const double diff = std::abs(dense.pair.lambda - sparse.pair.lambda);
  return {"dense and sparse eigensolvers agree", diff <= 1e-8, "|dlambda| " + sci(diff) + " on 49 dofs"};
}

CheckResult csv_round_trip(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(1e-9, 1.0);
  ErrorTable t;
  for (int k = 1; k <= 5; ++k) {
    t.rows.push_back({k, dist(rng), 10 * k, k, 20.0 + dist(rng), 3, dist(rng), dist(rng), dist(rng), 1000LL * k,
                      dist(rng)});
  }
  t.fit_slopes();
  const ErrorTable back = parse_errors_csv(errors_csv(t));
  bool ok = back.rows.size() == t.rows.size();
  for (std::size_t i = 0; ok && i < t.rows.size(); ++i) {
    const auto &a = t.rows[i], &b = back.rows[i];
    ok = a.level == b.level && a.h == b.h && a.dofs == b.dofs && a.m == b.m && a.lambda == b.lambda &&
         a.varpi == b.varpi && a.err_h1 == b.err_h1 && a.err_l2 == b.err_l2 && a.err_lambda == b.err_lambda &&
         a.work == b.work && a.seconds == b.seconds;
  }
  return {"errors.csv round trip", ok, "5 random rows"};
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  out.push_back(mesh_counts());
  out.push_back(quadrature());
  out.push_back(symmetry(rng));
  out.push_back(prolongation(rng));
  out.push_back(non_expansion(rng));
  out.push_back(schedule_bounds());
  out.push_back(eigenpair_invariants());
  out.push_back(single_level());
  out.push_back(backends());
  out.push_back(csv_round_trip(rng));
  return out;
}

}  // namespace gpecmg
