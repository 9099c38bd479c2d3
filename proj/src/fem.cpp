#include "gpecmg/fem.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gpecmg {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct ElementGeometry {
  std::array<Point, 3> p;
  double area = 0.0;
  // Gradients of the barycentric coordinates.
  std::array<std::array<double, 2>, 3> grad{};
};

ElementGeometry geometry(const Mesh& mesh, int t) {
  ElementGeometry g;
  const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
  for (int i = 0; i < 3; ++i) g.p[i] = mesh.vertices()[static_cast<std::size_t>(tri[i])];
  g.area = mesh.signed_area(t);
  for (int i = 0; i < 3; ++i) {
    const Point& a = g.p[(i + 1) % 3];
    const Point& b = g.p[(i + 2) % 3];
    g.grad[i] = {(a.y - b.y) / (2.0 * g.area), (b.x - a.x) / (2.0 * g.area)};
  }
  return g;
}

Point at(const ElementGeometry& g, const std::array<double, 3>& bary) {
  return {bary[0] * g.p[0].x + bary[1] * g.p[1].x + bary[2] * g.p[2].x,
          bary[0] * g.p[0].y + bary[1] * g.p[1].y + bary[2] * g.p[2].y};
}

// Assembles a symmetric form from a 3x3 element kernel. Only the upper
// triangle of each element matrix is computed; mirrored entries receive the
// identical value so the global matrix is exactly symmetric.
template <class Kernel>
SparseMatrix assemble_symmetric(const FeSpace& space, Kernel&& kernel) {
  const Mesh& mesh = space.mesh();
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
  std::array<std::array<double, 3>, 3> local{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    kernel(t, local);
    for (int i = 0; i < 3; ++i) {
      const int di = space.dof_of_vertex(tri[i]);
      if (di == FeSpace::kConstrained) continue;
      triplets.emplace_back(di, di, local[i][i]);
      for (int j = i + 1; j < 3; ++j) {
        const int dj = space.dof_of_vertex(tri[j]);
        if (dj == FeSpace::kConstrained) continue;
        triplets.emplace_back(di, dj, local[i][j]);
        triplets.emplace_back(dj, di, local[i][j]);
      }
    }
  }
  SparseMatrix m(space.num_dofs(), space.num_dofs());
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

// ∫_T f λ_i λ_j with the degree-4 rule; f is evaluated at physical points.
template <class F>
void weighted_mass_kernel(const ElementGeometry& g, F&& f, std::array<std::array<double, 3>, 3>& local) {
  const auto& rule = degree4_rule();
  for (auto& row : local) row.fill(0.0);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& b = rule.points[q];
    const double wf = rule.weights[q] * g.area * f(b, at(g, b));
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) local[i][j] += wf * b[i] * b[j];
    }
  }
}

SparseMatrix vertex_step(const std::vector<VertexParent>& parents, int n_coarse) {
  Triplets triplets;
  for (std::size_t v = 0; v < parents.size(); ++v) {
    const auto& p = parents[v];
    if (p.is_midpoint()) {
      triplets.emplace_back(static_cast<int>(v), p.a, 0.5);
      triplets.emplace_back(static_cast<int>(v), p.b, 0.5);
    } else {
      triplets.emplace_back(static_cast<int>(v), p.a, 1.0);
    }
  }
  SparseMatrix m(static_cast<int>(parents.size()), n_coarse);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

// Free-dof selection: rows are dofs, columns vertices.
SparseMatrix dof_selector(const FeSpace& space) {
  Triplets triplets;
  for (int i = 0; i < space.num_dofs(); ++i) triplets.emplace_back(i, space.free_dofs()[static_cast<std::size_t>(i)], 1.0);
  SparseMatrix s(space.num_dofs(), space.mesh().num_vertices());
  s.setFromTriplets(triplets.begin(), triplets.end());
  return s;
}

}  // namespace

const QuadratureRule& degree4_rule() {
  // Orbits (a, a, 1 - 2a) with weights fitted to the degree-4 moments.
  static const QuadratureRule rule = [] {
    constexpr double a1 = 0.44594849091596488632, w1 = 0.22338158967801146570;
    constexpr double a2 = 0.091576213509770743460, w2 = 0.10995174365532186764;
    QuadratureRule r;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double c = 1.0 - 2.0 * a;
      r.points.push_back({a, a, c});
      r.points.push_back({a, c, a});
      r.points.push_back({c, a, a});
      r.weights.insert(r.weights.end(), 3, w);
    }
    return r;
  }();
  return rule;
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, Boundary kind) : mesh_(std::move(mesh)) {
  const auto& boundary = mesh_->boundary_flags();
  dof_of_vertex_.assign(boundary.size(), kConstrained);
  for (std::size_t v = 0; v < boundary.size(); ++v) {
    if (boundary[v] && kind == Boundary::Dirichlet) continue;
    dof_of_vertex_[v] = static_cast<int>(free_dofs_.size());
    free_dofs_.push_back(static_cast<int>(v));
  }
}

Vector FeSpace::to_vertex_values(const Vector& coeffs) const {
  if (coeffs.size() != num_dofs()) throw std::invalid_argument("coefficient vector does not match the space");
  Vector out = Vector::Zero(mesh_->num_vertices());
  for (int i = 0; i < num_dofs(); ++i) out[free_dofs_[static_cast<std::size_t>(i)]] = coeffs[i];
  return out;
}

SparseMatrix assemble_laplace(const FeSpace& space) {
  return assemble_symmetric(space, [&](int t, auto& local) {
    const auto g = geometry(space.mesh(), t);
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        local[i][j] = g.area * (g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1]);
      }
    }
  });
}

SparseMatrix assemble_mass(const FeSpace& space) {
  return assemble_symmetric(space, [&](int t, auto& local) {
    const double area = space.mesh().signed_area(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) local[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
    }
  });
}

SparseMatrix assemble_potential(const FeSpace& space, std::array<double, 2> gamma) {
  if (gamma[0] < 0.0 || gamma[1] < 0.0) throw std::invalid_argument("potential coefficients must be nonnegative");
  return assemble_symmetric(space, [&](int t, auto& local) {
    const auto g = geometry(space.mesh(), t);
    weighted_mass_kernel(
        g, [&](const auto&, const Point& x) { return gamma[0] * x.x * x.x + gamma[1] * x.y * x.y; }, local);
  });
}

SparseMatrix assemble_cubic(const FeSpace& space, const Vector& u, double zeta) {
  if (zeta < 0.0) throw std::invalid_argument("nonlinearity strength must be nonnegative");
  const Vector nodal = space.to_vertex_values(u);
  const Mesh& mesh = space.mesh();
  return assemble_symmetric(space, [&](int t, auto& local) {
    const auto g = geometry(mesh, t);
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    const std::array<double, 3> uv{nodal[tri[0]], nodal[tri[1]], nodal[tri[2]]};
    weighted_mass_kernel(
        g,
        [&](const std::array<double, 3>& b, const Point&) {
          const double val = b[0] * uv[0] + b[1] * uv[1] + b[2] * uv[2];
          return zeta * val * val;
        },
        local);
  });
}

SparseMatrix assemble_full_mass(const Mesh& mesh) {
  Triplets triplets;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    const double area = mesh.signed_area(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) triplets.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
    }
  }
  SparseMatrix m(mesh.num_vertices(), mesh.num_vertices());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

double l2_norm(const Vector& u, const SparseMatrix& mass) { return std::sqrt(std::max(0.0, u.dot(mass * u))); }

double h1_seminorm(const Vector& u, const SparseMatrix& laplace) {
  return std::sqrt(std::max(0.0, u.dot(laplace * u)));
}

double h1_norm(const Vector& u, const SparseMatrix& laplace, const SparseMatrix& mass) {
  return std::sqrt(std::max(0.0, u.dot(laplace * u) + u.dot(mass * u)));
}

double evaluate(const Mesh& mesh, const Vector& vertex_values, int t, const std::array<double, 3>& bary) {
  const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
  return bary[0] * vertex_values[tri[0]] + bary[1] * vertex_values[tri[1]] + bary[2] * vertex_values[tri[2]];
}

SparseMatrix single_step_prolongation(const FeSpace& coarse, const FeSpace& fine,
                                      const std::vector<VertexParent>& parents) {
  if (static_cast<int>(parents.size()) != fine.mesh().num_vertices()) {
    throw std::invalid_argument("parent map does not match the fine mesh");
  }
  SparseMatrix p = dof_selector(fine) * vertex_step(parents, coarse.mesh().num_vertices()) *
                   SparseMatrix(dof_selector(coarse).transpose());
  p.prune(0.0);
  p.makeCompressed();
  return p;
}

SparseMatrix prolongation_matrix(const Hierarchy& hierarchy, int from_level, int to_level) {
  if (from_level < 0 || to_level > hierarchy.num_levels() || from_level > to_level) {
    throw std::out_of_range("invalid prolongation levels " + std::to_string(from_level) + " -> " +
                            std::to_string(to_level));
  }
  const FeSpace coarse(hierarchy.level_ptr(from_level));
  const FeSpace fine(hierarchy.level_ptr(to_level));
  SparseMatrix vertex_map(hierarchy.level(from_level).num_vertices(), hierarchy.level(from_level).num_vertices());
  vertex_map.setIdentity();
  int n_coarse = hierarchy.level(from_level).num_vertices();
  for (int k = from_level + 1; k <= to_level; ++k) {
    for (const auto* parents : hierarchy.steps_into(k)) {
      vertex_map = SparseMatrix(vertex_step(*parents, n_coarse) * vertex_map);
      n_coarse = static_cast<int>(parents->size());
    }
  }
  SparseMatrix p = dof_selector(fine) * vertex_map * SparseMatrix(dof_selector(coarse).transpose());
  p.prune(0.0);
  p.makeCompressed();
  return p;
}

Vector prolongate(const Vector& u_coarse, const Hierarchy& hierarchy, int k) {
  if (k < 0 || k >= hierarchy.num_levels()) {
    throw std::out_of_range("cannot prolongate from level " + std::to_string(k));
  }
  const SparseMatrix p = prolongation_matrix(hierarchy, k, k + 1);
  if (u_coarse.size() != p.cols()) throw std::invalid_argument("function does not live on level " + std::to_string(k));
  return p * u_coarse;
}

std::string to_coordinate_text(const SparseMatrix& m) {
  std::string out;
  char buf[96];
  for (int j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row()),
                    static_cast<long long>(it.col()), it.value());
      out += buf;
    }
  }
  return out;
}

}  // namespace gpecmg
