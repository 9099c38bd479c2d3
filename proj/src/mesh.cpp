#include "gpecmg/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace gpecmg {
namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Rejects any vertex lying in the interior of an edge that only one triangle
// owns: such a vertex is a hanging node and the mesh is not conforming.
void check_no_hanging_vertices(const std::vector<Point>& vertices, const std::vector<Edge>& edges,
                               const std::vector<int>& multiplicity) {
  if (vertices.empty()) return;
  double xmin = vertices[0].x, xmax = xmin, ymin = vertices[0].y, ymax = ymin;
  for (const auto& p : vertices) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double extent = std::max({xmax - xmin, ymax - ymin, 1e-300});
  const int cells = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(vertices.size()))));
  const double cell = extent / cells;
  auto bucket_of = [&](double v, double lo) {
    return std::clamp(static_cast<int>((v - lo) / cell), 0, cells - 1);
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(cells) * static_cast<std::size_t>(cells));
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v) {
    const auto& p = vertices[static_cast<std::size_t>(v)];
    buckets[static_cast<std::size_t>(bucket_of(p.y, ymin) * cells + bucket_of(p.x, xmin))].push_back(v);
  }

  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (multiplicity[e] != 1) continue;
    const Point& p = vertices[static_cast<std::size_t>(edges[e].a)];
    const Point& q = vertices[static_cast<std::size_t>(edges[e].b)];
    const double len = distance(p, q);
    const double tol = 1e-10 * len;
    const int i0 = bucket_of(std::min(p.x, q.x) - tol, xmin), i1 = bucket_of(std::max(p.x, q.x) + tol, xmin);
    const int j0 = bucket_of(std::min(p.y, q.y) - tol, ymin), j1 = bucket_of(std::max(p.y, q.y) + tol, ymin);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        for (int v : buckets[static_cast<std::size_t>(j * cells + i)]) {
          if (v == edges[e].a || v == edges[e].b) continue;
          const Point& r = vertices[static_cast<std::size_t>(v)];
          if (std::abs(cross(p, q, r)) > tol * len) continue;
          const double t = ((r.x - p.x) * (q.x - p.x) + (r.y - p.y) * (q.y - p.y)) / (len * len);
          if (t > 1e-10 && t < 1.0 - 1e-10) {
            throw MeshError(MeshError::Kind::NonConforming,
                            "non-conforming mesh: vertex " + std::to_string(v) + " hangs on edge (" +
                                std::to_string(edges[e].a) + ", " + std::to_string(edges[e].b) + ")");
          }
        }
      }
    }
  }
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = num_vertices();
  if (triangles_.empty()) throw MeshError(MeshError::Kind::Degenerate, "mesh has no triangles");

  std::vector<bool> used(static_cast<std::size_t>(nv), false);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    auto& tri = triangles_[t];
    for (int v : tri) {
      if (v < 0 || v >= nv) {
        throw MeshError(MeshError::Kind::IndexOutOfRange, "index out of range: triangle " + std::to_string(t) +
                                                              " references vertex " + std::to_string(v));
      }
      used[static_cast<std::size_t>(v)] = true;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw MeshError(MeshError::Kind::Degenerate, "zero-area triangle " + std::to_string(t) + ": repeated vertex");
    }
    const double area2 = cross(vertices_[static_cast<std::size_t>(tri[0])], vertices_[static_cast<std::size_t>(tri[1])],
                               vertices_[static_cast<std::size_t>(tri[2])]);
    const double scale = std::max({distance(vertices_[static_cast<std::size_t>(tri[0])], vertices_[static_cast<std::size_t>(tri[1])]),
                                   distance(vertices_[static_cast<std::size_t>(tri[1])], vertices_[static_cast<std::size_t>(tri[2])]),
                                   distance(vertices_[static_cast<std::size_t>(tri[2])], vertices_[static_cast<std::size_t>(tri[0])])});
    if (!(std::abs(area2) > 1e-14 * scale * scale)) {
      throw MeshError(MeshError::Kind::Degenerate, "zero-area triangle " + std::to_string(t));
    }
    if (area2 < 0.0) std::swap(tri[1], tri[2]);
  }
  for (int v = 0; v < nv; ++v) {
    if (!used[static_cast<std::size_t>(v)]) {
      throw MeshError(MeshError::Kind::NonConforming,
                      "non-conforming mesh: vertex " + std::to_string(v) + " belongs to no triangle");
    }
  }

  // (a, b, triangle, local edge) sorted lexicographically gives a
  // deterministic edge numbering.
  std::vector<std::tuple<int, int, int, int>> half;
  half.reserve(triangles_.size() * 3);
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    for (int l = 0; l < 3; ++l) {
      const int a = tri[static_cast<std::size_t>(l)];
      const int b = tri[static_cast<std::size_t>((l + 1) % 3)];
      half.emplace_back(std::min(a, b), std::max(a, b), t, l);
    }
  }
  std::sort(half.begin(), half.end());
  triangle_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && std::get<0>(half[j]) == std::get<0>(half[i]) &&
           std::get<1>(half[j]) == std::get<1>(half[i])) {
      ++j;
    }
    const int count = static_cast<int>(j - i);
    if (count > 2) {
      throw MeshError(MeshError::Kind::NonConforming,
                      "non-conforming mesh: edge (" + std::to_string(std::get<0>(half[i])) + ", " +
                          std::to_string(std::get<1>(half[i])) + ") shared by " + std::to_string(count) + " triangles");
    }
    const int e = num_edges();
    edges_.push_back({std::get<0>(half[i]), std::get<1>(half[i])});
    edge_multiplicity_.push_back(count);
    for (std::size_t k = i; k < j; ++k) {
      triangle_edges_[static_cast<std::size_t>(std::get<2>(half[k]))][static_cast<std::size_t>(std::get<3>(half[k]))] = e;
    }
    i = j;
  }
  {
    // Two triangles sharing an interior edge must lie on opposite sides.
    std::vector<int> first_owner(edges_.size(), -1);
    for (int t = 0; t < num_triangles(); ++t) {
      const auto& tri = triangles_[static_cast<std::size_t>(t)];
      for (int l = 0; l < 3; ++l) {
        const int e = triangle_edges_[static_cast<std::size_t>(t)][static_cast<std::size_t>(l)];
        if (edge_multiplicity_[static_cast<std::size_t>(e)] != 2) continue;
        // Orientation of traversal: CCW neighbours traverse a shared edge in
        // opposite directions.
        const int a = tri[static_cast<std::size_t>(l)];
        const int direction = a == edges_[static_cast<std::size_t>(e)].a ? 1 : 2;
        auto& owner = first_owner[static_cast<std::size_t>(e)];
        if (owner < 0) {
          owner = direction;
        } else if (owner == direction) {
          throw MeshError(MeshError::Kind::NonConforming, "non-conforming mesh: overlapping triangles at edge (" +
                                                              std::to_string(edges_[static_cast<std::size_t>(e)].a) +
                                                              ", " + std::to_string(edges_[static_cast<std::size_t>(e)].b) + ")");
        }
      }
    }
  }

  boundary_.assign(static_cast<std::size_t>(nv), false);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_multiplicity_[e] == 1) {
      boundary_[static_cast<std::size_t>(edges_[e].a)] = true;
      boundary_[static_cast<std::size_t>(edges_[e].b)] = true;
    }
  }
  check_no_hanging_vertices(vertices_, edges_, edge_multiplicity_);
}

double Mesh::signed_area(int t) const {
  const auto& tri = triangles_[static_cast<std::size_t>(t)];
  return 0.5 * cross(vertices_[static_cast<std::size_t>(tri[0])], vertices_[static_cast<std::size_t>(tri[1])],
                     vertices_[static_cast<std::size_t>(tri[2])]);
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (const auto& e : edges_) {
    h = std::max(h, distance(vertices_[static_cast<std::size_t>(e.a)], vertices_[static_cast<std::size_t>(e.b)]));
  }
  return h;
}

Mesh build_structured_unit_square(int cells_per_side) {
  if (cells_per_side < 2) {
    throw MeshError(MeshError::Kind::InvalidArgument,
                    "cells_per_side must be at least 2, got " + std::to_string(cells_per_side));
  }
  const int n = cells_per_side;
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * n * n));
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh read_mesh(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t line_no = 0;
  std::vector<std::size_t> token_line;
  for (std::size_t pos = 0; pos <= text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    for (std::size_t i = 0; i < line.size();) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) {
        tokens.push_back(line.substr(i, j - i));
        token_line.push_back(line_no);
      }
      i = j;
    }
    pos = end + 1;
  }

  std::size_t next = 0;
  auto fail = [&](const std::string& msg) -> MeshError {
    const std::string where = next < token_line.size() ? " (line " + std::to_string(token_line[next]) + ")" : " (end of input)";
    return MeshError(MeshError::Kind::Parse, "parse error: " + msg + where);
  };
  auto take_int = [&](const char* what) {
    if (next >= tokens.size()) throw fail(std::string("expected ") + what);
    long long value = 0;
    const auto tok = tokens[next];
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw fail(std::string("invalid ") + what + " '" + std::string(tok) + "'");
    ++next;
    return value;
  };
  auto take_double = [&](const char* what) {
    if (next >= tokens.size()) throw fail(std::string("expected ") + what);
    double value = 0.0;
    const auto tok = tokens[next];
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
      throw fail(std::string("invalid ") + what + " '" + std::string(tok) + "'");
    }
    ++next;
    return value;
  };

  const long long nv = take_int("vertex count");
  const long long nt = take_int("triangle count");
  if (nv < 3 || nt < 1) throw fail("need at least 3 vertices and 1 triangle");
  std::vector<Point> vertices(static_cast<std::size_t>(nv));
  for (auto& p : vertices) {
    p.x = take_double("x coordinate");
    p.y = take_double("y coordinate");
  }
  std::vector<Triangle> triangles(static_cast<std::size_t>(nt));
  for (auto& tri : triangles) {
    for (auto& v : tri) {
      const long long idx = take_int("vertex index");
      if (idx < 0 || idx >= nv) {
        throw MeshError(MeshError::Kind::IndexOutOfRange,
                        "index out of range: vertex index " + std::to_string(idx) + " with " + std::to_string(nv) + " vertices");
      }
      v = static_cast<int>(idx);
    }
  }
  if (next != tokens.size()) throw fail("trailing content");
  return Mesh(std::move(vertices), std::move(triangles));
}

std::string write_mesh(const Mesh& mesh) {
  std::string out = std::to_string(mesh.num_vertices()) + " " + std::to_string(mesh.num_triangles()) + "\n";
  char buf[64];
  for (const auto& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    out += buf;
  }
  for (const auto& t : mesh.triangles()) {
    out += std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
  }
  return out;
}

Refinement refine_regular(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  std::vector<Point> vertices = mesh.vertices();
  std::vector<VertexParent> parents;
  parents.reserve(static_cast<std::size_t>(nv + mesh.num_edges()));
  for (int v = 0; v < nv; ++v) parents.push_back({v, v});
  for (const auto& e : mesh.edges()) {
    const Point& p = mesh.vertices()[static_cast<std::size_t>(e.a)];
    const Point& q = mesh.vertices()[static_cast<std::size_t>(e.b)];
    vertices.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
    parents.push_back({e.a, e.b});
  }
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(4 * mesh.num_triangles()));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    const auto& te = mesh.triangle_edges(t);
    const int m01 = nv + te[0], m12 = nv + te[1], m20 = nv + te[2];
    triangles.push_back({tri[0], m01, m20});
    triangles.push_back({m01, tri[1], m12});
    triangles.push_back({m20, m12, tri[2]});
    triangles.push_back({m01, m12, m20});
  }
  return {std::make_shared<const Mesh>(std::move(vertices), std::move(triangles)), std::move(parents)};
}

Hierarchy::Hierarchy(Mesh coarse, int pre_refinements, int n_levels)
    : pre_refinements_(pre_refinements), n_levels_(n_levels) {
  if (n_levels < 1) throw std::invalid_argument("n_levels must be at least 1");
  if (pre_refinements < 0) throw std::invalid_argument("pre_refinements must be nonnegative");
  chain_.push_back(std::make_shared<const Mesh>(std::move(coarse)));
  const int steps = pre_refinements + n_levels - 1;
  for (int i = 0; i < steps; ++i) {
    auto r = refine_regular(*chain_.back());
    chain_.push_back(std::move(r.mesh));
    parents_.push_back(std::move(r.parents));
  }
}

int Hierarchy::chain_index(int k) const {
  if (k < 0 || k > n_levels_) {
    throw std::out_of_range("level " + std::to_string(k) + " outside 0.." + std::to_string(n_levels_));
  }
  return k == 0 ? 0 : pre_refinements_ + k - 1;
}

const Mesh& Hierarchy::level(int k) const { return *chain_[static_cast<std::size_t>(chain_index(k))]; }

std::shared_ptr<const Mesh> Hierarchy::level_ptr(int k) const { return chain_[static_cast<std::size_t>(chain_index(k))]; }

std::vector<const std::vector<VertexParent>*> Hierarchy::steps_into(int k) const {
  if (k < 1 || k > n_levels_) throw std::out_of_range("no refinement steps into level " + std::to_string(k));
  std::vector<const std::vector<VertexParent>*> steps;
  for (int i = chain_index(k - 1); i < chain_index(k); ++i) steps.push_back(&parents_[static_cast<std::size_t>(i)]);
  return steps;
}

}  // namespace gpecmg
