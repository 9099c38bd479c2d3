#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gpecmg/mesh.hpp"

using namespace gpecmg;

namespace {

int count_boundary(const Mesh& m) {
  return static_cast<int>(std::count(m.boundary_flags().begin(), m.boundary_flags().end(), true));
}

bool on_square_boundary(const Point& p) {
  return std::abs(p.x) < 1e-12 || std::abs(p.y) < 1e-12 || std::abs(p.x - 1) < 1e-12 || std::abs(p.y - 1) < 1e-12;
}

void check_conforming(const Mesh& m) {
  for (int t = 0; t < m.num_triangles(); ++t) CHECK(m.signed_area(t) > 0.0);
  for (int e = 0; e < m.num_edges(); ++e) {
    CHECK(m.edge_multiplicity(e) >= 1);
    CHECK(m.edge_multiplicity(e) <= 2);
  }
}

MeshError::Kind error_kind(const std::string& text) {
  try {
    read_mesh(text);
  } catch (const MeshError& e) {
    return e.kind();
  }
  FAIL("mesh was accepted");
  return MeshError::Kind::Parse;
}

}  // namespace

TEST_CASE("structured mesh counts") {
  const Mesh two = build_structured_unit_square(2);
  CHECK(two.num_vertices() == 9);
  CHECK(two.num_triangles() == 8);
  CHECK(count_boundary(two) == 8);
  CHECK(two.num_vertices() - count_boundary(two) == 1);

  const Mesh six = build_structured_unit_square(6);
  CHECK(six.num_vertices() == 49);
  CHECK(six.num_triangles() == 72);
  CHECK(six.mesh_size() == doctest::Approx(std::sqrt(2.0) / 6).epsilon(1e-14));
  check_conforming(six);

  CHECK_THROWS_AS(build_structured_unit_square(1), MeshError);
}

TEST_CASE("boundary flags match the geometric boundary") {
  const Mesh m = build_structured_unit_square(5);
  for (int v = 0; v < m.num_vertices(); ++v) {
    CHECK(m.boundary_flags()[static_cast<std::size_t>(v)] == on_square_boundary(m.vertices()[static_cast<std::size_t>(v)]));
  }
}

TEST_CASE("mesh text round trip") {
  const Mesh m = build_structured_unit_square(2);
  const Mesh back = read_mesh(write_mesh(m));
  REQUIRE(back.num_vertices() == m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) {
    CHECK(back.vertices()[v].x == m.vertices()[v].x);
    CHECK(back.vertices()[v].y == m.vertices()[v].y);
  }
  CHECK(back.triangles() == m.triangles());

  // Non-dyadic coordinates survive at 17 digits.
  const Mesh odd({{0, 0}, {1.0 / 3, 0}, {0, 0.1}}, {{0, 1, 2}});
  const Mesh odd_back = read_mesh(write_mesh(odd));
  CHECK(odd_back.vertices()[1].x == 1.0 / 3);
  CHECK(odd_back.vertices()[2].y == 0.1);
}

TEST_CASE("reader accepts comments and reorients clockwise triangles") {
  const Mesh m = read_mesh("# unit triangle\n3 1\n0 0\n1 0 # right corner\n0 1\n0 2 1\n");
  REQUIRE(m.num_triangles() == 1);
  CHECK(m.signed_area(0) == doctest::Approx(0.5));
}

TEST_CASE("reader diagnostics") {
  CHECK(error_kind("3 1\n0 0\n1 0\n0 1\n0 1 3\n") == MeshError::Kind::IndexOutOfRange);
  try {
    read_mesh("3 1\n0 0\n1 0\n0 1\n0 1 3\n");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("index out of range") != std::string::npos);
  }
  CHECK(error_kind("3 1\n0 0\n1 0\n2 0\n0 1 2\n") == MeshError::Kind::Degenerate);
  CHECK(error_kind("3 1\n0 0\n1 0\n0 x\n0 1 2\n") == MeshError::Kind::Parse);
  CHECK(error_kind("3 2\n0 0\n1 0\n0 1\n0 1 2\n") == MeshError::Kind::Parse);
  // Vertex (1,1) hangs on the hypotenuse of the big triangle.
  CHECK(error_kind("5 3\n0 0\n2 0\n0 2\n2 2\n1 1\n0 1 2\n1 3 4\n4 3 2\n") == MeshError::Kind::NonConforming);
  // One edge shared by three triangles.
  CHECK(error_kind("5 3\n0 0\n1 0\n0 1\n0 -1\n1 1\n0 1 2\n0 3 1\n1 4 0\n") == MeshError::Kind::NonConforming);
}

TEST_CASE("regular refinement") {
  const Mesh m = build_structured_unit_square(2);
  const auto r1 = refine_regular(m);
  CHECK(r1.mesh->num_triangles() == 32);
  CHECK(r1.mesh->num_vertices() == 25);
  CHECK(r1.mesh->num_vertices() == m.num_vertices() + m.num_edges());
  const auto r2 = refine_regular(*r1.mesh);
  CHECK(r2.mesh->num_triangles() == 128);
  check_conforming(*r2.mesh);

  // Children of triangle t are 4t..4t+3 with a quarter of the area.
  for (int t = 0; t < m.num_triangles(); ++t) {
    for (int c = 0; c < 4; ++c) CHECK(r1.mesh->signed_area(4 * t + c) == doctest::Approx(m.signed_area(t) / 4));
  }

  // Midpoints sit between their parents and are boundary iff the edge is.
  for (int v = 0; v < r1.mesh->num_vertices(); ++v) {
    const auto& p = r1.parents[static_cast<std::size_t>(v)];
    const auto& x = r1.mesh->vertices()[static_cast<std::size_t>(v)];
    const auto& a = m.vertices()[static_cast<std::size_t>(p.a)];
    const auto& b = m.vertices()[static_cast<std::size_t>(p.b)];
    CHECK(x.x == doctest::Approx((a.x + b.x) / 2));
    CHECK(x.y == doctest::Approx((a.y + b.y) / 2));
    CHECK(r1.mesh->boundary_flags()[static_cast<std::size_t>(v)] == on_square_boundary(x));
  }
}

TEST_CASE("hierarchy") {
  const Hierarchy single(build_structured_unit_square(2), 0, 1);
  CHECK(single.level(1).num_triangles() == single.coarse().num_triangles());

  const Hierarchy h(build_structured_unit_square(2), 1, 3);
  CHECK(h.level(1).num_triangles() == 32);
  CHECK(h.level(2).num_triangles() == 128);
  CHECK(h.level(3).num_triangles() == 512);
  for (int k = 1; k <= 3; ++k) {
    CHECK(h.level(k).mesh_size() == doctest::Approx(h.level(k - 1).mesh_size() / 2).epsilon(1e-14));
    check_conforming(h.level(k));
  }

  // Every level-3 vertex traces back to level-1 vertices.
  const auto& steps = h.steps_into(3);
  REQUIRE(steps.size() == 1);
  for (const auto& p : *steps.front()) {
    CHECK(p.a < h.level(2).num_vertices());
    CHECK(p.b < h.level(2).num_vertices());
  }
  for (const auto& p : *h.steps_into(2).front()) {
    CHECK(p.a < h.level(1).num_vertices());
    CHECK(p.b < h.level(1).num_vertices());
  }

  // Nestedness: coarse coordinates reappear verbatim.
  std::set<std::pair<double, double>> fine;
  for (const auto& p : h.level(3).vertices()) fine.insert({p.x, p.y});
  for (const auto& p : h.coarse().vertices()) CHECK(fine.count({p.x, p.y}) == 1);

  CHECK_THROWS(Hierarchy(build_structured_unit_square(2), 0, 0));
  CHECK_THROWS(h.level(4));
}
