#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpecmg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Triangle = std::array<int, 3>;

/// Undirected edge with `a < b`.
struct Edge {
  int a = 0;
  int b = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class MeshError : public std::runtime_error {
 public:
  enum class Kind { Parse, IndexOutOfRange, Degenerate, NonConforming, InvalidArgument };

  MeshError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Conforming triangulation of a polygonal domain.
///
/// Construction validates the input: indices in range, every vertex used,
/// no zero-area triangle, every edge shared by at most two triangles and
/// no hanging vertex on a boundary edge. Clockwise triangles are reoriented.
/// Boundary vertices are those incident to an edge owned by one triangle.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles);

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<bool>& boundary_flags() const noexcept { return boundary_; }

  /// Edge indices of triangle `t`, opposite-vertex order: (v0v1, v1v2, v2v0).
  const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_[static_cast<std::size_t>(t)]; }

  /// Number of triangles sharing edge `e` (1 on the boundary, 2 inside).
  int edge_multiplicity(int e) const { return edge_multiplicity_[static_cast<std::size_t>(e)]; }

  int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
  int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }
  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }

  double signed_area(int t) const;
  /// Largest triangle diameter.
  double mesh_size() const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<int> edge_multiplicity_;
  std::vector<bool> boundary_;
};

/// Source of a fine vertex under regular refinement. Retained vertices have
/// `a == b`; midpoints record the endpoints of the bisected coarse edge.
struct VertexParent {
  int a = 0;
  int b = 0;
  bool is_midpoint() const noexcept { return a != b; }
};

struct Refinement {
  std::shared_ptr<const Mesh> mesh;
  std::vector<VertexParent> parents;
};

/// Uniform right-triangle mesh of the unit square, each cell split along
/// its (0,0)-(1,1) diagonal.
Mesh build_structured_unit_square(int cells_per_side);

Mesh read_mesh(std::string_view text);
std::string write_mesh(const Mesh& mesh);

/// Red refinement: every triangle is split into four through its edge
/// midpoints. Coarse vertices keep their indices; midpoint of edge `e`
/// becomes vertex `num_vertices + e`.
Refinement refine_regular(const Mesh& mesh);

/// Nested meshes T_H ⊆ T_{h_1} ⊂ ... ⊂ T_{h_n}.
///
/// Level 0 is the coarse mesh, levels 1..n the working hierarchy. Level 1 is
/// the coarse mesh refined `pre_refinements` times.
class Hierarchy {
 public:
  Hierarchy(Mesh coarse, int pre_refinements, int n_levels);

  int num_levels() const noexcept { return n_levels_; }
  int pre_refinements() const noexcept { return pre_refinements_; }

  const Mesh& level(int k) const;
  std::shared_ptr<const Mesh> level_ptr(int k) const;
  const Mesh& coarse() const { return level(0); }

  /// Parent maps of the single refinement steps that lead from level
  /// `k - 1` to level `k` (empty for k == 1 without pre-refinement).
  std::vector<const std::vector<VertexParent>*> steps_into(int k) const;

 private:
  int chain_index(int k) const;

  int pre_refinements_;
  int n_levels_;
  // chain_[0] is the coarse mesh; chain_[i] = refine(chain_[i-1]).
  std::vector<std::shared_ptr<const Mesh>> chain_;
  // parents_[i] maps chain_[i+1] vertices to chain_[i].
  std::vector<std::vector<VertexParent>> parents_;
};

}  // namespace gpecmg
