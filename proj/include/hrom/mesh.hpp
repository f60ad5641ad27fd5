#pragma once

#include <array>
#include <utility>
#include <vector>

#include "hrom/common.hpp"

namespace hrom {

struct Inclusion {
  Vec3 center;
  double radius = 0.0;
  int material_id = 1;
};

struct MeshSpec {
  double edge_length = 6.0;
  int divisions = 6;
  std::vector<Inclusion> inclusions;
  int matrix_material_id = 0;
};

/// Two spheres of radius 1.5 centred at (2,2,2) and (4,4,4) in a cube of edge 6.
MeshSpec two_inclusion_spec(int divisions);

struct QuadraturePoint {
  Vec3 local;
  double weight;
};

using ShapeGradients = Eigen::Matrix<double, 8, 3>;

/// Per-element data precomputed at construction: physical shape gradients and dV at each Gauss point.
struct ElementGeometry {
  std::array<ShapeGradients, 8> dNdX;
  std::array<double, 8> dV;
  double volume = 0.0;
};

struct ShapeEval {
  Eigen::Matrix<double, 8, 1> values;
  ShapeGradients gradients;  // d N_k / d xi_j
};

/// Trilinear hexahedron shape functions. Node k sits at local corner kHexCorners[k].
ShapeEval shape_eval(const Vec3& local);

inline constexpr std::array<std::array<int, 3>, 8> kHexCorners{
    {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}}};

/// 2x2x2 Gauss rule on [-1,1]^3.
std::vector<QuadraturePoint> gauss_2x2x2();

struct Mesh {
  double edge_length = 0.0;
  int divisions = 0;
  std::vector<Vec3> node_coords;
  std::vector<std::array<int, 8>> elements;
  std::vector<int> element_material;
  std::vector<QuadraturePoint> quadrature;
  std::vector<ElementGeometry> geometry;
  double volume = 0.0;

  int num_nodes() const { return static_cast<int>(node_coords.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
};

/// Structured n^3 hexahedral grid. Elements whose centroid lies inside an inclusion take its material id.
/// Throws GeometryError for inclusions touching the cube boundary or non-positive Jacobians.
Mesh build_rve_mesh(const MeshSpec& spec);

/// Master-slave elimination of periodic fluctuation DOFs.
///
/// Nodes on the faces x=L, y=L, z=L are slaves of their images on the minimal-coordinate faces; edges
/// and corners resolve to the single minimal-coordinate master in one hop. All three DOFs of the anchor
/// node (the origin corner) are pinned to zero.
class PeriodicMap {
 public:
  static constexpr int kAnchored = -1;

  PeriodicMap() = default;
  PeriodicMap(std::vector<int> canonical_node, int anchor_node);

  /// D: number of independent fluctuation DOFs.
  int num_free() const { return static_cast<int>(free_dofs_.size()); }
  int num_nodes() const { return static_cast<int>(canonical_.size()); }
  int anchor_node() const { return anchor_; }

  /// Free index of nodal DOF (node, component), or kAnchored.
  int dof(int node, int component) const { return dof_index_[3 * node + component]; }
  int canonical(int node) const { return canonical_[node]; }

  /// Nodal DOF ids (3*node+comp) of the free unknowns, in free-index order.
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  /// (slave nodal DOF, master nodal DOF) for every non-canonical node.
  const std::vector<std::pair<int, int>>& slave_pairs() const { return slave_pairs_; }

  /// Free vector -> nodal fluctuation vector (3 * num_nodes).
  Vec scatter(const Vec& free) const;
  /// Nodal vector -> free vector by reading each master's own entry.
  Vec gather(const Vec& nodal) const;
  /// Transpose of scatter: sums slave entries into their masters (used for residual-type vectors).
  Vec accumulate(const Vec& nodal) const;

 private:
  std::vector<int> canonical_;
  std::vector<int> dof_index_;
  std::vector<int> free_dofs_;
  std::vector<std::pair<int, int>> slave_pairs_;
  int anchor_ = 0;
};

/// Matches opposing-face nodes geometrically (tolerance 1e-9 relative to the edge length).
/// Throws GeometryError when a boundary node has no periodic image.
PeriodicMap build_periodic_map(const Mesh& mesh);

}  // namespace hrom
