#include "hrom/mesh.hpp"

#include <cmath>
#include <map>
#include <tuple>

namespace hrom {

MeshSpec two_inclusion_spec(int divisions) {
  MeshSpec spec;
  spec.edge_length = 6.0;
  spec.divisions = divisions;
  spec.inclusions = {Inclusion{Vec3(2.0, 2.0, 2.0), 1.5, 1}, Inclusion{Vec3(4.0, 4.0, 4.0), 1.5, 1}};
  spec.matrix_material_id = 0;
  return spec;
}

ShapeEval shape_eval(const Vec3& xi) {
  ShapeEval out;
  for (int k = 0; k < 8; ++k) {
    const double a = kHexCorners[k][0], b = kHexCorners[k][1], c = kHexCorners[k][2];
    const double fa = 1.0 + a * xi(0), fb = 1.0 + b * xi(1), fc = 1.0 + c * xi(2);
    out.values(k) = 0.125 * fa * fb * fc;
    out.gradients(k, 0) = 0.125 * a * fb * fc;
    out.gradients(k, 1) = 0.125 * fa * b * fc;
    out.gradients(k, 2) = 0.125 * fa * fb * c;
  }
  return out;
}

std::vector<QuadraturePoint> gauss_2x2x2() {
  const double g = 1.0 / std::sqrt(3.0);
  std::vector<QuadraturePoint> qp;
  qp.reserve(8);
  for (int k = 0; k < 8; ++k)
    qp.push_back({Vec3(g * kHexCorners[k][0], g * kHexCorners[k][1], g * kHexCorners[k][2]), 1.0});
  return qp;
}

namespace {

void validate(const MeshSpec& spec) {
  if (spec.divisions < 1) throw ConfigError("mesh divisions must be >= 1");
  if (!(spec.edge_length > 0.0)) throw ConfigError("edge length must be positive");
  for (const auto& inc : spec.inclusions) {
    if (!(inc.radius > 0.0)) throw ConfigError("inclusion radius must be positive");
    for (int a = 0; a < 3; ++a) {
      if (!(inc.center(a) - inc.radius > 0.0 && inc.center(a) + inc.radius < spec.edge_length))
        throw GeometryError("inclusion sphere intersects the RVE boundary (periodic wrap unsupported)");
    }
  }
}

}  // namespace

Mesh build_rve_mesh(const MeshSpec& spec) {
  validate(spec);
  const int n = spec.divisions;
  const int np = n + 1;
  const double h = spec.edge_length / n;

  Mesh mesh;
  mesh.edge_length = spec.edge_length;
  mesh.divisions = n;
  mesh.node_coords.reserve(static_cast<std::size_t>(np) * np * np);
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i) {
        // Outer faces get the exact edge length so periodic images match bitwise.
        auto coord = [&](int idx) { return idx == n ? spec.edge_length : idx * h; };
        mesh.node_coords.emplace_back(coord(i), coord(j), coord(k));
      }

  auto node_id = [np](int i, int j, int k) { return i + np * (j + np * k); };
  mesh.quadrature = gauss_2x2x2();
  std::array<ShapeEval, 8> ref;
  for (int q = 0; q < 8; ++q) ref[q] = shape_eval(mesh.quadrature[q].local);

  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::array<int, 8> conn{};
        for (int c = 0; c < 8; ++c)
          conn[c] = node_id(i + (kHexCorners[c][0] + 1) / 2, j + (kHexCorners[c][1] + 1) / 2,
                            k + (kHexCorners[c][2] + 1) / 2);
        mesh.elements.push_back(conn);

        Vec3 centroid = Vec3::Zero();
        for (int c = 0; c < 8; ++c) centroid += mesh.node_coords[conn[c]];
        centroid /= 8.0;
        int material = spec.matrix_material_id;
        for (const auto& inc : spec.inclusions) {
          if ((centroid - inc.center).norm() < inc.radius) {
            material = inc.material_id;
            break;
          }
        }
        mesh.element_material.push_back(material);

        Eigen::Matrix<double, 8, 3> X;
        for (int c = 0; c < 8; ++c) X.row(c) = mesh.node_coords[conn[c]].transpose();
        ElementGeometry geo;
        for (int q = 0; q < 8; ++q) {
          const Mat3 jac = X.transpose() * ref[q].gradients;  // dX_a / dxi_b
          const double det = jac.determinant();
          if (!(det > 0.0)) throw GeometryError("non-positive reference Jacobian");
          geo.dNdX[q] = ref[q].gradients * jac.inverse();
          geo.dV[q] = det * mesh.quadrature[q].weight;
          geo.volume += geo.dV[q];
        }
        mesh.volume += geo.volume;
        mesh.geometry.push_back(geo);
      }
  return mesh;
}

PeriodicMap::PeriodicMap(std::vector<int> canonical_node, int anchor_node)
    : canonical_(std::move(canonical_node)), anchor_(anchor_node) {
  const int nn = static_cast<int>(canonical_.size());
  dof_index_.assign(3 * static_cast<std::size_t>(nn), kAnchored);
  for (int node = 0; node < nn; ++node) {
    if (canonical_[node] != node || node == anchor_) continue;
    for (int c = 0; c < 3; ++c) {
      dof_index_[3 * node + c] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(3 * node + c);
    }
  }
  for (int node = 0; node < nn; ++node) {
    const int master = canonical_[node];
    if (master == node) continue;
    for (int c = 0; c < 3; ++c) {
      dof_index_[3 * node + c] = dof_index_[3 * master + c];
      slave_pairs_.emplace_back(3 * node + c, 3 * master + c);
    }
  }
}

Vec PeriodicMap::scatter(const Vec& free) const {
  FullOrderCounter::bump();
  Vec nodal = Vec::Zero(static_cast<Eigen::Index>(dof_index_.size()));
  for (std::size_t i = 0; i < dof_index_.size(); ++i)
    if (dof_index_[i] != kAnchored) nodal(i) = free(dof_index_[i]);
  return nodal;
}

Vec PeriodicMap::gather(const Vec& nodal) const {
  FullOrderCounter::bump();
  Vec free(num_free());
  for (int f = 0; f < num_free(); ++f) free(f) = nodal(free_dofs_[f]);
  return free;
}

Vec PeriodicMap::accumulate(const Vec& nodal) const {
  FullOrderCounter::bump();
  Vec free = Vec::Zero(num_free());
  for (std::size_t i = 0; i < dof_index_.size(); ++i)
    if (dof_index_[i] != kAnchored) free(dof_index_[i]) += nodal(i);
  return free;
}

PeriodicMap build_periodic_map(const Mesh& mesh) {
  const double L = mesh.edge_length;
  const double tol = 1e-9 * L;
  const double quantum = 1e-6 * L;
  using Key = std::tuple<long long, long long, long long>;
  auto key_of = [&](const Vec3& x) {
    return Key{std::llround(x(0) / quantum), std::llround(x(1) / quantum), std::llround(x(2) / quantum)};
  };
  std::map<Key, int> lookup;
  for (int n = 0; n < mesh.num_nodes(); ++n) lookup.emplace(key_of(mesh.node_coords[n]), n);

  std::vector<int> canonical(mesh.num_nodes());
  int anchor = -1;
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    Vec3 image = mesh.node_coords[n];
    for (int a = 0; a < 3; ++a)
      if (std::abs(image(a) - L) <= tol) image(a) = 0.0;
    auto it = lookup.find(key_of(image));
    if (it == lookup.end() || (mesh.node_coords[it->second] - image).cwiseAbs().maxCoeff() > tol)
      throw GeometryError("periodic image of node " + std::to_string(n) + " not found");
    canonical[n] = it->second;
    if (mesh.node_coords[n].cwiseAbs().maxCoeff() <= tol) anchor = n;
  }
  if (anchor < 0) throw GeometryError("no node at the origin corner to anchor");
  return PeriodicMap(std::move(canonical), anchor);
}

}  // namespace hrom
