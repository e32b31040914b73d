#include "chom/fem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace chom::fem {

namespace {

using Triplet = Eigen::Triplet<double>;

bool has_label(std::initializer_list<BoundaryLabel> labels, BoundaryLabel l) {
  return std::find(labels.begin(), labels.end(), l) != labels.end();
}

double edge_length(const Mesh& m, const BoundaryEdge& e) {
  const auto& a = m.vertices[e.nodes[0]];
  const auto& b = m.vertices[e.nodes[1]];
  return std::hypot(b[0] - a[0], b[1] - a[1]);
}

} // namespace

SparseMatrix stiffness(const Mesh& mesh) {
  std::vector<Triplet> trips;
  trips.reserve(9 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    // Gradient of barycentric k is (y_{k+1} - y_{k+2}, x_{k+2} - x_{k+1}) / (2 area).
    double gx[3], gy[3];
    for (int k = 0; k < 3; ++k) {
      const auto& p1 = mesh.vertices[tri[(k + 1) % 3]];
      const auto& p2 = mesh.vertices[tri[(k + 2) % 3]];
      gx[k] = (p1[1] - p2[1]) / (2.0 * area);
      gy[k] = (p2[0] - p1[0]) / (2.0 * area);
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        trips.emplace_back(tri[a], tri[b], area * (gx[a] * gx[b] + gy[a] * gy[b]));
      }
    }
  }
  const int n = int(mesh.num_nodes());
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SparseMatrix mass(const Mesh& mesh) {
  std::vector<Triplet> trips;
  trips.reserve(9 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        trips.emplace_back(tri[a], tri[b], area * (a == b ? 2.0 : 1.0) / 12.0);
      }
    }
  }
  const int n = int(mesh.num_nodes());
  SparseMatrix M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

Vector load(const Mesh& mesh, const Source& f) {
  Vector F = Vector::Zero(Eigen::Index(mesh.num_nodes()));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    // Midpoint of the edge opposite vertex k; phi_k vanishes there and the
    // other two hat functions equal 1/2.
    double fm[3];
    for (int k = 0; k < 3; ++k) {
      const auto& p1 = mesh.vertices[tri[(k + 1) % 3]];
      const auto& p2 = mesh.vertices[tri[(k + 2) % 3]];
      fm[k] = f(0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1]));
    }
    for (int k = 0; k < 3; ++k) {
      F[tri[k]] += area / 3.0 * 0.5 * (fm[(k + 1) % 3] + fm[(k + 2) % 3]);
    }
  }
  return F;
}

Vector boundary_mass(const Mesh& mesh, std::initializer_list<BoundaryLabel> labels) {
  Vector m = Vector::Zero(Eigen::Index(mesh.num_nodes()));
  for (const auto& e : mesh.boundary_edges) {
    if (!has_label(labels, e.label)) continue;
    const double half = 0.5 * edge_length(mesh, e);
    m[e.nodes[0]] += half;
    m[e.nodes[1]] += half;
  }
  return m;
}

SparseMatrix boundary_mass_matrix(const Mesh& mesh, std::initializer_list<BoundaryLabel> labels) {
  std::vector<Triplet> trips;
  for (const auto& e : mesh.boundary_edges) {
    if (!has_label(labels, e.label)) continue;
    const double len = edge_length(mesh, e);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        trips.emplace_back(e.nodes[a], e.nodes[b], len * (a == b ? 2.0 : 1.0) / 6.0);
      }
    }
  }
  const int n = int(mesh.num_nodes());
  SparseMatrix B(n, n);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

Assembled assemble(const Mesh& mesh, const Source& f) {
  Assembled out;
  out.stiffness = stiffness(mesh);
  out.load = load(mesh, f);
  out.mass_obstacle = boundary_mass(mesh, {BoundaryLabel::Gamma1Obstacle});
  out.mass_free = boundary_mass(mesh, {BoundaryLabel::Gamma1Free});
  out.mass_gamma2 = boundary_mass(mesh, {BoundaryLabel::Gamma2});
  return out;
}

} // namespace chom::fem
