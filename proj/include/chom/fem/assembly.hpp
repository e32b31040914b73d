#pragma once

#include "chom/fem/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <initializer_list>

namespace chom::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Source = std::function<double(double, double)>;

struct Assembled {
  SparseMatrix stiffness;
  Vector load;
  Vector mass_obstacle;  ///< lumped boundary mass on Gamma1Obstacle edges
  Vector mass_free;      ///< lumped boundary mass on Gamma1Free edges
  Vector mass_gamma2;    ///< lumped boundary mass on Gamma2 edges
};

/// P1 stiffness matrix (no boundary conditions applied).
SparseMatrix stiffness(const Mesh& mesh);
/// Consistent P1 mass matrix.
SparseMatrix mass(const Mesh& mesh);
/// Load vector of f, edge-midpoint quadrature (exact for quadratic f).
Vector load(const Mesh& mesh, const Source& f);
/// Row sums of the boundary mass over edges carrying one of the labels.
Vector boundary_mass(const Mesh& mesh, std::initializer_list<BoundaryLabel> labels);
/// Consistent boundary mass matrix over edges carrying one of the labels.
SparseMatrix boundary_mass_matrix(const Mesh& mesh, std::initializer_list<BoundaryLabel> labels);

Assembled assemble(const Mesh& mesh, const Source& f);

} // namespace chom::fem
