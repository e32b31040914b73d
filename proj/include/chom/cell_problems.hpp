#pragma once

#include "chom/fem/field.hpp"
#include "chom/fem/mesh.hpp"
#include "chom/monotone_graph.hpp"
#include "chom/scale_config.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace chom::cell {

/// Discretization of the exterior half-space problems around the unit disk.
///
/// The meridian half-plane (r, z >= 0) is meshed through the oblate spheroidal
/// map r + i z = cosh(m + i t), m in [0, M], t in [0, pi/2]. The disk is the
/// curve m = 0, the rim (1, 0) is the corner m = t = 0, and the truncation
/// boundary m = M is the spheroid with equatorial radius R_t = cosh M. Square
/// cells in (m, t) map to near-squares whose size shrinks quadratically at the
/// rim, which is where the normal derivative of the capacity potential blows
/// up like an inverse square root.
struct CellConfig {
  double truncation_radius = 16.0;  ///< R_t, in units of the disk radius
  int angular_cells = 48;           ///< cells across t in [0, pi/2]
  double tol = 1e-13;               ///< relative boundary-residual tolerance
  int max_iter = 200;
};

/// Axisymmetric mesh plus index sets.
struct AxiMesh {
  fem::Mesh mesh;                 ///< vertices are (r, z)
  std::vector<int> disk;          ///< nodes on the disk, from the rim (r = 1) to the axis
  std::vector<int> outer;         ///< Dirichlet nodes on the truncation boundary
  std::vector<int> free;          ///< all remaining nodes
  std::vector<double> disk_mass;  ///< 2 pi int phi_i r ds over the disk, per disk node
  double truncation_radius = 0.0;
};

struct CellField {
  std::shared_ptr<const AxiMesh> mesh;
  Eigen::VectorXd values;
};

struct KappaSolution {
  CellField field;
  double lambda = 0.0;  ///< total flux through the disk
};

struct WhatSolution {
  CellField field;
  Eigen::VectorXd boundary;  ///< values on AxiMesh::disk
  double flux = 0.0;         ///< C0 sum m_i sigma(u - w_i)
  int iterations = 0;
};

class CellSolver {
public:
  explicit CellSolver(CellConfig cfg = {});

  const CellConfig& config() const { return cfg_; }
  const AxiMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const AxiMesh> mesh_ptr() const { return mesh_; }

  /// Capacity potential and its flux, paired against the disk indicator.
  const KappaSolution& solve_kappa() const { return kappa_; }
  double lambda() const { return kappa_.lambda; }

  /// Nonlinear Robin problem  d_nu w = C0 sigma(u - w)  on the disk.
  /// Signorini and Dirichlet graphs reduce to w = u kappa for u <= 0 (resp.
  /// all u); finite-permeability and function graphs are solved directly.
  WhatSolution solve_what(const MonotoneGraph& sigma, double C0, double u) const;
  /// Derivative of w with respect to u; needs a differentiable sigma.
  CellField solve_wcap(const MonotoneGraph& sigma, double C0, double u) const;
  /// C0 int sigma'(u - w)(1 - W) over the disk.
  double flux_derivative(const MonotoneGraph& sigma, double C0, double u) const;

  /// Weighted L2 norm 2 pi int v^2 r dr dz.
  double l2_norm(const Eigen::VectorXd& v) const;
  /// Largest diameter among triangles touching the rim node.
  double rim_element_diameter() const;
  /// Value of a field at (r, z).
  double sample(const CellField& f, double r, double z) const;

private:
  CellConfig cfg_;
  std::shared_ptr<const AxiMesh> mesh_;
  Eigen::SparseMatrix<double> A_;
  Eigen::MatrixXd schur_;       // Dirichlet-to-Neumann map on the disk
  Eigen::MatrixXd extension_;   // free values = -extension_ * disk values
  Eigen::VectorXd mass_;        // disk_mass as a vector
  std::unique_ptr<fem::PointLocator> locator_;
  KappaSolution kappa_;

  CellField extend(const Eigen::VectorXd& disk_values) const;
  Eigen::VectorXd solve_boundary(const MonotoneGraph& sigma, double C0, double u,
                                 int& iterations) const;
};

/// Builds the axisymmetric mesh described at CellConfig.
AxiMesh build_axi_mesh(const CellConfig& cfg);

/// Three-point Richardson extrapolation in 1/R of values at radii R, 2R, 4R.
struct Extrapolation {
  double first_pair = 0.0;   ///< linear extrapolation from the two smallest radii
  double last_pair = 0.0;    ///< linear extrapolation from the two largest radii
  double value = 0.0;        ///< quadratic extrapolation from all three
  double last_step_change = 0.0;  ///< |last_pair - first_pair| / |last_pair|
};
Extrapolation richardson(const std::vector<double>& radii, const std::vector<double>& values);

/// Capacity flux for several truncation radii, extrapolated.
struct LambdaTable {
  std::vector<double> radii;
  std::vector<double> lambdas;
  Extrapolation extrapolated;
};
LambdaTable lambda_table(const std::vector<double>& radii, int angular_cells);

/// ln(4 r / eps) / ln(4 a / eps) on the annulus a <= r <= eps / 4.
double log_cell_2d(double r, double eps, double a_eps);

/// arctan(s) / arctan(sinh(sqrt((eps / a)^2 - 1))) for 0 <= s <= sinh(sqrt((eps / a)^2 - 1)).
double prolate_v(double sig, double eps, double a_eps);

} // namespace chom::cell
