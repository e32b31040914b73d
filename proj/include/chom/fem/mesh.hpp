#pragma once

#include "chom/scale_config.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace chom::fem {

enum class BoundaryLabel : std::uint8_t { Gamma1Free, Gamma1Obstacle, Gamma2 };

struct BoundaryEdge {
  std::array<int, 2> nodes{};
  BoundaryLabel label = BoundaryLabel::Gamma2;
  int segment = -1;  ///< obstacle index for Gamma1Obstacle edges
};

/// Rectangle [-l, l] x [0, height]; Gamma_1 is the bottom side.
struct RectDomain {
  double l = 1.0;
  double height = 1.0;
};

/// Planar P1 triangulation with marked boundary.
struct Mesh {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;  ///< counter-clockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<std::uint8_t> on_gamma2;        ///< per node, Dirichlet nodes
  std::vector<int> obstacle_segment;          ///< per node, -1 off the obstacles
  std::vector<double> segment_centers;
  double segment_half_length = 0.0;
  RectDomain domain;

  std::size_t num_nodes() const { return vertices.size(); }
  double triangle_area(std::size_t t) const;
  double area() const;
  /// Indices of nodes lying on an obstacle segment, ascending.
  std::vector<int> obstacle_nodes() const;
  /// Indices of nodes on Gamma_1 (bottom) that are not Dirichlet, sorted by x.
  std::vector<int> gamma1_nodes() const;
  /// Throws ConfigError if the triangulation is not conforming or degenerate.
  void validate() const;
};

/// Geometric refinement parameters of the epsilon mesh.
struct Grading {
  double ratio = 0.75;                 ///< size ratio between consecutive layers
  int edges_per_segment = 8;           ///< uniform edges inside each obstacle
  std::optional<double> coarse_size;   ///< default eps / 4
  std::optional<double> max_size;      ///< optional cap applied to the coarse size
};

/// Obstacle indices j with [eps j - a l0, eps j + a l0] inside [-l + 2 eps, l - 2 eps].
std::vector<int> admissible_indices(double eps, double l, double half_length);

/// Points x0 = p_0 < ... < p_m = x1 whose spacing starts near h_left at x0,
/// near h_right at x1, grows by 1/ratio per layer and saturates at h_max.
std::vector<double> graded_points(double x0, double x1, double h_left, double h_right,
                                  double ratio, double h_max);

/// Tensor-product mesh on the grid lines; `segments` are bottom intervals
/// marked as obstacles. Each rectangle is cut along its rising diagonal.
Mesh tensor_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                 const std::vector<std::array<double, 2>>& segments, const RectDomain& domain);

/// Graded mesh of the epsilon problem for n = 2.
Mesh build_mesh(const ScaleConfig& cfg, const RectDomain& domain, const Grading& grading = {});

/// Uniform nx-by-ny mesh with no obstacles.
Mesh build_uniform_mesh(const RectDomain& domain, int nx, int ny);

} // namespace chom::fem
