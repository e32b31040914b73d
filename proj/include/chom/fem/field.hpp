#pragma once

#include "chom/fem/assembly.hpp"
#include "chom/fem/mesh.hpp"

#include <Eigen/Dense>

#include <memory>
#include <ostream>
#include <vector>

namespace chom::fem {

/// Nodal P1 field on a shared mesh.
struct Field {
  std::shared_ptr<const Mesh> mesh;
  Vector values;

  Field() = default;
  Field(std::shared_ptr<const Mesh> m, Vector v);
  /// Throws ConfigError on size mismatch or non-finite values.
  void validate() const;
};

double l2_norm(const Field& u);
double h1_seminorm(const Field& u);
double boundary_l2_norm(const Field& u, std::initializer_list<BoundaryLabel> labels);
/// L2 norm restricted to triangles whose centroid satisfies y0 <= y < y1.
double l2_norm_band(const Field& u, double y0, double y1);

/// Bucket-grid point location on a triangulation.
class PointLocator {
public:
  explicit PointLocator(const Mesh& mesh);

  struct Hit {
    int triangle = -1;
    std::array<double, 3> bary{};
    bool clamped = false;
  };
  /// Triangle containing (x, y); points outside are clamped to the nearest
  /// triangle with the barycentric weights projected onto the simplex.
  Hit locate(double x, double y) const;

private:
  const Mesh* mesh_;
  double x0_, y0_, dx_, dy_;
  int nx_, ny_;
  std::vector<std::vector<int>> buckets_;
  std::array<double, 3> barycentric(int t, double x, double y) const;
};

struct Interpolated {
  Field field;
  int clamped = 0;  ///< target nodes that fell outside the source mesh
};

/// P1 interpolation of u onto the nodes of target.
Interpolated interp(const Field& u, std::shared_ptr<const Mesh> target);
/// Value of u at one point.
double evaluate(const Field& u, const PointLocator& loc, double x, double y);

struct TracePoint {
  double x = 0.0;
  double value = 0.0;
};
/// Values on the non-Dirichlet nodes of Gamma_1, sorted by x.
std::vector<TracePoint> gamma1_trace(const Field& u);

/// CSV dumps: "x,y,value" per node; nodes "id,x,y" and elements "id,a,b,c".
void write_field_csv(std::ostream& os, const Field& u);
void write_mesh_csv(std::ostream& nodes, std::ostream& elements, const Mesh& mesh);

} // namespace chom::fem
