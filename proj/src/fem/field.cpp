#include "chom/fem/field.hpp"

#include "chom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace chom::fem {

Field::Field(std::shared_ptr<const Mesh> m, Vector v) : mesh(std::move(m)), values(std::move(v)) {
  validate();
}

void Field::validate() const {
  if (!mesh) throw ConfigError("field without mesh");
  if (std::size_t(values.size()) != mesh->num_nodes()) {
    throw ConfigError("field length does not match the mesh");
  }
  if (!values.allFinite()) throw ConfigError("field has non-finite values");
}

double l2_norm(const Field& u) {
  const SparseMatrix M = mass(*u.mesh);
  return std::sqrt(std::max(0.0, u.values.dot(M * u.values)));
}

double h1_seminorm(const Field& u) {
  const SparseMatrix A = stiffness(*u.mesh);
  return std::sqrt(std::max(0.0, u.values.dot(A * u.values)));
}

double boundary_l2_norm(const Field& u, std::initializer_list<BoundaryLabel> labels) {
  const SparseMatrix B = boundary_mass_matrix(*u.mesh, labels);
  return std::sqrt(std::max(0.0, u.values.dot(B * u.values)));
}

double l2_norm_band(const Field& u, double y0, double y1) {
  const Mesh& m = *u.mesh;
  double sum = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const double yc =
        (m.vertices[tri[0]][1] + m.vertices[tri[1]][1] + m.vertices[tri[2]][1]) / 3.0;
    if (yc < y0 || yc >= y1) continue;
    const double area = m.triangle_area(t);
    const double a = u.values[tri[0]], b = u.values[tri[1]], c = u.values[tri[2]];
    sum += area / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
  }
  return std::sqrt(sum);
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  double xmin = std::numeric_limits<double>::max(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& v : mesh.vertices) {
    xmin = std::min(xmin, v[0]);
    xmax = std::max(xmax, v[0]);
    ymin = std::min(ymin, v[1]);
    ymax = std::max(ymax, v[1]);
  }
  const int side = std::max(1, int(std::sqrt(double(mesh.triangles.size()) / 4.0)));
  nx_ = side;
  ny_ = side;
  x0_ = xmin;
  y0_ = ymin;
  dx_ = std::max((xmax - xmin) / nx_, 1e-300);
  dy_ = std::max((ymax - ymin) / ny_, 1e-300);
  buckets_.assign(std::size_t(nx_) * ny_, {});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    double bx0 = xmax, bx1 = xmin, by0 = ymax, by1 = ymin;
    for (int k : mesh.triangles[t]) {
      bx0 = std::min(bx0, mesh.vertices[k][0]);
      bx1 = std::max(bx1, mesh.vertices[k][0]);
      by0 = std::min(by0, mesh.vertices[k][1]);
      by1 = std::max(by1, mesh.vertices[k][1]);
    }
    const int i0 = std::clamp(int((bx0 - x0_) / dx_), 0, nx_ - 1);
    const int i1 = std::clamp(int((bx1 - x0_) / dx_), 0, nx_ - 1);
    const int j0 = std::clamp(int((by0 - y0_) / dy_), 0, ny_ - 1);
    const int j1 = std::clamp(int((by1 - y0_) / dy_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[std::size_t(j) * nx_ + i].push_back(int(t));
    }
  }
}

std::array<double, 3> PointLocator::barycentric(int t, double x, double y) const {
  const auto& tri = mesh_->triangles[t];
  const auto& a = mesh_->vertices[tri[0]];
  const auto& b = mesh_->vertices[tri[1]];
  const auto& c = mesh_->vertices[tri[2]];
  const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  const double l1 = ((x - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (y - a[1])) / det;
  const double l2 = ((b[0] - a[0]) * (y - a[1]) - (x - a[0]) * (b[1] - a[1])) / det;
  return {1.0 - l1 - l2, l1, l2};
}

PointLocator::Hit PointLocator::locate(double x, double y) const {
  const int i = std::clamp(int((x - x0_) / dx_), 0, nx_ - 1);
  const int j = std::clamp(int((y - y0_) / dy_), 0, ny_ - 1);
  Hit best;
  double best_violation = std::numeric_limits<double>::max();
  auto consider = [&](int t) {
    const auto bary = barycentric(t, x, y);
    const double violation = std::max({0.0, -bary[0], -bary[1], -bary[2]});
    if (violation < best_violation) {
      best_violation = violation;
      best.triangle = t;
      best.bary = bary;
    }
  };
  for (int t : buckets_[std::size_t(j) * nx_ + i]) {
    consider(t);
    if (best_violation <= 1e-12) break;
  }
  if (best_violation > 1e-12) {
    // Outside the mesh or at a bucket edge: widen the search.
    for (const auto& bucket : buckets_) {
      for (int t : bucket) consider(t);
    }
  }
  if (best_violation > 1e-12) {
    best.clamped = true;
    double sum = 0.0;
    for (double& w : best.bary) {
      w = std::max(0.0, w);
      sum += w;
    }
    for (double& w : best.bary) w /= sum;
  }
  return best;
}

double evaluate(const Field& u, const PointLocator& loc, double x, double y) {
  const auto hit = loc.locate(x, y);
  const auto& tri = u.mesh->triangles[hit.triangle];
  return hit.bary[0] * u.values[tri[0]] + hit.bary[1] * u.values[tri[1]] +
         hit.bary[2] * u.values[tri[2]];
}

Interpolated interp(const Field& u, std::shared_ptr<const Mesh> target) {
  const PointLocator loc(*u.mesh);
  Vector v(Eigen::Index(target->num_nodes()));
  int clamped = 0;
  for (std::size_t k = 0; k < target->num_nodes(); ++k) {
    const auto& p = target->vertices[k];
    const auto hit = loc.locate(p[0], p[1]);
    if (hit.clamped) ++clamped;
    const auto& tri = u.mesh->triangles[hit.triangle];
    v[Eigen::Index(k)] = hit.bary[0] * u.values[tri[0]] + hit.bary[1] * u.values[tri[1]] +
                         hit.bary[2] * u.values[tri[2]];
  }
  return {Field(std::move(target), std::move(v)), clamped};
}

std::vector<TracePoint> gamma1_trace(const Field& u) {
  std::vector<TracePoint> out;
  for (int i : u.mesh->gamma1_nodes()) out.push_back({u.mesh->vertices[std::size_t(i)][0], u.values[i]});
  return out;
}

void write_field_csv(std::ostream& os, const Field& u) {
  os << "x,y,value\n" << std::setprecision(17);
  for (std::size_t k = 0; k < u.mesh->num_nodes(); ++k) {
    const auto& p = u.mesh->vertices[k];
    os << p[0] << ',' << p[1] << ',' << u.values[Eigen::Index(k)] << '\n';
  }
}

void write_mesh_csv(std::ostream& nodes, std::ostream& elements, const Mesh& mesh) {
  nodes << "id,x,y,gamma2,segment\n" << std::setprecision(17);
  for (std::size_t k = 0; k < mesh.num_nodes(); ++k) {
    nodes << k << ',' << mesh.vertices[k][0] << ',' << mesh.vertices[k][1] << ','
          << int(mesh.on_gamma2[k]) << ',' << mesh.obstacle_segment[k] << '\n';
  }
  elements << "id,a,b,c\n";
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    elements << t << ',' << tri[0] << ',' << tri[1] << ',' << tri[2] << '\n';
  }
}

} // namespace chom::fem
