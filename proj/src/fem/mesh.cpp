#include "chom/fem/mesh.hpp"

#include "chom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace chom::fem {

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const auto& a = vertices[tri[0]];
  const auto& b = vertices[tri[1]];
  const auto& c = vertices[tri[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double Mesh::area() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) sum += triangle_area(t);
  return sum;
}

std::vector<int> Mesh::obstacle_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < obstacle_segment.size(); ++i) {
    if (obstacle_segment[i] >= 0 && !on_gamma2[i]) out.push_back(int(i));
  }
  return out;
}

std::vector<int> Mesh::gamma1_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i][1] == 0.0 && !on_gamma2[i]) out.push_back(int(i));
  }
  std::sort(out.begin(), out.end(),
            [&](int a, int b) { return vertices[a][0] < vertices[b][0]; });
  return out;
}

void Mesh::validate() const {
  const int n = int(vertices.size());
  std::map<std::pair<int, int>, int> edge_count;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= n) throw ConfigError("triangle references a missing vertex");
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
    if (!(triangle_area(t) > 0.0)) {
      throw ConfigError("triangle " + std::to_string(t) + " has non-positive area");
    }
  }
  std::size_t boundary = 0;
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) throw ConfigError("edge shared by more than two triangles");
    if (count == 1) ++boundary;
  }
  if (boundary != boundary_edges.size()) {
    throw ConfigError("boundary edge list does not match the triangulation");
  }
}

std::vector<int> admissible_indices(double eps, double l, double half_length) {
  std::vector<int> out;
  const double limit = l - 2.0 * eps;
  const int jmax = int(std::floor(l / eps)) + 1;
  for (int j = -jmax; j <= jmax; ++j) {
    const double c = eps * j;
    if (c - half_length >= -limit && c + half_length <= limit) out.push_back(j);
  }
  return out;
}

std::vector<double> graded_points(double x0, double x1, double h_left, double h_right,
                                  double ratio, double h_max) {
  if (!(x1 > x0)) throw ConfigError("graded_points: empty interval");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("grading ratio must lie in (0, 1]");
  const double growth = 1.0 / ratio;
  h_left = std::min(h_left, h_max);
  h_right = std::min(h_right, h_max);

  std::vector<double> left{x0};
  std::vector<double> right{x1};
  double next_l = h_left;
  double next_r = h_right;
  double remaining = x1 - x0;
  while (true) {
    const double s = std::min(next_l, next_r);
    if (remaining <= 1.5 * s) break;
    if (next_l <= next_r) {
      left.push_back(left.back() + s);
      next_l = std::min(next_l * growth, h_max);
    } else {
      right.push_back(right.back() - s);
      next_r = std::min(next_r * growth, h_max);
    }
    remaining -= s;
  }
  std::vector<double> out = std::move(left);
  out.insert(out.end(), right.rbegin(), right.rend());
  return out;
}

Mesh tensor_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                 const std::vector<std::array<double, 2>>& segments, const RectDomain& domain) {
  Mesh m;
  m.domain = domain;
  const int nx = int(xs.size());
  const int ny = int(ys.size());
  auto id = [nx](int i, int j) { return j * nx + i; };
  m.vertices.reserve(std::size_t(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) m.vertices.push_back({xs[i], ys[j]});
  }
  m.triangles.reserve(2 * std::size_t(nx - 1) * (ny - 1));
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }
  m.on_gamma2.assign(m.vertices.size(), 0);
  m.obstacle_segment.assign(m.vertices.size(), -1);

  auto segment_of = [&](double xa, double xb) {
    for (std::size_t s = 0; s < segments.size(); ++s) {
      if (xa >= segments[s][0] && xb <= segments[s][1]) return int(s);
    }
    return -1;
  };
  // Bottom edges: Gamma_1.
  for (int i = 0; i + 1 < nx; ++i) {
    BoundaryEdge e;
    e.nodes = {id(i, 0), id(i + 1, 0)};
    e.segment = segment_of(xs[i], xs[i + 1]);
    e.label = e.segment >= 0 ? BoundaryLabel::Gamma1Obstacle : BoundaryLabel::Gamma1Free;
    if (e.segment >= 0) {
      m.obstacle_segment[e.nodes[0]] = e.segment;
      m.obstacle_segment[e.nodes[1]] = e.segment;
    }
    m.boundary_edges.push_back(e);
  }
  auto add_gamma2 = [&](int a, int b) {
    BoundaryEdge e;
    e.nodes = {a, b};
    e.label = BoundaryLabel::Gamma2;
    m.boundary_edges.push_back(e);
    m.on_gamma2[a] = 1;
    m.on_gamma2[b] = 1;
  };
  for (int j = 0; j + 1 < ny; ++j) add_gamma2(id(nx - 1, j), id(nx - 1, j + 1));
  for (int i = nx - 1; i > 0; --i) add_gamma2(id(i, ny - 1), id(i - 1, ny - 1));
  for (int j = ny - 1; j > 0; --j) add_gamma2(id(0, j), id(0, j - 1));
  for (const auto& s : segments) m.segment_centers.push_back(0.5 * (s[0] + s[1]));
  if (!segments.empty()) m.segment_half_length = 0.5 * (segments[0][1] - segments[0][0]);
  return m;
}

Mesh build_mesh(const ScaleConfig& cfg, const RectDomain& domain, const Grading& grading) {
  if (cfg.n != 2) throw ConfigError("build_mesh handles the planar (n = 2) problem only");
  const ScaleParams sp = scale_params(cfg);
  const double half = sp.a_eps * cfg.l0;
  const std::vector<int> js = admissible_indices(cfg.eps, domain.l, half);
  if (js.empty()) throw ConfigError("eps too large for the domain: no admissible obstacle");
  if (grading.edges_per_segment < 1) throw ConfigError("edges_per_segment must be >= 1");

  double h_coarse = grading.coarse_size.value_or(cfg.eps / 4.0);
  if (grading.max_size) h_coarse = std::min(h_coarse, *grading.max_size);
  const double h_seg = 2.0 * half / grading.edges_per_segment;
  if (!(h_seg < h_coarse)) throw ConfigError("obstacles larger than the coarse mesh size");

  std::vector<std::array<double, 2>> segments;
  for (int j : js) segments.push_back({cfg.eps * j - half, cfg.eps * j + half});

  std::vector<double> xs;
  auto append = [&xs](const std::vector<double>& pts) {
    if (xs.empty())
      xs = pts;
    else
      xs.insert(xs.end(), pts.begin() + 1, pts.end());
  };
  double cursor = -domain.l;
  double h_cursor = h_coarse;
  for (const auto& s : segments) {
    append(graded_points(cursor, s[0], h_cursor, h_seg, grading.ratio, h_coarse));
    std::vector<double> inside;
    for (int k = 0; k <= grading.edges_per_segment; ++k) {
      inside.push_back(k == grading.edges_per_segment
                           ? s[1]
                           : s[0] + (s[1] - s[0]) * double(k) / grading.edges_per_segment);
    }
    append(inside);
    cursor = s[1];
    h_cursor = h_seg;
  }
  append(graded_points(cursor, domain.l, h_cursor, h_coarse, grading.ratio, h_coarse));

  const std::vector<double> ys =
      graded_points(0.0, domain.height, h_seg, h_coarse, grading.ratio, h_coarse);
  Mesh m = tensor_mesh(xs, ys, segments, domain);
  return m;
}

Mesh build_uniform_mesh(const RectDomain& domain, int nx, int ny) {
  if (nx < 1 || ny < 1) throw ConfigError("uniform mesh needs at least one cell per direction");
  std::vector<double> xs(nx + 1), ys(ny + 1);
  for (int i = 0; i <= nx; ++i) xs[i] = -domain.l + 2.0 * domain.l * double(i) / nx;
  for (int j = 0; j <= ny; ++j) ys[j] = domain.height * double(j) / ny;
  xs.back() = domain.l;
  ys.back() = domain.height;
  return tensor_mesh(xs, ys, {}, domain);
}

} // namespace chom::fem
