#include "chom/errors.hpp"
#include "chom/fem/assembly.hpp"
#include "chom/fem/field.hpp"
#include "chom/fem/mesh.hpp"

#include "../support/gen.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

using namespace chom;
using namespace chom::fem;

namespace {

std::shared_ptr<const Mesh> eps_mesh(double eps) {
  ScaleConfig c;
  c.eps = eps;
  return std::make_shared<const Mesh>(build_mesh(c, {c.l, c.height}));
}

double max_diff(const SparseMatrix& a, const SparseMatrix& b) {
  const SparseMatrix d = a - b;
  double out = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) out = std::max(out, std::abs(it.value()));
  return out;
}

} // namespace

TEST_CASE("obstacle centers with the margin") {
  const auto js = admissible_indices(0.25, 1.0, 1e-3);
  CHECK(js == std::vector<int>{-1, 0, 1});
  const auto m = eps_mesh(0.25);
  REQUIRE(m->segment_centers.size() == 3);
  CHECK(m->segment_centers[0] == doctest::Approx(-0.25));
  CHECK(m->segment_centers[1] == doctest::Approx(0.0));
  CHECK(m->segment_centers[2] == doctest::Approx(0.25));
}

TEST_CASE("epsilon mesh structure") {
  for (double eps : {0.25, 1.0 / 6.0, 0.1}) {
    CAPTURE(eps);
    const auto m = eps_mesh(eps);
    CHECK_NOTHROW(m->validate());
    for (int i : m->obstacle_nodes()) CHECK(m->vertices[std::size_t(i)][1] == 0.0);

    // Segment endpoints are nodes and segments are unions of whole edges.
    ScaleConfig c;
    c.eps = eps;
    const double half = scale_params(c).a_eps * c.l0;
    CHECK(m->segment_half_length == doctest::Approx(half).epsilon(1e-12));
    for (double xc : m->segment_centers) {
      int hits = 0;
      for (const auto& v : m->vertices) {
        if (v[1] == 0.0 && (v[0] == xc - half || v[0] == xc + half)) ++hits;
      }
      CHECK(hits == 2);
    }
    std::map<int, double> seg_len;
    for (const auto& e : m->boundary_edges) {
      if (e.label != BoundaryLabel::Gamma1Obstacle) continue;
      const auto& a = m->vertices[std::size_t(e.nodes[0])];
      const auto& b = m->vertices[std::size_t(e.nodes[1])];
      CHECK(std::min(a[0], b[0]) >= m->segment_centers[std::size_t(e.segment)] - half - 1e-15);
      CHECK(std::max(a[0], b[0]) <= m->segment_centers[std::size_t(e.segment)] + half + 1e-15);
      seg_len[e.segment] += std::abs(a[0] - b[0]);
    }
    for (const auto& [s, len] : seg_len) CHECK(len == doctest::Approx(2.0 * half).epsilon(1e-12));

    // Graded, not global: far fewer nodes than a uniform mesh at the segment scale.
    CHECK(m->num_nodes() < 500000);
    CHECK(m->num_nodes() > std::size_t(2.0 / (eps / 4.0)) * std::size_t(1.0 / (eps / 4.0)));
  }
}

TEST_CASE("uniform mesh node count") {
  const Mesh m = build_uniform_mesh({1.0, 1.0}, 20, 10);
  CHECK(m.num_nodes() == 21u * 11u);
  CHECK(m.triangles.size() == 2u * 20u * 10u);
  CHECK(m.area() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("stiffness invariants") {
  for (double eps : {0.25, 0.1}) {
    const auto m = eps_mesh(eps);
    const SparseMatrix A = stiffness(*m);
    const Vector one = Vector::Ones(A.rows());
    CHECK((A * one).cwiseAbs().maxCoeff() < 1e-12 * A.diagonal().maxCoeff());
    CHECK(std::abs(one.dot(A * one)) < 1e-12 * A.diagonal().sum());
    CHECK(max_diff(A, SparseMatrix(A.transpose())) < 1e-14 * A.diagonal().maxCoeff());
  }
}

TEST_CASE("patch test") {
  const auto m = eps_mesh(0.25);
  const SparseMatrix A = stiffness(*m);
  Vector lin(Eigen::Index(m->num_nodes()));
  for (std::size_t i = 0; i < m->num_nodes(); ++i) lin[Eigen::Index(i)] = 2.0 * m->vertices[i][0] - 3.0 * m->vertices[i][1];
  const Vector r = A * lin;
  const double scale = A.diagonal().maxCoeff() * 5.0;
  for (std::size_t i = 0; i < m->num_nodes(); ++i) {
    const auto& v = m->vertices[i];
    const bool boundary = v[1] == 0.0 || v[1] == 1.0 || v[0] == -1.0 || v[0] == 1.0;
    if (!boundary) CHECK(std::abs(r[Eigen::Index(i)]) < 1e-11 * scale);
  }
}

TEST_CASE("quadrature and norms") {
  const auto m = eps_mesh(1.0 / 6.0);
  const Vector F = load(*m, [](double, double) { return 1.0; });
  CHECK(std::abs(F.sum() - 2.0) < 1e-12);
  const SparseMatrix M = mass(*m);
  const Vector one = Vector::Ones(M.rows());
  CHECK(std::abs(one.dot(M * one) - 2.0) < 1e-12);
  CHECK(l2_norm(Field(m, one)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(h1_seminorm(Field(m, one)) < 1e-12);

  Vector ax(Eigen::Index(m->num_nodes()));
  for (std::size_t i = 0; i < m->num_nodes(); ++i) ax[Eigen::Index(i)] = 3.0 * m->vertices[i][0];
  CHECK(h1_seminorm(Field(m, ax)) * h1_seminorm(Field(m, ax)) == doctest::Approx(9.0 * 2.0).epsilon(1e-12));
  const auto u = std::make_shared<const Mesh>(build_uniform_mesh({1.0, 1.0}, 16, 8));
  CHECK(l2_norm_band(Field(u, Vector::Ones(Eigen::Index(u->num_nodes()))), 0.0, 0.25) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("boundary mass totals") {
  for (double eps : {0.25, 0.125, 0.1}) {
    ScaleConfig c;
    c.eps = eps;
    const auto m = eps_mesh(eps);
    const double seg = 2.0 * scale_params(c).a_eps * c.l0;
    const double expected = seg * double(m->segment_centers.size());
    const Vector mo = boundary_mass(*m, {BoundaryLabel::Gamma1Obstacle});
    CHECK(std::abs(mo.sum() - expected) < 1e-12 * std::max(1.0, expected));
    const Vector mf = boundary_mass(*m, {BoundaryLabel::Gamma1Free});
    CHECK(std::abs(mo.sum() + mf.sum() - 2.0) < 1e-12);
  }
}

TEST_CASE("assembly does not depend on triangle order") {
  const auto m = eps_mesh(0.25);
  Mesh shuffled = *m;
  std::vector<std::size_t> perm(shuffled.triangles.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), chom::testing::rng());
  for (std::size_t k = 0; k < perm.size(); ++k) shuffled.triangles[k] = m->triangles[perm[k]];
  const auto f = [](double x, double y) { return std::sin(3 * x) + y * y; };
  const Assembled a = assemble(*m, f), b = assemble(shuffled, f);
  const double s = a.stiffness.diagonal().maxCoeff();
  CHECK(max_diff(a.stiffness, b.stiffness) < 1e-12 * s);
  CHECK((a.load - b.load).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("interpolation is exact for linear fields") {
  const auto src = std::make_shared<const Mesh>(build_uniform_mesh({1.0, 1.0}, 16, 8));
  const auto dst = eps_mesh(0.25);
  Vector v(Eigen::Index(src->num_nodes()));
  for (std::size_t i = 0; i < src->num_nodes(); ++i) v[Eigen::Index(i)] = 1.0 + 2.0 * src->vertices[i][0] - src->vertices[i][1];
  const auto out = interp(Field(src, v), dst);
  CHECK(out.clamped == 0);
  for (std::size_t i = 0; i < dst->num_nodes(); ++i) {
    const auto& p = dst->vertices[i];
    CHECK(std::abs(out.field.values[Eigen::Index(i)] - (1.0 + 2.0 * p[0] - p[1])) < 1e-12);
  }
}

TEST_CASE("gamma1 trace and csv") {
  const auto m = std::make_shared<const Mesh>(build_uniform_mesh({1.0, 1.0}, 8, 4));
  Vector v(Eigen::Index(m->num_nodes()));
  for (std::size_t i = 0; i < m->num_nodes(); ++i) v[Eigen::Index(i)] = 0.5 * m->vertices[i][0] + m->vertices[i][1];
  const auto tr = gamma1_trace(Field(m, v));
  CHECK(tr.size() == 7u);  // corners lie on Gamma_2
  for (std::size_t k = 0; k < tr.size(); ++k) {
    CHECK(tr[k].value == doctest::Approx(0.5 * tr[k].x));
    if (k > 0) CHECK(tr[k].x > tr[k - 1].x);
  }
  std::ostringstream os;
  write_field_csv(os, Field(m, v));
  CHECK(os.str().rfind("x,y,value\n", 0) == 0);
  CHECK_THROWS_AS(Field(m, Vector::Zero(3)).validate(), ConfigError);
}
