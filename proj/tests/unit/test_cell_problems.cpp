#include "chom/cell_problems.hpp"
#include "chom/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace chom;
using namespace chom::cell;

namespace {

const CellSolver& solver() {
  static const CellSolver s{};
  return s;
}

// Capacity flux of the disk with the potential pinned to 0 on the spheroid of
// equatorial radius R: the oblate coordinate solution is exact.
double truncated_lambda(double R) { return 2.0 * std::numbers::pi / std::atan(std::sqrt(R * R - 1.0)); }

} // namespace

TEST_CASE("closed forms on the 2d annulus and the prolate cell") {
  const double eps = 0.25, a = 1e-3;
  CHECK(log_cell_2d(a, eps, a) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(log_cell_2d(eps / 4.0, eps, a)) < 1e-14);
  CHECK(std::abs(log_cell_2d(std::sqrt(a * eps / 4.0), eps, a) - 0.5) < 1e-12);
  CHECK_THROWS_AS(log_cell_2d(2 * eps, eps, a), DomainError);

  CHECK(prolate_v(0.0, eps, 0.01) == 0.0);
  const double top = std::sinh(std::sqrt((eps / 0.01) * (eps / 0.01) - 1.0));
  CHECK(std::abs(prolate_v(top, eps, 0.01) - 1.0) < 1e-12);
  double prev = -1.0;
  for (int k = 0; k <= 50; ++k) {
    const double v = prolate_v(top * k / 50.0, eps, 0.01);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("truncated capacity against the spheroidal oracle") {
  const CellSolver s(CellConfig{8.0, 96});
  const double exact = truncated_lambda(8.0);
  CHECK(std::abs(s.lambda() - exact) < 1e-3 * exact);
  // Discretization error shrinks with the angular resolution.
  const CellSolver coarse(CellConfig{8.0, 24});
  CHECK(std::abs(coarse.lambda() - exact) > std::abs(s.lambda() - exact));
}

TEST_CASE("capacity potential") {
  const auto& s = solver();
  const auto& k = s.solve_kappa().field.values;
  for (int i : s.mesh().disk) CHECK(k[i] == 1.0);
  CHECK(k.minCoeff() >= 0.0);
  CHECK(k.maxCoeff() <= 1.0);
  CHECK(s.rim_element_diameter() <= s.config().truncation_radius * 1e-3);

  // Far-field constant, read off the computed field on |y| >= 2.
  double K = 0.0;
  const auto& v = s.mesh().mesh.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = std::hypot(v[i][0], v[i][1]);
    if (d >= 2.0) K = std::max(K, k[Eigen::Index(i)] * d);
  }
  CHECK(K > 0.5);
  CHECK(K < 0.7);
  const double half = 0.5 * s.config().truncation_radius;
  for (int j = 0; j <= 8; ++j) {
    const double th = 0.5 * std::numbers::pi * j / 8.0;
    CHECK(s.sample(s.solve_kappa().field, half * std::cos(th), half * std::sin(th)) <= K / half);
  }
}

TEST_CASE("w at zero vanishes") {
  const auto w = solver().solve_what(MonotoneGraph::linear(1.0), 1.0, 0.0);
  CHECK(w.field.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.flux == 0.0);
}

TEST_CASE("w sandwiches") {
  const auto& s = solver();
  const auto& kappa = s.solve_kappa().field.values;
  for (const char* name : {"linear:1", "cubic:1", "sqrt"}) {
    const auto sigma = MonotoneGraph::parse(name);
    CAPTURE(name);
    for (double u : {-2.0, 1.0, 2.0, 3.0}) {
      const auto w = s.solve_what(sigma, 1.0, u).field.values;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        CHECK(std::abs(w[i]) <= std::abs(u) * kappa[i] * (1 + 1e-10) + 1e-13);
        CHECK(w[i] * u >= -1e-13);
      }
    }
    const auto p = s.solve_what(sigma, 1.0, 1.0).field.values;
    const auto m = s.solve_what(sigma, 1.0, -1.0).field.values;
    CHECK((p + m).cwiseAbs().maxCoeff() < 1e-8);

    const auto lo = s.solve_what(sigma, 1.0, 0.5).field.values;
    const auto hi = s.solve_what(sigma, 1.0, 1.25).field.values;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const double d = hi[i] - lo[i];
      CHECK(d >= -1e-12);
      CHECK(d <= 0.75 * kappa[i] + 1e-12);
      CHECK(std::abs(d) <= 0.75 + 1e-12);
    }
  }
}

TEST_CASE("signorini and dirichlet cells reduce to kappa") {
  const auto& s = solver();
  const auto& kappa = s.solve_kappa().field.values;
  const auto sig = s.solve_what(MonotoneGraph::signorini(MonotoneGraph::linear(1.0)), 1.0, -2.0);
  CHECK((sig.field.values + 2.0 * kappa).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(sig.flux == doctest::Approx(-2.0 * s.lambda()).epsilon(1e-12));
  const auto dir = s.solve_what(MonotoneGraph::dirichlet(), 1.0, 3.0);
  CHECK(dir.flux == doctest::Approx(3.0 * s.lambda()).epsilon(1e-12));
}

TEST_CASE("derivative cell") {
  const auto& s = solver();
  const auto& kappa = s.solve_kappa().field.values;
  const auto lin = MonotoneGraph::linear(1.0);
  const auto a = s.solve_wcap(lin, 1.0, 1.0).values;
  const auto b = s.solve_wcap(lin, 1.0, 5.0).values;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);

  for (const char* name : {"linear:1", "cubic:1"}) {
    const auto sigma = MonotoneGraph::parse(name);
    CAPTURE(name);
    for (double u : {-2.0, 1.0, 3.0}) {
      const auto W = s.solve_wcap(sigma, 1.0, u).values;
      for (Eigen::Index i = 0; i < W.size(); ++i) {
        CHECK(W[i] >= -1e-12);
        CHECK(W[i] <= kappa[i] + 1e-12);
      }
      const double h = 1e-5;
      const auto w0 = s.solve_what(sigma, 1.0, u).field.values;
      const auto w1 = s.solve_what(sigma, 1.0, u + h).field.values;
      CHECK(s.l2_norm((w1 - w0) / h - W) < 1e-4);

      const double dH = s.flux_derivative(sigma, 1.0, u);
      CHECK(dH >= 0.0);
      CHECK(dH <= s.lambda() + 1e-10);
    }
  }
}

TEST_CASE("richardson helper") {
  // Exact for a quadratic in 1/R.
  const std::vector<double> R{8, 16, 32};
  std::vector<double> v;
  for (double r : R) v.push_back(4.0 + 2.0 / r - 3.0 / (r * r));
  const auto e = richardson(R, v);
  CHECK(e.value == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(richardson({8, 16}, {1, 2}), ConfigError);
}
