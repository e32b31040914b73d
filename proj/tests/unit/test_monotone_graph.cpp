#include "chom/errors.hpp"
#include "chom/monotone_graph.hpp"

#include "../support/gen.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace chom;
using chom::testing::all_presets;
using chom::testing::function_presets;

TEST_CASE("signorini extension values") {
  const auto g = MonotoneGraph::signorini(MonotoneGraph::linear(1.0));
  CHECK(g.eval(-1.0).empty);
  const auto at0 = g.eval(0.0);
  CHECK(!at0.empty);
  CHECK(at0.upper == 0.0);
  CHECK(at0.lower == -std::numeric_limits<double>::infinity());
  CHECK(g.eval(2.0).is_point());
  CHECK(g.eval(2.0).lower == doctest::Approx(2.0));
}

TEST_CASE("every preset contains 0 at 0") {
  for (const auto& name : all_presets()) {
    CAPTURE(name);
    CHECK(MonotoneGraph::parse(name).eval(0.0).contains(0.0));
  }
}

TEST_CASE("dirichlet graph") {
  const auto g = MonotoneGraph::dirichlet();
  CHECK(g.eval(0.5).empty);
  CHECK(g.eval(0.0).contains(1e300));
  CHECK(resolvent(g, 3.0, 7.0) == 0.0);
}

TEST_CASE("parse rejects junk") {
  CHECK_THROWS_AS(MonotoneGraph::parse("linear"), ConfigError);
  CHECK_THROWS_AS(MonotoneGraph::parse("linear:-1"), ConfigError);
  CHECK_THROWS_AS(MonotoneGraph::parse("banana"), ConfigError);
}

TEST_CASE("resolvent examples") {
  CHECK(resolvent(MonotoneGraph::linear(1.0), 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(resolvent(MonotoneGraph::signorini(MonotoneGraph::linear(1.0)), 1.0, -3.0) == 0.0);
  const double v = std::pow(-1.0 + std::sqrt(17.0), 2) / 4.0;
  const auto sq = MonotoneGraph::signorini(MonotoneGraph::sqrt_odd());
  CHECK(std::abs(resolvent(sq, 1.0, 4.0) - v) < 1e-11);
  CHECK(v == doctest::Approx(2.4384).epsilon(1e-4));
}

TEST_CASE("inverse") {
  const auto gamma = inverse(MonotoneGraph::signorini(MonotoneGraph::linear(0.0)));
  const auto at0 = gamma.eval(0.0);
  CHECK(at0.lower == 0.0);
  CHECK(at0.upper == std::numeric_limits<double>::infinity());
  CHECK(gamma.eval(1.0).empty);
  CHECK(gamma.eval(-1.0).is_point());
  CHECK(gamma.eval(-1.0).lower == 0.0);

  const auto half = inverse(MonotoneGraph::linear(2.0));
  CHECK(half.eval(3.0).lower == doctest::Approx(1.5));

  auto& g = chom::testing::rng();
  for (const auto& name : all_presets()) {
    const auto a = MonotoneGraph::parse(name);
    const auto b = inverse(inverse(a));
    for (int k = 0; k < 50; ++k) {
      const double s = chom::testing::uniform(g, -3.0, 3.0);
      const auto x = a.eval(s), y = b.eval(s);
      CAPTURE(name);
      CAPTURE(s);
      REQUIRE(x.empty == y.empty);
      if (!x.empty) {
        CHECK(y.lower == doctest::Approx(x.lower).epsilon(1e-9));
        CHECK(y.upper == doctest::Approx(x.upper).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("primitive") {
  CHECK(primitive(MonotoneGraph::linear(1.0), 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(primitive(MonotoneGraph::sqrt_odd(), 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  for (const auto& name : function_presets()) {
    const auto g = MonotoneGraph::parse(name);
    const double h = 1e-6;
    for (double s = -2.0; s <= 2.0; s += 0.37) {
      const double fd = (primitive(g, s + h) - primitive(g, s)) / h;
      CAPTURE(name);
      CAPTURE(s);
      // O(h) for Lipschitz sigma; sqrt near 0 is only Hoelder but the grid avoids it.
      CHECK(std::abs(fd - g.eval(s).lower) < 1e-4 * (1.0 + std::abs(fd)));
    }
  }
  CHECK_THROWS_AS(MonotoneGraph::signorini(MonotoneGraph::linear(1.0)).primitive(-1.0), DomainError);
}

TEST_CASE("graph monotonicity on samples") {
  auto& g = chom::testing::rng();
  for (const auto& name : all_presets()) {
    const auto sigma = MonotoneGraph::parse(name);
    for (const auto& [s, t] : chom::testing::pairs(g, 500, -5.0, 5.0)) {
      const double a = std::min(s, t), b = std::max(s, t);
      const auto x = sigma.eval(a), y = sigma.eval(b);
      if (x.empty || y.empty) continue;
      CAPTURE(name);
      CHECK(x.upper <= y.lower + 1e-12);
    }
  }
}

TEST_CASE("resolvent properties") {
  auto& g = chom::testing::rng();
  for (const auto& name : all_presets()) {
    const auto sigma = MonotoneGraph::parse(name);
    CAPTURE(name);
    for (double c : {0.1, 1.0, 7.0}) {
      CHECK(resolvent(sigma, c, 0.0) == 0.0);
      for (const auto& [u1, u2] : chom::testing::pairs(g, 200, -10.0, 10.0)) {
        const double v1 = resolvent(sigma, c, u1), v2 = resolvent(sigma, c, u2);
        CHECK(std::abs(v1 - v2) <= std::abs(u1 - u2) + 1e-11);
        if (u1 <= u2) CHECK(v1 <= v2 + 1e-12);
        const auto val = sigma.eval(v1);
        REQUIRE(!val.empty);
        CHECK(GraphValue::interval(c * val.lower, c * val.upper).contains(u1 - v1, 1e-9));
      }
    }
  }
}

TEST_CASE("lower growth constant holds on samples") {
  auto& g = chom::testing::rng();
  for (const auto& name : function_presets()) {
    const auto sigma = MonotoneGraph::parse(name);
    const auto& reg = sigma.regularity();
    if (!reg || !reg->k1) continue;
    CAPTURE(name);
    for (const auto& [s, t] : chom::testing::pairs(g, 1000, -5.0, 5.0)) {
      CHECK(std::abs(sigma.eval(s).lower - sigma.eval(t).lower) >= *reg->k1 * std::abs(s - t) * (1 - 1e-12));
    }
  }
}
