#include "chom/convergence_lab.hpp"
#include "chom/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace chom;

namespace {

SweepConfig quick(const std::string& source) {
  SweepConfig c;
  c.source = source;
  c.workers = 2;
  return c;
}

} // namespace

TEST_CASE("numbers with fractions") {
  CHECK(parse_number("1/6") == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(parse_number(" 0.25 ") == 0.25);
  CHECK_THROWS_AS(parse_number("1/0"), ConfigError);
  CHECK_THROWS_AS(parse_number("abc"), ConfigError);
  CHECK_THROWS_AS(parse_number("1.5x"), ConfigError);
}

TEST_CASE("config grammar") {
  std::istringstream in(R"(# comment line
alpha2 = 1/2
C0 = 1.5        # trailing comment
l0=0.2
eps = 1/4, 1/8
source = bump:2
sigma = signorini:sqrt
workers = 3
eps_tol = 1e-10
)");
  const SweepConfig c = parse_sweep_config(in);
  CHECK(c.base.alpha == doctest::Approx(std::sqrt(0.5)));
  CHECK(c.base.C0 == 1.5);
  CHECK(c.base.l0 == 0.2);
  CHECK(c.eps_list == std::vector<double>{0.25, 0.125});
  CHECK(c.source == "bump:2");
  CHECK(c.sigma == "signorini:sqrt");
  CHECK(c.workers == 3);
  CHECK(c.eps_options.tol == 1e-10);

  auto bad = [](const char* text) {
    std::istringstream s(text);
    CHECK_THROWS_AS(parse_sweep_config(s), ConfigError);
  };
  bad("colour = blue\n");
  bad("eps = 1/8, 1/4\n");
  bad("C0\n");
  bad("n = 3\n");
  bad("workers = 1.5\n");
  bad("eps = \n");
}

TEST_CASE("zero source sweep") {
  const ConvergenceReport r = sweep(quick("zero"));
  CHECK(r.all_converged());
  for (const auto& row : r.rows) {
    CHECK(row.l2_error == 0.0);
    CHECK(row.grad_norm == 0.0);
    CHECK(row.beta_trace == 0.0);
    CHECK(row.trace_gap == 0.0);
  }
}

TEST_CASE("constant source sweep") {
  const ConvergenceReport r = sweep(quick("constant"));
  REQUIRE(r.rows.size() == 4);
  CHECK(r.all_converged());
  CHECK(r.reference.path == HomPath::Newton);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const auto& row = r.rows[k];
    CHECK(row.eps == r.config.eps_list[k]);
    if (k > 0) {
      CHECK(row.l2_error < r.rows[k - 1].l2_error);
      CHECK(!row.non_monotone);
    }
    CHECK(row.grad_norm <= 1.2 * r.rows[0].grad_norm);
    // Triangle inequality across the two bands.
    CHECK(row.l2_error <= row.interior_gap + row.layer_gap + 1e-15);
    CHECK(std::hypot(row.interior_gap, row.layer_gap) == doctest::Approx(row.l2_error).epsilon(1e-10));
  }
}

TEST_CASE("report round trip and determinism") {
  SweepConfig c = quick("sign-changing");
  c.eps_list = {0.25, 1.0 / 6.0};
  const ConvergenceReport a = sweep(c);
  c.workers = 1;
  const ConvergenceReport b = sweep(c);
  std::ostringstream sa, sb;
  write_report_csv(sa, a);
  write_report_csv(sb, b);
  CHECK(sa.str() == sb.str());

  std::istringstream in(sa.str());
  const auto rows = read_report_csv(in);
  REQUIRE(rows.size() == a.rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].eps == a.rows[k].eps);
    CHECK(rows[k].l2_error == a.rows[k].l2_error);
    CHECK(rows[k].grad_norm == a.rows[k].grad_norm);
    CHECK(rows[k].beta_trace == a.rows[k].beta_trace);
    CHECK(rows[k].trace_gap == a.rows[k].trace_gap);
    CHECK(rows[k].interior_gap == a.rows[k].interior_gap);
    CHECK(rows[k].layer_gap == a.rows[k].layer_gap);
    CHECK(rows[k].iterations == a.rows[k].iterations);
    CHECK(rows[k].converged == a.rows[k].converged);
    CHECK(rows[k].non_monotone == a.rows[k].non_monotone);
  }

  std::ostringstream js;
  write_report_json(js, a);
  CHECK(js.str().find("\"git_describe\"") != std::string::npos);
  CHECK(js.str().find("\"wall_seconds\"") != std::string::npos);
  CHECK(sa.str().find("wall") == std::string::npos);
}

TEST_CASE("empty report") {
  ConvergenceReport r;
  std::ostringstream os;
  write_report_csv(os, r);
  CHECK(os.str() ==
        "eps,l2_error,grad_norm,beta_trace,trace_gap,interior_gap,layer_gap,iterations,converged,non_monotone\n");
  std::istringstream in(os.str());
  CHECK(read_report_csv(in).empty());
  std::istringstream junk("a,b\n1,2\n");
  CHECK_THROWS_AS(read_report_csv(junk), ConfigError);
}

TEST_CASE("sweep validation") {
  SweepConfig c;
  c.eps_list = {0.25, 0.25};
  CHECK_THROWS_AS(sweep(c), ConfigError);
  c.eps_list = {};
  CHECK_THROWS_AS(sweep(c), ConfigError);
}
