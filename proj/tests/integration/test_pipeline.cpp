#include "chom/convergence_lab.hpp"
#include "chom/homogenized_solver.hpp"
#include "chom/sources.hpp"
#include "chom/strange_term.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace chom;

TEST_CASE("nonlinear sweep approaches the homogenized limit") {
  for (const char* sigma : {"sqrt", "cubic:1", "signorini:linear:2"}) {
    CAPTURE(sigma);
    SweepConfig c;
    c.sigma = sigma;
    c.source = "sign-changing:5";
    const ConvergenceReport r = sweep(c);
    REQUIRE(r.all_converged());
    CHECK(r.rows.back().l2_error < 0.5 * r.rows.front().l2_error);
    for (const auto& row : r.rows) CHECK(row.grad_norm <= 1.2 * r.rows.front().grad_norm);
  }
}

TEST_CASE("emitted files read back") {
  SweepConfig c;
  c.eps_list = {0.25, 0.125};
  const ConvergenceReport r = sweep(c);
  const auto dir = std::filesystem::temp_directory_path() / "chom_pipeline_test";
  std::filesystem::create_directories(dir);
  report_emit(r, dir / "report");
  std::ifstream csv(dir / "report.csv");
  const auto rows = read_report_csv(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].l2_error == r.rows[1].l2_error);
  std::ifstream js(dir / "report.json");
  std::stringstream text;
  text << js.rdbuf();
  CHECK(text.str().find("\"rows\"") != std::string::npos);
  CHECK_THROWS(report_emit(r, dir / "missing" / "deeper" / "report"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("cell law drives a planar homogenized solve") {
  ScaleConfig c3;
  c3.n = 3;
  c3.eps = 0.1;
  auto cell = std::make_shared<const cell::CellSolver>();
  auto law = std::make_shared<const KineticLaw>(kinetic_law(MonotoneGraph::parse("signorini:sqrt"), c3, cell));
  auto mesh = std::make_shared<const fem::Mesh>(fem::build_uniform_mesh({1.0, 1.0}, 60, 30));
  const HomSolution s = solve_hom(make_hom_problem(mesh, law, parse_source("sign-changing:5", {1.0, 1.0}).f));
  REQUIRE(s.diagnostics.converged);
  const auto& d = s.diagnostics;
  CHECK(std::abs(d.source_total - d.robin_total - d.dirichlet_total) < 1e-8);
}
