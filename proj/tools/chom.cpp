// Command line front end: strange-term, cell, solve-eps, solve-hom, sweep.

#include "chom/cell_problems.hpp"
#include "chom/convergence_lab.hpp"
#include "chom/epsilon_solver.hpp"
#include "chom/errors.hpp"
#include "chom/homogenized_solver.hpp"
#include "chom/sources.hpp"
#include "chom/strange_term.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

using namespace chom;
using nlohmann::json;

namespace {

struct ProblemFlags {
  std::string eps = "1/4";
  double alpha = 0.70710678118654752;
  std::optional<double> alpha2;
  double c0 = 1.0;
  double l0 = 0.25;
  double l = 1.0;
  double height = 1.0;
  std::string sigma = "linear:1";
  std::string f = "sign-changing";
  std::string out;

  void add_to(CLI::App* app) {
    app->add_option("--eps", eps, "period, fractions like 1/6 allowed")->capture_default_str();
    app->add_option("--alpha", alpha, "alpha")->capture_default_str();
    app->add_option("--alpha2", alpha2, "alpha^2, overrides --alpha");
    app->add_option("--c0", c0, "obstacle size constant")->capture_default_str();
    app->add_option("--l0", l0, "unit obstacle half-length")->capture_default_str();
    app->add_option("--l", l, "half-width of the bottom side")->capture_default_str();
    app->add_option("--height", height, "rectangle height")->capture_default_str();
    app->add_option("--sigma", sigma, "kinetic graph preset")->capture_default_str();
    app->add_option("--f", f, "source preset: zero, constant[:c], bump[:a], sign-changing[:a]")
        ->capture_default_str();
    app->add_option("--out", out, "output stem; writes <stem>.csv and <stem>.json")->required();
  }

  double resolved_alpha() const {
    if (!alpha2) return alpha;
    if (!(*alpha2 > 0.0)) throw ConfigError("--alpha2 must be positive");
    return std::sqrt(*alpha2);
  }

  ScaleConfig config() const {
    ScaleConfig c;
    c.eps = parse_number(eps);
    c.alpha = resolved_alpha();
    c.C0 = c0;
    c.l0 = l0;
    c.l = l;
    c.height = height;
    c.validate();
    return c;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  return os;
}

json config_json(const ScaleConfig& c) {
  return {{"n", c.n}, {"eps", c.eps}, {"C0", c.C0}, {"alpha", c.alpha},
          {"l0", c.l0}, {"l", c.l},   {"height", c.height}};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  return out;
}

int run_strange_term(const std::string& sigma_spec, int dim, double alpha, double c0, double l0,
                     double umin, double umax, int points, double rt, const std::string& out) {
  ScaleConfig c;
  c.n = dim;
  c.C0 = c0;
  c.alpha = alpha;
  c.l0 = l0;
  c.eps = dim == 2 ? 0.25 : 0.1;
  c.validate();
  const MonotoneGraph sigma = MonotoneGraph::parse(sigma_spec);
  std::shared_ptr<const cell::CellSolver> cell;
  if (dim == 3) cell = std::make_shared<const cell::CellSolver>(cell::CellConfig{rt});
  const KineticLaw law = kinetic_law(sigma, c, cell);
  if (points < 2 || !(umax > umin)) throw ConfigError("need --points >= 2 and --umax > --umin");

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    file = open_out(out);
    os = &file;
  }
  os->precision(17);
  *os << "# sigma: " << law.graph_name() << "\n# dim: " << dim << "\n# provenance: "
      << to_string(law.provenance()) << "\n# prefactor: " << law.prefactor()
      << "\n# lambda: " << law.lambda() << "\n# negative_slope: " << law.negative_slope() << "\n";
  *os << "u,H,g\n";
  for (int k = 0; k < points; ++k) {
    const double u = umin + (umax - umin) * k / (points - 1);
    *os << u << ',' << law.H_exact(u) << ',' << law.g_exact(u) << '\n';
  }
  return 0;
}

int run_cell(const std::string& radii_text, int angular, const std::string& sigma_spec, double c0,
             double u, const std::string& samples) {
  const auto radii = parse_list(radii_text);
  const cell::LambdaTable t = cell::lambda_table(radii, angular);
  std::cout.precision(12);
  std::cout << "R_t,lambda\n";
  for (std::size_t k = 0; k < radii.size(); ++k) std::cout << t.radii[k] << ',' << t.lambdas[k] << '\n';
  if (radii.size() == 3) {
    std::cout << "# extrapolated: " << t.extrapolated.value << "\n# last_pair: " << t.extrapolated.last_pair
              << "\n# last_step_change: " << t.extrapolated.last_step_change << '\n';
  }
  if (!samples.empty()) {
    const cell::CellSolver solver(cell::CellConfig{radii.front(), angular});
    const MonotoneGraph sigma = MonotoneGraph::parse(sigma_spec);
    const auto& kappa = solver.solve_kappa().field;
    const cell::WhatSolution w = solver.solve_what(sigma, c0, u);
    auto os = open_out(samples);
    os << "r,z,kappa,w\n";
    const auto& v = solver.mesh().mesh.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      os << v[i][0] << ',' << v[i][1] << ',' << kappa.values[Eigen::Index(i)] << ','
         << w.field.values[Eigen::Index(i)] << '\n';
    }
  }
  return 0;
}

int run_solve_eps(const ProblemFlags& fl) {
  const ScaleConfig c = fl.config();
  const SourcePreset src = parse_source(fl.f, {c.l, c.height});
  const auto start = std::chrono::steady_clock::now();
  const VIProblem p = make_vi_problem(c, MonotoneGraph::parse(fl.sigma), src.f);
  const EpsSolution s = solve_eps(p);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const EnergyAndTraces et = energy_and_traces(p, s.u);
  const auto& d = s.diagnostics;

  auto csv = open_out(fl.out + ".csv");
  fem::write_field_csv(csv, s.u);
  json j = {{"config", config_json(c)},
            {"sigma", fl.sigma},
            {"source", fl.f},
            {"source_origin", "toolkit preset"},
            {"nodes", p.mesh->num_nodes()},
            {"obstacle_nodes", p.obstacle.size()},
            {"log_beta", p.log_beta},
            {"converged", d.converged},
            {"sweeps", d.sweeps},
            {"newton_polishes", d.newton_polishes},
            {"complementarity", d.complementarity},
            {"min_flux", d.min_flux},
            {"min_obstacle_value", d.min_obstacle_value},
            {"interior_residual", d.interior_residual},
            {"load_scale", d.load_scale},
            {"active_nodes", d.active_nodes},
            {"energy", d.energy.empty() ? 0.0 : d.energy.back()},
            {"grad_norm", et.grad_norm},
            {"beta_obstacle_sq", et.beta_obstacle_sq},
            {"wall_seconds", seconds}};
  auto js = open_out(fl.out + ".json");
  js << j.dump(2) << '\n';
  std::cout << (d.converged ? "converged" : "NOT converged") << " in " << d.sweeps << " sweeps, "
            << p.mesh->num_nodes() << " nodes\n";
  return d.converged ? 0 : 1;
}

int run_solve_hom(const ProblemFlags& fl, const std::string& law_spec, int nx, double rt) {
  const ScaleConfig c = fl.config();
  const fem::RectDomain domain{c.l, c.height};
  const SourcePreset src = parse_source(fl.f, domain);
  const MonotoneGraph sigma = MonotoneGraph::parse(fl.sigma);
  std::shared_ptr<const KineticLaw> law;
  if (law_spec == "auto-2d") {
    law = std::make_shared<const KineticLaw>(kinetic_law(sigma, c));
  } else if (law_spec == "cell-3d") {
    ScaleConfig c3 = c;
    c3.n = 3;
    c3.eps = 0.1;
    auto cell = std::make_shared<const cell::CellSolver>(cell::CellConfig{rt});
    law = std::make_shared<const KineticLaw>(kinetic_law(sigma, c3, cell));
  } else if (law_spec.rfind("linear:", 0) == 0) {
    law = std::make_shared<const KineticLaw>(KineticLaw::linear(parse_number(law_spec.substr(7))));
  } else {
    throw ConfigError("unknown --law '" + law_spec + "'");
  }
  const int ny = std::max(1, int(std::lround(nx * c.height / (2.0 * c.l))));
  auto mesh = std::make_shared<const fem::Mesh>(fem::build_uniform_mesh(domain, nx, ny));
  const HomSolution s = solve_hom(make_hom_problem(mesh, law, src.f));
  const auto& d = s.diagnostics;

  auto csv = open_out(fl.out + ".csv");
  fem::write_field_csv(csv, s.u);
  json j = {{"config", config_json(c)},
            {"sigma", fl.sigma},
            {"source", fl.f},
            {"source_origin", "toolkit preset"},
            {"law", law_spec},
            {"provenance", to_string(law->provenance())},
            {"prefactor", law->prefactor()},
            {"lambda", law->lambda()},
            {"nodes", mesh->num_nodes()},
            {"converged", d.converged},
            {"path", to_string(d.path)},
            {"newton_iterations", d.newton_iterations},
            {"picard_iterations", d.picard_iterations},
            {"residual", d.residual},
            {"source_total", d.source_total},
            {"robin_total", d.robin_total},
            {"dirichlet_total", d.dirichlet_total}};
  auto js = open_out(fl.out + ".json");
  js << j.dump(2) << '\n';
  std::cout << (d.converged ? "converged" : "NOT converged") << " via " << to_string(d.path) << '\n';
  return d.converged ? 0 : 1;
}

int run_sweep(const std::string& config_path, const ProblemFlags& fl, int workers) {
  SweepConfig cfg;
  if (!config_path.empty()) {
    cfg = load_sweep_config(config_path);
  } else {
    cfg.base.alpha = fl.resolved_alpha();
    cfg.base.C0 = fl.c0;
    cfg.base.l0 = fl.l0;
    cfg.base.l = fl.l;
    cfg.base.height = fl.height;
    cfg.eps_list = parse_list(fl.eps);
    cfg.source = fl.f;
    cfg.sigma = fl.sigma;
  }
  if (workers >= 0) cfg.workers = workers;
  const ConvergenceReport r = sweep(cfg);
  report_emit(r, fl.out);
  write_report_csv(std::cout, r);
  return r.all_converged() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary homogenization with critical-size obstacles"};
  app.require_subcommand(1);

  auto* st = app.add_subcommand("strange-term", "tabulate the homogenized kinetic H and g");
  std::string st_sigma = "linear:1", st_out;
  int st_dim = 2, st_points = 201;
  double st_alpha = 0.70710678118654752, st_c0 = 1.0, st_l0 = 0.25, st_umin = -2.0, st_umax = 2.0, st_rt = 16.0;
  st->add_option("--sigma", st_sigma, "kinetic graph preset")->capture_default_str();
  st->add_option("--dim", st_dim, "2 or 3")->check(CLI::IsMember({2, 3}))->capture_default_str();
  st->add_option("--alpha", st_alpha, "alpha (dim 2)")->capture_default_str();
  st->add_option("--c0", st_c0)->capture_default_str();
  st->add_option("--l0", st_l0)->capture_default_str();
  st->add_option("--umin", st_umin)->capture_default_str();
  st->add_option("--umax", st_umax)->capture_default_str();
  st->add_option("--points", st_points)->capture_default_str();
  st->add_option("--rt", st_rt, "cell truncation radius (dim 3)")->capture_default_str();
  st->add_option("--out", st_out, "CSV path, stdout when absent");

  auto* ce = app.add_subcommand("cell", "capacity table and cell fields");
  std::string ce_radii = "8,16,32", ce_sigma = "linear:1", ce_samples;
  int ce_angular = 48;
  double ce_c0 = 1.0, ce_u = 1.0;
  ce->add_option("--radii", ce_radii, "truncation radii")->capture_default_str();
  ce->add_option("--angular-cells", ce_angular)->capture_default_str();
  ce->add_option("--sigma", ce_sigma)->capture_default_str();
  ce->add_option("--c0", ce_c0)->capture_default_str();
  ce->add_option("--u", ce_u, "value for the w field")->capture_default_str();
  ce->add_option("--samples", ce_samples, "CSV of kappa and w at the nodes of the first radius");

  auto* se = app.add_subcommand("solve-eps", "epsilon problem with obstacles");
  ProblemFlags se_flags;
  se_flags.add_to(se);

  auto* sh = app.add_subcommand("solve-hom", "homogenized problem");
  ProblemFlags sh_flags;
  sh_flags.add_to(sh);
  std::string sh_law = "auto-2d";
  int sh_nx = 160;
  double sh_rt = 16.0;
  sh->add_option("--law", sh_law, "auto-2d, cell-3d or linear:c")->capture_default_str();
  sh->add_option("--nx", sh_nx, "cells across the width")->capture_default_str();
  sh->add_option("--rt", sh_rt, "cell truncation radius for cell-3d")->capture_default_str();

  auto* sw = app.add_subcommand("sweep", "epsilon sweep against the homogenized limit");
  ProblemFlags sw_flags;
  sw_flags.eps = "1/4,1/6,1/8,1/10";
  sw_flags.add_to(sw);
  std::string sw_config;
  int sw_workers = -1;
  sw->add_option("--config", sw_config, "key = value file; replaces the problem flags");
  sw->add_option("--workers", sw_workers, "worker threads, 0 for all cores");

  CLI11_PARSE(app, argc, argv);
  try {
    if (st->parsed()) {
      return run_strange_term(st_sigma, st_dim, st_alpha, st_c0, st_l0, st_umin, st_umax, st_points, st_rt,
                              st_out);
    }
    if (ce->parsed()) return run_cell(ce_radii, ce_angular, ce_sigma, ce_c0, ce_u, ce_samples);
    if (se->parsed()) return run_solve_eps(se_flags);
    if (sh->parsed()) return run_solve_hom(sh_flags, sh_law, sh_nx, sh_rt);
    if (sw->parsed()) return run_sweep(sw_config, sw_flags, sw_workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
