// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "chom/cell_problems.hpp"
#include "chom/convergence_lab.hpp"
#include "chom/epsilon_solver.hpp"
#include "chom/homogenized_solver.hpp"
#include "chom/sources.hpp"
#include "chom/strange_term.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace chom;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<std::string>& preset_graphs() {
  static const std::vector<std::string> g{"linear:0.5",  "linear:1",           "linear:4",
                                          "sqrt",        "sqrt-then-quadratic:1", "signorini:sqrt",
                                          "dirichlet",   "finite-perm:2:sqrt"};
  return g;
}

Outcome kinetic_law_suite() {
  Outcome o;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-10.0, 10.0);
  std::uniform_int_distribution<int> pick(0, 1999);
  auto cell = std::make_shared<const cell::CellSolver>();
  ScaleConfig c2, c3;
  c3.n = 3;
  c3.eps = 0.1;
  double worst = 0.0;
  int checked = 0;
  for (int dim : {2, 3}) {
    for (const auto& name : preset_graphs()) {
      const KineticLaw law = kinetic_law(MonotoneGraph::parse(name), dim == 2 ? c2 : c3,
                                         dim == 3 ? cell : nullptr);
      if (law.H_exact(0.0) != 0.0) {
        o.pass = false;
        o.detail += " H(0)!=0 for " + name;
      }
      // Exact values on a pool of points; pairs are drawn from the pool.
      std::vector<double> u(2000), h(2000);
      for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] = U(rng);
        h[k] = law.H_exact(u[k]);
      }
      for (int k = 0; k < 10000; ++k) {
        const int a = pick(rng), b = pick(rng);
        if (u[std::size_t(a)] == u[std::size_t(b)]) continue;
        const double q = (h[std::size_t(a)] - h[std::size_t(b)]) / (u[std::size_t(a)] - u[std::size_t(b)]);
        ++checked;
        worst = std::max(worst, std::max(-q, q - law.lambda()));
        if (q < 0.0 || q > law.lambda() + 1e-8) {
          if (o.pass) o.detail += " violation for " + name + " dim " + std::to_string(dim);
          o.pass = false;
        }
      }
    }
  }
  o.detail = std::to_string(checked) + " pairs over 16 laws, worst excess " + fmt("%.2e", worst) + o.detail;
  return o;
}

// pi H = K sigma(u - H), K = 2 l0 alpha^2 C0, solved by bisection on H with
// interval membership where sigma is multivalued.
double h_by_bisection(const MonotoneGraph& sigma, double K, double u) {
  double lo = std::min(0.0, u), hi = std::max(0.0, u);
  for (int it = 0; it < 300 && hi - lo > 0.0; ++it) {
    const double H = 0.5 * (lo + hi);
    if (H == lo || H == hi) break;
    const GraphValue v = sigma.eval(u - H);
    const double lhs = std::numbers::pi * H;
    if (v.empty) {
      // u - H left of the domain means H is too large.
      (sigma.domain_side(u - H) < 0 ? hi : lo) = H;
    } else if (lhs < K * v.lower) {
      lo = H;
    } else if (lhs > K * v.upper) {
      hi = H;
    } else {
      return H;
    }
  }
  return 0.5 * (lo + hi);
}

Outcome resolvent_identity() {
  Outcome o;
  const ScaleConfig c;
  const double K = 2.0 * c.l0 * c.alpha * c.alpha * c.C0;
  double worst = 0.0;
  for (const auto& name : preset_graphs()) {
    const auto sigma = MonotoneGraph::parse(name);
    for (int k = 0; k < 1000; ++k) {
      const double u = -10.0 + 20.0 * k / 999.0;
      const double a = h2d(sigma, c.l0, c.alpha, c.C0, u);
      const double b = h_by_bisection(sigma, K, u);
      worst = std::max(worst, std::abs(a - b));
    }
  }
  o.pass = worst <= 1e-9;
  o.detail = "max |resolvent form - root finding| = " + fmt("%.2e", worst) + " over 8 graphs x 1000 points";
  return o;
}

Outcome cell_capacity() {
  const cell::LambdaTable t = cell::lambda_table({8.0, 16.0, 32.0}, 48);
  Outcome o;
  const double rel = std::abs(t.extrapolated.value - 4.0) / 4.0;
  o.pass = rel <= 0.02;
  std::ostringstream os;
  os.precision(6);
  os << "lambda(8,16,32) = " << t.lambdas[0] << ", " << t.lambdas[1] << ", " << t.lambdas[2]
     << "; extrapolated " << t.extrapolated.value << " (" << fmt("%.3f", 100 * rel) << "% from 4)"
     << "; last step change " << fmt("%.3f", 100 * t.extrapolated.last_step_change) << "%";
  o.detail = os.str();
  return o;
}

Outcome cell_sandwiches() {
  Outcome o;
  const cell::CellSolver s;
  const auto& kappa = s.solve_kappa().field.values;
  double worst_bound = 0.0, worst_fd = 0.0;
  if (kappa.minCoeff() < 0.0 || kappa.maxCoeff() > 1.0) o.pass = false;
  for (const char* name : {"linear:1", "cubic:1"}) {
    const auto sigma = MonotoneGraph::parse(name);
    for (double u : {-2.0, 1.0, 3.0}) {
      const auto w = s.solve_what(sigma, 1.0, u).field.values;
      const auto W = s.solve_wcap(sigma, 1.0, u).values;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        worst_bound = std::max(worst_bound, std::abs(w[i]) - std::abs(u) * kappa[i]);
        worst_bound = std::max({worst_bound, -W[i], W[i] - kappa[i]});
      }
      const double h = 1e-5;
      const auto w1 = s.solve_what(sigma, 1.0, u + h).field.values;
      worst_fd = std::max(worst_fd, s.l2_norm((w1 - w) / h - W));
    }
  }
  // Nodal bounds hold up to roundoff of the solves.
  o.pass = o.pass && worst_bound <= 1e-12 && worst_fd <= 1e-4;
  o.detail = "kappa in [" + fmt("%.3g", kappa.minCoeff()) + ", " + fmt("%.3g", kappa.maxCoeff()) +
             "], worst nodal bound excess " + fmt("%.2e", worst_bound) + ", worst FD gap " + fmt("%.2e", worst_fd);
  return o;
}

Outcome eps_kkt() {
  Outcome o;
  double worst_comp = 0.0, worst_feas = 0.0, slowest = 0.0;
  int solves = 0, failures = 0, energy_rises = 0;
  for (double eps : {0.25, 1.0 / 6.0, 0.125, 0.1}) {
    for (const char* sigma : {"linear:1", "sqrt", "cubic:1", "signorini:sqrt"}) {
      for (const char* f : {"sign-changing:5", "constant"}) {
        ScaleConfig c;
        c.eps = eps;
        const auto t0 = Clock::now();
        const VIProblem p = make_vi_problem(c, MonotoneGraph::parse(sigma), parse_source(f, {c.l, c.height}).f);
        const EpsSolution s = solve_eps(p);
        slowest = std::max(slowest, seconds_since(t0));
        ++solves;
        const auto& d = s.diagnostics;
        if (!d.converged) {
          ++failures;
          continue;
        }
        worst_comp = std::max(worst_comp, d.complementarity / d.load_scale);
        worst_feas = std::max(worst_feas, -d.min_obstacle_value);
        for (std::size_t i = 0; i < p.mesh->num_nodes(); ++i) {
          if (p.mesh->on_gamma2[i]) worst_feas = std::max(worst_feas, std::abs(s.u.values[Eigen::Index(i)]));
        }
        for (std::size_t k = 1; k < d.energy.size(); ++k) {
          if (d.energy[k] > d.energy[k - 1]) ++energy_rises;
        }
      }
    }
  }
  o.pass = failures == 0 && worst_comp <= 1e-9 && worst_feas <= 1e-14 && energy_rises == 0 && slowest < 60.0;
  o.detail = std::to_string(solves) + " solves, " + std::to_string(failures) + " unconverged, complementarity/|F| " +
             fmt("%.2e", worst_comp) + ", infeasibility " + fmt("%.1e", worst_feas) + ", energy rises " +
             std::to_string(energy_rises) + ", slowest " + fmt("%.2f", slowest) + " s";
  return o;
}

Outcome linear_equivalence() {
  Outcome o;
  double worst_eps = 0.0, worst_hom = 0.0;
  for (double eps : {0.25, 1.0 / 6.0, 0.125, 0.1}) {
    for (double mu : {0.5, 1.0, 4.0}) {
      for (const char* f : {"constant", "bump:2"}) {
        ScaleConfig c;
        c.eps = eps;
        const VIProblem p = make_vi_problem(c, MonotoneGraph::linear(mu), parse_source(f, {c.l, c.height}).f);
        const EpsSolution s = solve_eps(p);
        const fem::Field ref = solve_unconstrained(p);
        const double gap = fem::l2_norm(fem::Field(p.mesh, s.u.values - ref.values));
        worst_eps = std::max(worst_eps, s.diagnostics.converged ? gap : INFINITY);
      }
    }
  }
  auto mesh = std::make_shared<const fem::Mesh>(fem::build_uniform_mesh({1.0, 1.0}, 160, 80));
  for (double c : {0.5, 2.0, 2.0 * std::numbers::pi}) {
    for (const char* f : {"constant", "sign-changing:5"}) {
      const HomProblem p = make_hom_problem(mesh, std::make_shared<const KineticLaw>(KineticLaw::linear(c)),
                                            parse_source(f, {1.0, 1.0}).f);
      const HomSolution s = solve_hom(p);
      const fem::Field ref = solve_linear_robin(p, c);
      const double gap = (s.u.values - ref.values).cwiseAbs().maxCoeff();
      worst_hom = std::max(worst_hom, s.diagnostics.converged ? gap : INFINITY);
    }
  }
  o.pass = worst_eps <= 1e-8 && worst_hom <= 1e-10;
  o.detail = "eps-solver vs unconstrained Newton L2 gap " + fmt("%.2e", worst_eps) +
             ", homogenized vs direct Robin max gap " + fmt("%.2e", worst_hom);
  return o;
}

Outcome convergence_trend() {
  SweepConfig cfg;  // alpha^2 = 1/2, C0 = 1, l0 = 1/4, eps 1/4 .. 1/10, sign-changing source
  const ConvergenceReport r = sweep(cfg);
  Outcome o;
  const auto& rows = r.rows;
  bool decreasing = true, bounded = true;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    decreasing = decreasing && rows[k].l2_error < rows[k - 1].l2_error;
    bounded = bounded && rows[k].grad_norm <= 1.2 * rows[0].grad_norm &&
              rows[k].beta_trace <= 1.2 * rows[0].beta_trace;
  }
  const bool halved = rows.back().l2_error < 0.5 * rows.front().l2_error;
  o.pass = r.all_converged() && decreasing && halved && bounded;
  std::ostringstream os;
  os << "source " << cfg.source << ", L2 errors";
  for (const auto& row : rows) os << ' ' << fmt("%.3e", row.l2_error);
  os << "; final/first " << fmt("%.3f", rows.back().l2_error / rows.front().l2_error);
  double g = 0.0, b = 0.0;
  for (const auto& row : rows) {
    g = std::max(g, row.grad_norm / rows[0].grad_norm);
    b = std::max(b, row.beta_trace / rows[0].beta_trace);
  }
  os << "; max grad ratio " << fmt("%.3f", g) << ", max beta-trace ratio " << fmt("%.3f", b);
  o.detail = os.str();
  return o;
}

Outcome explicit_formulas() {
  Outcome o;
  double worst = 0.0;
  for (double eps : {0.25, 0.1}) {
    for (double a : {1e-3, 1e-2, 0.05}) {
      if (!(a < eps / 4.0)) continue;
      worst = std::max(worst, std::abs(cell::log_cell_2d(std::sqrt(a * eps / 4.0), eps, a) - 0.5));
      const double top = std::sinh(std::sqrt((eps / a) * (eps / a) - 1.0));
      worst = std::max(worst, std::abs(cell::prolate_v(0.0, eps, a)));
      worst = std::max(worst, std::abs(cell::prolate_v(top, eps, a) - 1.0));
    }
  }
  o.pass = worst <= 1e-12;
  o.detail = "max deviation " + fmt("%.2e", worst);
  return o;
}

} // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;
  };
  const std::vector<Criterion> all{
      {"kinetic-law Lipschitz sandwich", kinetic_law_suite, 10.0},
      {"resolvent identity", resolvent_identity, 5.0},
      {"cell capacity", cell_capacity, 120.0},
      {"cell sandwiches", cell_sandwiches, 120.0},
      {"eps-solver KKT", eps_kkt, 60.0 * 32},
      {"linear-sigma equivalence", linear_equivalence, 600.0},
      {"convergence trend", convergence_trend, 1800.0},
      {"explicit-formula oracles", explicit_formulas, 5.0},
  };
  int failed = 0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = all[k].run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double t = seconds_since(t0);
    const bool in_time = t < all[k].limit_seconds;
    const bool ok = o.pass && in_time;
    failed += ok ? 0 : 1;
    std::printf("[%s] %zu %s: %s (%.2f s of %.0f s)\n", ok ? "PASS" : "FAIL", k + 1, all[k].name, o.detail.c_str(), t,
                all[k].limit_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
