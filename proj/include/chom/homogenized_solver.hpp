#pragma once

#include "chom/fem/assembly.hpp"
#include "chom/fem/field.hpp"
#include "chom/fem/mesh.hpp"
#include "chom/strange_term.hpp"

#include <memory>
#include <string>
#include <vector>

namespace chom {

/// -Lap u = f in the rectangle, u = 0 on Gamma_2, du/dnu + g(u) = 0 on Gamma_1
/// with g the kinetic law, lumped on the boundary nodes.
struct HomProblem {
  std::shared_ptr<const fem::Mesh> mesh;
  std::shared_ptr<const KineticLaw> law;
  fem::SparseMatrix A;
  fem::Vector F;
  fem::Vector mass;        ///< lumped boundary mass on Gamma_1
  std::vector<int> free;   ///< non-Dirichlet nodes
};

/// Throws ConfigError if the law leaves the band 0 <= dH/du <= lambda on its table.
HomProblem make_hom_problem(std::shared_ptr<const fem::Mesh> mesh,
                            std::shared_ptr<const KineticLaw> law, const fem::Source& f);

struct HomOptions {
  double tol = 1e-13;       ///< residual tolerance relative to |F| + |A||u|
  int max_newton = 60;
  int max_picard = 20000;
};

enum class HomPath { Trivial, Newton, Picard };
std::string to_string(HomPath p);

struct HomDiagnostics {
  bool converged = false;
  HomPath path = HomPath::Trivial;
  int newton_iterations = 0;
  int picard_iterations = 0;
  double residual = 0.0;      ///< max |R(u)| at exit
  double source_total = 0.0;  ///< sum of F
  double robin_total = 0.0;   ///< sum of m g(u) over Gamma_1
  double dirichlet_total = 0.0;  ///< sum over Gamma_2 of (F - Au)
};

struct HomSolution {
  fem::Field u;
  HomDiagnostics diagnostics;
};

/// Damped Newton with secant slopes of g clamped to [1e-12 L, L], L the
/// Lipschitz constant of g; falls back to Picard with slope L / 2.
HomSolution solve_hom(const HomProblem& p, const HomOptions& opts = {});

/// Direct sparse solve of the linear Robin problem g(u) = c u on the same mesh.
fem::Field solve_linear_robin(const HomProblem& p, double c);

std::vector<fem::TracePoint> boundary_profile(const fem::Field& u);

} // namespace chom
