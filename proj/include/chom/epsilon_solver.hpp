#pragma once

#include "chom/fem/assembly.hpp"
#include "chom/fem/field.hpp"
#include "chom/fem/mesh.hpp"
#include "chom/monotone_graph.hpp"
#include "chom/scale_config.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <vector>

namespace chom {

struct EpsCondensed;

/// Discrete Signorini problem on the epsilon mesh:
///   minimize 1/2 u'Au - F'u + sum_i beta m_i Sigma(u_i)
/// over u >= 0 on obstacle nodes, u = 0 on Gamma_2, m the lumped obstacle mass.
struct VIProblem {
  std::shared_ptr<const fem::Mesh> mesh;
  fem::SparseMatrix A;
  fem::Vector F;
  fem::Vector mass;       ///< lumped boundary mass on the obstacle segments
  MonotoneGraph sigma = MonotoneGraph::linear(0.0);  ///< kinetic on u >= 0; the constraint supplies the rest
  double log_beta = 0.0;
  double beta = 1.0;

  std::vector<int> obstacle;  ///< obstacle nodes
  std::vector<int> interior;  ///< non-Dirichlet nodes off the obstacles

  /// Schur complement onto the obstacle nodes, built by make_vi_problem.
  std::shared_ptr<const EpsCondensed> condensed;
};

/// Builds the mesh and assembles. `sigma` must be single valued on [0, inf);
/// a Signorini-extension graph contributes its inner function.
VIProblem make_vi_problem(const ScaleConfig& cfg, const MonotoneGraph& sigma,
                          const fem::Source& f, const fem::Grading& grading = {});
VIProblem make_vi_problem(std::shared_ptr<const fem::Mesh> mesh, const ScaleConfig& cfg,
                          const MonotoneGraph& sigma, const fem::Source& f);

struct EpsOptions {
  double tol = 1e-9;         ///< KKT tolerance relative to max |F|
  int max_sweeps = 100000;
  int polish_every = 20;     ///< sweeps between active-set Newton attempts
  int stagnation_window = 2000;
};

struct EpsDiagnostics {
  int sweeps = 0;
  int newton_polishes = 0;         ///< accepted active-set Newton steps
  bool converged = false;
  double complementarity = 0.0;    ///< max |min(u_i, r_i)| over obstacle nodes
  double min_flux = 0.0;           ///< min r_i over obstacle nodes
  double min_obstacle_value = 0.0; ///< min u_i over obstacle nodes
  double interior_residual = 0.0;  ///< max |(Au - F)_i| off the obstacles
  double load_scale = 0.0;         ///< max |F|
  int active_nodes = 0;            ///< obstacle nodes with u = 0
  std::vector<double> energy;      ///< J after each sweep or accepted polish
};

struct EpsSolution {
  fem::Field u;
  EpsDiagnostics diagnostics;
};

/// Projected nonlinear Gauss-Seidel on the obstacle nodes after static
/// condensation of the rest, with periodic active-set Newton polishing.
/// `initial` is a full nodal vector; it is projected onto the constraint set.
EpsSolution solve_eps(const VIProblem& p, const EpsOptions& opts = {},
                      const std::optional<Eigen::VectorXd>& initial = {});

/// Newton solve of the equation Au - F + beta m sigma(u) = 0 with no
/// constraint; sigma is evaluated on both signs through its inner function.
fem::Field solve_unconstrained(const VIProblem& p, double tol = 1e-13, int max_iter = 100);

/// J(u) for a full nodal vector.
double energy(const VIProblem& p, const Eigen::VectorXd& u);
/// Nodal discrete flux r = Au - F + beta m sigma(u) on the obstacle nodes.
Eigen::VectorXd obstacle_flux(const VIProblem& p, const Eigen::VectorXd& u);

struct EnergyAndTraces {
  double grad_norm = 0.0;           ///< |grad u|_{L2}
  double obstacle_l2 = 0.0;         ///< |u|_{L2(l_eps)}
  double beta_obstacle_sq = 0.0;    ///< beta |u|^2_{L2(l_eps)}
  std::vector<fem::TracePoint> trace;    ///< u on Gamma_1, sorted by x
};
EnergyAndTraces energy_and_traces(const VIProblem& p, const fem::Field& u);

} // namespace chom
