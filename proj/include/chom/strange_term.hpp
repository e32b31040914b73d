#pragma once

#include "chom/cell_problems.hpp"
#include "chom/monotone_graph.hpp"
#include "chom/scale_config.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace chom {

/// H(u) = u - (I + C sigma)^{-1}(u) with C = 2 l0 alpha^2 C0 / pi; the unique
/// solution of pi H = 2 l0 alpha^2 C0 sigma(u - H).
double h2d(const MonotoneGraph& sigma, double l0, double alpha, double C0, double u);

/// C0 times the integral of sigma(u - w(u)) over the disk, w the cell solution.
/// Signorini graphs give lambda u for u <= 0 and Dirichlet gives lambda u for
/// every u, without a solve.
double h3d(const MonotoneGraph& sigma, double C0, double u, const cell::CellSolver& cell);

enum class Provenance { Resolvent2d, Cell3d, LinearClosedForm };
std::string to_string(Provenance p);

struct LawOptions {
  double u_min = -10.0;
  double u_max = 10.0;
  int grid_points = 1025;  // odd, so u = 0 is a node on the default range
};

/// Homogenized boundary kinetic g(u) = prefactor * H(u), where H is the
/// strange term on u > 0 and the graph-dependent linear (or solved) branch on
/// u <= 0. Immutable; the memo table is filled at construction.
class KineticLaw {
public:
  using Exact = std::function<double(double)>;

  KineticLaw(Exact exact, double prefactor, double lambda, Provenance provenance,
             std::string graph_name, LawOptions opts = {});

  /// g(u) = c u.
  static KineticLaw linear(double c);

  /// Memoized H: piecewise-linear interpolation inside the grid, exact outside.
  double H(double u) const;
  double H_exact(double u) const { return exact_(u); }
  double g(double u) const { return prefactor_ * H(u); }
  double g_exact(double u) const { return prefactor_ * exact_(u); }

  double prefactor() const { return prefactor_; }
  /// Lipschitz ceiling of H.
  double lambda() const { return lambda_; }
  /// -H(-1): the coefficient of the linear negative branch when there is one.
  double negative_slope() const { return negative_slope_; }
  /// Lipschitz constant of g.
  double g_lipschitz() const { return prefactor_ * lambda_; }
  Provenance provenance() const { return provenance_; }
  const std::string& graph_name() const { return graph_name_; }
  double u_min() const { return opts_.u_min; }
  double u_max() const { return opts_.u_max; }
  const std::vector<double>& table() const { return table_; }

private:
  Exact exact_;
  double prefactor_;
  double lambda_;
  double negative_slope_ = 0.0;
  Provenance provenance_;
  std::string graph_name_;
  LawOptions opts_;
  double du_ = 0.0;
  std::vector<double> table_;
};

/// Boundary law for dimension cfg.n:
///   n = 2: prefactor pi / alpha^2, lambda 1, H(u) = h2d(u) for u > 0 and u otherwise.
///   n = 3: prefactor C0, lambda the capacity flux of the cell, H from h3d.
/// `cell` is required for n = 3 and ignored for n = 2.
KineticLaw kinetic_law(const MonotoneGraph& sigma, const ScaleConfig& cfg,
                       std::shared_ptr<const cell::CellSolver> cell = nullptr,
                       LawOptions opts = {});

} // namespace chom
