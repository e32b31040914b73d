#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chom {

/// Closed interval value of a set-valued map, possibly empty or unbounded.
struct GraphValue {
  double lower = 0.0;
  double upper = 0.0;
  bool empty = false;

  static GraphValue none() { return {0.0, 0.0, true}; }
  static GraphValue point(double v) { return {v, v, false}; }
  static GraphValue interval(double lo, double hi) { return {lo, hi, false}; }

  bool is_point() const { return !empty && lower == upper; }
  bool contains(double x, double slack = 0.0) const {
    return !empty && x >= lower - slack && x <= upper + slack;
  }
};

/// Optional growth constants of a function graph:
///   k1 |s - t| <= |sigma(s) - sigma(t)| <= K1 |s - t|^rho1 + K2 |s - t|^rho2.
/// A missing k1 means no lower bound is claimed.
struct RegularityConstants {
  std::optional<double> k1;
  double K1 = 0.0;
  double rho1 = 1.0;
  double K2 = 0.0;
  double rho2 = 1.0;
};

namespace detail {
struct GraphNode;
}

/// Maximal monotone graph of the plane. Immutable; cheap to copy.
class MonotoneGraph {
public:
  enum class Kind {
    SmoothFunction,
    PiecewiseFunction,
    SignoriniExtension,
    Dirichlet,
    FinitePermeability,
    Inverse,
  };

  using ScalarFn = std::function<double(double)>;

  /// sigma(s) = mu s.
  static MonotoneGraph linear(double mu);
  /// sigma(s) = mu s + s^3; C^1 with sigma' >= mu.
  static MonotoneGraph cubic(double mu);
  /// Odd extension of sqrt(s).
  static MonotoneGraph sqrt_odd();
  /// sqrt(s) on [0, s0], sqrt(s0) + (s - s0)^2 beyond, extended oddly.
  static MonotoneGraph sqrt_then_quadratic(double s0);
  /// A continuous nondecreasing function on the whole line with sigma(0) = 0.
  /// `slope` and `primitive` may be empty; `kinks` lists abscissae where the
  /// derivative does not exist.
  static MonotoneGraph function(std::string name, Kind kind, ScalarFn value, ScalarFn slope,
                                ScalarFn primitive, std::vector<double> kinks,
                                std::optional<RegularityConstants> regularity = {});
  /// inner on (0, inf), (-inf, 0] at 0, empty for s < 0.
  static MonotoneGraph signorini(const MonotoneGraph& inner);
  /// Domain {0}, value the whole line.
  static MonotoneGraph dirichlet();
  /// inner on (0, inf), mu s on (-inf, 0].
  static MonotoneGraph finite_permeability(double mu, const MonotoneGraph& inner);

  /// Parses a preset: "linear:mu", "cubic:mu", "sqrt", "sqrt-then-quadratic:s0",
  /// "signorini:<inner>", "dirichlet", "finite-perm:mu:<inner>".
  static MonotoneGraph parse(std::string_view spec);

  Kind kind() const;
  const std::string& name() const;

  /// Closed domain [domain_lower, domain_upper]; ends may be infinite.
  double domain_lower() const;
  double domain_upper() const;
  /// -1 if s lies left of the domain, +1 if right of it, 0 inside.
  int domain_side(double s) const;

  GraphValue eval(double s) const;
  /// Derivative where the graph is a differentiable function near s.
  std::optional<double> slope(double s) const;
  /// True when the graph is single valued on the whole line.
  bool is_function() const;
  std::span<const double> kinks() const;
  const std::optional<RegularityConstants>& regularity() const;
  /// Wrapped function graph of signorini / finite-permeability kinds.
  std::optional<MonotoneGraph> inner() const;
  /// Permeability coefficient of the finite-permeability kind.
  std::optional<double> permeability() const;
  /// Convex potential with primitive(0) = 0; throws DomainError outside the domain.
  double primitive(double s) const;

private:
  explicit MonotoneGraph(std::shared_ptr<const detail::GraphNode> node);
  std::shared_ptr<const detail::GraphNode> node_;

  friend MonotoneGraph inverse(const MonotoneGraph& g);
};

inline GraphValue eval(const MonotoneGraph& g, double s) { return g.eval(s); }

/// Reflection of the graph across the diagonal.
MonotoneGraph inverse(const MonotoneGraph& g);

/// Default absolute tolerance of the scalar resolvent solve.
inline constexpr double kResolventTol = 1e-12;

/// (I + c sigma)^{-1}(u): the unique v with u in v + c sigma(v).
/// Throws NumericalFailure if the bracket does not close in 200 steps.
double resolvent(const MonotoneGraph& g, double c, double u, double tol = kResolventTol);

inline double primitive(const MonotoneGraph& g, double s) { return g.primitive(s); }

/// Adaptive Simpson quadrature of f over [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 50);

} // namespace chom
