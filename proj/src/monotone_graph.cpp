#include "chom/monotone_graph.hpp"

#include "chom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace chom {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

namespace detail {

struct GraphNode {
  MonotoneGraph::Kind kind;
  std::string name;
  std::vector<double> kinks;
  std::optional<RegularityConstants> regularity;

  GraphNode(MonotoneGraph::Kind k, std::string n) : kind(k), name(std::move(n)) {}
  virtual ~GraphNode() = default;

  virtual double lo() const { return -kInf; }
  virtual double hi() const { return kInf; }
  virtual GraphValue eval(double s) const = 0;
  virtual std::optional<double> slope(double s) const = 0;
  virtual std::optional<double> closed_primitive(double) const { return std::nullopt; }
  virtual bool is_function() const { return false; }
  virtual std::optional<MonotoneGraph> inner() const { return std::nullopt; }
  virtual std::optional<double> permeability() const { return std::nullopt; }

  int side(double s) const {
    if (s < lo()) return -1;
    if (s > hi()) return 1;
    return 0;
  }

  // Finite single-valued selection used by quadrature of the potential.
  double selection(double s) const {
    const GraphValue v = eval(s);
    if (v.empty) return 0.0;
    if (std::isfinite(v.lower) && std::isfinite(v.upper)) return 0.5 * (v.lower + v.upper);
    if (std::isfinite(v.upper)) return v.upper;
    if (std::isfinite(v.lower)) return v.lower;
    return 0.0;
  }
};

struct FunctionNode final : GraphNode {
  MonotoneGraph::ScalarFn f, df, prim;

  FunctionNode(std::string n, MonotoneGraph::Kind k, MonotoneGraph::ScalarFn value,
               MonotoneGraph::ScalarFn d, MonotoneGraph::ScalarFn p)
      : GraphNode(k, std::move(n)), f(std::move(value)), df(std::move(d)), prim(std::move(p)) {}

  GraphValue eval(double s) const override { return GraphValue::point(f(s)); }
  std::optional<double> slope(double s) const override {
    if (!df) return std::nullopt;
    const double d = df(s);
    if (!std::isfinite(d)) return std::nullopt;
    return d;
  }
  std::optional<double> closed_primitive(double s) const override {
    if (!prim) return std::nullopt;
    return prim(s);
  }
  bool is_function() const override { return true; }
};

struct SignoriniNode final : GraphNode {
  MonotoneGraph base;

  explicit SignoriniNode(MonotoneGraph g)
      : GraphNode(MonotoneGraph::Kind::SignoriniExtension, "signorini:" + g.name()),
        base(std::move(g)) {
    kinks = {0.0};
  }

  double lo() const override { return 0.0; }
  GraphValue eval(double s) const override {
    if (s < 0.0) return GraphValue::none();
    if (s == 0.0) return GraphValue::interval(-kInf, base.eval(0.0).upper);
    return base.eval(s);
  }
  std::optional<double> slope(double s) const override {
    if (s <= 0.0) return std::nullopt;
    return base.slope(s);
  }
  std::optional<double> closed_primitive(double s) const override {
    return base.primitive(s);
  }
  std::optional<MonotoneGraph> inner() const override { return base; }
};

struct DirichletNode final : GraphNode {
  DirichletNode() : GraphNode(MonotoneGraph::Kind::Dirichlet, "dirichlet") { kinks = {0.0}; }
  double lo() const override { return 0.0; }
  double hi() const override { return 0.0; }
  GraphValue eval(double s) const override {
    if (s != 0.0) return GraphValue::none();
    return GraphValue::interval(-kInf, kInf);
  }
  std::optional<double> slope(double) const override { return std::nullopt; }
  std::optional<double> closed_primitive(double) const override { return 0.0; }
};

struct FinitePermNode final : GraphNode {
  double mu;
  MonotoneGraph base;

  FinitePermNode(double m, MonotoneGraph g)
      : GraphNode(MonotoneGraph::Kind::FinitePermeability,
                  "finite-perm:" + std::to_string(m) + ":" + g.name()),
        mu(m), base(std::move(g)) {
    kinks = {0.0};
  }
  GraphValue eval(double s) const override {
    if (s > 0.0) return base.eval(s);
    return GraphValue::point(mu * s);
  }
  std::optional<double> slope(double s) const override {
    if (s > 0.0) return base.slope(s);
    if (s < 0.0) return mu;
    return std::nullopt;
  }
  std::optional<double> closed_primitive(double s) const override {
    if (s > 0.0) return base.primitive(s);
    return 0.5 * mu * s * s;
  }
  bool is_function() const override { return true; }
  std::optional<MonotoneGraph> inner() const override { return base; }
  std::optional<double> permeability() const override { return mu; }
};

struct InverseNode final : GraphNode {
  MonotoneGraph base;
  std::shared_ptr<const GraphNode> base_node;

  InverseNode(MonotoneGraph g, std::shared_ptr<const GraphNode> n)
      : GraphNode(MonotoneGraph::Kind::Inverse, "inverse:" + g.name()), base(std::move(g)),
        base_node(std::move(n)) {}

  // Smallest s in D(base) with upper(base(s)) >= t, or +inf if none.
  double first_reaching(double t) const {
    auto pred = [&](double s) {
      const GraphValue v = base.eval(s);
      return !v.empty && v.upper >= t;
    };
    return bisect_boundary(pred, /*left_true=*/false);
  }
  // Largest s in D(base) with lower(base(s)) <= t, or -inf if none.
  double last_below(double t) const {
    auto pred = [&](double s) {
      const GraphValue v = base.eval(s);
      return !v.empty && v.lower <= t;
    };
    return bisect_boundary(pred, /*left_true=*/true);
  }

  // Locates the switch point of a monotone predicate on D(base). With
  // left_true the predicate holds on a left piece and the supremum of that
  // piece is returned; otherwise it holds on a right piece and its infimum is
  // returned.
  template <class Pred>
  double bisect_boundary(const Pred& pred, bool left_true) const {
    double a = base.domain_lower();
    double b = base.domain_upper();
    auto probe_left = [&]() {
      if (std::isfinite(a)) return a;
      double x = std::isfinite(b) ? std::min(b, 0.0) : 0.0;
      double step = 1.0;
      // Push left until the predicate attains the value it has at -inf.
      for (int i = 0; i < 1100; ++i) {
        if (pred(x) == left_true) return x;
        x -= step;
        step *= 2.0;
        if (!std::isfinite(x)) break;
      }
      return -kInf;
    };
    auto probe_right = [&]() {
      if (std::isfinite(b)) return b;
      double x = std::isfinite(a) ? std::max(a, 0.0) : 0.0;
      double step = 1.0;
      for (int i = 0; i < 1100; ++i) {
        if (pred(x) != left_true) return x;
        x += step;
        step *= 2.0;
        if (!std::isfinite(x)) break;
      }
      return kInf;
    };
    const double L = probe_left();
    const double R = probe_right();
    if (left_true) {
      if (!std::isfinite(L) || !pred(L)) return -kInf;
      if (!std::isfinite(R)) return kInf;
      if (pred(R)) return R;
    } else {
      if (!std::isfinite(R) || !pred(R)) return kInf;
      if (!std::isfinite(L)) return -kInf;
      if (pred(L)) return L;
    }
    // Invariant: pred(lo) == left_true, pred(hi) != left_true.
    double lo = L, hi = R;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++i) {
      const double mid = 0.5 * (lo + hi);
      if (pred(mid) == left_true)
        lo = mid;
      else
        hi = mid;
    }
    // Snap to an exact kink or domain end if one lies in the final bracket.
    std::vector<double> snaps(base_node->kinks.begin(), base_node->kinks.end());
    snaps.push_back(base.domain_lower());
    snaps.push_back(base.domain_upper());
    for (double k : snaps) {
      if (std::isfinite(k) && k >= lo && k <= hi) return k;
    }
    return left_true ? lo : hi;
  }

  GraphValue eval(double t) const override {
    const double s_lo = first_reaching(t);
    const double s_hi = last_below(t);
    // t outside the range of the base graph: nothing reaches it.
    if (s_lo == kInf || s_hi == -kInf || !(s_lo <= s_hi)) return GraphValue::none();
    if (s_hi - s_lo <= 1e-12 * std::max(1.0, std::abs(s_lo))) {
      return GraphValue::point(0.5 * (s_lo + s_hi));
    }
    return GraphValue::interval(s_lo, s_hi);
  }

  double lo() const override {
    // Range of the base graph, probed at the ends of its domain.
    const double a = base.domain_lower();
    if (std::isfinite(a)) {
      const GraphValue v = base.eval(a);
      return v.empty ? -kInf : v.lower;
    }
    return -kInf;
  }
  double hi() const override {
    const double b = base.domain_upper();
    if (std::isfinite(b)) {
      const GraphValue v = base.eval(b);
      return v.empty ? kInf : v.upper;
    }
    return kInf;
  }

  std::optional<double> slope(double t) const override {
    const GraphValue v = eval(t);
    if (!v.is_point()) return std::nullopt;
    const auto d = base.slope(v.lower);
    if (!d || *d <= 0.0) return std::nullopt;
    return 1.0 / *d;
  }
};

} // namespace detail

MonotoneGraph::MonotoneGraph(std::shared_ptr<const detail::GraphNode> node)
    : node_(std::move(node)) {}

MonotoneGraph MonotoneGraph::function(std::string name, Kind kind, ScalarFn value, ScalarFn slope,
                                      ScalarFn primitive, std::vector<double> kinks,
                                      std::optional<RegularityConstants> regularity) {
  if (!value) throw ConfigError("function graph requires a value map");
  if (value(0.0) != 0.0) throw ConfigError("function graph must satisfy sigma(0) = 0");
  auto node = std::make_shared<detail::FunctionNode>(std::move(name), kind, std::move(value),
                                                     std::move(slope), std::move(primitive));
  node->kinks = std::move(kinks);
  node->regularity = regularity;
  return MonotoneGraph(std::move(node));
}

MonotoneGraph MonotoneGraph::linear(double mu) {
  if (!(mu >= 0.0)) throw ConfigError("linear graph needs mu >= 0");
  RegularityConstants reg;
  if (mu > 0.0) reg.k1 = mu;
  reg.K1 = mu;
  return function(
      "linear:" + std::to_string(mu), Kind::SmoothFunction, [mu](double s) { return mu * s; },
      [mu](double) { return mu; }, [mu](double s) { return 0.5 * mu * s * s; }, {}, reg);
}

MonotoneGraph MonotoneGraph::cubic(double mu) {
  if (!(mu > 0.0)) throw ConfigError("cubic graph needs mu > 0");
  RegularityConstants reg;
  reg.k1 = mu;
  reg.K1 = mu;
  reg.K2 = 1.0;
  reg.rho2 = 2.0;
  return function(
      "cubic:" + std::to_string(mu), Kind::SmoothFunction,
      [mu](double s) { return mu * s + s * s * s; },
      [mu](double s) { return mu + 3.0 * s * s; },
      [mu](double s) { return 0.5 * mu * s * s + 0.25 * s * s * s * s; }, {}, reg);
}

MonotoneGraph MonotoneGraph::sqrt_odd() {
  RegularityConstants reg;
  reg.K1 = std::sqrt(2.0);
  reg.rho1 = 0.5;
  return function(
      "sqrt", Kind::PiecewiseFunction,
      [](double s) { return std::copysign(std::sqrt(std::abs(s)), s); },
      [](double s) { return s == 0.0 ? kInf : 0.5 / std::sqrt(std::abs(s)); },
      [](double s) { return 2.0 / 3.0 * std::pow(std::abs(s), 1.5); }, {0.0}, reg);
}

MonotoneGraph MonotoneGraph::sqrt_then_quadratic(double s0) {
  if (!(s0 > 0.0)) throw ConfigError("sqrt-then-quadratic needs s0 > 0");
  const double r0 = std::sqrt(s0);
  auto positive = [s0, r0](double s) {
    return s <= s0 ? std::sqrt(s) : r0 + (s - s0) * (s - s0);
  };
  auto positive_slope = [s0](double s) {
    if (s == 0.0) return kInf;
    return s <= s0 ? 0.5 / std::sqrt(s) : 2.0 * (s - s0);
  };
  auto positive_prim = [s0, r0](double s) {
    if (s <= s0) return 2.0 / 3.0 * std::pow(s, 1.5);
    const double d = s - s0;
    return 2.0 / 3.0 * s0 * r0 + r0 * d + d * d * d / 3.0;
  };
  RegularityConstants reg;
  reg.K1 = std::sqrt(2.0);
  reg.rho1 = 0.5;
  reg.K2 = 4.0;
  reg.rho2 = 2.0;
  return function(
      "sqrt-then-quadratic:" + std::to_string(s0), Kind::PiecewiseFunction,
      [positive](double s) { return std::copysign(positive(std::abs(s)), s); },
      [positive_slope](double s) { return positive_slope(std::abs(s)); },
      [positive_prim](double s) { return positive_prim(std::abs(s)); }, {-s0, 0.0, s0}, reg);
}

MonotoneGraph MonotoneGraph::signorini(const MonotoneGraph& inner) {
  if (!inner.is_function()) throw ConfigError("signorini extension needs a function graph");
  return MonotoneGraph(std::make_shared<detail::SignoriniNode>(inner));
}

MonotoneGraph MonotoneGraph::dirichlet() {
  return MonotoneGraph(std::make_shared<detail::DirichletNode>());
}

MonotoneGraph MonotoneGraph::finite_permeability(double mu, const MonotoneGraph& inner) {
  if (!(mu >= 0.0)) throw ConfigError("permeability must be >= 0");
  if (!inner.is_function()) throw ConfigError("finite permeability needs a function graph");
  return MonotoneGraph(std::make_shared<detail::FinitePermNode>(mu, inner));
}

namespace {

double parse_number(std::string_view text, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + std::string(text) + "' in graph preset " +
                      std::string(what));
  }
}

} // namespace

MonotoneGraph MonotoneGraph::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view head = spec.substr(0, colon);
  const std::string_view rest =
      colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  auto need_rest = [&]() {
    if (rest.empty()) throw ConfigError("graph preset '" + std::string(spec) + "' needs a parameter");
  };
  if (head == "linear") {
    need_rest();
    return linear(parse_number(rest, spec));
  }
  if (head == "cubic") {
    need_rest();
    return cubic(parse_number(rest, spec));
  }
  if (head == "sqrt") {
    if (!rest.empty()) throw ConfigError("'sqrt' takes no parameter");
    return sqrt_odd();
  }
  if (head == "sqrt-then-quadratic") {
    need_rest();
    return sqrt_then_quadratic(parse_number(rest, spec));
  }
  if (head == "signorini") {
    need_rest();
    return signorini(parse(rest));
  }
  if (head == "dirichlet") {
    if (!rest.empty()) throw ConfigError("'dirichlet' takes no parameter");
    return dirichlet();
  }
  if (head == "finite-perm") {
    need_rest();
    const auto c2 = rest.find(':');
    if (c2 == std::string_view::npos) throw ConfigError("finite-perm needs mu and an inner graph");
    return finite_permeability(parse_number(rest.substr(0, c2), spec), parse(rest.substr(c2 + 1)));
  }
  throw ConfigError("unknown graph preset '" + std::string(spec) + "'");
}

MonotoneGraph::Kind MonotoneGraph::kind() const { return node_->kind; }
const std::string& MonotoneGraph::name() const { return node_->name; }
double MonotoneGraph::domain_lower() const { return node_->lo(); }
double MonotoneGraph::domain_upper() const { return node_->hi(); }
int MonotoneGraph::domain_side(double s) const { return node_->side(s); }

GraphValue MonotoneGraph::eval(double s) const {
  if (std::isnan(s) || node_->side(s) != 0) return GraphValue::none();
  return node_->eval(s);
}

std::optional<double> MonotoneGraph::slope(double s) const {
  if (node_->side(s) != 0) return std::nullopt;
  return node_->slope(s);
}

bool MonotoneGraph::is_function() const { return node_->is_function(); }
std::span<const double> MonotoneGraph::kinks() const { return node_->kinks; }
const std::optional<RegularityConstants>& MonotoneGraph::regularity() const {
  return node_->regularity;
}
std::optional<MonotoneGraph> MonotoneGraph::inner() const { return node_->inner(); }
std::optional<double> MonotoneGraph::permeability() const { return node_->permeability(); }

double MonotoneGraph::primitive(double s) const {
  if (!std::isfinite(s) || node_->side(s) != 0) {
    throw DomainError("primitive: s = " + std::to_string(s) + " outside the domain of " + name());
  }
  if (auto closed = node_->closed_primitive(s)) return *closed;
  const auto* node = node_.get();
  if (s >= 0.0) return adaptive_simpson([node](double t) { return node->selection(t); }, 0.0, s);
  return adaptive_simpson([node](double t) { return -node->selection(-t); }, 0.0, -s);
}

MonotoneGraph inverse(const MonotoneGraph& g) {
  if (g.kind() == MonotoneGraph::Kind::Inverse) {
    const auto* inv = static_cast<const detail::InverseNode*>(g.node_.get());
    return inv->base;
  }
  return MonotoneGraph(std::make_shared<detail::InverseNode>(g, g.node_));
}

double resolvent(const MonotoneGraph& g, double c, double u, double tol) {
  if (!(c > 0.0)) throw DomainError("resolvent needs c > 0");
  if (!std::isfinite(u)) throw DomainError("resolvent needs a finite argument");

  // Distance from u to the set v + c sigma(v), signed: negative when v is
  // too small, positive when too large, zero on membership.
  auto classify = [&](double v, double& gap) -> int {
    const int side = g.domain_side(v);
    if (side != 0) {
      gap = side < 0 ? -kInf : kInf;
      return side;
    }
    const GraphValue s = g.eval(v);
    if (s.empty) {
      gap = kInf;
      return 1;
    }
    const double lo = v + c * s.lower;
    const double hi = v + c * s.upper;
    if (u < lo) {
      gap = lo - u;
      return 1;
    }
    if (u > hi) {
      gap = hi - u;
      return -1;
    }
    gap = 0.0;
    return 0;
  };

  double lo = std::min(0.0, u);
  double hi = std::max(0.0, u);
  double gap = 0.0;

  // Exact hits at bracket ends, kinks and domain ends.
  std::vector<double> candidates{lo, hi, g.domain_lower(), g.domain_upper()};
  for (double k : g.kinks()) candidates.push_back(k);
  for (double v : candidates) {
    if (!std::isfinite(v)) continue;
    if (classify(v, gap) == 0) return v;
  }

  // Widen the bracket if 0 is not in sigma(0).
  for (double step = 1.0; classify(lo, gap) > 0; step *= 2.0) {
    lo -= step;
    if (step > 1e300) throw NumericalFailure("resolvent: cannot bracket from below");
  }
  for (double step = 1.0; classify(hi, gap) < 0; step *= 2.0) {
    hi += step;
    if (step > 1e300) throw NumericalFailure("resolvent: cannot bracket from above");
  }

  double v = 0.5 * (lo + hi);
  bool try_newton = false;
  for (int it = 0; it < 200; ++it) {
    double trial = 0.5 * (lo + hi);
    if (try_newton) {
      const GraphValue s = g.eval(v);
      const auto d = g.slope(v);
      if (s.is_point() && d) {
        const double newton = v - (v + c * s.lower - u) / (1.0 + c * *d);
        if (newton > lo && newton < hi) trial = newton;
      }
    }
    const double before = hi - lo;
    v = trial;
    const int cls = classify(v, gap);
    if (cls == 0) return v;
    // v -> v + c sigma(v) grows with slope >= 1, so |gap| bounds the error.
    if (std::abs(gap) <= tol) return v;
    if (cls < 0)
      lo = v;
    else
      hi = v;
    if (hi - lo <= tol) return 0.5 * (lo + hi);
    // Newton only while it keeps halving the bracket.
    try_newton = (hi - lo) <= 0.5 * before || !try_newton;
  }
  throw NumericalFailure("resolvent: no convergence in 200 iterations for " + g.name());
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

} // namespace chom
