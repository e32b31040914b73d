#include "chom/strange_term.hpp"

#include "chom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace chom {

double h2d(const MonotoneGraph& sigma, double l0, double alpha, double C0, double u) {
  if (!(l0 > 0.0 && l0 < 0.5)) throw DomainError("h2d needs l0 in (0, 1/2)");
  if (!(alpha != 0.0)) throw DomainError("h2d needs alpha != 0");
  if (!(C0 > 0.0)) throw DomainError("h2d needs C0 > 0");
  const double C = 2.0 * l0 * alpha * alpha * C0 / std::numbers::pi;
  return u - resolvent(sigma, C, u);
}

double h3d(const MonotoneGraph& sigma, double C0, double u, const cell::CellSolver& cell) {
  if (sigma.kind() == MonotoneGraph::Kind::Dirichlet) return cell.lambda() * u;
  if (sigma.kind() == MonotoneGraph::Kind::SignoriniExtension && u <= 0.0) {
    return cell.lambda() * u;
  }
  if (u == 0.0) return 0.0;
  return cell.solve_what(sigma, C0, u).flux;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Resolvent2d: return "resolvent-2d";
    case Provenance::Cell3d: return "cell-3d";
    case Provenance::LinearClosedForm: return "linear-closed-form";
  }
  return "unknown";
}

KineticLaw::KineticLaw(Exact exact, double prefactor, double lambda, Provenance provenance,
                       std::string graph_name, LawOptions opts)
    : exact_(std::move(exact)), prefactor_(prefactor), lambda_(lambda), provenance_(provenance),
      graph_name_(std::move(graph_name)), opts_(opts) {
  if (!exact_) throw ConfigError("kinetic law needs an H map");
  if (!(opts_.u_max > opts_.u_min) || opts_.grid_points < 2) {
    throw ConfigError("kinetic law memo grid is empty");
  }
  du_ = (opts_.u_max - opts_.u_min) / (opts_.grid_points - 1);
  table_.resize(std::size_t(opts_.grid_points));
  for (int k = 0; k < opts_.grid_points; ++k) {
    const double u = k + 1 == opts_.grid_points ? opts_.u_max : opts_.u_min + k * du_;
    table_[std::size_t(k)] = exact_(u);
  }
  negative_slope_ = -exact_(-1.0);
}

KineticLaw KineticLaw::linear(double c) {
  if (!(c >= 0.0)) throw ConfigError("linear law needs c >= 0");
  return KineticLaw([c](double u) { return c * u; }, 1.0, c, Provenance::LinearClosedForm,
                    "linear-law:" + std::to_string(c));
}

double KineticLaw::H(double u) const {
  if (u < opts_.u_min || u > opts_.u_max) return exact_(u);
  const double x = (u - opts_.u_min) / du_;
  const std::size_t k = std::min(std::size_t(x), table_.size() - 2);
  const double t = x - double(k);
  return (1.0 - t) * table_[k] + t * table_[k + 1];
}

KineticLaw kinetic_law(const MonotoneGraph& sigma, const ScaleConfig& cfg,
                       std::shared_ptr<const cell::CellSolver> cell, LawOptions opts) {
  if (cfg.n == 2) {
    const double l0 = cfg.l0, alpha = cfg.alpha, C0 = cfg.C0;
    auto H = [sigma, l0, alpha, C0](double u) {
      return u > 0.0 ? h2d(sigma, l0, alpha, C0, u) : u;
    };
    return KineticLaw(H, std::numbers::pi / (alpha * alpha), 1.0, Provenance::Resolvent2d,
                      sigma.name(), opts);
  }
  if (cfg.n == 3) {
    if (!cell) throw ConfigError("the n = 3 kinetic law needs a cell solver");
    const double C0 = cfg.C0;
    auto H = [sigma, C0, cell](double u) { return h3d(sigma, C0, u, *cell); };
    return KineticLaw(H, C0, cell->lambda(), Provenance::Cell3d, sigma.name(), opts);
  }
  throw ConfigError("kinetic law supports n = 2 and n = 3 only");
}

} // namespace chom
