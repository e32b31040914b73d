#include "chom/epsilon_solver.hpp"

#include "chom/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>

namespace chom {

// Obstacle unknowns after eliminating the interior: S = A_OO - A_OI A_II^{-1} A_IO,
// g = F_O - A_OI A_II^{-1} F_I, and J = Jr(v) + offset.
struct EpsCondensed {
  Eigen::MatrixXd S;
  Eigen::VectorXd g;
  Eigen::VectorXd bm;    // beta * mass on the obstacle nodes
  double offset = 0.0;
  fem::SparseMatrix A_II;
  fem::SparseMatrix A_IO;
  Eigen::VectorXd F_I;
  Eigen::SimplicialLDLT<fem::SparseMatrix> ldlt;
};

namespace {

MonotoneGraph kinetic_of(const MonotoneGraph& sigma) {
  switch (sigma.kind()) {
    case MonotoneGraph::Kind::SignoriniExtension:
    case MonotoneGraph::Kind::FinitePermeability:
      return *sigma.inner();
    default:
      if (!sigma.is_function()) {
        throw ConfigError("the epsilon problem needs a kinetic that is single valued on u >= 0, got " +
                          sigma.name());
      }
      return sigma;
  }
}

double value_of(const MonotoneGraph& f, double s) { return f.eval(s).lower; }

double slope_of(const MonotoneGraph& f, double s) {
  if (auto d = f.slope(s)) return *d;
  const double h = 1e-8 * (1.0 + std::abs(s));
  return (value_of(f, s + h) - value_of(f, s - h)) / (2.0 * h);
}

fem::SparseMatrix block(const fem::SparseMatrix& A, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
  std::vector<int> rmap(std::size_t(A.rows()), -1), cmap(std::size_t(A.cols()), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) rmap[std::size_t(rows[k])] = int(k);
  for (std::size_t k = 0; k < cols.size(); ++k) cmap[std::size_t(cols[k])] = int(k);
  std::vector<Eigen::Triplet<double>> trips;
  for (int c = 0; c < A.outerSize(); ++c) {
    if (cmap[std::size_t(c)] < 0) continue;
    for (fem::SparseMatrix::InnerIterator it(A, c); it; ++it) {
      const int r = rmap[std::size_t(it.row())];
      if (r >= 0) trips.emplace_back(r, cmap[std::size_t(c)], it.value());
    }
  }
  fem::SparseMatrix out(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(Eigen::Index(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[Eigen::Index(k)] = v[idx[k]];
  return out;
}

std::shared_ptr<const EpsCondensed> condense(const VIProblem& p) {
  auto c = std::make_shared<EpsCondensed>();
  const auto& O = p.obstacle;
  const auto& I = p.interior;
  c->A_II = block(p.A, I, I);
  c->A_IO = block(p.A, I, O);
  const fem::SparseMatrix A_OO = block(p.A, O, O);
  c->F_I = gather(p.F, I);
  c->ldlt.compute(c->A_II);
  if (c->ldlt.info() != Eigen::Success) throw NumericalFailure("interior factorization failed");

  const Eigen::Index no = Eigen::Index(O.size());
  c->S = Eigen::MatrixXd(A_OO);
  constexpr Eigen::Index chunk = 32;
  for (Eigen::Index j0 = 0; j0 < no; j0 += chunk) {
    const Eigen::Index nc = std::min(chunk, no - j0);
    const Eigen::MatrixXd rhs = Eigen::MatrixXd(c->A_IO.middleCols(j0, nc));
    const Eigen::MatrixXd X = c->ldlt.solve(rhs);
    c->S.middleCols(j0, nc) -= c->A_IO.transpose() * X;
  }
  c->S = 0.5 * (c->S + c->S.transpose()).eval();
  const Eigen::VectorXd y = c->ldlt.solve(c->F_I);
  c->g = gather(p.F, O) - c->A_IO.transpose() * y;
  c->offset = -0.5 * c->F_I.dot(y);
  c->bm.resize(no);
  for (Eigen::Index i = 0; i < no; ++i) {
    c->bm[i] = std::exp(p.log_beta + std::log(p.mass[O[std::size_t(i)]]));
  }
  return c;
}

} // namespace

VIProblem make_vi_problem(std::shared_ptr<const fem::Mesh> mesh, const ScaleConfig& cfg,
                          const MonotoneGraph& sigma, const fem::Source& f) {
  cfg.validate();
  if (!mesh) throw ConfigError("epsilon problem without mesh");
  VIProblem p;
  p.mesh = mesh;
  p.sigma = kinetic_of(sigma);
  const ScaleParams sp = scale_params(cfg);
  p.log_beta = sp.log_beta;
  p.beta = sp.beta;
  const fem::Assembled a = fem::assemble(*mesh, f);
  p.A = a.stiffness;
  p.F = a.load;
  p.mass = a.mass_obstacle;
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
    if (mesh->on_gamma2[i]) continue;
    if (p.mass[Eigen::Index(i)] > 0.0) {
      p.obstacle.push_back(int(i));
    } else {
      p.interior.push_back(int(i));
    }
  }
  if (p.obstacle.empty()) throw ConfigError("epsilon mesh has no obstacle nodes");
  p.condensed = condense(p);
  return p;
}

VIProblem make_vi_problem(const ScaleConfig& cfg, const MonotoneGraph& sigma,
                          const fem::Source& f, const fem::Grading& grading) {
  const fem::RectDomain domain{cfg.l, cfg.height};
  auto mesh = std::make_shared<const fem::Mesh>(fem::build_mesh(cfg, domain, grading));
  return make_vi_problem(std::move(mesh), cfg, sigma, f);
}

double energy(const VIProblem& p, const Eigen::VectorXd& u) {
  double e = 0.5 * u.dot(p.A * u) - p.F.dot(u);
  for (int i : p.obstacle) {
    e += std::exp(p.log_beta + std::log(p.mass[i])) * p.sigma.primitive(u[i]);
  }
  return e;
}

Eigen::VectorXd obstacle_flux(const VIProblem& p, const Eigen::VectorXd& u) {
  const Eigen::VectorXd Au = p.A * u;
  Eigen::VectorXd r(Eigen::Index(p.obstacle.size()));
  for (std::size_t k = 0; k < p.obstacle.size(); ++k) {
    const int i = p.obstacle[k];
    r[Eigen::Index(k)] =
        Au[i] - p.F[i] + std::exp(p.log_beta + std::log(p.mass[i])) * value_of(p.sigma, u[i]);
  }
  return r;
}

namespace {

// Full nodal vector from obstacle values.
Eigen::VectorXd expand(const VIProblem& p, const Eigen::VectorXd& v) {
  const EpsCondensed& c = *p.condensed;
  const Eigen::VectorXd rhs = c.F_I - c.A_IO * v;
  Eigen::VectorXd uI = c.ldlt.solve(rhs);
  uI += c.ldlt.solve(rhs - c.A_II * uI);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(p.mesh->num_nodes()));
  for (std::size_t k = 0; k < p.obstacle.size(); ++k) u[p.obstacle[k]] = v[Eigen::Index(k)];
  for (std::size_t k = 0; k < p.interior.size(); ++k) u[p.interior[k]] = uI[Eigen::Index(k)];
  return u;
}

double reduced_energy(const VIProblem& p, const Eigen::VectorXd& v) {
  const EpsCondensed& c = *p.condensed;
  double e = 0.5 * v.dot(c.S * v) - c.g.dot(v) + c.offset;
  for (Eigen::Index i = 0; i < v.size(); ++i) e += c.bm[i] * p.sigma.primitive(v[i]);
  return e;
}

// max |min(v_i, r_i)| with r the reduced flux.
double reduced_kkt(const VIProblem& p, const Eigen::VectorXd& v, const Eigen::VectorXd& Sv) {
  const EpsCondensed& c = *p.condensed;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double r = Sv[i] - c.g[i] + c.bm[i] * value_of(p.sigma, v[i]);
    worst = std::max(worst, std::abs(std::min(v[i], r)));
  }
  return worst;
}

// Newton on the nodes with v > 0, the rest held at zero; projected onto v >= 0.
Eigen::VectorXd active_set_newton(const VIProblem& p, const Eigen::VectorXd& v0) {
  const EpsCondensed& c = *p.condensed;
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < v0.size(); ++i) {
    if (v0[i] > 0.0) free.push_back(i);
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(v0.size());
  if (free.empty()) return v;
  const Eigen::Index nf = Eigen::Index(free.size());
  Eigen::MatrixXd Sff(nf, nf);
  Eigen::VectorXd gf(nf), x(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    gf[a] = c.g[free[std::size_t(a)]];
    x[a] = v0[free[std::size_t(a)]];
    for (Eigen::Index b = 0; b < nf; ++b) Sff(a, b) = c.S(free[std::size_t(a)], free[std::size_t(b)]);
  }
  const double scale = std::max(gf.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd r = Sff * x - gf;
    Eigen::MatrixXd J = Sff;
    for (Eigen::Index a = 0; a < nf; ++a) {
      const Eigen::Index i = free[std::size_t(a)];
      r[a] += c.bm[i] * value_of(p.sigma, x[a]);
      J(a, a) += c.bm[i] * slope_of(p.sigma, x[a]);
    }
    if (r.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) break;
    x -= J.ldlt().solve(r);
  }
  for (Eigen::Index a = 0; a < nf; ++a) v[free[std::size_t(a)]] = std::max(x[a], 0.0);
  return v;
}

} // namespace

namespace {

// Newton on Au - F + beta m sigma(u) = 0 over the non-Dirichlet nodes, with
// the `pinned` nodes held at zero. Empty if the componentwise backward error
// does not reach 1e-10.
std::optional<Eigen::VectorXd> newton_full(const VIProblem& p, const std::vector<int>& pinned,
                                           const Eigen::VectorXd& u0, double tol, int max_iter) {
  std::vector<std::uint8_t> skip(p.mesh->num_nodes(), 0);
  for (int i : pinned) skip[std::size_t(i)] = 1;
  std::vector<int> freeset;
  for (int i : p.interior) freeset.push_back(i);
  for (int i : p.obstacle) {
    if (!skip[std::size_t(i)]) freeset.push_back(i);
  }
  std::sort(freeset.begin(), freeset.end());
  const fem::SparseMatrix Aff = block(p.A, freeset, freeset);
  const Eigen::VectorXd Ff = gather(p.F, freeset);
  Eigen::VectorXd bm = Eigen::VectorXd::Zero(Eigen::Index(freeset.size()));
  for (std::size_t k = 0; k < freeset.size(); ++k) {
    const double m = p.mass[freeset[k]];
    if (m > 0.0) bm[Eigen::Index(k)] = std::exp(p.log_beta + std::log(m));
  }
  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r = Aff * x - Ff;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (bm[k] > 0.0) r[k] += bm[k] * value_of(p.sigma, x[k]);
    }
    return r;
  };
  const fem::SparseMatrix Aabs = Aff.cwiseAbs();
  // Componentwise backward-error scale |F| + |A||x|.
  auto scale = [&](const Eigen::VectorXd& x) {
    return std::max((Ff.cwiseAbs() + Aabs * x.cwiseAbs()).maxCoeff(),
                    std::numeric_limits<double>::min());
  };
  Eigen::VectorXd x = gather(u0, freeset);
  Eigen::VectorXd r = residual(x);
  double best = r.lpNorm<Eigen::Infinity>();
  bool stalled = false;  // a Newton step that fails to lower the residual ends the loop
  Eigen::SimplicialLDLT<fem::SparseMatrix> ldlt;
  for (int it = 0; it < max_iter && best > tol * scale(x) && !stalled; ++it) {
    fem::SparseMatrix J = Aff;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (bm[k] > 0.0) J.coeffRef(k, k) += bm[k] * slope_of(p.sigma, x[k]);
    }
    ldlt.compute(J);
    if (ldlt.info() != Eigen::Success) throw NumericalFailure("Newton factorization failed");
    const Eigen::VectorXd step = ldlt.solve(-r);
    double t = 1.0;
    Eigen::VectorXd trial = x + step;
    Eigen::VectorXd rt = residual(trial);
    while (rt.lpNorm<Eigen::Infinity>() > best && t > 1.0 / 1024.0) {
      t *= 0.5;
      trial = x + t * step;
      rt = residual(trial);
    }
    const double norm = rt.lpNorm<Eigen::Infinity>();
    stalled = !(norm < best);
    if (!stalled) {
      best = norm;
      x = trial;
      r = rt;
    }
  }
  if (best > 1e-10 * scale(x)) return std::nullopt;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(p.mesh->num_nodes()));
  for (std::size_t k = 0; k < freeset.size(); ++k) u[freeset[k]] = x[Eigen::Index(k)];
  return u;
}

// max |min(u_i, r_i)| over obstacle nodes; infinite if some u_i < 0.
double complementarity(const VIProblem& p, const Eigen::VectorXd& u) {
  const Eigen::VectorXd r = obstacle_flux(p, u);
  double worst = 0.0;
  for (std::size_t k = 0; k < p.obstacle.size(); ++k) {
    const double uk = u[p.obstacle[k]];
    if (uk < 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(std::min(uk, r[Eigen::Index(k)])));
  }
  return worst;
}

} // namespace

EpsSolution solve_eps(const VIProblem& p, const EpsOptions& opts,
                      const std::optional<Eigen::VectorXd>& initial) {
  if (!p.condensed) throw ConfigError("epsilon problem is not assembled");
  const EpsCondensed& c = *p.condensed;
  const Eigen::Index n = Eigen::Index(p.obstacle.size());
  const MonotoneGraph constrained = MonotoneGraph::signorini(p.sigma);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (initial) {
    if (initial->size() != Eigen::Index(p.mesh->num_nodes())) {
      throw ConfigError("initial iterate has the wrong length");
    }
    for (Eigen::Index k = 0; k < n; ++k) v[k] = std::max((*initial)[p.obstacle[std::size_t(k)]], 0.0);
  }

  EpsDiagnostics diag;
  diag.load_scale = p.F.lpNorm<Eigen::Infinity>();
  const double target = opts.tol * diag.load_scale;

  Eigen::VectorXd Sv = c.S * v;
  double e = reduced_energy(p, v);
  diag.energy.push_back(e);
  double kkt = reduced_kkt(p, v, Sv);
  double best_kkt = kkt;
  int since_best = 0;
  std::vector<bool> last_pattern;

  while (kkt > target && diag.sweeps < opts.max_sweeps) {
    ++diag.sweeps;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = c.S(i, i);
      const double b = c.g[i] - (Sv[i] - d * v[i]);
      const double x = b / d;
      const double vi = resolvent(constrained, c.bm[i] / d, x, 1e-15 * std::max(std::abs(x), 1e-300));
      const double dv = vi - v[i];
      if (dv != 0.0) {
        Sv += c.S.col(i) * dv;
        v[i] = vi;
      }
    }
    e = reduced_energy(p, v);
    diag.energy.push_back(e);
    kkt = reduced_kkt(p, v, Sv);

    std::vector<bool> pattern(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pattern[std::size_t(i)] = v[i] > 0.0;
    if (kkt > target && (pattern != last_pattern || diag.sweeps % opts.polish_every == 0)) {
      last_pattern = pattern;
      const Eigen::VectorXd cand = active_set_newton(p, v);
      const double e_cand = reduced_energy(p, cand);
      if (e_cand <= e) {
        const Eigen::VectorXd S_cand = c.S * cand;
        const double kkt_cand = reduced_kkt(p, cand, S_cand);
        v = cand;
        Sv = S_cand;
        e = e_cand;
        kkt = kkt_cand;
        diag.energy.push_back(e);
        ++diag.newton_polishes;
      }
    }
    if (kkt < best_kkt) {
      best_kkt = kkt;
      since_best = 0;
    } else if (++since_best > opts.stagnation_window) {
      break;
    }
  }

  EpsSolution out;
  Eigen::VectorXd u = expand(p, v);
  // Full-space Newton on the active set found above removes the rounding
  // carried by the condensed operator.
  std::vector<int> pinned;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (v[k] == 0.0) pinned.push_back(p.obstacle[std::size_t(k)]);
  }
  if (auto polished = newton_full(p, pinned, u, 1e-15, 20)) {
    if (complementarity(p, *polished) <= complementarity(p, u)) u = *polished;
  }
  out.u = fem::Field(p.mesh, u);

  const Eigen::VectorXd r = obstacle_flux(p, u);
  diag.complementarity = 0.0;
  diag.min_flux = std::numeric_limits<double>::max();
  diag.min_obstacle_value = std::numeric_limits<double>::max();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double uk = u[p.obstacle[std::size_t(k)]];
    diag.complementarity = std::max(diag.complementarity, std::abs(std::min(uk, r[k])));
    diag.min_flux = std::min(diag.min_flux, r[k]);
    diag.min_obstacle_value = std::min(diag.min_obstacle_value, uk);
    if (uk == 0.0) ++diag.active_nodes;
  }
  const Eigen::VectorXd Au = p.A * u;
  const Eigen::VectorXd AuAbs = p.A.cwiseAbs() * u.cwiseAbs();
  double interior_scale = 0.0;
  for (int i : p.interior) {
    diag.interior_residual = std::max(diag.interior_residual, std::abs(Au[i] - p.F[i]));
    interior_scale = std::max(interior_scale, std::abs(p.F[i]) + AuAbs[i]);
  }
  diag.converged = diag.complementarity <= target && diag.min_obstacle_value >= 0.0 &&
                   diag.interior_residual <= 1e-10 * interior_scale;
  out.diagnostics = std::move(diag);
  return out;
}

fem::Field solve_unconstrained(const VIProblem& p, double tol, int max_iter) {
  const auto u = newton_full(p, {}, Eigen::VectorXd::Zero(Eigen::Index(p.mesh->num_nodes())),
                             tol, max_iter);
  if (!u) throw NumericalFailure("unconstrained Newton did not converge");
  return fem::Field(p.mesh, *u);
}

EnergyAndTraces energy_and_traces(const VIProblem& p, const fem::Field& u) {
  EnergyAndTraces out;
  out.grad_norm = std::sqrt(std::max(0.0, u.values.dot(p.A * u.values)));
  out.obstacle_l2 = fem::boundary_l2_norm(u, {fem::BoundaryLabel::Gamma1Obstacle});
  out.beta_obstacle_sq = std::exp(p.log_beta + 2.0 * std::log(out.obstacle_l2));
  if (out.obstacle_l2 == 0.0) out.beta_obstacle_sq = 0.0;
  out.trace = fem::gamma1_trace(u);
  return out;
}

} // namespace chom
