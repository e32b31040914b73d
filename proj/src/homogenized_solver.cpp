#include "chom/homogenized_solver.hpp"

#include "chom/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace chom {

namespace {

fem::SparseMatrix restrict_to(const fem::SparseMatrix& A, const std::vector<int>& idx) {
  std::vector<int> map(std::size_t(A.rows()), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) map[std::size_t(idx[k])] = int(k);
  std::vector<Eigen::Triplet<double>> trips;
  for (int c = 0; c < A.outerSize(); ++c) {
    if (map[std::size_t(c)] < 0) continue;
    for (fem::SparseMatrix::InnerIterator it(A, c); it; ++it) {
      const int r = map[std::size_t(it.row())];
      if (r >= 0) trips.emplace_back(r, map[std::size_t(c)], it.value());
    }
  }
  fem::SparseMatrix out(Eigen::Index(idx.size()), Eigen::Index(idx.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(Eigen::Index(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[Eigen::Index(k)] = v[idx[k]];
  return out;
}

} // namespace

std::string to_string(HomPath p) {
  switch (p) {
    case HomPath::Trivial: return "trivial";
    case HomPath::Newton: return "newton";
    case HomPath::Picard: return "picard";
  }
  return "unknown";
}

HomProblem make_hom_problem(std::shared_ptr<const fem::Mesh> mesh,
                            std::shared_ptr<const KineticLaw> law, const fem::Source& f) {
  if (!mesh) throw ConfigError("homogenized problem without mesh");
  if (!law) throw ConfigError("homogenized problem without kinetic law");
  const auto& t = law->table();
  const double du = (law->u_max() - law->u_min()) / double(t.size() - 1);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double q = (t[k + 1] - t[k]) / du;
    if (q < -1e-8 || q > law->lambda() + 1e-8) {
      throw ConfigError("kinetic law " + law->graph_name() + " violates 0 <= dH/du <= lambda near u = " +
                        std::to_string(law->u_min() + double(k) * du));
    }
  }
  HomProblem p;
  p.mesh = mesh;
  p.law = std::move(law);
  const fem::Assembled a = fem::assemble(*mesh, f);
  p.A = a.stiffness;
  p.F = a.load;
  p.mass = a.mass_obstacle + a.mass_free;
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
    if (!mesh->on_gamma2[i]) p.free.push_back(int(i));
  }
  return p;
}

HomSolution solve_hom(const HomProblem& p, const HomOptions& opts) {
  const KineticLaw& law = *p.law;
  const fem::SparseMatrix Aff = restrict_to(p.A, p.free);
  const fem::SparseMatrix Aabs = Aff.cwiseAbs();
  const Eigen::VectorXd Ff = gather(p.F, p.free);
  const Eigen::VectorXd m = gather(p.mass, p.free);
  const Eigen::Index n = Ff.size();
  const double L = law.g_lipschitz();

  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r = Aff * x - Ff;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (m[k] > 0.0) r[k] += m[k] * law.g_exact(x[k]);
    }
    return r;
  };
  auto tolerance = [&](const Eigen::VectorXd& x) {
    return opts.tol * std::max((Ff.cwiseAbs() + Aabs * x.cwiseAbs()).maxCoeff(),
                               std::numeric_limits<double>::min());
  };

  HomDiagnostics diag;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = residual(x);
  double norm = r.lpNorm<Eigen::Infinity>();
  diag.converged = norm == 0.0;

  if (!diag.converged) {
    diag.path = HomPath::Newton;
    Eigen::SimplicialLDLT<fem::SparseMatrix> ldlt;
    for (int it = 0; it < opts.max_newton && norm > tolerance(x); ++it) {
      ++diag.newton_iterations;
      fem::SparseMatrix J = Aff;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (m[k] <= 0.0) continue;
        const double d = 1e-8 * (1.0 + std::abs(x[k]));
        const double s = (law.g(x[k] + d) - law.g(x[k] - d)) / (2.0 * d);
        J.coeffRef(k, k) += m[k] * std::clamp(s, 1e-12 * L, L);
      }
      ldlt.compute(J);
      if (ldlt.info() != Eigen::Success) throw NumericalFailure("homogenized Newton factorization failed");
      const Eigen::VectorXd step = ldlt.solve(-r);
      bool accepted = false;
      for (double t = 1.0; t >= 1.0 / 64.0; t *= 0.5) {
        const Eigen::VectorXd trial = x + t * step;
        const Eigen::VectorXd rt = residual(trial);
        const double nt = rt.lpNorm<Eigen::Infinity>();
        if (nt < norm) {
          x = trial;
          r = rt;
          norm = nt;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    diag.converged = norm <= tolerance(x);

    if (!diag.converged) {
      diag.path = HomPath::Picard;
      fem::SparseMatrix P = Aff;
      for (Eigen::Index k = 0; k < n; ++k) P.coeffRef(k, k) += 0.5 * L * m[k];
      ldlt.compute(P);
      if (ldlt.info() != Eigen::Success) throw NumericalFailure("Picard factorization failed");
      while (diag.picard_iterations < opts.max_picard && norm > tolerance(x)) {
        ++diag.picard_iterations;
        x -= ldlt.solve(r);
        r = residual(x);
        norm = r.lpNorm<Eigen::Infinity>();
      }
      diag.converged = norm <= tolerance(x);
    }
  }
  diag.residual = norm;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(p.mesh->num_nodes()));
  for (std::size_t k = 0; k < p.free.size(); ++k) u[p.free[k]] = x[Eigen::Index(k)];

  const Eigen::VectorXd Au = p.A * u;
  diag.source_total = p.F.sum();
  for (std::size_t i = 0; i < p.mesh->num_nodes(); ++i) {
    if (p.mesh->on_gamma2[i]) {
      diag.dirichlet_total += p.F[Eigen::Index(i)] - Au[Eigen::Index(i)];
    } else if (p.mass[Eigen::Index(i)] > 0.0) {
      diag.robin_total += p.mass[Eigen::Index(i)] * law.g_exact(u[Eigen::Index(i)]);
    }
  }
  return {fem::Field(p.mesh, u), diag};
}

fem::Field solve_linear_robin(const HomProblem& p, double c) {
  fem::SparseMatrix K = restrict_to(p.A, p.free);
  const Eigen::VectorXd m = gather(p.mass, p.free);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    if (m[k] > 0.0) K.coeffRef(k, k) += c * m[k];
  }
  Eigen::SimplicialLDLT<fem::SparseMatrix> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw NumericalFailure("linear Robin factorization failed");
  const Eigen::VectorXd b = gather(p.F, p.free);
  Eigen::VectorXd x = ldlt.solve(b);
  x += ldlt.solve(b - K * x);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(p.mesh->num_nodes()));
  for (std::size_t k = 0; k < p.free.size(); ++k) u[p.free[k]] = x[Eigen::Index(k)];
  return fem::Field(p.mesh, u);
}

std::vector<fem::TracePoint> boundary_profile(const fem::Field& u) { return fem::gamma1_trace(u); }

} // namespace chom
