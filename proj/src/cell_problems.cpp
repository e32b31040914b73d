#include "chom/cell_problems.hpp"

#include "chom/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace chom::cell {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// sigma with the Signorini/Dirichlet cases already resolved.
enum class Reduced { Function, Capacity };

Reduced reduce(const MonotoneGraph& sigma, double u, MonotoneGraph& fn) {
  switch (sigma.kind()) {
    case MonotoneGraph::Kind::Dirichlet:
      return Reduced::Capacity;
    case MonotoneGraph::Kind::SignoriniExtension:
      if (u <= 0.0) return Reduced::Capacity;
      fn = *sigma.inner();
      return Reduced::Function;
    default:
      if (!sigma.is_function()) {
        throw ConfigError("cell problems need a function, Signorini or Dirichlet graph, got " +
                          sigma.name());
      }
      fn = sigma;
      return Reduced::Function;
  }
}

double value_of(const MonotoneGraph& f, double s) { return f.eval(s).lower; }

double slope_of(const MonotoneGraph& f, double s) {
  if (auto d = f.slope(s)) return *d;
  const double h = 1e-8 * (1.0 + std::abs(s));
  return (value_of(f, s + h) - value_of(f, s - h)) / (2.0 * h);
}

} // namespace

AxiMesh build_axi_mesh(const CellConfig& cfg) {
  if (!(cfg.truncation_radius > 1.0)) throw ConfigError("truncation radius must exceed 1");
  if (cfg.angular_cells < 2) throw ConfigError("need at least two angular cells");

  const int nt = cfg.angular_cells;
  const double h = 0.5 * std::numbers::pi / nt;
  const double M = std::acosh(cfg.truncation_radius);
  // Square cells in (m, t); the last radial cell absorbs the remainder.
  int nm = std::max(1, int(std::floor(M / h)));
  if (M - nm * h > 0.5 * h) ++nm;
  std::vector<double> ms(nm + 1);
  for (int i = 0; i < nm; ++i) ms[i] = i * h;
  ms[nm] = M;
  std::vector<double> ts(nt + 1);
  for (int j = 0; j <= nt; ++j) ts[j] = j * h;
  ts[nt] = 0.5 * std::numbers::pi;

  AxiMesh am;
  am.truncation_radius = cfg.truncation_radius;
  fem::Mesh& m = am.mesh;
  const int nr = nm + 1;
  auto id = [nr](int i, int j) { return j * nr + i; };
  for (int j = 0; j <= nt; ++j) {
    for (int i = 0; i <= nm; ++i) {
      double r = std::cosh(ms[i]) * std::cos(ts[j]);
      double z = std::sinh(ms[i]) * std::sin(ts[j]);
      if (j == nt) r = 0.0;
      if (i == 0 || j == 0) z = 0.0;
      m.vertices.push_back({r, z});
    }
  }
  // The map is holomorphic, so orientation carries over from the (m, t) plane.
  for (int j = 0; j < nt; ++j) {
    for (int i = 0; i < nm; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }
  m.on_gamma2.assign(m.vertices.size(), 0);
  m.obstacle_segment.assign(m.vertices.size(), -1);
  m.domain = {cfg.truncation_radius, cfg.truncation_radius};

  std::vector<char> kind(m.vertices.size(), 'f');
  for (int j = 0; j <= nt; ++j) {
    am.disk.push_back(id(0, j));
    kind[id(0, j)] = 'd';
  }
  for (int j = 0; j <= nt; ++j) {
    am.outer.push_back(id(nm, j));
    kind[id(nm, j)] = 'o';
    m.on_gamma2[id(nm, j)] = 1;
  }
  for (std::size_t k = 0; k < kind.size(); ++k) {
    if (kind[k] == 'f') am.free.push_back(int(k));
  }
  am.disk_mass.assign(am.disk.size(), 0.0);
  for (std::size_t k = 0; k + 1 < am.disk.size(); ++k) {
    const double ra = m.vertices[am.disk[k]][0];
    const double rb = m.vertices[am.disk[k + 1]][0];
    const double len = std::abs(ra - rb);
    am.disk_mass[k] += kTwoPi * len * (2.0 * ra + rb) / 6.0;
    am.disk_mass[k + 1] += kTwoPi * len * (ra + 2.0 * rb) / 6.0;
  }
  return am;
}

CellSolver::CellSolver(CellConfig cfg) : cfg_(cfg) {
  auto am = std::make_shared<AxiMesh>(build_axi_mesh(cfg_));
  mesh_ = am;
  const fem::Mesh& m = am->mesh;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    if (!(m.triangle_area(t) > 0.0)) throw NumericalFailure("degenerate cell mesh triangle");
  }

  // Weighted stiffness 2 pi int grad phi_a . grad phi_b r dr dz; r is linear
  // on each triangle so its mean gives the exact weight.
  const int n = int(m.num_nodes());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const double area = m.triangle_area(t);
    const double rbar =
        (m.vertices[tri[0]][0] + m.vertices[tri[1]][0] + m.vertices[tri[2]][0]) / 3.0;
    double gx[3], gy[3];
    for (int k = 0; k < 3; ++k) {
      const auto& p1 = m.vertices[tri[(k + 1) % 3]];
      const auto& p2 = m.vertices[tri[(k + 2) % 3]];
      gx[k] = (p1[1] - p2[1]) / (2.0 * area);
      gy[k] = (p2[0] - p1[0]) / (2.0 * area);
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        trips.emplace_back(tri[a], tri[b], kTwoPi * rbar * area * (gx[a] * gx[b] + gy[a] * gy[b]));
      }
    }
  }
  A_.resize(n, n);
  A_.setFromTriplets(trips.begin(), trips.end());

  // Static condensation onto the disk: S = A_GG - A_GI A_II^{-1} A_IG.
  const auto& G = am->disk;
  const auto& I = am->free;
  std::vector<int> local(n, -1);
  for (std::size_t k = 0; k < I.size(); ++k) local[I[k]] = int(k);
  std::vector<int> glocal(n, -1);
  for (std::size_t k = 0; k < G.size(); ++k) glocal[G[k]] = int(k);

  std::vector<Eigen::Triplet<double>> tII, tIG;
  Eigen::MatrixXd AGG = Eigen::MatrixXd::Zero(Eigen::Index(G.size()), Eigen::Index(G.size()));
  for (int col = 0; col < A_.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A_, col); it; ++it) {
      const int row = int(it.row());
      if (local[row] >= 0 && local[col] >= 0) tII.emplace_back(local[row], local[col], it.value());
      if (local[row] >= 0 && glocal[col] >= 0) tIG.emplace_back(local[row], glocal[col], it.value());
      if (glocal[row] >= 0 && glocal[col] >= 0) AGG(glocal[row], glocal[col]) += it.value();
    }
  }
  Eigen::SparseMatrix<double> AII(Eigen::Index(I.size()), Eigen::Index(I.size()));
  AII.setFromTriplets(tII.begin(), tII.end());
  Eigen::SparseMatrix<double> AIG(Eigen::Index(I.size()), Eigen::Index(G.size()));
  AIG.setFromTriplets(tIG.begin(), tIG.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(AII);
  if (ldlt.info() != Eigen::Success) throw NumericalFailure("cell stiffness factorization failed");
  extension_ = ldlt.solve(Eigen::MatrixXd(AIG));
  if (ldlt.info() != Eigen::Success) throw NumericalFailure("cell condensation solve failed");
  schur_ = AGG - Eigen::MatrixXd(AIG.transpose()) * extension_;
  schur_ = 0.5 * (schur_ + schur_.transpose()).eval();
  mass_ = Eigen::Map<const Eigen::VectorXd>(am->disk_mass.data(), Eigen::Index(G.size()));

  locator_ = std::make_unique<fem::PointLocator>(am->mesh);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(Eigen::Index(G.size()));
  kappa_.field = extend(ones);
  kappa_.lambda = (schur_ * ones).sum();
  if (!(kappa_.lambda > 0.0)) throw NumericalFailure("non-positive capacity flux");
}

CellField CellSolver::extend(const Eigen::VectorXd& disk_values) const {
  CellField f;
  f.mesh = mesh_;
  f.values = Eigen::VectorXd::Zero(Eigen::Index(mesh_->mesh.num_nodes()));
  for (std::size_t k = 0; k < mesh_->disk.size(); ++k) {
    f.values[mesh_->disk[k]] = disk_values[Eigen::Index(k)];
  }
  const Eigen::VectorXd interior = -extension_ * disk_values;
  for (std::size_t k = 0; k < mesh_->free.size(); ++k) {
    f.values[mesh_->free[k]] = interior[Eigen::Index(k)];
  }
  return f;
}

Eigen::VectorXd CellSolver::solve_boundary(const MonotoneGraph& sigma, double C0, double u,
                                           int& iterations) const {
  const Eigen::Index n = schur_.rows();
  iterations = 0;
  MonotoneGraph fn = sigma;
  if (reduce(sigma, u, fn) == Reduced::Capacity) return Eigen::VectorXd::Constant(n, u);
  if (u == 0.0) return Eigen::VectorXd::Zero(n);

  auto residual = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd r = schur_ * w;
    for (Eigen::Index i = 0; i < n; ++i) r[i] -= C0 * mass_[i] * value_of(fn, u - w[i]);
    return r;
  };
  auto energy = [&](const Eigen::VectorXd& w) {
    double e = 0.5 * w.dot(schur_ * w);
    for (Eigen::Index i = 0; i < n; ++i) e += C0 * mass_[i] * fn.primitive(u - w[i]);
    return e;
  };
  double peak = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) peak = std::max(peak, C0 * mass_[i] * std::abs(value_of(fn, u)));
  const double scale =
      std::max(std::abs(u) * (schur_ * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff(), peak);
  const double target = cfg_.tol * scale;

  // Newton step with diagonal slopes from `slope`, accepted under Armijo
  // decrease of the energy with halving down to 1/64.
  auto damped_step = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& r, double e0,
                         auto slope, Eigen::VectorXd& trial) {
    Eigen::MatrixXd J = schur_;
    for (Eigen::Index i = 0; i < n; ++i) J(i, i) += C0 * mass_[i] * slope(u - w[i]);
    const Eigen::VectorXd step = J.ldlt().solve(-r);
    const double slope0 = r.dot(step);
    for (double damping = 1.0; damping >= 1.0 / 64.0; damping *= 0.5) {
      trial = w + damping * step;
      const double e1 = energy(trial);
      if (e1 <= e0 + 0.1 * damping * std::min(slope0, 0.0) + 1e-14 * std::abs(e0)) {
        return damping;
      }
    }
    return 0.0;
  };
  auto tangent = [&](double s) { return slope_of(fn, s); };
  // Chord through the origin; never below the tangent for concave branches.
  auto chord = [&](double s) {
    const double t = slope_of(fn, s);
    if (s == 0.0) return t;
    return std::max(t, value_of(fn, s) / s);
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = residual(w);
  double best = r.lpNorm<Eigen::Infinity>();
  double e = energy(w);
  int stalls = 0;
  Eigen::VectorXd trial(n);
  Eigen::VectorXd best_w = w;
  for (int it = 0; it < cfg_.max_iter && best > target; ++it) {
    ++iterations;
    double damping = damped_step(w, r, e, tangent, trial);
    if (damping < 1.0) {
      Eigen::VectorXd alt(n);
      const double d_alt = damped_step(w, r, e, chord, alt);
      if (d_alt > 0.0 && (damping == 0.0 || energy(alt) < energy(trial))) {
        trial = alt;
        damping = d_alt;
      }
    }
    if (damping < 1.0) {
      // Damped or no Newton step (sigma not Lipschitz near 0): follow with one
      // nodal Gauss-Seidel sweep with exact scalar resolvents, which never
      // increases the energy.
      if (damping == 0.0) trial = w;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double off = schur_.row(i).dot(trial) - schur_(i, i) * trial[i];
        const double s = resolvent(fn, C0 * mass_[i] / schur_(i, i), u + off / schur_(i, i));
        trial[i] = u - s;
      }
    }
    const double e_trial = energy(trial);
    const Eigen::VectorXd r_trial = residual(trial);
    const double norm = r_trial.lpNorm<Eigen::Infinity>();
    const bool progress = norm < best || e_trial < e;
    w = trial;
    r = r_trial;
    e = std::min(e, e_trial);
    if (norm < best) {
      best = norm;
      best_w = w;
    }
    if (progress) {
      stalls = 0;
    } else if (++stalls > 5) {
      break;
    }
  }
  if (best > std::max(target, 1e-9 * scale)) {
    throw NumericalFailure("cell Robin iteration stagnated at relative residual " + std::to_string(best / scale) +
                           " for " + sigma.name() + ", u = " + std::to_string(u));
  }
  return best_w;
}

WhatSolution CellSolver::solve_what(const MonotoneGraph& sigma, double C0, double u) const {
  if (!(C0 > 0.0)) throw ConfigError("C0 must be positive");
  if (!std::isfinite(u)) throw DomainError("solve_what needs a finite u");
  WhatSolution out;
  out.boundary = solve_boundary(sigma, C0, u, out.iterations);
  out.field = extend(out.boundary);
  out.flux = (schur_ * out.boundary).sum();
  return out;
}

CellField CellSolver::solve_wcap(const MonotoneGraph& sigma, double C0, double u) const {
  MonotoneGraph fn = sigma;
  if (reduce(sigma, u, fn) == Reduced::Capacity) {
    throw ConfigError("solve_wcap needs a differentiable sigma, got " + sigma.name());
  }
  int iters = 0;
  const Eigen::VectorXd w = solve_boundary(sigma, C0, u, iters);
  const Eigen::Index n = schur_.rows();
  Eigen::MatrixXd J = schur_;
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto d = fn.slope(u - w[i]);
    if (!d) throw ConfigError("solve_wcap: sigma not differentiable at " + std::to_string(u - w[i]));
    J(i, i) += C0 * mass_[i] * *d;
    rhs[i] = C0 * mass_[i] * *d;
  }
  return extend(J.ldlt().solve(rhs));
}

double CellSolver::flux_derivative(const MonotoneGraph& sigma, double C0, double u) const {
  MonotoneGraph fn = sigma;
  if (reduce(sigma, u, fn) == Reduced::Capacity) return lambda();
  int iters = 0;
  const Eigen::VectorXd w = solve_boundary(sigma, C0, u, iters);
  const CellField W = solve_wcap(sigma, C0, u);
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh_->disk.size(); ++k) {
    const double d = *fn.slope(u - w[Eigen::Index(k)]);
    sum += C0 * mass_[Eigen::Index(k)] * d * (1.0 - W.values[mesh_->disk[k]]);
  }
  return sum;
}

double CellSolver::l2_norm(const Eigen::VectorXd& v) const {
  const fem::Mesh& m = mesh_->mesh;
  double sum = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const double area = m.triangle_area(t);
    // int phi_a phi_b phi_c over a triangle: area/10, area/30, area/60.
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) {
          double w;
          if (a == b && b == c)
            w = area / 10.0;
          else if (a == b || b == c || a == c)
            w = area / 30.0;
          else
            w = area / 60.0;
          sum += w * v[tri[a]] * v[tri[b]] * m.vertices[tri[c]][0];
        }
      }
    }
  }
  return std::sqrt(std::max(0.0, kTwoPi * sum));
}

double CellSolver::rim_element_diameter() const {
  const fem::Mesh& m = mesh_->mesh;
  const int rim = mesh_->disk.front();
  double diam = 0.0;
  for (const auto& tri : m.triangles) {
    if (tri[0] != rim && tri[1] != rim && tri[2] != rim) continue;
    for (int a = 0; a < 3; ++a) {
      const auto& p = m.vertices[tri[a]];
      const auto& q = m.vertices[tri[(a + 1) % 3]];
      diam = std::max(diam, std::hypot(p[0] - q[0], p[1] - q[1]));
    }
  }
  return diam;
}

double CellSolver::sample(const CellField& f, double r, double z) const {
  const auto hit = locator_->locate(r, z);
  const auto& tri = mesh_->mesh.triangles[hit.triangle];
  return hit.bary[0] * f.values[tri[0]] + hit.bary[1] * f.values[tri[1]] +
         hit.bary[2] * f.values[tri[2]];
}

Extrapolation richardson(const std::vector<double>& radii, const std::vector<double>& values) {
  if (radii.size() != 3 || values.size() != 3) {
    throw ConfigError("richardson extrapolation needs exactly three radii");
  }
  // Fit lambda(h) = c0 + c1 h + c2 h^2 in h = 1/R.
  const double h0 = 1.0 / radii[0], h1 = 1.0 / radii[1], h2 = 1.0 / radii[2];
  auto linear = [](double ha, double va, double hb, double vb) {
    return (hb * va - ha * vb) / (hb - ha);
  };
  Extrapolation e;
  e.first_pair = linear(h0, values[0], h1, values[1]);
  e.last_pair = linear(h1, values[1], h2, values[2]);
  // Lagrange interpolation evaluated at h = 0.
  e.value = values[0] * (h1 * h2) / ((h0 - h1) * (h0 - h2)) +
            values[1] * (h0 * h2) / ((h1 - h0) * (h1 - h2)) +
            values[2] * (h0 * h1) / ((h2 - h0) * (h2 - h1));
  e.last_step_change = std::abs(e.last_pair - e.first_pair) / std::abs(e.last_pair);
  return e;
}

LambdaTable lambda_table(const std::vector<double>& radii, int angular_cells) {
  LambdaTable t;
  t.radii = radii;
  for (double R : radii) {
    CellConfig cfg;
    cfg.truncation_radius = R;
    cfg.angular_cells = angular_cells;
    t.lambdas.push_back(CellSolver(cfg).lambda());
  }
  if (radii.size() == 3) t.extrapolated = richardson(t.radii, t.lambdas);
  return t;
}

double log_cell_2d(double r, double eps, double a_eps) {
  if (!(a_eps > 0.0 && a_eps < eps / 4.0)) throw DomainError("log_cell_2d needs 0 < a < eps/4");
  if (!(r >= a_eps && r <= eps / 4.0)) {
    throw DomainError("log_cell_2d: r outside the annulus [a, eps/4]");
  }
  return std::log(4.0 * r / eps) / std::log(4.0 * a_eps / eps);
}

double prolate_v(double sig, double eps, double a_eps) {
  if (!(a_eps > 0.0 && a_eps < eps)) throw DomainError("prolate_v needs 0 < a < eps");
  const double top = std::sinh(std::sqrt((eps / a_eps) * (eps / a_eps) - 1.0));
  if (!(sig >= 0.0 && sig <= top)) throw DomainError("prolate_v: argument out of range");
  return std::atan(sig) / std::atan(top);
}

} // namespace chom::cell
