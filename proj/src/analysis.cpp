#include "pfrac/analysis.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#ifdef PFRAC_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

#include "pfrac/material.hpp"

namespace pfrac {

double ElasticityProblem::g(const Point& x) const { return phi ? degradation(phi(x), kappa) : 1.0; }

namespace {

Vector sparse_solve(const SparseMatrix& a, const Vector& b) {
#ifdef PFRAC_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> lu;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
#endif
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw SingularSystem("factorisation of the elasticity system failed");
  Vector x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularSystem("elasticity solve failed");
  return x;
}

// Boundary values of the interleaved displacement.
Constraints boundary_constraints(const Mesh& mesh, const ScalarSpace& space, const ElasticityProblem& problem,
                                 Index n_dofs) {
  Constraints cons(n_dofs);
  for (const auto& f : mesh.facets()) {
    for (Index d : space.facet_dofs(f)) {
      const Vec2 v = problem.boundary ? problem.boundary(space.support_point(d)) : Vec2::Zero();
      cons.set(2 * d, v.x());
      cons.set(2 * d + 1, v.y());
    }
  }
  return cons;
}

int quadrature_for(int degree) { return degree + 1; }

// E(phi_a e_c) : E(phi_b e_d) and div terms for interleaved local dofs.
struct VectorShape {
  double div = 0.0;
  Mat2 grad;  // row c = component c
};

VectorShape vector_shape(const CellValues& cv, int q, int a) {
  VectorShape s;
  const int node = a / 2, comp = a % 2;
  s.grad.setZero();
  s.grad.row(comp) = cv.grad(q, node).transpose();
  s.div = cv.grad(q, node)[comp];
  return s;
}

double sym_contract(const Mat2& a, const Mat2& b) {
  const Mat2 ea = 0.5 * (a + a.transpose());
  const Mat2 eb = 0.5 * (b + b.transpose());
  return (ea.array() * eb.array()).sum();
}

}  // namespace

PrimalSolution solve_decoupled_primal(const Mesh& mesh, int degree, const ElasticityProblem& problem) {
  if (degree != 1 && degree != 2) throw std::invalid_argument("primal elasticity needs degree 1 or 2");
  if (!(problem.mu > 0.0) || !(problem.lambda >= 0.0)) throw std::invalid_argument("need mu > 0, lambda >= 0");
  ScalarSpace space(mesh, degree);
  const Index n = 2 * space.n_dofs();
  const CellValues proto(space.element(), gauss_rule(quadrature_for(degree)));

  SparseMatrix a;
  Vector b;
  assemble(
      mesh, n,
      [&](Index c, LocalSystem& local) {
        CellValues cv = proto;
        cv.reinit(mesh, c);
        const auto cd = space.cell_dofs(c);
        const int nl = 2 * static_cast<int>(cd.size());
        local.resize(static_cast<std::size_t>(nl));
        for (int i = 0; i < nl; ++i) local.dofs[static_cast<std::size_t>(i)] = 2 * cd[static_cast<std::size_t>(i / 2)] + i % 2;
        for (int q = 0; q < cv.n_qp(); ++q) {
          const double g = problem.g(cv.point(q));
          const double w = cv.JxW(q);
          const Vec2 f = problem.body_force ? problem.body_force(cv.point(q)) : Vec2::Zero();
          for (int i = 0; i < nl; ++i) {
            const VectorShape si = vector_shape(cv, q, i);
            local.vector[i] += f[i % 2] * cv.shape(q, i / 2) * w;
            for (int j = 0; j < nl; ++j) {
              const VectorShape sj = vector_shape(cv, q, j);
              local.matrix(i, j) +=
                  g * (2.0 * problem.mu * sym_contract(si.grad, sj.grad) + problem.lambda * si.div * sj.div) * w;
            }
          }
        }
      },
      &a, &b);
  apply_dirichlet(a, b, boundary_constraints(mesh, space, problem, n));
  Vector u = sparse_solve(a, b);
  return {std::move(space), std::move(u)};
}

MixedSolution solve_decoupled_mixed(const Mesh& mesh, Pairing pairing, const ElasticityProblem& problem) {
  if (pairing == Pairing::Q2Q1Q1Q1Star) throw std::invalid_argument("decoupled mixed problem takes Q2Q1 or Q1Q1");
  if (!(problem.lambda > 0.0)) throw std::invalid_argument("the mixed formulation needs lambda > 0");
  if (!(problem.mu > 0.0)) throw std::invalid_argument("need mu > 0");
  const int degree = pairing == Pairing::Q2Q1 ? 2 : 1;
  ScalarSpace us(mesh, degree);
  ScalarSpace ps(mesh, 1);
  const Index nu = 2 * us.n_dofs();
  const Index n = nu + ps.n_dofs();
  const CellValues uproto(us.element(), gauss_rule(quadrature_for(degree)));
  const CellValues pproto(ps.element(), gauss_rule(quadrature_for(degree)));

  SparseMatrix a;
  Vector b;
  assemble(
      mesh, n,
      [&](Index c, LocalSystem& local) {
        CellValues cu = uproto, cp = pproto;
        cu.reinit(mesh, c);
        cp.reinit(mesh, c);
        const auto ud = us.cell_dofs(c);
        const auto pd = ps.cell_dofs(c);
        const int nl = 2 * static_cast<int>(ud.size());
        const int np = static_cast<int>(pd.size());
        local.resize(static_cast<std::size_t>(nl + np));
        for (int i = 0; i < nl; ++i) local.dofs[static_cast<std::size_t>(i)] = 2 * ud[static_cast<std::size_t>(i / 2)] + i % 2;
        for (int k = 0; k < np; ++k) local.dofs[static_cast<std::size_t>(nl + k)] = nu + pd[static_cast<std::size_t>(k)];
        for (int q = 0; q < cu.n_qp(); ++q) {
          const double g = problem.g(cu.point(q));
          const double w = cu.JxW(q);
          const Vec2 f = problem.body_force ? problem.body_force(cu.point(q)) : Vec2::Zero();
          for (int i = 0; i < nl; ++i) {
            const VectorShape si = vector_shape(cu, q, i);
            local.vector[i] += f[i % 2] * cu.shape(q, i / 2) * w;
            for (int j = 0; j < nl; ++j) {
              const VectorShape sj = vector_shape(cu, q, j);
              local.matrix(i, j) += 2.0 * problem.mu * g * sym_contract(si.grad, sj.grad) * w;
            }
            for (int k = 0; k < np; ++k) {
              const double bik = g * si.div * cp.shape(q, k) * w;
              local.matrix(i, nl + k) += bik;
              local.matrix(nl + k, i) += bik;
            }
          }
          for (int k = 0; k < np; ++k)
            for (int l = 0; l < np; ++l)
              local.matrix(nl + k, nl + l) -= g * cp.shape(q, k) * cp.shape(q, l) * w / problem.lambda;
        }
      },
      &a, &b);
  apply_dirichlet(a, b, boundary_constraints(mesh, us, problem, n));
  const Vector x = sparse_solve(a, b);
  return {std::move(us), std::move(ps), x.head(nu), x.tail(n - nu)};
}

// psi = s^2 t^2 with s = x(1 - x), t = y(1 - y); u = (psi_y, -psi_x).
Vec2 curl_potential_field(const Point& p) {
  const double s = p.x * (1 - p.x), t = p.y * (1 - p.y);
  const double sp = 1 - 2 * p.x, tp = 1 - 2 * p.y;
  return {2 * s * s * t * tp, -2 * t * t * s * sp};
}

Mat2 curl_potential_gradient(const Point& p) {
  const double s = p.x * (1 - p.x), t = p.y * (1 - p.y);
  const double sp = 1 - 2 * p.x, tp = 1 - 2 * p.y;
  Mat2 g;
  g << 4 * s * sp * t * tp, 2 * s * s * (tp * tp - 2 * t),
      -2 * t * t * (sp * sp - 2 * s), -4 * t * tp * s * sp;
  return g;
}

Vec2 curl_potential_laplacian(const Point& p) {
  const double s = p.x * (1 - p.x), t = p.y * (1 - p.y);
  const double sp = 1 - 2 * p.x, tp = 1 - 2 * p.y;
  return {(4 * sp * sp - 8 * s) * t * tp - 12 * s * s * tp, -((4 * tp * tp - 8 * t) * s * sp - 12 * t * t * sp)};
}

Vec2 sine_field(const Point& p) {
  return {std::sin(std::numbers::pi * p.x) * std::sin(std::numbers::pi * p.y), p.x * (1 - p.x) * p.y * (1 - p.y)};
}

Mat2 sine_gradient(const Point& p) {
  const double sx = std::sin(std::numbers::pi * p.x), cx = std::cos(std::numbers::pi * p.x);
  const double sy = std::sin(std::numbers::pi * p.y), cy = std::cos(std::numbers::pi * p.y);
  Mat2 g;
  g << std::numbers::pi * cx * sy, std::numbers::pi * sx * cy, (1 - 2 * p.x) * p.y * (1 - p.y), p.x * (1 - p.x) * (1 - 2 * p.y);
  return g;
}

// div sigma = mu Laplacian u + (mu + lambda) grad div u.
Vec2 sine_body_force(const Point& p, double mu, double lambda) {
  const double sx = std::sin(std::numbers::pi * p.x), cx = std::cos(std::numbers::pi * p.x);
  const double sy = std::sin(std::numbers::pi * p.y), cy = std::cos(std::numbers::pi * p.y);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const Vec2 lap(-2 * pi2 * sx * sy, -2 * p.y * (1 - p.y) - 2 * p.x * (1 - p.x));
  const Vec2 grad_div(-pi2 * sx * sy + (1 - 2 * p.x) * (1 - 2 * p.y), pi2 * cx * cy - 2 * p.x * (1 - p.x));
  return -(mu * lap + (mu + lambda) * grad_div);
}

void ConvergenceTable::compute_orders(double floor) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].l2_order = rows[k].h1_order = nan;
    if (k == 0) continue;
    const auto& a = rows[k - 1];
    auto& r = rows[k];
    const double hr = std::log2(a.h / r.h);
    if (a.l2_error > floor && r.l2_error > floor) r.l2_order = std::log2(a.l2_error / r.l2_error) / hr;
    if (a.h1_error > floor && r.h1_error > floor) r.h1_order = std::log2(a.h1_error / r.h1_error) / hr;
  }
}

std::string_view to_string(LockingMethod m) {
  switch (m) {
    case LockingMethod::PrimalQ1: return "primal-q1";
    case LockingMethod::PrimalQ2: return "primal-q2";
    case LockingMethod::MixedQ2Q1: return "mixed-q2q1";
  }
  return "?";
}

namespace {

std::vector<Mesh> unit_square_sequence(int base, int refinements) {
  if (base < 1 || refinements < 0) throw std::invalid_argument("mesh sequence needs base >= 1, refinements >= 0");
  std::vector<Mesh> meshes{build_rectangle_mesh({0, 0}, {1, 1}, base, base)};
  for (int r = 0; r < refinements; ++r) meshes.push_back(refine_uniform(meshes.back()));
  return meshes;
}

ConvergenceTable run_table(LockingMethod m, double nu, const std::vector<Mesh>& meshes, ElasticityProblem problem,
                           const PointFunction& exact, const GradientFunction& exact_grad) {
  ConvergenceTable table;
  table.method = std::string(to_string(m));
  table.nu = nu;
  for (const Mesh& mesh : meshes) {
    ConvergenceRow row;
    row.h = mesh.h();
    auto errors = [&](const ScalarSpace& s, const Vector& u) {
      const std::span<const double> c(u.data(), static_cast<std::size_t>(u.size()));
      row.l2_error = l2_error(mesh, s, c, 2, exact);
      row.h1_error = h1_error(mesh, s, c, 2, exact_grad);
    };
    if (m == LockingMethod::MixedQ2Q1) {
      const MixedSolution sol = solve_decoupled_mixed(mesh, Pairing::Q2Q1, problem);
      errors(sol.u_space, sol.u);
    } else {
      const PrimalSolution sol = solve_decoupled_primal(mesh, m == LockingMethod::PrimalQ1 ? 1 : 2, problem);
      errors(sol.space, sol.u);
    }
    table.rows.push_back(row);
  }
  table.compute_orders();
  return table;
}

}  // namespace

std::vector<ConvergenceTable> locking_study(const std::vector<double>& nus, int base, int refinements,
                                            const std::vector<LockingMethod>& methods) {
  constexpr double mu = 1.0;
  const std::vector<Mesh> meshes = unit_square_sequence(base, refinements);
  ElasticityProblem problem;
  problem.mu = mu;
  // div u = 0, so -div(2 mu E(u)) = -mu Laplacian u for every lambda.
  problem.body_force = [](const Point& x) -> Vec2 { return -mu * curl_potential_laplacian(x); };
  std::vector<ConvergenceTable> out;
  for (LockingMethod m : methods) {
    for (double nu : nus) {
      problem.lambda = lame_from_poisson(nu, mu);
      out.push_back(run_table(m, nu, meshes, problem, curl_potential_field, curl_potential_gradient));
    }
  }
  return out;
}

ConvergenceTable convergence_study(LockingMethod method, double nu, int base, int refinements) {
  ElasticityProblem problem;
  problem.mu = 1.0;
  problem.lambda = lame_from_poisson(nu, problem.mu);
  problem.body_force = [lambda = problem.lambda](const Point& x) { return sine_body_force(x, 1.0, lambda); };
  return run_table(method, nu, unit_square_sequence(base, refinements), problem, sine_field, sine_gradient);
}

double locking_ratio(const ConvergenceTable& nearly_incompressible, const ConvergenceTable& reference) {
  if (nearly_incompressible.rows.empty() || reference.rows.empty())
    throw std::invalid_argument("locking ratio needs non-empty tables");
  return nearly_incompressible.rows.front().l2_error / reference.rows.front().l2_error;
}

InfSupEntry discrete_infsup(const Mesh& mesh, Pairing pairing, const ScalarFunction& phi, double kappa) {
  if (pairing == Pairing::Q2Q1Q1Q1Star) throw std::invalid_argument("inf-sup check takes Q2Q1 or Q1Q1");
  const int degree = pairing == Pairing::Q2Q1 ? 2 : 1;
  const ScalarSpace us(mesh, degree);
  const ScalarSpace ps(mesh, 1);
  const Index nu = 2 * us.n_dofs();
  const Index np = ps.n_dofs();
  const CellValues uproto(us.element(), gauss_rule(3));
  const CellValues pproto(ps.element(), gauss_rule(3));

  // Interior displacement dofs are numbered first.
  std::vector<char> on_boundary(static_cast<std::size_t>(us.n_dofs()), 0);
  for (const auto& f : mesh.facets())
    for (Index d : us.facet_dofs(f)) on_boundary[static_cast<std::size_t>(d)] = 1;
  std::vector<Index> map(static_cast<std::size_t>(nu), -1);
  Index ni = 0;
  for (Index d = 0; d < us.n_dofs(); ++d)
    if (!on_boundary[static_cast<std::size_t>(d)]) {
      map[static_cast<std::size_t>(2 * d)] = ni++;
      map[static_cast<std::size_t>(2 * d + 1)] = ni++;
    }
  if (ni == 0) throw std::invalid_argument("mesh has no interior displacement dofs");

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ni, ni);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(np, ni);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(np, np);
  ElasticityProblem coeff;
  coeff.phi = phi;
  coeff.kappa = kappa;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    CellValues cu = uproto, cp = pproto;
    cu.reinit(mesh, c);
    cp.reinit(mesh, c);
    const auto ud = us.cell_dofs(c);
    const auto pd = ps.cell_dofs(c);
    for (int q = 0; q < cu.n_qp(); ++q) {
      const double w = cu.JxW(q);
      const double g = coeff.g(cu.point(q));
      for (std::size_t a = 0; a < pd.size(); ++a)
        for (std::size_t e = 0; e < pd.size(); ++e)
          m(pd[a], pd[e]) += cp.shape(q, static_cast<int>(a)) * cp.shape(q, static_cast<int>(e)) * w;
      for (std::size_t i = 0; i < ud.size(); ++i) {
        for (int ci = 0; ci < 2; ++ci) {
          const Index gi = map[static_cast<std::size_t>(2 * ud[i] + ci)];
          if (gi < 0) continue;
          const Vec2& gr = cu.grad(q, static_cast<int>(i));
          for (std::size_t a = 0; a < pd.size(); ++a) b(pd[a], gi) += g * gr[ci] * cp.shape(q, static_cast<int>(a)) * w;
          for (std::size_t j = 0; j < ud.size(); ++j) {
            const Index gj = map[static_cast<std::size_t>(2 * ud[j] + ci)];
            if (gj >= 0) k(gi, gj) += gr.dot(cu.grad(q, static_cast<int>(j))) * w;
          }
        }
      }
    }
  }

  // Basis Z of the M-orthogonal complement of the constants.
  const Vector mone = m * Vector::Ones(np);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(mone);
  const Eigen::MatrixXd z = Eigen::MatrixXd(qr.householderQ()).rightCols(np - 1);

  const Eigen::LLT<Eigen::MatrixXd> kchol(k);
  if (kchol.info() != Eigen::Success) throw SingularSystem("vector Laplacian is not positive definite");
  const Eigen::MatrixXd bz = b.transpose() * z;
  const Eigen::MatrixXd s = bz.transpose() * kchol.solve(bz);
  const Eigen::MatrixXd mz = z.transpose() * m * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()), 0.5 * (mz + mz.transpose()),
                                                                Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw SingularSystem("generalized eigenproblem failed");

  InfSupEntry e;
  e.h = mesh.h();
  e.min_eigenvalue = eig.eigenvalues().minCoeff();
  e.beta = std::sqrt(std::max(0.0, e.min_eigenvalue));
  return e;
}

InfSupReport infsup_study(Pairing pairing, const std::vector<int>& cells_per_side, const ScalarFunction& phi,
                          double kappa, const std::string& coefficient) {
  InfSupReport report;
  report.pairing = pairing;
  report.coefficient = coefficient;
  for (int n : cells_per_side) {
    const Mesh mesh = build_rectangle_mesh({0, 0}, {1, 1}, n, n);
    InfSupEntry e = discrete_infsup(mesh, pairing, phi, kappa);
    e.cells_per_side = n;
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace pfrac
