#include <algorithm>
#include <cmath>
#include <cstdint>

#include <gtest/gtest.h>

#include "pfrac/analysis.hpp"
#include "pfrac/material.hpp"

using namespace pfrac;

namespace {

Mesh unit_square(int n) { return build_rectangle_mesh({0, 0}, {1, 1}, n, n); }

// (g (div u_h - p_h / lambda), q_k) for every Q1 basis function q_k.
Vector pressure_equation_residual(const Mesh& mesh, const MixedSolution& s, const ElasticityProblem& prob,
                                  double* scale) {
  const double lambda = prob.lambda;
  const CellValues proto_u(s.u_space.element(), gauss_rule(3));
  const CellValues proto_p(s.p_space.element(), gauss_rule(3));
  Vector r = Vector::Zero(s.p_space.n_dofs());
  *scale = 0.0;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    CellValues cu = proto_u, cp = proto_p;
    cu.reinit(mesh, c);
    cp.reinit(mesh, c);
    const auto ud = s.u_space.cell_dofs(c);
    const auto pd = s.p_space.cell_dofs(c);
    for (int q = 0; q < cu.n_qp(); ++q) {
      double div = 0.0, p = 0.0;
      for (std::size_t a = 0; a < ud.size(); ++a) {
        div += s.u[2 * ud[a]] * cu.grad(q, static_cast<int>(a)).x();
        div += s.u[2 * ud[a] + 1] * cu.grad(q, static_cast<int>(a)).y();
      }
      for (std::size_t k = 0; k < pd.size(); ++k) p += s.p[pd[k]] * cp.shape(q, static_cast<int>(k));
      const double g = prob.g(cu.point(q));
      for (std::size_t k = 0; k < pd.size(); ++k) {
        r[pd[k]] += g * (div - p / lambda) * cp.shape(q, static_cast<int>(k)) * cu.JxW(q);
        *scale += g * std::abs(div) * cp.shape(q, static_cast<int>(k)) * cu.JxW(q);
      }
    }
  }
  return r;
}

}  // namespace

TEST(Manufactured, PrimalOrders) {
  const ConvergenceTable q1 = convergence_study(LockingMethod::PrimalQ1, 0.3, 2, 4);
  const ConvergenceTable q2 = convergence_study(LockingMethod::PrimalQ2, 0.3, 2, 3);
  EXPECT_GT(q1.rows.back().l2_order, 1.9);
  EXPECT_GT(q1.rows.back().h1_order, 0.95);
  EXPECT_GT(q2.rows.back().l2_order, 2.9);
  EXPECT_GT(q2.rows.back().h1_order, 1.9);
  for (std::size_t k = 1; k < q1.rows.size(); ++k) EXPECT_LT(q1.rows[k].l2_error, q1.rows[k - 1].l2_error);
}

TEST(Manufactured, MixedOrdersSurviveIncompressibility) {
  for (double nu : {0.3, 0.4999}) {
    const ConvergenceTable t = convergence_study(LockingMethod::MixedQ2Q1, nu, 2, 3);
    EXPECT_GT(t.rows.back().l2_order, 2.8) << nu;
    EXPECT_GT(t.rows.back().h1_order, 1.9) << nu;
  }
}

TEST(Locking, PrimalQ1LocksMixedDoesNot) {
  const auto tables = locking_study({0.3, 0.4999}, 4, 1);
  ASSERT_EQ(tables.size(), 6u);
  EXPECT_GT(locking_ratio(tables[1], tables[0]), 2.5);
  EXPECT_LT(locking_ratio(tables[5], tables[4]), 1.1);
  EXPECT_THROW(locking_ratio(ConvergenceTable{}, tables[0]), std::invalid_argument);
}

TEST(Mixed, AffineFieldGivesConstantPressure) {
  // u = (x, 0): div u = 1 and sigma is constant, so f = 0 and p = lambda.
  ElasticityProblem prob;
  prob.mu = 1.5;
  prob.lambda = 7.0;
  prob.boundary = [](const Point& x) { return Vec2(x.x, 0.0); };
  for (Pairing p : {Pairing::Q2Q1, Pairing::Q1Q1}) {
    const MixedSolution s = solve_decoupled_mixed(unit_square(3), p, prob);
    for (Index i = 0; i < s.p.size(); ++i) EXPECT_NEAR(s.p[i], 7.0, 1e-10);
    for (Index i = 0; i < s.u_space.n_dofs(); ++i) {
      EXPECT_NEAR(s.u[2 * i], s.u_space.support_point(i).x, 1e-12);
      EXPECT_NEAR(s.u[2 * i + 1], 0.0, 1e-12);
    }
  }
}

TEST(Mixed, ZeroDataGivesZero) {
  ElasticityProblem prob;
  prob.lambda = 3.0;
  const MixedSolution s = solve_decoupled_mixed(unit_square(4), Pairing::Q2Q1, prob);
  EXPECT_EQ(s.u.norm(), 0.0);
  EXPECT_EQ(s.p.norm(), 0.0);
  const PrimalSolution q = solve_decoupled_primal(unit_square(4), 2, prob);
  EXPECT_EQ(q.u.norm(), 0.0);
}

TEST(Mixed, DivergenceFreeFieldHasVanishingPressure) {
  ElasticityProblem prob;
  prob.mu = 1.0;
  prob.lambda = lame_from_poisson(0.4999, 1.0);
  prob.body_force = [](const Point& x) -> Vec2 { return -curl_potential_laplacian(x); };
  double last = 1e300;
  for (int n : {4, 8, 16}) {
    const MixedSolution s = solve_decoupled_mixed(unit_square(n), Pairing::Q2Q1, prob);
    const double pmax = s.p.cwiseAbs().maxCoeff();
    EXPECT_LT(pmax, last);
    last = pmax;
  }
  EXPECT_LT(last, 1e-3);
}

TEST(Mixed, PressureIsProjectedVolumetricStress) {
  // Property: for random frozen phase fields and Poisson ratios the mixed
  // pressure satisfies (g (div u - p / lambda), q) = 0 for every q, so at phi = 1
  // the mixed and primal problems share the same stationarity conditions.
  std::uint32_t seed = 12345;
  auto next = [&seed] {
    seed = seed * 1664525u + 1013904223u;
    return static_cast<double>(seed >> 8) / static_cast<double>(1u << 24);
  };
  for (int trial = 0; trial < 6; ++trial) {
    const double nu = 0.1 + 0.3999 * next();
    const double cx = next(), cy = next();
    ElasticityProblem prob;
    prob.mu = 1.0;
    prob.lambda = lame_from_poisson(nu, 1.0);
    if (trial % 2) prob.phi = [cx, cy](const Point& x) { return std::min(1.0, std::hypot(x.x - cx, x.y - cy) * 3); };
    prob.body_force = [lambda = prob.lambda](const Point& x) { return sine_body_force(x, 1.0, lambda); };
    const Mesh mesh = unit_square(6);
    const MixedSolution s = solve_decoupled_mixed(mesh, Pairing::Q2Q1, prob);
    double scale = 0.0;
    const Vector r = pressure_equation_residual(mesh, s, prob, &scale);
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-10 * scale) << trial;
  }
}

TEST(Mixed, PrimalAndMixedAgreeAtModerateCompressibility) {
  ElasticityProblem prob;
  prob.mu = 1.0;
  prob.lambda = lame_from_poisson(0.3, 1.0);
  prob.body_force = [lambda = prob.lambda](const Point& x) { return sine_body_force(x, 1.0, lambda); };
  const Mesh mesh = unit_square(16);
  const PrimalSolution a = solve_decoupled_primal(mesh, 2, prob);
  const MixedSolution b = solve_decoupled_mixed(mesh, Pairing::Q2Q1, prob);
  EXPECT_LT((a.u - b.u).norm() / a.u.norm(), 1e-3);
}

TEST(Mixed, RejectsBadInput) {
  ElasticityProblem prob;
  prob.lambda = 0.0;
  EXPECT_THROW(solve_decoupled_mixed(unit_square(2), Pairing::Q2Q1, prob), std::invalid_argument);
  prob.lambda = 1.0;
  EXPECT_THROW(solve_decoupled_mixed(unit_square(2), Pairing::Q2Q1Q1Q1Star, prob), std::invalid_argument);
  EXPECT_THROW(solve_decoupled_primal(unit_square(2), 3, prob), std::invalid_argument);
}

TEST(InfSup, Q2Q1StableQ1Q1Not) {
  const InfSupReport stable = infsup_study(Pairing::Q2Q1, {2, 4, 6});
  for (const auto& e : stable.entries) EXPECT_GT(e.beta, 0.3) << e.cells_per_side;
  const InfSupReport unstable = infsup_study(Pairing::Q1Q1, {4});
  EXPECT_LT(unstable.entries[0].beta, 1e-6);
}

TEST(InfSup, InvariantUnderTranslation) {
  const InfSupEntry a = discrete_infsup(unit_square(4), Pairing::Q2Q1);
  const InfSupEntry b = discrete_infsup(build_rectangle_mesh({7, -3}, {8, -2}, 4, 4), Pairing::Q2Q1);
  EXPECT_NEAR(a.beta, b.beta, 1e-9);
}

TEST(InfSup, ScalesWithConstantDegradation) {
  const InfSupEntry one = discrete_infsup(unit_square(4), Pairing::Q2Q1);
  const double kappa = 1e-4;
  const InfSupEntry broken = discrete_infsup(unit_square(4), Pairing::Q2Q1, [](const Point&) { return 0.0; }, kappa);
  EXPECT_NEAR(broken.beta / one.beta, kappa, 1e-6 * kappa);
}

TEST(Orders, FloorGuard) {
  ConvergenceTable t;
  t.rows = {{0.5, 1e-2, 1e-1}, {0.25, 2.5e-3, 5e-2}, {0.125, 1e-14, 2.5e-2}};
  t.compute_orders();
  EXPECT_TRUE(std::isnan(t.rows[0].l2_order));
  EXPECT_NEAR(t.rows[1].l2_order, 2.0, 1e-12);
  EXPECT_NEAR(t.rows[1].h1_order, 1.0, 1e-12);
  EXPECT_TRUE(std::isnan(t.rows[2].l2_order));
  EXPECT_NEAR(t.rows[2].h1_order, 1.0, 1e-12);
}

TEST(Fields, CurlPotentialLaplacianMatchesFiniteDifferences) {
  const double h = 1e-4;
  for (const Point x : {Point{0.3, 0.6}, Point{0.71, 0.2}, Point{0.5, 0.5}}) {
    const Mat2 gxp = curl_potential_gradient({x.x + h, x.y}), gxm = curl_potential_gradient({x.x - h, x.y});
    const Mat2 gyp = curl_potential_gradient({x.x, x.y + h}), gym = curl_potential_gradient({x.x, x.y - h});
    const Vec2 lap = (gxp.col(0) - gxm.col(0) + gyp.col(1) - gym.col(1)) / (2 * h);
    EXPECT_LT((lap - curl_potential_laplacian(x)).norm(), 1e-6);
    // div u = 0.
    EXPECT_NEAR(curl_potential_gradient(x).trace(), 0.0, 1e-14);
    // Gradient against the field.
    const Vec2 dx = (curl_potential_field({x.x + h, x.y}) - curl_potential_field({x.x - h, x.y})) / (2 * h);
    EXPECT_LT((dx - curl_potential_gradient(x).col(0)).norm(), 1e-7);
  }
}

TEST(Fields, SineBodyForceIsMinusDivergenceOfStress) {
  const double mu = 1.3, lambda = 4.0, h = 1e-4;
  auto sigma = [&](const Point& p) -> Mat2 {
    const Mat2 g = sine_gradient(p);
    return mu * (g + g.transpose()) + lambda * g.trace() * Mat2::Identity();
  };
  for (const Point x : {Point{0.3, 0.6}, Point{0.8, 0.1}}) {
    const Mat2 dx = (sigma({x.x + h, x.y}) - sigma({x.x - h, x.y})) / (2 * h);
    const Mat2 dy = (sigma({x.x, x.y + h}) - sigma({x.x, x.y - h})) / (2 * h);
    const Vec2 div(dx(0, 0) + dy(0, 1), dx(1, 0) + dy(1, 1));
    EXPECT_LT((-div - sine_body_force(x, mu, lambda)).norm(), 1e-6);
    const Vec2 gx = (sine_field({x.x + h, x.y}) - sine_field({x.x - h, x.y})) / (2 * h);
    EXPECT_LT((gx - sine_gradient(x).col(0)).norm(), 1e-7);
  }
}
