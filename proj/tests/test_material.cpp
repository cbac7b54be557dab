#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pfrac/material.hpp"

using namespace pfrac;

namespace {

Strain2 random_strain(std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Lame, ShearTableRows) {
  const double mu = 80.77e3;
  EXPECT_LT(rel(lame_from_poisson(0.3, mu), 121.15e3), 5e-4);
  EXPECT_LT(rel(lame_from_poisson(0.45, mu), 726.93e3), 5e-4);
  EXPECT_LT(rel(lame_from_poisson(0.49, mu), 3957.73e3), 5e-4);
  EXPECT_LT(rel(lame_from_poisson(0.499, mu), 40304.20e3), 5e-4);
  EXPECT_LT(rel(lame_from_poisson(0.4999, mu), 403769.00e3), 5e-4);
}

TEST(Lame, DefaultParameterTables) {
  EXPECT_LT(rel(lame_from_poisson(0.29999, 80.77), 121.15), 5e-4);
  EXPECT_LT(rel(lame_from_poisson(0.18, 10.95), 6.16), 5e-4);
}

TEST(Lame, LPanelNearlyIncompressibleRows) {
  EXPECT_LT(rel(lame_from_poisson(0.499, 10.95e3), 5464.05e3), 5e-4);
  EXPECT_LT(rel(lame_from_poisson(0.4999, 10.95e3), 54739.10e3), 5e-4);
}

TEST(Lame, RejectsIncompressibleLimit) {
  EXPECT_THROW(lame_from_poisson(0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(lame_from_poisson(0.6, 1.0), std::invalid_argument);
  EXPECT_THROW(lame_from_poisson(-1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(lame_from_poisson(0.3, 0.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(lame_from_poisson(0.0, 3.0), 0.0);
}

TEST(Lame, MonotoneInPoissonRatio) {
  double last = -1.0;
  for (double nu = 0.0; nu < 0.5; nu += 0.01) {
    const double l = lame_from_poisson(nu, 5.0);
    EXPECT_GT(l, last);
    last = l;
  }
}

TEST(Degradation, EndpointsAndDerivative) {
  const double k = 1e-10;
  EXPECT_DOUBLE_EQ(degradation(1.0, k), 1.0);
  EXPECT_DOUBLE_EQ(degradation(0.0, k), k);
  for (double phi : {0.1, 0.4, 0.9}) {
    const double h = 1e-6;
    const double fd = (degradation(phi + h, k) - degradation(phi - h, k)) / (2 * h);
    EXPECT_NEAR(degradation_derivative(phi, k), fd, 1e-8);
  }
}

TEST(SpectralSplit, IdentitiesOnRandomStrains) {
  std::mt19937 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const Strain2 e = random_strain(rng);
    const SpectralSplit s = spectral_split(e);
    const Strain2 sum = s.plus + s.minus;
    EXPECT_NEAR(sum.xx, e.xx, 1e-12);
    EXPECT_NEAR(sum.yy, e.yy, 1e-12);
    EXPECT_NEAR(sum.xy, e.xy, 1e-12);
    const auto ep = Eigen::SelfAdjointEigenSolver<Mat2>(s.plus.matrix()).eigenvalues();
    const auto em = Eigen::SelfAdjointEigenSolver<Mat2>(s.minus.matrix()).eigenvalues();
    EXPECT_GE(ep.minCoeff(), -1e-12);
    EXPECT_LE(em.maxCoeff(), 1e-12);
    // E+ and E- are orthogonal.
    EXPECT_NEAR(contract(s.plus, s.minus), 0.0, 1e-12);
  }
}

TEST(SpectralSplit, MatchesDenseEigensolver) {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Strain2 e = random_strain(rng, 3.0);
    Eigen::SelfAdjointEigenSolver<Mat2> es(e.matrix());
    Mat2 plus = Mat2::Zero();
    for (int a = 0; a < 2; ++a)
      plus += std::max(es.eigenvalues()[a], 0.0) * es.eigenvectors().col(a) * es.eigenvectors().col(a).transpose();
    EXPECT_LT((spectral_split(e).plus.matrix() - plus).norm(), 1e-12);
  }
}

TEST(SpectralSplit, DerivativeMatchesFiniteDifferences) {
  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Strain2 e = random_strain(rng);
    const Strain2 de = random_strain(rng);
    const SpectralSplit s = spectral_split(e);
    // Stay away from sign changes and repeated eigenvalues.
    if (std::abs(s.lambda1) < 1e-2 || std::abs(s.lambda2) < 1e-2 || s.lambda1 - s.lambda2 < 1e-2) continue;
    const double h = 1e-6;
    const Strain2 fd = (1.0 / (2 * h)) * (spectral_split(e + h * de).plus - spectral_split(e - h * de).plus);
    const Strain2 an = spectral_split_derivative(e, de);
    EXPECT_NEAR(an.xx, fd.xx, 1e-6);
    EXPECT_NEAR(an.yy, fd.yy, 1e-6);
    EXPECT_NEAR(an.xy, fd.xy, 1e-6);
  }
}

TEST(SpectralSplit, IsotropicStrain) {
  const SpectralSplit pos = spectral_split({0.5, 0.5, 0.0});
  EXPECT_NEAR(pos.plus.xx, 0.5, 1e-15);
  EXPECT_NEAR(pos.minus.xx, 0.0, 1e-15);
  const SpectralSplit neg = spectral_split({-0.5, -0.5, 0.0});
  EXPECT_NEAR(neg.plus.xx, 0.0, 1e-15);
  EXPECT_NEAR(neg.minus.yy, -0.5, 1e-15);
}

TEST(StressSplit, SumsToLinearStress) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> par(0.1, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const Strain2 e = random_strain(rng);
    const double mu = par(rng), lambda = par(rng);
    const double p = lambda * e.trace();
    const StressState s = stress_plus_minus(e, p, mu);
    const Stress2 sum = s.sigma_plus + s.sigma_minus;
    const Stress2 ref = stress(e, lambda, mu);
    const double scale = std::max(1.0, std::abs(ref.xx) + std::abs(ref.yy) + std::abs(ref.xy));
    EXPECT_NEAR(sum.xx, ref.xx, 1e-12 * scale);
    EXPECT_NEAR(sum.yy, ref.yy, 1e-12 * scale);
    EXPECT_NEAR(sum.xy, ref.xy, 1e-12 * scale);
    EXPECT_GE(s.p_plus, 0.0);
  }
}

TEST(MaterialParams, ValidateCatchesInconsistentLambda) {
  MaterialParams m = MaterialParams::from_poisson(0.3, 80.77, 2.7e-3, 1e-10, 0.1);
  EXPECT_NO_THROW(m.validate());
  m.lambda *= 1.1;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  MaterialParams bad = MaterialParams::from_poisson(0.3, 80.77, 2.7e-3, 1e-10, 0.1);
  bad.eps = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
