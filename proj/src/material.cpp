#include "pfrac/material.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pfrac {

double lame_from_poisson(double nu, double mu) {
  if (!(nu >= 0.0 && nu < 0.5)) {
    std::ostringstream msg;
    msg << "Poisson ratio nu = " << nu
        << " outside [0, 0.5): lambda = 2 nu mu / (1 - 2 nu) blows up as nu -> 0.5";
    throw std::invalid_argument(msg.str());
  }
  if (!(mu > 0.0)) throw std::invalid_argument("shear modulus mu must be positive");
  return 2.0 * nu * mu / (1.0 - 2.0 * nu);
}

MaterialParams MaterialParams::from_poisson(double nu, double mu, double gc, double kappa, double eps) {
  MaterialParams m;
  m.nu = nu;
  m.mu = mu;
  m.lambda = lame_from_poisson(nu, mu);
  m.gc = gc;
  m.kappa = kappa;
  m.eps = eps;
  return m;
}

void MaterialParams::validate() const {
  const double expected = lame_from_poisson(nu, mu);
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (std::abs(lambda - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
    throw std::invalid_argument("lambda is inconsistent with (nu, mu)");
  if (!(gc > 0.0)) throw std::invalid_argument("G_c must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

Strain2 strain(const Mat2& grad_u) { return Strain2::from_matrix(grad_u); }

namespace {

struct Eigen2 {
  double l1, l2;
  Vec2 v1, v2;
  bool degenerate;
};

Eigen2 eigen_decompose(const Strain2& e) {
  const double mean = 0.5 * (e.xx + e.yy);
  const double half_diff = 0.5 * (e.xx - e.yy);
  const double radius = std::hypot(half_diff, e.xy);
  Eigen2 out{mean + radius, mean - radius, Vec2::UnitX(), Vec2::UnitY(), false};
  if (2.0 * radius < 1e-12 * (std::abs(out.l1) + std::abs(out.l2) + 1e-30)) {
    out.degenerate = true;
    return out;
  }
  const double theta = 0.5 * std::atan2(e.xy, half_diff);
  out.v1 = Vec2(std::cos(theta), std::sin(theta));
  out.v2 = Vec2(-std::sin(theta), std::cos(theta));
  return out;
}

Strain2 outer(const Vec2& a, double scale) {
  return {scale * a.x() * a.x(), scale * a.y() * a.y(), scale * a.x() * a.y()};
}

}  // namespace

SpectralSplit spectral_split(const Strain2& e) {
  const Eigen2 eig = eigen_decompose(e);
  SpectralSplit s;
  s.lambda1 = eig.l1;
  s.lambda2 = eig.l2;
  s.v1 = eig.v1;
  s.v2 = eig.v2;
  if (eig.l2 >= 0.0) {
    s.plus = e;
  } else if (eig.l1 > 0.0) {
    s.plus = outer(eig.v1, eig.l1);
    if (eig.degenerate) s.plus = Strain2{eig.l1, 0.0, 0.0};
  }
  s.minus = e - s.plus;
  return s;
}

Strain2 spectral_split_derivative(const Strain2& e, const Strain2& de) {
  const Eigen2 eig = eigen_decompose(e);
  if (eig.l2 > 0.0) return de;
  if (eig.l1 <= 0.0) return Strain2{};
  const Mat2 d = de.matrix();
  const double h1 = positive_indicator(eig.l1);
  const double h2 = positive_indicator(eig.l2);
  const double d11 = eig.v1.dot(d * eig.v1);
  const double d22 = eig.v2.dot(d * eig.v2);
  const double d12 = eig.v1.dot(d * eig.v2);
  // Rotation of the eigenbasis contributes (l1+ - l2+) / (l1 - l2); in the
  // degenerate limit the ratio tends to H(l).
  const double ratio = eig.degenerate ? h1 : (positive_part(eig.l1) - positive_part(eig.l2)) / (eig.l1 - eig.l2);
  Strain2 out = outer(eig.v1, h1 * d11) + outer(eig.v2, h2 * d22);
  const Vec2& a = eig.v1;
  const Vec2& b = eig.v2;
  out += Strain2{2.0 * ratio * d12 * a.x() * b.x(), 2.0 * ratio * d12 * a.y() * b.y(),
                 ratio * d12 * (a.x() * b.y() + a.y() * b.x())};
  return out;
}

StressState stress_plus_minus(const Strain2& e, double p, double mu) {
  const SpectralSplit split = spectral_split(e);
  StressState s;
  s.p_plus = positive_part(p);
  s.sigma_plus = stress_from(split.plus, 2.0 * mu, s.p_plus);
  s.sigma_minus = stress_from(split.minus, 2.0 * mu, p - s.p_plus);
  return s;
}

}  // namespace pfrac
