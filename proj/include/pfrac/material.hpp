#pragma once

#include <array>

#include "pfrac/fem.hpp"

namespace pfrac {

/// Symmetric 2x2 tensor stored as (xx, yy, xy). The tag keeps strains and
/// stresses apart at compile time.
template <class Tag>
struct SymTensor2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  double trace() const { return xx + yy; }
  Mat2 matrix() const { return (Mat2() << xx, xy, xy, yy).finished(); }

  static SymTensor2 identity() { return {1.0, 1.0, 0.0}; }
  static SymTensor2 from_matrix(const Mat2& m) { return {m(0, 0), m(1, 1), 0.5 * (m(0, 1) + m(1, 0))}; }

  SymTensor2& operator+=(const SymTensor2& o) {
    xx += o.xx;
    yy += o.yy;
    xy += o.xy;
    return *this;
  }
  SymTensor2& operator-=(const SymTensor2& o) {
    xx -= o.xx;
    yy -= o.yy;
    xy -= o.xy;
    return *this;
  }
  SymTensor2& operator*=(double s) {
    xx *= s;
    yy *= s;
    xy *= s;
    return *this;
  }
  friend SymTensor2 operator+(SymTensor2 a, const SymTensor2& b) { return a += b; }
  friend SymTensor2 operator-(SymTensor2 a, const SymTensor2& b) { return a -= b; }
  friend SymTensor2 operator*(double s, SymTensor2 a) { return a *= s; }
  friend SymTensor2 operator-(SymTensor2 a) { return a *= -1.0; }
};

struct StrainTag {};
struct StressTag {};
using Strain2 = SymTensor2<StrainTag>;
using Stress2 = SymTensor2<StressTag>;

/// Frobenius product A : B.
template <class A, class B>
double contract(const SymTensor2<A>& a, const SymTensor2<B>& b) {
  return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy;
}

/// Stress-like tensor 2*mu*E + s*I.
inline Stress2 stress_from(const Strain2& e, double two_mu, double s) {
  return {two_mu * e.xx + s, two_mu * e.yy + s, two_mu * e.xy};
}

/// Constitutive parameters in kN, mm.
struct MaterialParams {
  double lambda = 0.0;  // kN/mm^2
  double mu = 0.0;      // kN/mm^2
  double nu = 0.0;
  double gc = 0.0;      // kN/mm
  double kappa = 1e-10;
  double eps = 0.0;     // mm

  /// Builds the set with lambda derived from (nu, mu).
  static MaterialParams from_poisson(double nu, double mu, double gc, double kappa, double eps);

  /// Throws std::invalid_argument when a field is out of range or lambda is
  /// inconsistent with (nu, mu).
  void validate() const;
};

/// First Lame parameter lambda = 2 nu mu / (1 - 2 nu); rejects nu >= 0.5.
double lame_from_poisson(double nu, double mu);

Strain2 strain(const Mat2& grad_u);

/// g(phi) = (1 - kappa) phi^2 + kappa.
inline double degradation(double phi, double kappa) { return (1.0 - kappa) * phi * phi + kappa; }
inline double degradation_derivative(double phi, double kappa) { return 2.0 * (1.0 - kappa) * phi; }

struct SpectralSplit {
  double lambda1 = 0.0;  // lambda1 >= lambda2
  double lambda2 = 0.0;
  Vec2 v1 = Vec2::UnitX();
  Vec2 v2 = Vec2::UnitY();
  Strain2 plus;
  Strain2 minus;
};

/// Closed-form eigen-decomposition E = sum_a lambda_a v_a v_a^T with
/// E+ = sum_a max(lambda_a, 0) v_a v_a^T and E- = E - E+.
SpectralSplit spectral_split(const Strain2& e);

/// Directional derivative of E -> E+ at e in direction de. The kink
/// max(x, 0) uses the zero subgradient at x = 0.
Strain2 spectral_split_derivative(const Strain2& e, const Strain2& de);

struct StressState {
  Stress2 sigma_plus;
  Stress2 sigma_minus;
  double p_plus = 0.0;
};

/// sigma+ = 2 mu E+ + max(p, 0) I, sigma- = 2 mu (E - E+) + (p - max(p, 0)) I.
StressState stress_plus_minus(const Strain2& e, double p, double mu);

/// Linear elastic stress 2 mu E + lambda tr(E) I.
inline Stress2 stress(const Strain2& e, double lambda, double mu) { return stress_from(e, 2.0 * mu, lambda * e.trace()); }

/// Heaviside with H(0) = 0.
inline double positive_indicator(double x) { return x > 0.0 ? 1.0 : 0.0; }
inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace pfrac
