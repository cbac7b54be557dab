#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pfrac/fem.hpp"

namespace pfrac {

using ScalarFunction = std::function<double(const Point&)>;

/// Linear elasticity with a frozen phase-field coefficient: homogeneous or
/// prescribed displacement on the whole boundary, body force f.
struct ElasticityProblem {
  double mu = 1.0;
  double lambda = 1.0;
  double kappa = 1e-10;
  ScalarFunction phi;          // empty: phi = 1
  PointFunction body_force;    // empty: f = 0
  PointFunction boundary;      // empty: u = 0 on the boundary

  double g(const Point& x) const;
};

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PrimalSolution {
  ScalarSpace space;
  Vector u;  // interleaved components
};

struct MixedSolution {
  ScalarSpace u_space;
  ScalarSpace p_space;
  Vector u;  // interleaved components
  Vector p;
};

/// 2 mu (g E(u), E(w)) + lambda (g div u, div w) = (f, w) with continuous
/// Q1 or Q2 displacements.
PrimalSolution solve_decoupled_primal(const Mesh& mesh, int degree, const ElasticityProblem& problem);

/// 2 mu (g E(u), E(w)) + (g p, div w) = (f, w),
/// (g div u, q) - (g p, q) / lambda = 0,
/// with Q2Q1 or Q1Q1 for (u, p). Requires lambda > 0.
MixedSolution solve_decoupled_mixed(const Mesh& mesh, Pairing pairing, const ElasticityProblem& problem);

/// Divergence-free field u = curl psi with psi = (x(1-x)y(1-y))^2 on the
/// unit square; vanishes with its gradient on the boundary.
Vec2 curl_potential_field(const Point& x);
Mat2 curl_potential_gradient(const Point& x);
Vec2 curl_potential_laplacian(const Point& x);

/// u = (sin(pi x) sin(pi y), x(1-x)y(1-y)) on the unit square, zero on the
/// boundary, and the body force -div sigma(u) that produces it.
Vec2 sine_field(const Point& x);
Mat2 sine_gradient(const Point& x);
Vec2 sine_body_force(const Point& x, double mu, double lambda);

struct ConvergenceRow {
  double h = 0.0;
  double l2_error = 0.0;
  double h1_error = 0.0;
  double l2_order = 0.0;  // NaN on the first row or below the error floor
  double h1_order = 0.0;
};

struct ConvergenceTable {
  std::string method;
  double nu = 0.0;
  std::vector<ConvergenceRow> rows;

  /// Fills the observed orders log2(e_{k-1} / e_k) for errors above `floor`.
  void compute_orders(double floor = 1e-12);
};

enum class LockingMethod { PrimalQ1, PrimalQ2, MixedQ2Q1 };
std::string_view to_string(LockingMethod m);

/// Error tables for the divergence-free curl field with mu = 1, f = -mu
/// Laplacian u and homogeneous boundary data, on unit-square meshes with
/// base x base cells refined `refinements` times.
std::vector<ConvergenceTable> locking_study(const std::vector<double>& nus, int base, int refinements,
                                            const std::vector<LockingMethod>& methods = {
                                                LockingMethod::PrimalQ1, LockingMethod::PrimalQ2,
                                                LockingMethod::MixedQ2Q1});

/// Error table of one method for the sine field with mu = 1 and the given
/// Poisson ratio.
ConvergenceTable convergence_study(LockingMethod method, double nu, int base, int refinements);

/// L2 error ratio of the two tables on their coarsest mesh.
double locking_ratio(const ConvergenceTable& nearly_incompressible, const ConvergenceTable& reference);

struct InfSupEntry {
  int cells_per_side = 0;
  double h = 0.0;
  double beta = 0.0;
  double min_eigenvalue = 0.0;
};

struct InfSupReport {
  Pairing pairing = Pairing::Q2Q1;
  std::string coefficient;
  std::vector<InfSupEntry> entries;
};

/// Discrete inf-sup constant
///   beta_h = min_q max_w (q, g div w) / (|q|_L2 |grad w|_L2)
/// over pressures orthogonal to constants and displacements vanishing on the
/// boundary, from the dense generalized eigenproblem
/// B K^-1 B^T q = theta M q. Intended for small meshes.
InfSupEntry discrete_infsup(const Mesh& mesh, Pairing pairing, const ScalarFunction& phi = {},
                            double kappa = 1e-10);

/// Runs discrete_infsup on n x n unit-square meshes.
InfSupReport infsup_study(Pairing pairing, const std::vector<int>& cells_per_side, const ScalarFunction& phi = {},
                          double kappa = 1e-10, const std::string& coefficient = "g = 1");

}  // namespace pfrac
