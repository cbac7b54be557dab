#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>

#include "pfrac/scenarios.hpp"

namespace pfrac::testing {

inline double distance_to_segment(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double s = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return std::hypot(p.x - a.x - s * dx, p.y - a.y - s * dy);
}

/// A shear state with a diffuse crack running from the slit tip towards the
/// lower left, a sheared displacement with noise, a pressure of mixed sign
/// and nodal multipliers whose active set sits at least `margin` away from
/// the switching surface tau + c (phi - phi_prev) = 0.
inline SystemState random_crack_state(const Scenario& sc, unsigned seed, double margin = 1e-4) {
  const DofMap& d = sc.dofs();
  const Mesh& mesh = sc.mesh();
  const MaterialParams& mat = sc.material();
  const double c = sc.model().complementarity().c;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.2, 1.0);
  SystemState st = sc.initial_state();

  const ScalarSpace& us = d.displacement_space();
  for (Index i = 0; i < us.n_dofs(); ++i) {
    const Point& x = us.support_point(i);
    st.values[d.u_dof(i, 0)] = -0.002 * x.y + 2e-4 * u(rng);
    st.values[d.u_dof(i, 1)] = 2e-4 * u(rng);
  }
  for (Index i = 0; i < d.p().size; ++i) st.values[d.p_dof(i)] = mat.lambda * 1e-3 * u(rng);

  const Point tip{5.0, 5.0}, end{3.0, 3.0};
  for (Index i = 0; i < mesh.n_nodes(); ++i) {
    const double dist = distance_to_segment(mesh.node(i), tip, end);
    const double phi = 1.0 - 0.95 * std::exp(-dist / mat.eps) + 0.02 * u(rng);
    st.values[d.phi_dof(i)] = phi;
    const bool active = u(rng) > 0.0;
    const double gap = 0.05 * pos(rng);
    st.phi_prev[i] = active ? phi - gap : phi + gap;
    if (!d.tau().empty()) {
      // Active: tau > 0 and phi > phi_prev. Inactive: tau - c gap <= -margin.
      const double room = c * gap - margin;
      st.values[d.tau_dof(i)] = active ? 1e-3 * pos(rng) : room * (room > 0.0 ? 0.5 * (u(rng) + 1.0) : 1.0);
    }
  }
  return st;
}

/// Relative error |J d - FD| / |J d| of the central difference with step h
/// along direction dir.
inline double fd_relative_error(const PhaseFieldModel& model, const SystemState& st, const SparseMatrix& jac,
                                const Vector& dir, double h) {
  SystemState a = st, b = st;
  a.values += h * dir;
  b.values -= h * dir;
  const Vector fd = (model.residual(a) - model.residual(b)) / (2.0 * h);
  const Vector an = jac * dir;
  return (fd - an).norm() / std::max(an.norm(), 1e-300);
}

namespace detail {

// Signs of everything the residual switches on: the pressure and the strain
// eigenvalues at each quadrature point, and the nodal active set.
inline std::vector<char> switch_pattern(const PhaseFieldModel& model, const SystemState& st) {
  const DofMap& d = model.dofs();
  const Mesh& mesh = model.mesh();
  std::vector<char> out = model.active_set(st);
  const auto u = st.u(d);
  const std::span<const double> uc(u.data(), static_cast<std::size_t>(u.size()));
  const QuadratureRule rule = gauss_rule(model.quadrature_order());
  const bool mixed = !d.p().empty();
  const auto p = st.p(d);
  const std::span<const double> pc(p.data(), static_cast<std::size_t>(p.size()));
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    for (int q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q].x(), eta = rule.points[q].y();
      const SpectralSplit s = spectral_split(strain(evaluate_gradient(mesh, d.displacement_space(), uc, 2, c, xi, eta)));
      out.push_back(s.lambda1 > 0.0);
      out.push_back(s.lambda2 > 0.0);
      if (mixed) out.push_back(evaluate_field(d.scalar_space(), pc, 1, c, xi, eta).x() > 0.0);
      else out.push_back(s.plus.trace() + s.minus.trace() > 0.0);
    }
  }
  if (model.mode().irreversibility == Irreversibility::Penalty)
    for (Index i = 0; i < d.phi().size; ++i) out.push_back(st.values[d.phi_dof(i)] > st.phi_prev[i]);
  return out;
}

}  // namespace detail

/// True when the central-difference stencil st +- h dir changes any switch of
/// the residual (split, positive pressure part, active set), so that the
/// difference quotient straddles a kink.
inline bool stencil_crosses_kink(const PhaseFieldModel& model, const SystemState& st, const Vector& dir, double h) {
  SystemState a = st, b = st;
  a.values += h * dir;
  b.values -= h * dir;
  const std::vector<char> base = detail::switch_pattern(model, st);
  return detail::switch_pattern(model, a) != base || detail::switch_pattern(model, b) != base;
}

/// Random direction with block scales matched to the state's magnitudes.
inline Vector random_direction(const DofMap& d, double lambda, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector dir(d.n_dofs());
  for (Index i = 0; i < dir.size(); ++i) {
    double s = 1e-3;
    if (d.p().contains(i)) s = 1e-3 * std::max(lambda, 1.0);
    if (d.phi().contains(i)) s = 1e-2;
    dir[i] = s * u(rng);
  }
  return dir;
}

}  // namespace pfrac::testing
