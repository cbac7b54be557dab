#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "pfrac/fem.hpp"
#include "pfrac/material.hpp"
#include "pfrac/mesh.hpp"

namespace pfrac {

enum class FormulationKind { StandardQ1Q1, StandardQ2Q1, MixedQ2Q1Q1Q1Star };

enum class Irreversibility { Multiplier, Penalty };

struct FormulationMode {
  FormulationKind kind = FormulationKind::MixedQ2Q1Q1Q1Star;
  Irreversibility irreversibility = Irreversibility::Multiplier;
  /// Keep g(phi) in the pressure equation (mixed mode only).
  bool degrade_pressure_mass = true;
  /// Scale the tensile driving force by mu.
  bool use_mu_in_driving_force = true;
  /// Standard modes: degrade only the tensile part of the energy (spectral
  /// split of E, positive part of tr E). False degrades the whole stress.
  bool split_standard = true;

  bool operator==(const FormulationMode&) const = default;
};

Pairing pairing_for(FormulationKind kind);
bool is_mixed(FormulationKind kind);
std::string_view to_string(FormulationKind kind);

/// Exact: the consistent Jacobian. Staggered: drops the derivatives of the
/// momentum and pressure rows with respect to phi, so one Newton step solves
/// the elastic fields at frozen phi and then updates phi against the new
/// displacement. Used as a fallback during unstable crack growth.
enum class JacobianKind { Exact, Staggered };

struct ComplementarityParams {
  double c = 0.0;        // NCP scaling, kN/mm^2
  double penalty = 0.0;  // penalty parameter gamma, kN/mm^2

  /// c = 100 G_c / eps and gamma = 1e5 G_c / eps.
  static ComplementarityParams defaults(const MaterialParams& m);
};

/// Coefficients of (u | p | phi | tau) for one load step plus the phase
/// field of the previous step.
struct SystemState {
  Vector values;
  Vector phi_prev;
  int step = 0;
  double time = 0.0;

  auto u(const DofMap& d) { return values.segment(d.u().offset, d.u().size); }
  auto p(const DofMap& d) { return values.segment(d.p().offset, d.p().size); }
  auto phi(const DofMap& d) { return values.segment(d.phi().offset, d.phi().size); }
  auto tau(const DofMap& d) { return values.segment(d.tau().offset, d.tau().size); }
  auto u(const DofMap& d) const { return values.segment(d.u().offset, d.u().size); }
  auto p(const DofMap& d) const { return values.segment(d.p().offset, d.p().size); }
  auto phi(const DofMap& d) const { return values.segment(d.phi().offset, d.phi().size); }
  auto tau(const DofMap& d) const { return values.segment(d.tau().offset, d.tau().size); }
};

/// Undamaged, unloaded state: u = 0, p = 0, phi = phi_prev = 1, tau = 0.
SystemState initial_state(const DofMap& dofs);

/// C = tau - max(0, tau + c (phi - phi_prev)); zero iff tau >= 0,
/// phi <= phi_prev and tau (phi - phi_prev) = 0.
double complementarity_residual(double tau, double phi, double phi_prev, double c);

struct DirichletCondition {
  BoundaryTag tag;
  int component;
  std::function<double(double)> value;  // displacement in mm at time t
};

/// Constraints on displacement dofs of all facets carrying each condition's
/// tag. Throws std::invalid_argument for tags the mesh does not have.
Constraints collect_dirichlet(const Mesh& mesh, const DofMap& dofs, std::span<const DirichletCondition> conditions,
                              double t);

/// Weak-form residual and Jacobian of the monolithic phase-field system.
///
/// Standard modes solve the classical two-field displacement / phase-field
/// system; the mixed mode adds the hydrostatic pressure p with the
/// tension/compression split of the stress. Crack irreversibility is either
/// a Lagrange multiplier with nodal complementarity rows (multiplier
/// discretised in the dual basis) or a quadratic penalty.
///
/// Residual and Jacobian are returned without boundary conditions.
class PhaseFieldModel {
 public:
  PhaseFieldModel(const Mesh& mesh, const DofMap& dofs, MaterialParams material, FormulationMode mode,
                  ComplementarityParams complementarity);

  const Mesh& mesh() const { return *mesh_; }
  const DofMap& dofs() const { return *dofs_; }
  const MaterialParams& material() const { return material_; }
  const FormulationMode& mode() const { return mode_; }
  const ComplementarityParams& complementarity() const { return complementarity_; }

  /// Any output may be null. `magnitude` receives, per row, the sum of the
  /// absolute values of the terms entering the residual; it sets the scale
  /// for roundoff-level convergence checks.
  void assemble(const SystemState& state, Vector* residual, SparseMatrix* jacobian, Vector* magnitude = nullptr,
                JacobianKind kind = JacobianKind::Exact) const;

  Vector residual(const SystemState& state) const;
  SparseMatrix jacobian(const SystemState& state) const;

  /// Nodes where the irreversibility constraint is active:
  /// tau_i + c (phi_i - phi_prev_i) > 0.
  std::vector<char> active_set(const SystemState& state) const;

  /// Integrals of the Q1 basis functions (the diagonal dual/primal pairing).
  const Vector& multiplier_weights() const { return weights_; }

  int quadrature_order() const { return quadrature_order_; }

 private:
  const Mesh* mesh_;
  const DofMap* dofs_;
  MaterialParams material_;
  FormulationMode mode_;
  ComplementarityParams complementarity_;
  Vector weights_;
  int quadrature_order_;
};

/// Residual of the classical formulation; throws if the model is mixed.
Vector residual_standard(const PhaseFieldModel& model, const SystemState& state);
/// Residual of the mixed formulation; throws if the model is standard.
Vector residual_mixed(const PhaseFieldModel& model, const SystemState& state);

}  // namespace pfrac
