#include "pfrac/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace pfrac {

namespace {

// The crack of the shear test runs from the slit tip to the lower left when
// the top edge is pulled towards -x (see the README for the sign discussion).
constexpr double kShearDirection = -1.0;

const ScenarioConfig& validated(const ScenarioConfig& c) {
  c.validate();
  return c;
}

Mesh build_mesh(const ScenarioConfig& c) {
  return c.geometry == Geometry::Shear ? build_shear_mesh(c.base_subdivisions, c.refinements, c.mirror_slit)
                                       : build_lshape_mesh(c.base_subdivisions, c.refinements);
}

}  // namespace

std::string_view to_string(Geometry g) { return g == Geometry::Shear ? "shear" : "lpanel"; }

ScenarioConfig ScenarioConfig::defaults(Geometry g) {
  ScenarioConfig c;
  c.geometry = g;
  if (g == Geometry::Shear) {
    c.mu = 80.77;
    c.nu = 0.29999;
    c.gc = 2.7e-3;
    c.base_subdivisions = 8;
    c.refinements = 2;
    c.dt = 1e-4;
    c.t_end = 0.02;
    c.snapshots = {0.012, 0.015, 0.02, 0.03, 0.033, 0.042};
  } else {
    c.mu = 10.95;
    c.nu = 0.18;
    c.gc = 8.9e-5;
    c.base_subdivisions = 6;
    c.refinements = 2;
    c.dt = 1e-3;
    c.t_end = 2.0;
    // Times at which the loading history first reaches 0.22, 0.3, 0.45, 1.0 mm.
    c.snapshots = {0.22, 0.3, 1.25, 2.0};
  }
  c.kappa = 1e-10;
  return c;
}

void ScenarioConfig::validate() const {
  lame_from_poisson(nu, mu);
  if (!(gc > 0.0)) throw std::invalid_argument("G_c must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie in (0, 1)");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0 (0 selects eps_factor * h)");
  if (!(eps_factor > 0.0)) throw std::invalid_argument("eps_factor must be positive");
  if (base_subdivisions < 1) throw std::invalid_argument("base_subdivisions must be >= 1");
  if (refinements < 0) throw std::invalid_argument("refinements must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_end > 0.0)) throw std::invalid_argument("end_time must be positive");
  const double steps = t_end / dt;
  if (std::abs(steps - std::round(steps)) > 1e-12 * std::max(1.0, steps) + 1e-9)
    throw std::invalid_argument("dt must divide end_time");
  if (geometry == Geometry::LPanel && t_end > 2.0 + 1e-12)
    throw std::invalid_argument("the L-panel loading history is defined up to t = 2 s");
  if (is_mixed(mode.kind) && nu == 0.0)
    throw std::invalid_argument("the mixed formulation needs nu > 0 (lambda = 0 leaves the 1/lambda term undefined)");
  for (double t : snapshots)
    if (!(t >= 0.0)) throw std::invalid_argument("snapshot times must be >= 0");
}

double shear_loading(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("shear loading needs t >= 0");
  return t * 1.0;
}

double lpanel_loading(double t) {
  if (!(t >= 0.0 && t <= 2.0)) {
    std::ostringstream msg;
    msg << "L-panel loading is defined for t in [0, 2] s, got " << t;
    throw std::invalid_argument(msg.str());
  }
  if (t < 0.3) return t * 1.0;
  if (t < 0.8) return (0.6 - t) * 1.0;
  return (-1.0 + t) * 1.0;
}

LoadVector evaluate_load(const Mesh& mesh, const DofMap& dofs, const SystemState& state,
                         const MaterialParams& material, BoundaryTag tag) {
  const ScalarSpace& us = dofs.displacement_space();
  const ScalarSpace& ss = dofs.scalar_space();
  const auto u = state.u(dofs);
  const auto phi = state.phi(dofs);
  const std::span<const double> uc(u.data(), static_cast<std::size_t>(u.size()));
  const std::span<const double> pc(phi.data(), static_cast<std::size_t>(phi.size()));
  Vec2 deg = Vec2::Zero();
  const Vec2 full = boundary_integral(mesh, tag, [&](const FacetPoint& fp) -> Vec2 {
    const Mat2 grad = evaluate_gradient(mesh, us, uc, 2, fp.cell, fp.xi, fp.eta);
    const Mat2 sigma = stress(strain(grad), material.lambda, material.mu).matrix();
    const Vec2 traction = sigma * fp.normal;
    return traction;
  });
  deg = boundary_integral(mesh, tag, [&](const FacetPoint& fp) -> Vec2 {
    const Mat2 grad = evaluate_gradient(mesh, us, uc, 2, fp.cell, fp.xi, fp.eta);
    const double g = degradation(evaluate_field(ss, pc, 1, fp.cell, fp.xi, fp.eta).x(), material.kappa);
    return g * (stress(strain(grad), material.lambda, material.mu).matrix() * fp.normal);
  });
  return {full.x(), full.y(), deg.x(), deg.y()};
}

Scenario::Scenario(ScenarioConfig config) : config_(validated(config)), mesh_(build_mesh(config_)) {
  const double eps = config_.eps > 0.0 ? config_.eps : config_.eps_factor * mesh_.h();
  material_ = MaterialParams::from_poisson(config_.nu, config_.mu, config_.gc, config_.kappa, eps);
  const bool multiplier = config_.mode.irreversibility == Irreversibility::Multiplier;
  dofs_ = std::make_unique<DofMap>(mesh_, pairing_for(config_.mode.kind), multiplier);
  model_ = std::make_unique<PhaseFieldModel>(mesh_, *dofs_, material_, config_.mode,
                                             ComplementarityParams::defaults(material_));
}

BoundaryTag Scenario::load_boundary() const {
  return config_.geometry == Geometry::Shear ? BoundaryTag::Top : BoundaryTag::GammaUy;
}

double Scenario::applied_displacement(double t) const {
  return config_.geometry == Geometry::Shear ? kShearDirection * shear_loading(t) : lpanel_loading(t);
}

std::vector<DirichletCondition> Scenario::dirichlet_conditions() const {
  auto zero = [](double) { return 0.0; };
  if (config_.geometry == Geometry::Shear) {
    return {{BoundaryTag::Bottom, 0, zero},
            {BoundaryTag::Bottom, 1, zero},
            {BoundaryTag::Left, 1, zero},
            {BoundaryTag::Right, 1, zero},
            {BoundaryTag::Top, 1, zero},
            {BoundaryTag::Top, 0, [](double t) { return kShearDirection * shear_loading(t); }}};
  }
  return {{BoundaryTag::Bottom, 0, zero},
          {BoundaryTag::Bottom, 1, zero},
          {BoundaryTag::GammaUy, 1, [](double t) { return lpanel_loading(t); }}};
}

Constraints Scenario::constraints(double t) const {
  const auto bcs = dirichlet_conditions();
  return collect_dirichlet(mesh_, *dofs_, bcs, t);
}

SystemState Scenario::initial_state() const { return pfrac::initial_state(*dofs_); }

LoadVector Scenario::evaluate_load(const SystemState& state) const {
  return pfrac::evaluate_load(mesh_, *dofs_, state, material_, load_boundary());
}

bool Scenario::observe(const SystemState& state, const StepRecord& record) {
  const LoadVector f = evaluate_load(state);
  LoadDisplacementRecord r;
  r.step = record.step;
  r.time = record.time;
  r.displacement = applied_displacement(record.time);
  r.fx = f.fx;
  r.fy = f.fy;
  r.fx_deg = f.fx_deg;
  r.fy_deg = f.fy_deg;
  r.newton_iterations = record.newton_iterations;
  history_.push_back(r);
  newton_logs_.push_back(record.newton ? record.newton->history : std::vector<NewtonIteration>{});

  // Undershoot below 0 is tolerated; report it when it first appears and
  // whenever it doubles.
  const auto phi = state.phi(*dofs_);
  const double excursion = std::max(-phi.minCoeff(), phi.maxCoeff() - 1.0);
  if (excursion > std::max(1e-6, 2.0 * worst_excursion_)) {
    worst_excursion_ = excursion;
    std::cerr << "warning: step " << record.step << ": phase field left [0, 1] (min " << phi.minCoeff() << ", max "
              << phi.maxCoeff() << ")\n";
  }
  return callback_ ? callback_(*this, state, record, r) : true;
}

SystemState Scenario::run(const NewtonSettings& newton) {
  history_.clear();
  newton_logs_.clear();
  worst_excursion_ = 0.0;
  SystemState state = initial_state();
  TimeLoopSettings settings;
  settings.dt = config_.dt;
  settings.t_end = config_.t_end;
  settings.newton = newton;
  run_time_loop(*this, state, settings);
  return state;
}

double driven_load(Geometry g, const LoadDisplacementRecord& r) {
  return g == Geometry::Shear ? kShearDirection * r.fx : r.fy;
}

PeakLoad peak_load(Geometry g, const std::vector<LoadDisplacementRecord>& history) {
  PeakLoad best;
  bool first = true;
  for (const auto& r : history) {
    const double v = driven_load(g, r);
    if (first || v > best.value) {
      best = {v, r.step, r.time};
      first = false;
    }
  }
  return best;
}

std::vector<SweepEntry> nu_sweep(const ScenarioConfig& base, const std::vector<double>& nus,
                                 const NewtonSettings& newton, const std::function<void(const std::string&)>& warn) {
  std::vector<SweepEntry> out;
  for (double nu : nus) {
    ScenarioConfig cfg = base;
    cfg.nu = nu;
    if (nu == 0.0 && is_mixed(cfg.mode.kind)) {
      cfg.mode.kind = FormulationKind::StandardQ2Q1;
      if (warn) warn("nu = 0 gives lambda = 0: falling back to the standard Q2Q1 formulation");
    }
    Scenario sc(cfg);
    sc.run(newton);
    SweepEntry e;
    e.nu = nu;
    e.lambda = sc.material().lambda;
    e.formulation = cfg.mode.kind;
    e.history = sc.history();
    e.peak = peak_load(cfg.geometry, e.history);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace pfrac
