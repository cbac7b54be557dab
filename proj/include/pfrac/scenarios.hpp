#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pfrac/solver.hpp"

namespace pfrac {

enum class Geometry { Shear, LPanel };

std::string_view to_string(Geometry g);

struct ScenarioConfig {
  Geometry geometry = Geometry::Shear;
  double mu = 0.0;      // kN/mm^2
  double nu = 0.0;
  double gc = 0.0;      // kN/mm
  double kappa = 1e-10;
  double eps = 0.0;     // mm; 0 selects eps_factor * h
  double eps_factor = 2.0;
  int base_subdivisions = 0;
  int refinements = 0;
  double dt = 0.0;      // s
  double t_end = 0.0;   // s
  FormulationMode mode;
  std::string output_dir = "output";
  std::vector<double> snapshots;  // s
  bool mirror_slit = false;

  static ScenarioConfig defaults(Geometry g);

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Top-edge shear displacement u_x = t * 1 mm/s.
double shear_loading(double t);

/// Cyclic push/pull/push history on the loading strip, t in [0, 2] s.
double lpanel_loading(double t);

struct LoadDisplacementRecord {
  int step = 0;
  double time = 0.0;
  double displacement = 0.0;  // mm
  double fx = 0.0, fy = 0.0;  // kN, undegraded stress
  double fx_deg = 0.0, fy_deg = 0.0;  // kN, g(phi) sigma
  int newton_iterations = 0;
};

struct LoadVector {
  double fx = 0.0, fy = 0.0, fx_deg = 0.0, fy_deg = 0.0;
};

/// Resultant of sigma(u) n (and g(phi) sigma(u) n) over the tagged boundary,
/// with sigma = 2 mu E + lambda tr(E) I.
LoadVector evaluate_load(const Mesh& mesh, const DofMap& dofs, const SystemState& state,
                         const MaterialParams& material, BoundaryTag tag);

/// One benchmark run: mesh, dof layout, model, boundary data and load
/// history.
class Scenario : public TimeDependentProblem {
 public:
  using StepCallback = std::function<bool(const Scenario&, const SystemState&, const StepRecord&,
                                          const LoadDisplacementRecord&)>;

  explicit Scenario(ScenarioConfig config);

  const ScenarioConfig& config() const { return config_; }
  const Mesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return *dofs_; }
  const PhaseFieldModel& model() const override { return *model_; }
  const MaterialParams& material() const { return material_; }
  BoundaryTag load_boundary() const;

  std::vector<DirichletCondition> dirichlet_conditions() const;
  Constraints constraints(double t) const override;
  SystemState initial_state() const;
  double applied_displacement(double t) const;
  LoadVector evaluate_load(const SystemState& state) const;

  bool observe(const SystemState& state, const StepRecord& record) override;
  const std::vector<LoadDisplacementRecord>& history() const { return history_; }
  const std::vector<std::vector<NewtonIteration>>& newton_logs() const { return newton_logs_; }

  /// Invoked after each step with the fresh record; returning false ends
  /// the run.
  void set_step_callback(StepCallback cb) { callback_ = std::move(cb); }

  /// Runs the time loop from the initial state and returns the final state.
  SystemState run(const NewtonSettings& newton = {});

 private:
  ScenarioConfig config_;
  Mesh mesh_;
  MaterialParams material_;
  std::unique_ptr<DofMap> dofs_;
  std::unique_ptr<PhaseFieldModel> model_;
  std::vector<LoadDisplacementRecord> history_;
  std::vector<std::vector<NewtonIteration>> newton_logs_;
  StepCallback callback_;
  double worst_excursion_ = 0.0;
};

/// Peak of the load component that the scenario drives (F_x for the shear
/// test, F_y for the L-panel), measured in the loading direction.
struct PeakLoad {
  double value = 0.0;
  int step = 0;
  double time = 0.0;
};
PeakLoad peak_load(Geometry g, const std::vector<LoadDisplacementRecord>& history);

/// Load component along the loading direction.
double driven_load(Geometry g, const LoadDisplacementRecord& r);

struct SweepEntry {
  double nu = 0.0;
  double lambda = 0.0;
  FormulationKind formulation = FormulationKind::MixedQ2Q1Q1Q1Star;
  PeakLoad peak;
  std::vector<LoadDisplacementRecord> history;
};

/// Reruns the scenario for each Poisson ratio with mu fixed. nu = 0 has no
/// pressure penalty, so a mixed run falls back to the standard Q2Q1
/// formulation with a warning on `warn`.
std::vector<SweepEntry> nu_sweep(const ScenarioConfig& base, const std::vector<double>& nus,
                                 const NewtonSettings& newton = {},
                                 const std::function<void(const std::string&)>& warn = {});

}  // namespace pfrac
