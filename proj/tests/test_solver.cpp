#include <cmath>

#include <gtest/gtest.h>

#include "pfrac/scenarios.hpp"

using namespace pfrac;

namespace {

ScenarioConfig tiny_shear(FormulationKind kind = FormulationKind::MixedQ2Q1Q1Q1Star) {
  ScenarioConfig c = ScenarioConfig::defaults(Geometry::Shear);
  c.nu = 0.3;
  c.base_subdivisions = 4;
  c.refinements = 1;
  c.mode.kind = kind;
  c.dt = 2e-3;
  c.t_end = 0.012;
  return c;
}

// Records every state the time loop accepts.
class Recorder : public TimeDependentProblem {
 public:
  explicit Recorder(const Scenario& sc) : sc_(sc) {}
  const PhaseFieldModel& model() const override { return sc_.model(); }
  Constraints constraints(double t) const override { return sc_.constraints(t); }
  bool observe(const SystemState& state, const StepRecord& record) override {
    states.push_back(state);
    records.push_back(record);
    return records.size() < stop_after;
  }
  std::vector<SystemState> states;
  std::vector<StepRecord> records;
  std::size_t stop_after = 1000;

 private:
  const Scenario& sc_;
};

}  // namespace

TEST(LinearSolver, SolvesAndRejectsSingular) {
  SparseMatrix a(3, 3);
  a.insert(0, 0) = 4;
  a.insert(1, 1) = 2;
  a.insert(2, 2) = 1;
  a.insert(0, 2) = 1;
  LinearSolver s;
  s.factorize(a);
  const Vector b = Vector::Ones(3);
  EXPECT_LT((a * s.solve(b) - b).norm(), 1e-14);
  SparseMatrix z(2, 2);
  z.insert(0, 0) = 1;
  z.insert(1, 0) = 1;
  LinearSolver t;
  EXPECT_THROW(t.factorize(z), SingularMatrix);
  EXPECT_NE(std::string(LinearSolver::backend()), "");
}

TEST(Newton, UnloadedStateConvergesImmediately) {
  const Scenario sc(tiny_shear());
  SystemState st = sc.initial_state();
  const NewtonResult r = newton_solve(sc.model(), st, sc.constraints(0.0));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Newton, ElasticStepConvergesQuadratically) {
  const Scenario sc(tiny_shear());
  SystemState st = sc.initial_state();
  st.time = 1e-3;
  st.step = 1;
  const NewtonResult r = newton_solve(sc.model(), st, sc.constraints(1e-3));
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 8);
  for (const auto& it : r.history) EXPECT_FALSE(it.staggered);
  const Vector res = sc.model().residual(st);
  // The free rows are at roundoff once converged.
  const Constraints c = sc.constraints(1e-3);
  double worst = 0.0;
  for (Index i = 0; i < res.size(); ++i)
    if (!c.is_constrained(i)) worst = std::max(worst, std::abs(res[i]));
  EXPECT_LT(worst, 1e-9);
}

TEST(Newton, ImposesDirichletValues) {
  const Scenario sc(tiny_shear(FormulationKind::StandardQ2Q1));
  SystemState st = sc.initial_state();
  const Constraints c = sc.constraints(2e-3);
  ASSERT_TRUE(newton_solve(sc.model(), st, c).converged);
  for (Index dof : c.dofs()) EXPECT_DOUBLE_EQ(st.values[dof], c.value(dof));
}

TEST(TimeLoop, KktHoldsAfterEveryStep) {
  const Scenario sc(tiny_shear());
  Recorder rec(sc);
  SystemState st = sc.initial_state();
  TimeLoopSettings s;
  s.dt = sc.config().dt;
  s.t_end = sc.config().t_end;
  const TimeLoopSummary sum = run_time_loop(rec, st, s);
  EXPECT_EQ(sum.steps, 6);
  ASSERT_EQ(rec.states.size(), 6u);
  const DofMap& d = sc.dofs();
  Vector prev = Vector::Ones(d.phi().size);
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    const SystemState& x = rec.states[k];
    EXPECT_NEAR(x.time, 2e-3 * static_cast<double>(k + 1), 1e-15);
    for (Index i = 0; i < d.phi().size; ++i) {
      const double phi = x.values[d.phi_dof(i)], tau = x.values[d.tau_dof(i)];
      EXPECT_GE(tau, -1e-10);
      EXPECT_LE(phi - prev[i], 1e-10);
      EXPECT_LE(std::abs(tau * (phi - prev[i])), 1e-8);
    }
    prev = x.phi(d);
  }
}

TEST(TimeLoop, ObserverCanStopTheRun) {
  const Scenario sc(tiny_shear());
  Recorder rec(sc);
  rec.stop_after = 2;
  SystemState st = sc.initial_state();
  TimeLoopSettings s{2e-3, 0.012, {}, true};
  const TimeLoopSummary sum = run_time_loop(rec, st, s);
  EXPECT_TRUE(sum.stopped_early);
  EXPECT_EQ(rec.states.size(), 2u);
}

TEST(TimeLoop, ExhaustedBudgetThrowsWithStep) {
  const Scenario sc(tiny_shear());
  Recorder rec(sc);
  SystemState st = sc.initial_state();
  TimeLoopSettings s{2e-3, 0.012, {}, true};
  s.newton.max_iterations = 1;
  s.newton.max_staggered_iterations = 0;
  try {
    run_time_loop(rec, st, s);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_EQ(e.step(), 1);
    EXPECT_NEAR(e.time(), 2e-3, 1e-15);
  }
}

TEST(TimeLoop, RejectsBadSettings) {
  const Scenario sc(tiny_shear());
  Recorder rec(sc);
  SystemState st = sc.initial_state();
  EXPECT_THROW(run_time_loop(rec, st, TimeLoopSettings{0.0, 1.0, {}, true}), std::invalid_argument);
  EXPECT_THROW(run_time_loop(rec, st, TimeLoopSettings{1e-3, 0.0, {}, true}), std::invalid_argument);
}

TEST(BlockNorms, SplitByBlock) {
  const Scenario sc(tiny_shear());
  const DofMap& d = sc.dofs();
  Vector r = Vector::Zero(d.n_dofs());
  r[d.u().offset] = 3.0;
  r[d.u().offset + 1] = 4.0;
  r[d.tau().offset] = 2.0;
  const BlockNorms n = block_norms(d, r);
  EXPECT_DOUBLE_EQ(n[kBlockU], 5.0);
  EXPECT_DOUBLE_EQ(n[kBlockP], 0.0);
  EXPECT_DOUBLE_EQ(n[kBlockTau], 2.0);
}
