#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfrac/model.hpp"

namespace pfrac {

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(int step, double time, const std::string& what);
  int step() const { return step_; }
  double time() const { return time_; }

 private:
  int step_;
  double time_;
};

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NewtonSettings {
  int max_iterations = 50;  // exact-Jacobian iterations
  double abs_tol = 1e-10;  // times the norm of the per-row term magnitudes
  double rel_tol = 1e-8;   // times the initial residual norm of the block
  int max_backtracks = 10;
  double backtrack_factor = 0.5;
  double sufficient_decrease = 1e-4;
  /// An exact-Jacobian step needing at least this many backtracking cuts
  /// switches to full steps with the staggered Jacobian (no coupling of the
  /// momentum and pressure rows to phi). 0 disables the fallback.
  int staggered_after_cuts = 3;
  /// Budget of staggered iterations on top of max_iterations.
  int max_staggered_iterations = 3000;
  /// The exact Jacobian is tried again after this many consecutive merit
  /// decreases, once the merit sits below `exact_retry_drop` times its peak
  /// in the current staggered phase. A retry that needs backtracking is
  /// discarded.
  int exact_retry_streak = 5;
  double exact_retry_drop = 0.1;
};

enum Block { kBlockU = 0, kBlockP = 1, kBlockPhi = 2, kBlockTau = 3 };
using BlockNorms = std::array<double, 4>;

struct NewtonIteration {
  int iteration = 0;
  BlockNorms residual{};
  double step_length = 0.0;  // 0 on the accepting iteration
  int line_search_cuts = 0;
  bool staggered = false;
  int active_changes = 0;
  Index active_size = 0;
};

struct NewtonResult {
  bool converged = false;
  int iterations = 0;
  std::vector<NewtonIteration> history;
};

/// Sparse direct solver: UMFPACK when available, Eigen's SparseLU otherwise.
class LinearSolver {
 public:
  LinearSolver();
  ~LinearSolver();
  LinearSolver(const LinearSolver&) = delete;
  LinearSolver& operator=(const LinearSolver&) = delete;

  /// Throws SingularMatrix when the factorisation fails.
  void factorize(const SparseMatrix& a);
  Vector solve(const Vector& b) const;
  static const char* backend();

 private:
  struct Impl;
  Impl* impl_;
};

BlockNorms block_norms(const DofMap& dofs, const Vector& r);

/// Semi-smooth Newton for one load step. Dirichlet values are imposed on the
/// iterate first; increments vanish on constrained dofs. Returns with
/// converged = false when the iteration budget is exhausted or the iterate
/// stops being finite.
NewtonResult newton_solve(const PhaseFieldModel& model, SystemState& state, const Constraints& constraints,
                          const NewtonSettings& settings = {});

struct StepRecord {
  int step = 0;
  double time = 0.0;
  int newton_iterations = 0;
  bool substepped = false;
  const NewtonResult* newton = nullptr;  // last solve of the step
};

/// What the time loop needs from a scenario.
class TimeDependentProblem {
 public:
  virtual ~TimeDependentProblem() = default;
  virtual const PhaseFieldModel& model() const = 0;
  virtual Constraints constraints(double t) const = 0;
  /// Called after each accepted step; returning false stops the loop.
  virtual bool observe(const SystemState& state, const StepRecord& record) = 0;
};

struct TimeLoopSettings {
  double dt = 0.0;
  double t_end = 0.0;
  NewtonSettings newton;
  bool allow_substep = true;
};

struct TimeLoopSummary {
  int steps = 0;
  int substeps = 0;
  int total_newton_iterations = 0;
  bool stopped_early = false;
};

/// Steps t_n = n dt up to t_end. A failed step is retried once as two half
/// steps; if that fails too, NonConvergence is thrown.
TimeLoopSummary run_time_loop(TimeDependentProblem& problem, SystemState& state, const TimeLoopSettings& settings);

}  // namespace pfrac
