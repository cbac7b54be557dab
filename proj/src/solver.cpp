#include "pfrac/solver.hpp"

#include <cmath>
#include <sstream>

#ifdef PFRAC_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

namespace pfrac {

NonConvergence::NonConvergence(int step, double time, const std::string& what)
    : std::runtime_error(what), step_(step), time_(time) {}

struct LinearSolver::Impl {
#ifdef PFRAC_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> lu;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
#endif
};

LinearSolver::LinearSolver() : impl_(new Impl) {}
LinearSolver::~LinearSolver() { delete impl_; }

const char* LinearSolver::backend() {
#ifdef PFRAC_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen-sparselu";
#endif
}

void LinearSolver::factorize(const SparseMatrix& a) {
  impl_->lu.compute(a);
  if (impl_->lu.info() != Eigen::Success) throw SingularMatrix("sparse LU factorisation failed (singular Jacobian)");
}

Vector LinearSolver::solve(const Vector& b) const {
  Vector x = impl_->lu.solve(b);
  if (impl_->lu.info() != Eigen::Success || !x.allFinite())
    throw SingularMatrix("sparse LU solve produced a non-finite result");
  return x;
}

BlockNorms block_norms(const DofMap& dofs, const Vector& r) {
  BlockNorms out{};
  const std::array<FieldBlock, 4> blocks{dofs.u(), dofs.p(), dofs.phi(), dofs.tau()};
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (!blocks[b].empty()) out[b] = r.segment(blocks[b].offset, blocks[b].size).norm();
  return out;
}

namespace {

bool block_present(const DofMap& dofs, std::size_t b) {
  const std::array<FieldBlock, 4> blocks{dofs.u(), dofs.p(), dofs.phi(), dofs.tau()};
  return !blocks[b].empty();
}

int count_changes(const std::vector<char>& a, const std::vector<char>& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

NewtonResult newton_solve(const PhaseFieldModel& model, SystemState& state, const Constraints& constraints,
                          const NewtonSettings& settings) {
  const DofMap& dofs = model.dofs();
  NewtonResult result;
  constraints.apply_values(state.values);

  Constraints homogeneous(constraints.n_dofs());
  for (Index d : constraints.dofs()) homogeneous.set(d, 0.0);

  Vector r, mag;
  SparseMatrix jac;
  BlockNorms initial{};
  std::vector<char> previous_active = model.active_set(state);
  LinearSolver lu;

  bool staggered = false;
  int exact_used = 0, staggered_used = 0;
  int decreasing = 0;
  double peak = 0.0, last_merit = 0.0;

  auto newton_step = [&](JacobianKind kind) {
    model.assemble(state, nullptr, &jac, nullptr, kind);
    Vector rhs = -r;
    apply_dirichlet(jac, rhs, homogeneous);
    lu.factorize(jac);
    return lu.solve(rhs);
  };

  // Backtracking on the residual norm, full step first. Returns the number
  // of cuts; the state holds the last trial.
  auto line_search = [&](const Vector& base, const Vector& delta, double m0, double& alpha) {
    alpha = 1.0;
    for (int cut = 0;; ++cut) {
      state.values = base + alpha * delta;
      if (cut >= settings.max_backtracks) return cut;
      Vector trial = model.residual(state);
      constraints.zero_entries(trial);
      const double m1 = trial.norm();
      if (std::isfinite(m1) && m1 <= (1.0 - settings.sufficient_decrease * alpha) * m0) return cut;
      alpha *= settings.backtrack_factor;
    }
  };

  for (int k = 0;; ++k) {
    model.assemble(state, &r, nullptr, &mag);
    constraints.zero_entries(r);
    constraints.zero_entries(mag);
    const BlockNorms norms = block_norms(dofs, r);
    const BlockNorms floors = block_norms(dofs, mag);
    const std::vector<char> active = model.active_set(state);
    const int changes = count_changes(active, previous_active);
    previous_active = active;

    NewtonIteration it;
    it.iteration = k;
    it.residual = norms;
    it.active_changes = changes;
    for (char a : active) it.active_size += a;

    bool finite = true;
    for (double v : norms) finite = finite && std::isfinite(v);
    if (!finite) {
      result.iterations = k;
      result.history.push_back(it);
      return result;
    }
    if (k == 0) initial = norms;

    bool converged = k == 0 || changes == 0;
    for (std::size_t b = 0; b < 4 && converged; ++b) {
      if (!block_present(dofs, b)) continue;
      double tol = settings.abs_tol * floors[b];
      // Complementarity rows are only accepted at roundoff.
      if (b != kBlockTau) tol = std::max(tol, settings.rel_tol * initial[b]);
      converged = norms[b] <= tol;
    }
    if (converged) {
      result.converged = true;
      result.iterations = k;
      result.history.push_back(it);
      return result;
    }
    if (exact_used >= settings.max_iterations || staggered_used >= settings.max_staggered_iterations) {
      result.iterations = k;
      result.history.push_back(it);
      return result;
    }

    const double m0 = r.norm();
    const Vector base = state.values;

    if (staggered) {
      decreasing = m0 < last_merit ? decreasing + 1 : 0;
      peak = std::max(peak, m0);
      last_merit = m0;
      if (decreasing >= settings.exact_retry_streak && m0 <= settings.exact_retry_drop * peak) {
        double alpha = 1.0;
        const int cuts = line_search(base, newton_step(JacobianKind::Exact), m0, alpha);
        ++exact_used;
        if (cuts < settings.staggered_after_cuts) {
          staggered = false;
          it.step_length = alpha;
          it.line_search_cuts = cuts;
          result.history.push_back(it);
          continue;
        }
        state.values = base;
        decreasing = 0;
      }
      state.values = base + newton_step(JacobianKind::Staggered);
      ++staggered_used;
      it.staggered = true;
      it.step_length = 1.0;
      result.history.push_back(it);
      continue;
    }

    double alpha = 1.0;
    it.line_search_cuts = line_search(base, newton_step(JacobianKind::Exact), m0, alpha);
    it.step_length = alpha;
    ++exact_used;
    result.history.push_back(it);
    if (settings.staggered_after_cuts > 0 && it.line_search_cuts >= settings.staggered_after_cuts) {
      staggered = true;
      decreasing = 0;
      peak = last_merit = m0;
    }
  }
}

TimeLoopSummary run_time_loop(TimeDependentProblem& problem, SystemState& state, const TimeLoopSettings& settings) {
  if (!(settings.dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(settings.t_end > 0.0)) throw std::invalid_argument("final time must be positive");
  const PhaseFieldModel& model = problem.model();
  const DofMap& dofs = model.dofs();
  const int n_steps = static_cast<int>(std::llround(settings.t_end / settings.dt));
  if (n_steps < 1) throw std::invalid_argument("final time shorter than one step");

  TimeLoopSummary summary;
  const int first = state.step + 1;
  for (int n = first; n <= n_steps; ++n) {
    const double t_old = state.time;
    const double t_new = n * settings.dt;
    const SystemState snapshot = state;

    StepRecord record;
    record.step = n;
    record.time = t_new;
    NewtonResult res;

    auto attempt = [&](double t) {
      state.phi_prev = state.phi(dofs);
      state.time = t;
      res = newton_solve(model, state, problem.constraints(t), settings.newton);
      record.newton_iterations += res.iterations;
      return res.converged;
    };

    bool ok = false;
    try {
      ok = attempt(t_new);
    } catch (const SingularMatrix&) {
      ok = false;
    }
    if (!ok) {
      if (!settings.allow_substep) {
        std::ostringstream msg;
        msg << "Newton failed to converge at step " << n << " (t = " << t_new << ")";
        throw NonConvergence(n, t_new, msg.str());
      }
      state = snapshot;
      record.newton_iterations = 0;
      record.substepped = true;
      ++summary.substeps;
      try {
        ok = attempt(0.5 * (t_old + t_new)) && attempt(t_new);
      } catch (const SingularMatrix&) {
        ok = false;
      }
      if (!ok) {
        std::ostringstream msg;
        msg << "Newton failed to converge at step " << n << " (t = " << t_new << ") even with two half steps";
        throw NonConvergence(n, t_new, msg.str());
      }
    }
    state.step = n;
    state.time = t_new;
    record.newton = &res;
    ++summary.steps;
    summary.total_newton_iterations += record.newton_iterations;
    if (!problem.observe(state, record)) {
      summary.stopped_early = true;
      break;
    }
  }
  return summary;
}

}  // namespace pfrac
