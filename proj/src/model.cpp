#include "pfrac/model.hpp"

#include <cmath>
#include <stdexcept>

namespace pfrac {

Pairing pairing_for(FormulationKind kind) {
  switch (kind) {
    case FormulationKind::StandardQ1Q1: return Pairing::Q1Q1;
    case FormulationKind::StandardQ2Q1: return Pairing::Q2Q1;
    case FormulationKind::MixedQ2Q1Q1Q1Star: return Pairing::Q2Q1Q1Q1Star;
  }
  throw std::invalid_argument("unknown formulation");
}

bool is_mixed(FormulationKind kind) { return kind == FormulationKind::MixedQ2Q1Q1Q1Star; }

std::string_view to_string(FormulationKind kind) {
  switch (kind) {
    case FormulationKind::StandardQ1Q1: return "standard-q1q1";
    case FormulationKind::StandardQ2Q1: return "standard-q2q1";
    case FormulationKind::MixedQ2Q1Q1Q1Star: return "mixed";
  }
  return "?";
}

ComplementarityParams ComplementarityParams::defaults(const MaterialParams& m) {
  return {100.0 * m.gc / m.eps, 1e5 * m.gc / m.eps};
}

SystemState initial_state(const DofMap& dofs) {
  SystemState s;
  s.values = Vector::Zero(dofs.n_dofs());
  s.phi(dofs).setOnes();
  s.phi_prev = Vector::Ones(dofs.phi().size);
  return s;
}

double complementarity_residual(double tau, double phi, double phi_prev, double c) {
  return tau - std::max(0.0, tau + c * (phi - phi_prev));
}

Constraints collect_dirichlet(const Mesh& mesh, const DofMap& dofs, std::span<const DirichletCondition> conditions,
                              double t) {
  Constraints out(dofs.n_dofs());
  const ScalarSpace& space = dofs.displacement_space();
  for (const DirichletCondition& bc : conditions) {
    if (bc.component < 0 || bc.component > 1) throw std::invalid_argument("displacement component must be 0 or 1");
    if (!mesh.has_tag(bc.tag))
      throw std::invalid_argument("mesh has no boundary tagged " + std::string(to_string(bc.tag)));
    const double value = bc.value(t);
    for (const BoundaryFacet& f : mesh.facets()) {
      if (f.tag != bc.tag) continue;
      for (Index node : space.facet_dofs(f)) out.set(dofs.u_dof(node, bc.component), value);
    }
  }
  return out;
}

PhaseFieldModel::PhaseFieldModel(const Mesh& mesh, const DofMap& dofs, MaterialParams material, FormulationMode mode,
                                 ComplementarityParams complementarity)
    : mesh_(&mesh),
      dofs_(&dofs),
      material_(material),
      mode_(mode),
      complementarity_(complementarity) {
  material_.validate();
  if (dofs.pairing() != pairing_for(mode.kind))
    throw std::invalid_argument("dof layout does not match the formulation");
  const bool multiplier = mode.irreversibility == Irreversibility::Multiplier;
  if (multiplier != !dofs.tau().empty())
    throw std::invalid_argument("multiplier block must exist exactly when the multiplier is used");
  if (is_mixed(mode.kind) && !(material_.lambda > 0.0))
    throw std::invalid_argument("mixed formulation needs lambda > 0 (nu > 0); use a standard formulation for nu = 0");
  if (multiplier && !(complementarity_.c > 0.0)) throw std::invalid_argument("complementarity constant must be > 0");
  if (!multiplier && !(complementarity_.penalty > 0.0)) throw std::invalid_argument("penalty parameter must be > 0");
  weights_ = lumped_mass(mesh, dofs.scalar_space());
  quadrature_order_ = dofs.displacement_space().degree() == 2 ? 3 : 2;
}

namespace {

Strain2 test_strain(const Vec2& g, int c) {
  return c == 0 ? Strain2{g.x(), 0.0, 0.5 * g.y()} : Strain2{0.0, g.y(), 0.5 * g.x()};
}

}  // namespace

void PhaseFieldModel::assemble(const SystemState& state, Vector* residual, SparseMatrix* jacobian, Vector* magnitude,
                               JacobianKind kind) const {
  const DofMap& dm = *dofs_;
  const Index n = dm.n_dofs();
  if (state.values.size() != n) throw std::invalid_argument("state size does not match the dof layout");
  if (state.phi_prev.size() != dm.phi().size) throw std::invalid_argument("phi_prev size does not match");

  const bool mixed = is_mixed(mode_.kind);
  const bool multiplier = mode_.irreversibility == Irreversibility::Multiplier;
  const double mu = material_.mu;
  const double two_mu = 2.0 * mu;
  const double lambda = material_.lambda;
  const double kappa = material_.kappa;
  const double gc = material_.gc;
  const double eps = material_.eps;
  const double mu_drive = mode_.use_mu_in_driving_force ? mu : 1.0;
  const double gamma = complementarity_.penalty;
  const double couple = kind == JacobianKind::Exact ? 1.0 : 0.0;

  const ScalarSpace& uspace = dm.displacement_space();
  const ScalarSpace& sspace = dm.scalar_space();
  const QuadratureRule rule = gauss_rule(quadrature_order_);
  CellValues uv(uspace.element(), rule);
  CellValues sv(sspace.element(), rule);

  const int nu_shape = uspace.dofs_per_cell();
  const int n_u = 2 * nu_shape;
  const int p_off = n_u;
  const int phi_off = mixed ? n_u + 4 : n_u;
  const int n_local = phi_off + 4;

  std::vector<Index> ldofs(static_cast<std::size_t>(n_local));
  Eigen::MatrixXd ke(n_local, n_local);
  Vector re(n_local), me(n_local);
  std::vector<Strain2> eu(static_cast<std::size_t>(n_u));
  std::vector<Strain2> deplus(static_cast<std::size_t>(n_u));

  if (residual) *residual = Vector::Zero(n);
  if (magnitude) *magnitude = Vector::Zero(n);
  std::vector<Eigen::Triplet<double>> triplets;
  if (jacobian) triplets.reserve(static_cast<std::size_t>(mesh_->n_cells()) * n_local * n_local + 2 * dm.tau().size);

  const Vector& x = state.values;

  for (Index c = 0; c < mesh_->n_cells(); ++c) {
    uv.reinit(*mesh_, c);
    sv.reinit(*mesh_, c);
    const auto ucd = uspace.cell_dofs(c);
    const auto scd = sspace.cell_dofs(c);
    for (int i = 0; i < nu_shape; ++i)
      for (int k = 0; k < 2; ++k) ldofs[static_cast<std::size_t>(2 * i + k)] = dm.u_dof(ucd[static_cast<std::size_t>(i)], k);
    for (int i = 0; i < 4; ++i) {
      if (mixed) ldofs[static_cast<std::size_t>(p_off + i)] = dm.p_dof(scd[static_cast<std::size_t>(i)]);
      ldofs[static_cast<std::size_t>(phi_off + i)] = dm.phi_dof(scd[static_cast<std::size_t>(i)]);
    }
    ke.setZero();
    re.setZero();
    me.setZero();

    for (int q = 0; q < rule.size(); ++q) {
      const double w = uv.JxW(q);
      Mat2 grad_u = Mat2::Zero();
      for (int i = 0; i < nu_shape; ++i) {
        const Vec2& g = uv.grad(q, i);
        const Index node = ucd[static_cast<std::size_t>(i)];
        grad_u.row(0) += x[dm.u_dof(node, 0)] * g.transpose();
        grad_u.row(1) += x[dm.u_dof(node, 1)] * g.transpose();
      }
      double p = 0.0, phi = 0.0, phi_old = 0.0;
      Vec2 grad_phi = Vec2::Zero();
      for (int i = 0; i < 4; ++i) {
        const Index node = scd[static_cast<std::size_t>(i)];
        const double N = sv.shape(q, i);
        if (mixed) p += x[dm.p_dof(node)] * N;
        phi += x[dm.phi_dof(node)] * N;
        phi_old += state.phi_prev[node] * N;
        grad_phi += x[dm.phi_dof(node)] * sv.grad(q, i);
      }
      const Strain2 e = strain(grad_u);
      const double tr = e.trace();
      const double g = degradation(phi, kappa);
      const double dg = degradation_derivative(phi, kappa);

      for (int i = 0; i < nu_shape; ++i)
        for (int k = 0; k < 2; ++k) eu[static_cast<std::size_t>(2 * i + k)] = test_strain(uv.grad(q, i), k);

      // Driving force D and its consistent linearisation pieces.
      double drive = 0.0;
      Stress2 sig_deg, sig_rest;  // stress = g * sig_deg + sig_rest
      double p_plus = 0.0, hp = 0.0;
      Strain2 eplus;
      if (mixed) {
        const SpectralSplit split = spectral_split(e);
        eplus = split.plus;
        p_plus = positive_part(p);
        hp = positive_indicator(p);
        sig_deg = stress_from(split.plus, two_mu, p_plus);
        sig_rest = stress_from(split.minus, two_mu, p - p_plus);
        drive = 2.0 * mu_drive * contract(split.plus, e) + p_plus * tr;
        if (jacobian)
          for (int a = 0; a < n_u; ++a)
            deplus[static_cast<std::size_t>(a)] = spectral_split_derivative(e, eu[static_cast<std::size_t>(a)]);
      } else if (mode_.split_standard) {
        const SpectralSplit split = spectral_split(e);
        eplus = split.plus;
        p_plus = lambda * positive_part(tr);
        hp = positive_indicator(tr);
        sig_deg = stress_from(split.plus, two_mu, p_plus);
        sig_rest = stress_from(split.minus, two_mu, lambda * tr - p_plus);
        drive = 2.0 * mu_drive * contract(split.plus, e) + p_plus * tr;
        if (jacobian)
          for (int a = 0; a < n_u; ++a)
            deplus[static_cast<std::size_t>(a)] = spectral_split_derivative(e, eu[static_cast<std::size_t>(a)]);
      } else {
        sig_deg = stress(e, lambda, mu);
        drive = 2.0 * mu_drive * contract(e, e) + lambda * tr * tr;
      }
      const Stress2 sigma = g * sig_deg + sig_rest;
      const double sigma_mag = g * std::sqrt(contract(sig_deg, sig_deg)) + std::sqrt(contract(sig_rest, sig_rest));

      // Momentum rows.
      for (int a = 0; a < n_u; ++a) {
        const Strain2& ea = eu[static_cast<std::size_t>(a)];
        re[a] += contract(sigma, ea) * w;
        me[a] += sigma_mag * std::sqrt(contract(ea, ea)) * w;
      }
      // Pressure rows.
      const double gp = mode_.degrade_pressure_mass ? g : 1.0;
      const double constraint = tr - p / lambda;
      if (mixed) {
        for (int i = 0; i < 4; ++i) {
          const double N = sv.shape(q, i);
          re[p_off + i] += gp * constraint * N * w;
          me[p_off + i] += gp * (std::abs(tr) + std::abs(p) / lambda) * std::abs(N) * w;
        }
      }
      // Phase-field rows.
      const double over = phi - phi_old;
      const double pen = multiplier ? 0.0 : gamma * positive_part(over);
      for (int i = 0; i < 4; ++i) {
        const double N = sv.shape(q, i);
        const Vec2& gN = sv.grad(q, i);
        const double t1 = (1.0 - kappa) * phi * drive * N;
        const double t2 = -gc / eps * (1.0 - phi) * N;
        const double t3 = gc * eps * grad_phi.dot(gN);
        const double t4 = pen * N;
        re[phi_off + i] += (t1 + t2 + t3 + t4) * w;
        // t2 counted as its two summands, so phi = 1 still sets a scale.
        const double m2 = gc / eps * (1.0 + std::abs(phi)) * std::abs(N);
        me[phi_off + i] += (std::abs(t1) + m2 + std::abs(t3) + std::abs(t4)) * w;
      }

      if (!jacobian) continue;

      // d(momentum)/du
      for (int a = 0; a < n_u; ++a) {
        const Strain2& ea = eu[static_cast<std::size_t>(a)];
        for (int b = 0; b < n_u; ++b) {
          const Strain2& eb = eu[static_cast<std::size_t>(b)];
          Stress2 ds;
          if (mixed) {
            const Strain2& dp = deplus[static_cast<std::size_t>(b)];
            ds = stress_from(g * dp + (eb - dp), two_mu, 0.0);
          } else if (mode_.split_standard) {
            const Strain2& dp = deplus[static_cast<std::size_t>(b)];
            ds = stress_from(g * dp + (eb - dp), two_mu, lambda * (g * hp + (1.0 - hp)) * eb.trace());
          } else {
            ds = g * stress(eb, lambda, mu);
          }
          ke(a, b) += contract(ds, ea) * w;
        }
      }
      for (int j = 0; j < 4; ++j) {
        const double Nj = sv.shape(q, j);
        const Vec2& gNj = sv.grad(q, j);
        for (int a = 0; a < n_u; ++a) {
          const Strain2& ea = eu[static_cast<std::size_t>(a)];
          // d(momentum)/dphi
          ke(a, phi_off + j) += couple * dg * Nj * contract(sig_deg, ea) * w;
          // d(momentum)/dp
          if (mixed) ke(a, p_off + j) += (g * hp + (1.0 - hp)) * Nj * ea.trace() * w;
        }
        for (int i = 0; i < 4; ++i) {
          const double Ni = sv.shape(q, i);
          const Vec2& gNi = sv.grad(q, i);
          if (mixed) {
            // d(pressure)/dp, d(pressure)/dphi, d(phase)/dp
            ke(p_off + i, p_off + j) += -gp / lambda * Nj * Ni * w;
            if (mode_.degrade_pressure_mass) ke(p_off + i, phi_off + j) += couple * dg * Nj * constraint * Ni * w;
            ke(phi_off + i, p_off + j) += (1.0 - kappa) * phi * hp * Nj * tr * Ni * w;
          }
          double kpp = (1.0 - kappa) * drive * Nj * Ni + gc / eps * Nj * Ni + gc * eps * gNj.dot(gNi);
          if (!multiplier) kpp += gamma * positive_indicator(over) * Nj * Ni;
          ke(phi_off + i, phi_off + j) += kpp * w;
        }
      }
      for (int b = 0; b < n_u; ++b) {
        const Strain2& eb = eu[static_cast<std::size_t>(b)];
        double ddrive;
        if (mixed) {
          ddrive = 4.0 * mu_drive * contract(eplus, eb) + p_plus * eb.trace();
        } else if (mode_.split_standard) {
          ddrive = 4.0 * mu_drive * contract(eplus, eb) + 2.0 * p_plus * eb.trace();
        } else {
          ddrive = 4.0 * mu_drive * contract(e, eb) + 2.0 * lambda * tr * eb.trace();
        }
        for (int i = 0; i < 4; ++i) {
          const double Ni = sv.shape(q, i);
          // d(pressure)/du, d(phase)/du
          if (mixed) ke(p_off + i, b) += gp * eb.trace() * Ni * w;
          ke(phi_off + i, b) += (1.0 - kappa) * phi * ddrive * Ni * w;
        }
      }
    }

    for (int a = 0; a < n_local; ++a) {
      const Index ra = ldofs[static_cast<std::size_t>(a)];
      if (residual) (*residual)[ra] += re[a];
      if (magnitude) (*magnitude)[ra] += me[a];
      if (jacobian)
        for (int b = 0; b < n_local; ++b)
          if (ke(a, b) != 0.0) triplets.emplace_back(ra, ldofs[static_cast<std::size_t>(b)], ke(a, b));
    }
  }

  // Nodal multiplier coupling and complementarity rows.
  if (multiplier) {
    const double cc = complementarity_.c;
    for (Index i = 0; i < dm.tau().size; ++i) {
      const Index rphi = dm.phi_dof(i);
      const Index rtau = dm.tau_dof(i);
      const double tau = x[rtau];
      const double phi = x[rphi];
      const double phi_old = state.phi_prev[i];
      const double m = weights_[i];
      const bool active = tau + cc * (phi - phi_old) > 0.0;
      if (residual) {
        (*residual)[rphi] += m * tau;
        (*residual)[rtau] = complementarity_residual(tau, phi, phi_old, cc);
      }
      if (magnitude) {
        (*magnitude)[rphi] += m * std::abs(tau);
        (*magnitude)[rtau] = std::abs(tau) + cc * (std::abs(phi) + std::abs(phi_old));
      }
      if (jacobian) {
        triplets.emplace_back(rphi, rtau, m);
        if (active)
          triplets.emplace_back(rtau, rphi, -cc);
        else
          triplets.emplace_back(rtau, rtau, 1.0);
      }
    }
  }

  if (jacobian) {
    jacobian->resize(n, n);
    jacobian->setFromTriplets(triplets.begin(), triplets.end());
    jacobian->makeCompressed();
  }
}

Vector PhaseFieldModel::residual(const SystemState& state) const {
  Vector r;
  assemble(state, &r, nullptr);
  return r;
}

SparseMatrix PhaseFieldModel::jacobian(const SystemState& state) const {
  SparseMatrix j;
  assemble(state, nullptr, &j);
  return j;
}

std::vector<char> PhaseFieldModel::active_set(const SystemState& state) const {
  const DofMap& dm = *dofs_;
  std::vector<char> out(static_cast<std::size_t>(dm.phi().size), 0);
  if (dm.tau().empty()) return out;
  for (Index i = 0; i < dm.phi().size; ++i) {
    const double v = state.values[dm.tau_dof(i)] +
                     complementarity_.c * (state.values[dm.phi_dof(i)] - state.phi_prev[i]);
    out[static_cast<std::size_t>(i)] = v > 0.0 ? 1 : 0;
  }
  return out;
}

Vector residual_standard(const PhaseFieldModel& model, const SystemState& state) {
  if (is_mixed(model.mode().kind)) throw std::invalid_argument("residual_standard called on a mixed model");
  return model.residual(state);
}

Vector residual_mixed(const PhaseFieldModel& model, const SystemState& state) {
  if (!is_mixed(model.mode().kind)) throw std::invalid_argument("residual_mixed called on a standard model");
  return model.residual(state);
}

}  // namespace pfrac
