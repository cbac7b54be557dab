#include "pfrac/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace pfrac {

namespace {

// 1D Lagrange polynomials on the nodes -1, 0, 1 indexed by node position.
double lagrange2(int node, double s) {
  switch (node) {
    case -1: return 0.5 * s * (s - 1.0);
    case 0: return 1.0 - s * s;
    default: return 0.5 * s * (s + 1.0);
  }
}

double lagrange2_deriv(int node, double s) {
  switch (node) {
    case -1: return s - 0.5;
    case 0: return -2.0 * s;
    default: return s + 0.5;
  }
}

double linear(int node, double s) { return 0.5 * (1.0 + node * s); }
double linear_deriv(int node, double) { return 0.5 * node; }

constexpr std::array<std::array<int, 2>, 9> kQ2Nodes{{
    {-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {0, -1}, {1, 0}, {0, 1}, {-1, 0}, {0, 0}}};

// 1D biorthogonal coefficients for the linear dual basis: psi_a = sum_b D_ab N_b.
constexpr double kDual1D[2][2] = {{2.0, -1.0}, {-1.0, 2.0}};

}  // namespace

ReferenceElement::ReferenceElement(ElementKind kind) : kind_(kind) {
  const int n = nodes_per_cell();
  for (int i = 0; i < n; ++i) support_.emplace_back(kQ2Nodes[i][0], kQ2Nodes[i][1]);
}

void ReferenceElement::evaluate(double xi, double eta, std::span<double> values,
                                std::span<Vec2> gradients) const {
  const int n = nodes_per_cell();
  if (kind_ == ElementKind::Q2) {
    for (int i = 0; i < n; ++i) {
      const int a = kQ2Nodes[i][0], b = kQ2Nodes[i][1];
      values[i] = lagrange2(a, xi) * lagrange2(b, eta);
      gradients[i] = Vec2(lagrange2_deriv(a, xi) * lagrange2(b, eta), lagrange2(a, xi) * lagrange2_deriv(b, eta));
    }
    return;
  }
  std::array<double, 4> v{};
  std::array<Vec2, 4> g{};
  for (int i = 0; i < 4; ++i) {
    const int a = kQ2Nodes[i][0], b = kQ2Nodes[i][1];
    v[i] = linear(a, xi) * linear(b, eta);
    g[i] = Vec2(linear_deriv(a, xi) * linear(b, eta), linear(a, xi) * linear_deriv(b, eta));
  }
  if (kind_ == ElementKind::Q1) {
    std::copy(v.begin(), v.end(), values.begin());
    std::copy(g.begin(), g.end(), gradients.begin());
    return;
  }
  for (int i = 0; i < 4; ++i) {
    const int ia = kQ2Nodes[i][0] > 0, ib = kQ2Nodes[i][1] > 0;
    values[i] = 0.0;
    gradients[i].setZero();
    for (int j = 0; j < 4; ++j) {
      const int ja = kQ2Nodes[j][0] > 0, jb = kQ2Nodes[j][1] > 0;
      const double coeff = kDual1D[ia][ja] * kDual1D[ib][jb];
      values[i] += coeff * v[j];
      gradients[i] += coeff * g[j];
    }
  }
}

ShapeTable ReferenceElement::evaluate(double xi, double eta) const {
  ShapeTable t;
  t.values.resize(static_cast<std::size_t>(nodes_per_cell()));
  t.gradients.resize(static_cast<std::size_t>(nodes_per_cell()));
  evaluate(xi, eta, t.values, t.gradients);
  return t;
}

std::vector<int> ReferenceElement::edge_nodes(int edge) const {
  std::vector<int> out{edge, (edge + 1) % 4};
  if (kind_ == ElementKind::Q2) out.push_back(4 + edge);
  return out;
}

QuadratureRule1D gauss_rule_1d(int order) {
  QuadratureRule1D r;
  switch (order) {
    case 1:
      r.points = {0.0};
      r.weights = {2.0};
      break;
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      r.points = {-a, a};
      r.weights = {1.0, 1.0};
      break;
    }
    case 3: {
      const double a = std::sqrt(0.6);
      r.points = {-a, 0.0, a};
      r.weights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      r.points = {-b, -a, a, b};
      r.weights = {wb, wa, wa, wb};
      break;
    }
    case 5: {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      r.points = {-b, -a, 0.0, a, b};
      r.weights = {wb, wa, 128.0 / 225.0, wa, wb};
      break;
    }
    default:
      throw std::invalid_argument("gauss rule order must be in [1, 5], got " + std::to_string(order));
  }
  return r;
}

QuadratureRule gauss_rule(int order) {
  const QuadratureRule1D g = gauss_rule_1d(order);
  QuadratureRule r;
  for (std::size_t j = 0; j < g.points.size(); ++j) {
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      r.points.emplace_back(g.points[i], g.points[j]);
      r.weights.push_back(g.weights[i] * g.weights[j]);
    }
  }
  return r;
}

Point map_to_physical(const Mesh& mesh, Index cell, double xi, double eta) {
  const auto& n = mesh.cell(cell).nodes;
  Point p;
  for (int k = 0; k < 4; ++k) {
    const double w = linear(kQ2Nodes[k][0], xi) * linear(kQ2Nodes[k][1], eta);
    p.x += w * mesh.node(n[k]).x;
    p.y += w * mesh.node(n[k]).y;
  }
  return p;
}

Mat2 cell_jacobian(const Mesh& mesh, Index cell, double xi, double eta) {
  const auto& n = mesh.cell(cell).nodes;
  Mat2 J = Mat2::Zero();
  for (int k = 0; k < 4; ++k) {
    const int a = kQ2Nodes[k][0], b = kQ2Nodes[k][1];
    const Vec2 g(linear_deriv(a, xi) * linear(b, eta), linear(a, xi) * linear_deriv(b, eta));
    const Vec2 x(mesh.node(n[k]).x, mesh.node(n[k]).y);
    J += x * g.transpose();
  }
  return J;
}

ScalarSpace::ScalarSpace(const Mesh& mesh, int degree)
    : degree_(degree), element_(degree == 2 ? ElementKind::Q2 : ElementKind::Q1) {
  if (degree != 1 && degree != 2) throw std::invalid_argument("ScalarSpace supports degree 1 or 2");
  support_points_.assign(mesh.nodes().begin(), mesh.nodes().end());
  const int per_cell = dofs_per_cell();
  cell_dofs_.resize(static_cast<std::size_t>(mesh.n_cells() * per_cell));
  std::map<std::pair<Index, Index>, Index> edges;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const auto& v = mesh.cell(c).nodes;
    Index* out = cell_dofs_.data() + c * per_cell;
    std::copy(v.begin(), v.end(), out);
    if (degree == 1) continue;
    for (int e = 0; e < 4; ++e) {
      const auto key = std::minmax(v[e], v[(e + 1) % 4]);
      auto [it, inserted] = edges.try_emplace(key, static_cast<Index>(support_points_.size()));
      if (inserted) {
        const Point& a = mesh.node(key.first);
        const Point& b = mesh.node(key.second);
        support_points_.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      }
      out[4 + e] = it->second;
    }
  }
  if (degree == 2) {
    for (Index c = 0; c < mesh.n_cells(); ++c) {
      cell_dofs_[static_cast<std::size_t>(c * per_cell + 8)] = static_cast<Index>(support_points_.size());
      support_points_.push_back(map_to_physical(mesh, c, 0.0, 0.0));
    }
  }
}

std::vector<Index> ScalarSpace::facet_dofs(const BoundaryFacet& facet) const {
  const auto dofs = cell_dofs(facet.cell);
  std::vector<Index> out;
  for (int local : element_.edge_nodes(facet.local_edge)) out.push_back(dofs[static_cast<std::size_t>(local)]);
  return out;
}

DofMap::DofMap(const Mesh& mesh, Pairing pairing, bool with_multiplier)
    : pairing_(pairing), displacement_(mesh, pairing == Pairing::Q1Q1 ? 1 : 2), scalar_(mesh, 1) {
  const Index nq1 = scalar_.n_dofs();
  u_ = {0, 2 * displacement_.n_dofs()};
  p_ = {u_.end(), pairing == Pairing::Q2Q1Q1Q1Star ? nq1 : 0};
  phi_ = {p_.end(), nq1};
  tau_ = {phi_.end(), with_multiplier ? nq1 : 0};
}

Constraints::Constraints(Index n_dofs)
    : mask_(static_cast<std::size_t>(n_dofs), 0), values_(static_cast<std::size_t>(n_dofs), 0.0) {}

void Constraints::set(Index dof, double value) {
  if (dof < 0 || dof >= n_dofs()) throw std::out_of_range("constraint dof out of range");
  auto k = static_cast<std::size_t>(dof);
  if (!mask_[k]) dofs_.push_back(dof);
  mask_[k] = 1;
  values_[k] = value;
}

void Constraints::apply_values(Vector& x) const {
  for (Index d : dofs_) x[d] = value(d);
}

void Constraints::zero_entries(Vector& r) const {
  for (Index d : dofs_) r[d] = 0.0;
}

void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, const Constraints& constraints) {
  for (Index col = 0; col < matrix.outerSize(); ++col) {
    const bool col_fixed = constraints.is_constrained(col);
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      const Index row = it.row();
      if (col_fixed) {
        if (!constraints.is_constrained(row)) rhs[row] -= it.value() * constraints.value(col);
        it.valueRef() = (row == col) ? 1.0 : 0.0;
      } else if (constraints.is_constrained(row)) {
        it.valueRef() = 0.0;
      }
    }
  }
  for (Index d : constraints.dofs()) {
    rhs[d] = constraints.value(d);
    if (matrix.coeff(d, d) != 1.0) matrix.coeffRef(d, d) = 1.0;
  }
}

SingularCell::SingularCell(Index cell, double det)
    : std::runtime_error("singular or inverted cell " + std::to_string(cell) + " (det J = " + std::to_string(det) + ")"),
      cell_(cell) {}

CellValues::CellValues(const ReferenceElement& element, const QuadratureRule& rule)
    : rule_(rule), geometry_(ElementKind::Q1), n_shape_(element.nodes_per_cell()) {
  const int nq = rule_.size();
  ref_values_.resize(static_cast<std::size_t>(nq * n_shape_));
  ref_grads_.resize(static_cast<std::size_t>(nq * n_shape_));
  geo_values_.resize(static_cast<std::size_t>(nq * 4));
  geo_grads_.resize(static_cast<std::size_t>(nq * 4));
  for (int q = 0; q < nq; ++q) {
    const auto& p = rule_.points[static_cast<std::size_t>(q)];
    element.evaluate(p.x(), p.y(), std::span(ref_values_).subspan(static_cast<std::size_t>(q * n_shape_), static_cast<std::size_t>(n_shape_)),
                     std::span(ref_grads_).subspan(static_cast<std::size_t>(q * n_shape_), static_cast<std::size_t>(n_shape_)));
    geometry_.evaluate(p.x(), p.y(), std::span(geo_values_).subspan(static_cast<std::size_t>(q * 4), 4),
                       std::span(geo_grads_).subspan(static_cast<std::size_t>(q * 4), 4));
  }
  jxw_.resize(static_cast<std::size_t>(nq));
  points_.resize(static_cast<std::size_t>(nq));
  grads_.resize(ref_grads_.size());
}

void CellValues::reinit(const Mesh& mesh, Index cell) {
  const auto& n = mesh.cell(cell).nodes;
  for (int q = 0; q < n_qp(); ++q) {
    Mat2 J = Mat2::Zero();
    Point x;
    for (int k = 0; k < 4; ++k) {
      const Point& node = mesh.node(n[k]);
      const double w = geo_values_[static_cast<std::size_t>(q * 4 + k)];
      const Vec2& g = geo_grads_[static_cast<std::size_t>(q * 4 + k)];
      x.x += w * node.x;
      x.y += w * node.y;
      J += Vec2(node.x, node.y) * g.transpose();
    }
    const double det = J.determinant();
    if (!(det > 0.0)) throw SingularCell(cell, det);
    const Mat2 inv_t = J.inverse().transpose();
    jxw_[static_cast<std::size_t>(q)] = det * rule_.weights[static_cast<std::size_t>(q)];
    points_[static_cast<std::size_t>(q)] = x;
    for (int i = 0; i < n_shape_; ++i) {
      const auto k = static_cast<std::size_t>(q * n_shape_ + i);
      grads_[k] = inv_t * ref_grads_[k];
    }
  }
}

void LocalSystem::resize(std::size_t n) {
  dofs.resize(n);
  matrix.setZero(static_cast<Index>(n), static_cast<Index>(n));
  vector.setZero(static_cast<Index>(n));
}

void assemble(const Mesh& mesh, Index n_dofs, const CellKernel& kernel, SparseMatrix* matrix, Vector* vector) {
  std::vector<Eigen::Triplet<double>> triplets;
  if (vector) vector->setZero(n_dofs);
  LocalSystem local;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    local.dofs.clear();
    kernel(c, local);
    const auto n = static_cast<Index>(local.dofs.size());
    for (Index i = 0; i < n; ++i) {
      const Index gi = local.dofs[static_cast<std::size_t>(i)];
      if (vector) (*vector)[gi] += local.vector[i];
      if (!matrix) continue;
      for (Index j = 0; j < n; ++j) triplets.emplace_back(gi, local.dofs[static_cast<std::size_t>(j)], local.matrix(i, j));
    }
  }
  if (matrix) {
    matrix->resize(n_dofs, n_dofs);
    matrix->setFromTriplets(triplets.begin(), triplets.end());
  }
}

Vec2 boundary_integral(const Mesh& mesh, BoundaryTag tag, const std::function<Vec2(const FacetPoint&)>& integrand,
                       int order) {
  if (!mesh.has_tag(tag)) throw std::invalid_argument("mesh has no facets tagged " + std::string(to_string(tag)));
  const QuadratureRule1D rule = gauss_rule_1d(order);
  // Reference edge e: start vertex, direction and outward normal on [-1, 1]^2.
  static const std::array<Vec2, 4> start{Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
  Vec2 total = Vec2::Zero();
  for (const auto& f : mesh.facets()) {
    if (f.tag != tag) continue;
    const Vec2 a = start[static_cast<std::size_t>(f.local_edge)];
    const Vec2 b = start[static_cast<std::size_t>((f.local_edge + 1) % 4)];
    const Point& pa = mesh.node(f.nodes[0]);
    const Point& pb = mesh.node(f.nodes[1]);
    const Vec2 tangent(pb.x - pa.x, pb.y - pa.y);
    const double length = tangent.norm();
    // Counter-clockwise traversal puts the domain on the left.
    const Vec2 normal(tangent.y() / length, -tangent.x() / length);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = 0.5 * (1.0 + rule.points[q]);
      const Vec2 ref = a + s * (b - a);
      FacetPoint fp;
      fp.cell = f.cell;
      fp.xi = ref.x();
      fp.eta = ref.y();
      fp.x = map_to_physical(mesh, f.cell, fp.xi, fp.eta);
      fp.normal = normal;
      total += 0.5 * length * rule.weights[q] * integrand(fp);
    }
  }
  return total;
}

Vec2 evaluate_field(const ScalarSpace& space, std::span<const double> coeffs, int components, Index cell, double xi,
                    double eta) {
  const ShapeTable t = space.element().evaluate(xi, eta);
  const auto dofs = space.cell_dofs(cell);
  Vec2 v = Vec2::Zero();
  for (std::size_t i = 0; i < dofs.size(); ++i)
    for (int c = 0; c < components; ++c)
      v[c] += t.values[i] * coeffs[static_cast<std::size_t>(components * dofs[i] + c)];
  return v;
}

Mat2 evaluate_gradient(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components,
                       Index cell, double xi, double eta) {
  const ShapeTable t = space.element().evaluate(xi, eta);
  const Mat2 J = cell_jacobian(mesh, cell, xi, eta);
  const double det = J.determinant();
  if (!(det > 0.0)) throw SingularCell(cell, det);
  const Mat2 inv_t = J.inverse().transpose();
  const auto dofs = space.cell_dofs(cell);
  Mat2 g = Mat2::Zero();
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    const Vec2 grad = inv_t * t.gradients[i];
    for (int c = 0; c < components; ++c)
      g.row(c) += coeffs[static_cast<std::size_t>(components * dofs[i] + c)] * grad.transpose();
  }
  return g;
}

Vector interpolate(const ScalarSpace& space, int components, const PointFunction& fn) {
  Vector out(space.n_dofs() * components);
  for (Index i = 0; i < space.n_dofs(); ++i) {
    const Vec2 v = fn(space.support_point(i));
    for (int c = 0; c < components; ++c) out[components * i + c] = v[c];
  }
  return out;
}

namespace {

template <class F>
double integrate_cells(const Mesh& mesh, const ScalarSpace& space, F&& f) {
  CellValues values(space.element(), gauss_rule(space.degree() + 2));
  double total = 0.0;
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    values.reinit(mesh, c);
    total += f(c, values);
  }
  return total;
}

struct QpField {
  Vec2 value = Vec2::Zero();
  Mat2 grad = Mat2::Zero();
};

QpField field_at(const CellValues& v, int q, std::span<const Index> dofs, std::span<const double> coeffs,
                 int components) {
  QpField f;
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    for (int c = 0; c < components; ++c) {
      const double u = coeffs[static_cast<std::size_t>(components * dofs[i] + c)];
      f.value[c] += u * v.shape(q, static_cast<int>(i));
      f.grad.row(c) += u * v.grad(q, static_cast<int>(i)).transpose();
    }
  }
  return f;
}

}  // namespace

double l2_error(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components,
                const PointFunction& exact) {
  const double sq = integrate_cells(mesh, space, [&](Index c, const CellValues& v) {
    double s = 0.0;
    for (int q = 0; q < v.n_qp(); ++q) {
      Vec2 diff = field_at(v, q, space.cell_dofs(c), coeffs, components).value;
      if (exact) diff -= exact(v.point(q));
      for (int k = 0; k < components; ++k) s += diff[k] * diff[k] * v.JxW(q);
    }
    return s;
  });
  return std::sqrt(sq);
}

double h1_error(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components,
                const GradientFunction& exact_gradient) {
  const double sq = integrate_cells(mesh, space, [&](Index c, const CellValues& v) {
    double s = 0.0;
    for (int q = 0; q < v.n_qp(); ++q) {
      Mat2 diff = field_at(v, q, space.cell_dofs(c), coeffs, components).grad;
      if (exact_gradient) diff -= exact_gradient(v.point(q));
      s += diff.topRows(components).squaredNorm() * v.JxW(q);
    }
    return s;
  });
  return std::sqrt(sq);
}

double l2_norm(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components) {
  return l2_error(mesh, space, coeffs, components, nullptr);
}

double h1_seminorm(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components) {
  return h1_error(mesh, space, coeffs, components, nullptr);
}

Vector lumped_mass(const Mesh& mesh, const ScalarSpace& q1) {
  Vector m = Vector::Zero(q1.n_dofs());
  CellValues v(q1.element(), gauss_rule(2));
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    v.reinit(mesh, c);
    const auto dofs = q1.cell_dofs(c);
    for (int q = 0; q < v.n_qp(); ++q)
      for (int i = 0; i < 4; ++i) m[dofs[static_cast<std::size_t>(i)]] += v.shape(q, i) * v.JxW(q);
  }
  return m;
}

}  // namespace pfrac
