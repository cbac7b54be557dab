#pragma once

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pfrac/mesh.hpp"

namespace pfrac {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class ElementKind { Q1, Q2, Q1Dual };

/// Shape function values and reference gradients at one point.
struct ShapeTable {
  std::vector<double> values;
  std::vector<Vec2> gradients;
};

/// Tensor-product element on the reference cell [-1, 1]^2.
///
/// Local numbering: vertices 0..3 counter-clockwise from (-1, -1); for Q2
/// the edge midpoints 4..7 follow (edge e joins vertices e and e + 1) and the
/// centre is node 8. Q1Dual shares the Q1 vertex numbering; its functions
/// are the combinations of Q1 functions biorthogonal to Q1 in the cell L2
/// pairing.
class ReferenceElement {
 public:
  explicit ReferenceElement(ElementKind kind);

  ElementKind kind() const { return kind_; }
  int nodes_per_cell() const { return kind_ == ElementKind::Q2 ? 9 : 4; }
  std::span<const Vec2> support_points() const { return support_; }

  void evaluate(double xi, double eta, std::span<double> values, std::span<Vec2> gradients) const;
  ShapeTable evaluate(double xi, double eta) const;

  /// Local node indices lying on edge e (vertices first, midpoint last).
  std::vector<int> edge_nodes(int edge) const;

 private:
  ElementKind kind_;
  std::vector<Vec2> support_;
};

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(weights.size()); }
};

struct QuadratureRule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` points on [-1, 1]; exact for polynomials
/// of degree 2 * order - 1.
QuadratureRule1D gauss_rule_1d(int order);

/// Tensor-product Gauss-Legendre rule on [-1, 1]^2, 1 <= order <= 5.
QuadratureRule gauss_rule(int order);

/// Continuous Lagrange space (Q1 or Q2) with one scalar dof per support
/// point. Q1 dofs coincide with mesh node ids.
class ScalarSpace {
 public:
  ScalarSpace(const Mesh& mesh, int degree);

  int degree() const { return degree_; }
  const ReferenceElement& element() const { return element_; }
  int dofs_per_cell() const { return element_.nodes_per_cell(); }
  Index n_dofs() const { return static_cast<Index>(support_points_.size()); }

  std::span<const Index> cell_dofs(Index c) const {
    return {cell_dofs_.data() + c * dofs_per_cell(), static_cast<std::size_t>(dofs_per_cell())};
  }
  const Point& support_point(Index dof) const { return support_points_[static_cast<std::size_t>(dof)]; }
  std::span<const Point> support_points() const { return support_points_; }

  /// Global dofs on a boundary facet.
  std::vector<Index> facet_dofs(const BoundaryFacet& facet) const;

 private:
  int degree_;
  ReferenceElement element_;
  std::vector<Index> cell_dofs_;
  std::vector<Point> support_points_;
};

enum class Pairing { Q1Q1, Q2Q1, Q2Q1Q1Q1Star };

struct FieldBlock {
  Index offset = 0;
  Index size = 0;
  Index end() const { return offset + size; }
  bool empty() const { return size == 0; }
  bool contains(Index dof) const { return dof >= offset && dof < end(); }
};

/// Block layout (u | p | phi | tau) of the global unknown vector.
///
/// The displacement is stored node-interleaved: dof u_offset + 2 * i + c is
/// component c at displacement support point i. The pressure block exists
/// only for the mixed pairing and the multiplier block only when the
/// irreversibility constraint is handled by a Lagrange multiplier.
class DofMap {
 public:
  DofMap(const Mesh& mesh, Pairing pairing, bool with_multiplier);

  Pairing pairing() const { return pairing_; }
  const ScalarSpace& displacement_space() const { return displacement_; }
  const ScalarSpace& scalar_space() const { return scalar_; }

  const FieldBlock& u() const { return u_; }
  const FieldBlock& p() const { return p_; }
  const FieldBlock& phi() const { return phi_; }
  const FieldBlock& tau() const { return tau_; }
  Index n_dofs() const { return tau_.end(); }

  Index u_dof(Index node, int component) const { return u_.offset + 2 * node + component; }
  Index p_dof(Index node) const { return p_.offset + node; }
  Index phi_dof(Index node) const { return phi_.offset + node; }
  Index tau_dof(Index node) const { return tau_.offset + node; }

 private:
  Pairing pairing_;
  ScalarSpace displacement_;
  ScalarSpace scalar_;
  FieldBlock u_, p_, phi_, tau_;
};

/// Prescribed values for a subset of dofs.
class Constraints {
 public:
  explicit Constraints(Index n_dofs = 0);

  void set(Index dof, double value);
  bool is_constrained(Index dof) const { return mask_[static_cast<std::size_t>(dof)] != 0; }
  double value(Index dof) const { return values_[static_cast<std::size_t>(dof)]; }
  Index n_dofs() const { return static_cast<Index>(mask_.size()); }
  const std::vector<Index>& dofs() const { return dofs_; }

  void apply_values(Vector& x) const;
  void zero_entries(Vector& r) const;

 private:
  std::vector<char> mask_;
  std::vector<double> values_;
  std::vector<Index> dofs_;
};

/// Replaces constrained rows by identity rows with the prescribed value and
/// eliminates the constrained columns into the right-hand side, keeping any
/// symmetry of A.
void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, const Constraints& constraints);

class SingularCell : public std::runtime_error {
 public:
  SingularCell(Index cell, double det);
  Index cell() const { return cell_; }

 private:
  Index cell_;
};

/// Shape values and physical gradients at the quadrature points of one cell.
class CellValues {
 public:
  CellValues(const ReferenceElement& element, const QuadratureRule& rule);

  void reinit(const Mesh& mesh, Index cell);

  int n_qp() const { return rule_.size(); }
  int n_shape() const { return n_shape_; }
  double JxW(int q) const { return jxw_[static_cast<std::size_t>(q)]; }
  const Point& point(int q) const { return points_[static_cast<std::size_t>(q)]; }
  double shape(int q, int i) const { return ref_values_[static_cast<std::size_t>(q * n_shape_ + i)]; }
  const Vec2& grad(int q, int i) const { return grads_[static_cast<std::size_t>(q * n_shape_ + i)]; }

 private:
  QuadratureRule rule_;
  ReferenceElement geometry_;
  int n_shape_;
  std::vector<double> ref_values_;
  std::vector<Vec2> ref_grads_;
  std::vector<double> geo_values_;
  std::vector<Vec2> geo_grads_;
  std::vector<double> jxw_;
  std::vector<Point> points_;
  std::vector<Vec2> grads_;
};

/// Bilinear map of a cell: physical point and Jacobian at a reference point.
Point map_to_physical(const Mesh& mesh, Index cell, double xi, double eta);
Mat2 cell_jacobian(const Mesh& mesh, Index cell, double xi, double eta);

struct LocalSystem {
  std::vector<Index> dofs;
  Eigen::MatrixXd matrix;
  Vector vector;

  void resize(std::size_t n);
};

using CellKernel = std::function<void(Index cell, LocalSystem& local)>;

/// Loops over cells and scatter-adds the local blocks the kernel fills in.
/// Either output may be null. The matrix gets a structurally symmetric
/// pattern as long as every kernel couples all of its dofs.
void assemble(const Mesh& mesh, Index n_dofs, const CellKernel& kernel, SparseMatrix* matrix, Vector* vector);

struct FacetPoint {
  Point x;
  Vec2 normal;
  Index cell = 0;
  double xi = 0.0;
  double eta = 0.0;
};

/// Integral of a vector-valued integrand over the facets with the given tag,
/// using a Gauss rule of `order` points per facet.
Vec2 boundary_integral(const Mesh& mesh, BoundaryTag tag,
                       const std::function<Vec2(const FacetPoint&)>& integrand, int order = 3);

/// Evaluates a field with `components` interleaved components at a
/// reference point of a cell.
Vec2 evaluate_field(const ScalarSpace& space, std::span<const double> coeffs, int components,
                    Index cell, double xi, double eta);
/// Physical gradient; row c holds the gradient of component c.
Mat2 evaluate_gradient(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs,
                       int components, Index cell, double xi, double eta);

using PointFunction = std::function<Vec2(const Point&)>;
using GradientFunction = std::function<Mat2(const Point&)>;

/// Nodal interpolation of the first `components` entries of fn.
Vector interpolate(const ScalarSpace& space, int components, const PointFunction& fn);

double l2_norm(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components = 1);
double h1_seminorm(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components = 1);
double l2_error(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components,
                const PointFunction& exact);
double h1_error(const Mesh& mesh, const ScalarSpace& space, std::span<const double> coeffs, int components,
                const GradientFunction& exact_gradient);

/// Integral of each Q1 basis function; the diagonal of the pairing between
/// the dual and primal Q1 bases.
Vector lumped_mass(const Mesh& mesh, const ScalarSpace& q1);

}  // namespace pfrac
