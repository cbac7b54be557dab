#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "pfrac/mesh.hpp"

using namespace pfrac;

namespace {

double signed_area(const Mesh& m, Index c) {
  const auto& v = m.cell(c).nodes;
  double a = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point& p = m.node(v[i]);
    const Point& q = m.node(v[(i + 1) % 4]);
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

}  // namespace

TEST(Rectangle, CountsAndTags) {
  const Mesh m = build_rectangle_mesh({0, 0}, {2, 1}, 4, 3);
  EXPECT_EQ(m.n_cells(), 12);
  EXPECT_EQ(m.n_nodes(), 20);
  EXPECT_EQ(m.count_facets(BoundaryTag::Bottom), 4);
  EXPECT_EQ(m.count_facets(BoundaryTag::Left), 3);
  EXPECT_NEAR(m.area(), 2.0, 1e-14);
  EXPECT_NEAR(m.h(), std::hypot(0.5, 1.0 / 3.0), 1e-14);
}

TEST(Rectangle, CellsAreCounterClockwise) {
  const Mesh m = refine_uniform(build_shear_mesh(4, 1));
  for (Index c = 0; c < m.n_cells(); ++c) EXPECT_GT(signed_area(m, c), 0.0);
}

TEST(ShearMesh, SlitIsDuplicatedExceptAtTip) {
  for (int refs = 0; refs <= 2; ++refs) {
    const Mesh m = build_shear_mesh(8, refs);
    const int n = 8 << refs;
    EXPECT_EQ(m.n_cells(), n * n);
    EXPECT_EQ(m.duplicate_count(), n / 2);
    EXPECT_NEAR(m.tagged_length(BoundaryTag::SlitUpper), 5.0, 1e-12);
    EXPECT_NEAR(m.tagged_length(BoundaryTag::SlitLower), 5.0, 1e-12);
    EXPECT_NEAR(m.area(), 100.0, 1e-9);
    EXPECT_NEAR(m.tagged_length(BoundaryTag::Top), 10.0, 1e-12);
    EXPECT_EQ(m.refinement_level(), refs);
  }
}

TEST(ShearMesh, MirroredSlitRunsLeft) {
  const Mesh m = build_shear_mesh(8, 1, true);
  for (const auto& f : m.facets_with(BoundaryTag::SlitUpper)) {
    EXPECT_LE(std::max(m.node(f.nodes[0]).x, m.node(f.nodes[1]).x), 5.0 + 1e-12);
    EXPECT_NEAR(m.node(f.nodes[0]).y, 5.0, 1e-12);
  }
}

TEST(ShearMesh, SlitFacesSeparateCells) {
  // The two faces of the slit must not share nodes away from the tip.
  const Mesh m = build_shear_mesh(8, 1);
  std::set<Index> upper, lower;
  for (const auto& f : m.facets_with(BoundaryTag::SlitUpper)) upper.insert(f.nodes.begin(), f.nodes.end());
  for (const auto& f : m.facets_with(BoundaryTag::SlitLower)) lower.insert(f.nodes.begin(), f.nodes.end());
  int shared = 0;
  for (Index i : upper) shared += lower.count(i);
  EXPECT_EQ(shared, 1);
}

TEST(Refinement, HalvesDiameterAndQuadruplesCells) {
  Mesh m = build_lshape_mesh(6, 0);
  for (int r = 0; r < 3; ++r) {
    const Mesh f = refine_uniform(m);
    EXPECT_EQ(f.n_cells(), 4 * m.n_cells());
    EXPECT_NEAR(f.h(), 0.5 * m.h(), 1e-9 * m.h());
    EXPECT_NEAR(f.area(), m.area(), 1e-6);
    m = f;
  }
}

TEST(Refinement, PreservesTaggedLengths) {
  const Mesh m = build_shear_mesh(4, 0);
  const Mesh f = refine_uniform(m);
  for (BoundaryTag t : {BoundaryTag::Bottom, BoundaryTag::Top, BoundaryTag::Left, BoundaryTag::Right,
                        BoundaryTag::SlitUpper, BoundaryTag::SlitLower})
    EXPECT_NEAR(f.tagged_length(t), m.tagged_length(t), 1e-12) << to_string(t);
}

TEST(LShape, GeometryAndLoadingStrip) {
  const Mesh m = build_lshape_mesh(6, 2);
  EXPECT_NEAR(m.area(), 3.0 * 250.0 * 250.0, 1e-6);
  const auto box = m.bounding_box();
  EXPECT_NEAR(box[1].x, 500.0, 1e-12);
  EXPECT_NEAR(box[1].y, 500.0, 1e-12);
  const double facet = 250.0 / 24.0;
  EXPECT_NEAR(m.tagged_length(BoundaryTag::GammaUy), 30.0, facet);
  for (const auto& f : m.facets_with(BoundaryTag::GammaUy)) {
    EXPECT_NEAR(m.node(f.nodes[0]).y, 250.0, 1e-12);
    EXPECT_GE(std::min(m.node(f.nodes[0]).x, m.node(f.nodes[1]).x), 470.0 - facet);
  }
  EXPECT_EQ(m.duplicate_count(), 0);
  EXPECT_NEAR(m.tagged_length(BoundaryTag::Bottom), 250.0, 1e-9);
}

TEST(Mesh, RejectsDegenerateInput) {
  EXPECT_THROW(build_rectangle_mesh({0, 0}, {1, 1}, 0, 2), std::invalid_argument);
  EXPECT_THROW(build_rectangle_mesh({1, 0}, {0, 1}, 2, 2), std::invalid_argument);
  EXPECT_THROW(build_shear_mesh(3, 0), std::invalid_argument);
}

TEST(Mesh, EveryOuterFacetTaggedOnce) {
  const Mesh m = build_lshape_mesh(6, 1);
  std::map<std::pair<Index, Index>, int> count;
  for (const auto& f : m.facets()) ++count[std::minmax(f.nodes[0], f.nodes[1])];
  for (const auto& [k, n] : count) EXPECT_EQ(n, 1);
  double total = 0.0;
  for (const auto& f : m.facets()) total += std::hypot(m.node(f.nodes[1]).x - m.node(f.nodes[0]).x,
                                                      m.node(f.nodes[1]).y - m.node(f.nodes[0]).y);
  EXPECT_NEAR(total, 2000.0, 1e-9);
}
