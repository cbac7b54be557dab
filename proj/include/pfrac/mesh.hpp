#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pfrac {

using Index = std::int64_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryTag {
  Bottom,
  Top,
  Left,
  Right,
  GammaUy,
  SlitUpper,
  SlitLower,
  ReentrantFaces
};

std::string_view to_string(BoundaryTag tag);

/// Quadrilateral cell. Vertices are stored counter-clockwise starting at the
/// lower-left corner; local edge e joins vertices e and (e + 1) % 4.
struct QuadCell {
  std::array<Index, 4> nodes{};
  int level = 0;
};

struct BoundaryFacet {
  Index cell = 0;
  int local_edge = 0;
  std::array<Index, 2> nodes{};
  BoundaryTag tag = BoundaryTag::Bottom;
};

/// Structured quadrilateral mesh made of axis-aligned rectangles.
///
/// Immutable after construction. Geometric slits are represented by
/// duplicated nodes: cells on either side of the slit reference distinct
/// copies of the same coordinates, so continuous fields may jump there.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Point> nodes, std::vector<QuadCell> cells,
       std::vector<BoundaryFacet> facets, int refinement_level);

  std::span<const Point> nodes() const { return nodes_; }
  std::span<const QuadCell> cells() const { return cells_; }
  std::span<const BoundaryFacet> facets() const { return facets_; }

  const Point& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const QuadCell& cell(Index c) const { return cells_[static_cast<std::size_t>(c)]; }

  Index n_nodes() const { return static_cast<Index>(nodes_.size()); }
  Index n_cells() const { return static_cast<Index>(cells_.size()); }

  /// Maximum cell diagonal.
  double h() const { return h_; }
  int refinement_level() const { return level_; }

  double cell_diameter(Index c) const;
  double cell_area(Index c) const;
  double area() const;
  Point cell_center(Index c) const;

  /// Lower-left and upper-right corners of the bounding box.
  std::array<Point, 2> bounding_box() const;

  std::vector<BoundaryFacet> facets_with(BoundaryTag tag) const;
  Index count_facets(BoundaryTag tag) const;
  bool has_tag(BoundaryTag tag) const { return count_facets(tag) > 0; }

  /// Number of nodes sharing coordinates with a lower-numbered node.
  Index duplicate_count() const;

  /// Length of the facets carrying the given tag.
  double tagged_length(BoundaryTag tag) const;

 private:
  std::vector<Point> nodes_;
  std::vector<QuadCell> cells_;
  std::vector<BoundaryFacet> facets_;
  int level_ = 0;
  double h_ = 0.0;
};

/// Rectangle [x0, x1] x [y0, y1] with nx x ny cells; outer facets tagged
/// Bottom/Top/Left/Right.
Mesh build_rectangle_mesh(Point lower_left, Point upper_right, int nx, int ny);

/// 10 mm x 10 mm square with a horizontal slit along y = 5 mm from the centre
/// to the right edge (to the left edge when mirrored). The slit tip at
/// (5, 5) is shared; all other slit nodes are duplicated.
Mesh build_shear_mesh(int base_subdivisions, int refinements, bool mirror_slit = false);

/// 500 mm L-domain (square minus the lower-right 250 mm quadrant). The
/// loading strip GammaUy is snapped to whole facets at the right end of the
/// re-entrant edge y = 250 mm.
Mesh build_lshape_mesh(int base_subdivisions, int refinements);

/// Splits every cell into four. Duplicated slit nodes and boundary tags are
/// inherited by the children.
Mesh refine_uniform(const Mesh& mesh);

constexpr double kShearSize = 10.0;
constexpr double kLShapeSize = 500.0;
constexpr double kGammaUyLength = 30.0;

}  // namespace pfrac
