#include "pfrac/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace pfrac {

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Bottom: return "Bottom";
    case BoundaryTag::Top: return "Top";
    case BoundaryTag::Left: return "Left";
    case BoundaryTag::Right: return "Right";
    case BoundaryTag::GammaUy: return "GammaUy";
    case BoundaryTag::SlitUpper: return "SlitUpper";
    case BoundaryTag::SlitLower: return "SlitLower";
    case BoundaryTag::ReentrantFaces: return "ReentrantFaces";
  }
  return "Unknown";
}

Mesh::Mesh(std::vector<Point> nodes, std::vector<QuadCell> cells,
           std::vector<BoundaryFacet> facets, int refinement_level)
    : nodes_(std::move(nodes)),
      cells_(std::move(cells)),
      facets_(std::move(facets)),
      level_(refinement_level) {
  for (Index c = 0; c < n_cells(); ++c) h_ = std::max(h_, cell_diameter(c));
}

double Mesh::cell_diameter(Index c) const {
  const auto& n = cell(c).nodes;
  const auto diag = [&](Index a, Index b) {
    return std::hypot(node(a).x - node(b).x, node(a).y - node(b).y);
  };
  return std::max(diag(n[0], n[2]), diag(n[1], n[3]));
}

double Mesh::cell_area(Index c) const {
  // Shoelace formula; exact for any simple quadrilateral.
  const auto& n = cell(c).nodes;
  double a = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Point& p = node(n[k]);
    const Point& q = node(n[(k + 1) % 4]);
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

double Mesh::area() const {
  double a = 0.0;
  for (Index c = 0; c < n_cells(); ++c) a += cell_area(c);
  return a;
}

Point Mesh::cell_center(Index c) const {
  Point p;
  for (Index n : cell(c).nodes) {
    p.x += 0.25 * node(n).x;
    p.y += 0.25 * node(n).y;
  }
  return p;
}

std::array<Point, 2> Mesh::bounding_box() const {
  Point lo{nodes_.at(0).x, nodes_.at(0).y};
  Point hi = lo;
  for (const Point& p : nodes_) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  return {lo, hi};
}

std::vector<BoundaryFacet> Mesh::facets_with(BoundaryTag tag) const {
  std::vector<BoundaryFacet> out;
  std::copy_if(facets_.begin(), facets_.end(), std::back_inserter(out),
               [tag](const BoundaryFacet& f) { return f.tag == tag; });
  return out;
}

Index Mesh::count_facets(BoundaryTag tag) const {
  return std::count_if(facets_.begin(), facets_.end(),
                       [tag](const BoundaryFacet& f) { return f.tag == tag; });
}

Index Mesh::duplicate_count() const {
  std::map<std::pair<double, double>, int> seen;
  Index dup = 0;
  for (const Point& p : nodes_) {
    if (seen[{p.x, p.y}]++ > 0) ++dup;
  }
  return dup;
}

double Mesh::tagged_length(BoundaryTag tag) const {
  double len = 0.0;
  for (const auto& f : facets_) {
    if (f.tag != tag) continue;
    len += std::hypot(node(f.nodes[0]).x - node(f.nodes[1]).x,
                      node(f.nodes[0]).y - node(f.nodes[1]).y);
  }
  return len;
}

namespace {

BoundaryFacet make_facet(const std::vector<QuadCell>& cells, Index c, int edge,
                         BoundaryTag tag) {
  const auto& n = cells[static_cast<std::size_t>(c)].nodes;
  return BoundaryFacet{c, edge, {n[edge], n[(edge + 1) % 4]}, tag};
}

int subdivisions(int base, int refinements) {
  if (refinements < 0) throw std::invalid_argument("refinements must be >= 0");
  if (refinements > 12) throw std::invalid_argument("refinements too large");
  return base << refinements;
}

}  // namespace

Mesh build_rectangle_mesh(Point lower_left, Point upper_right, int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("rectangle mesh needs nx, ny >= 1");
  if (!(upper_right.x > lower_left.x && upper_right.y > lower_left.y))
    throw std::invalid_argument("rectangle mesh corners are not ordered");
  const double dx = (upper_right.x - lower_left.x) / nx;
  const double dy = (upper_right.y - lower_left.y) / ny;
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      nodes.push_back({i == nx ? upper_right.x : lower_left.x + i * dx,
                       j == ny ? upper_right.y : lower_left.y + j * dy});
  const auto id = [nx](int i, int j) { return static_cast<Index>(j) * (nx + 1) + i; };

  std::vector<QuadCell> cells;
  std::vector<BoundaryFacet> facets;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      cells.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)}, 0});
      const Index c = static_cast<Index>(cells.size()) - 1;
      if (j == 0) facets.push_back(make_facet(cells, c, 0, BoundaryTag::Bottom));
      if (i == nx - 1) facets.push_back(make_facet(cells, c, 1, BoundaryTag::Right));
      if (j == ny - 1) facets.push_back(make_facet(cells, c, 2, BoundaryTag::Top));
      if (i == 0) facets.push_back(make_facet(cells, c, 3, BoundaryTag::Left));
    }
  }
  return Mesh(std::move(nodes), std::move(cells), std::move(facets), 0);
}

Mesh build_shear_mesh(int base_subdivisions, int refinements, bool mirror_slit) {
  if (base_subdivisions < 2 || base_subdivisions % 2 != 0)
    throw std::invalid_argument(
        "shear mesh: base_subdivisions must be even and >= 2 so that the slit "
        "line y = 5 mm is mesh-conforming (got " +
        std::to_string(base_subdivisions) + ")");
  const int n = subdivisions(base_subdivisions, refinements);
  const int half = n / 2;
  const double dx = kShearSize / n;

  std::vector<Point> nodes;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) nodes.push_back({i * dx, j * dx});
  const auto id = [n](int i, int j) { return static_cast<Index>(j) * (n + 1) + i; };

  // Slit nodes on y = 5 excluding the tip; each gets a copy used by the cells
  // above the slit.
  const auto on_slit = [&](int i) { return mirror_slit ? i < half : i > half; };
  std::vector<Index> upper_copy(static_cast<std::size_t>(n + 1), -1);
  for (int i = 0; i <= n; ++i) {
    if (!on_slit(i)) continue;
    upper_copy[static_cast<std::size_t>(i)] = static_cast<Index>(nodes.size());
    nodes.push_back(nodes[static_cast<std::size_t>(id(i, half))]);
  }
  const auto node_for_cell = [&](int i, int j, int cell_row) {
    if (j == half && cell_row == half && upper_copy[static_cast<std::size_t>(i)] >= 0)
      return upper_copy[static_cast<std::size_t>(i)];
    return id(i, j);
  };
  // Columns whose edge on y = 5 is part of the slit.
  const auto slit_column = [&](int i) { return mirror_slit ? i < half : i >= half; };

  std::vector<QuadCell> cells;
  std::vector<BoundaryFacet> facets;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      cells.push_back({{node_for_cell(i, j, j), node_for_cell(i + 1, j, j),
                        node_for_cell(i + 1, j + 1, j), node_for_cell(i, j + 1, j)},
                       refinements});
      const Index c = static_cast<Index>(cells.size()) - 1;
      if (j == 0) facets.push_back(make_facet(cells, c, 0, BoundaryTag::Bottom));
      if (i == n - 1) facets.push_back(make_facet(cells, c, 1, BoundaryTag::Right));
      if (j == n - 1) facets.push_back(make_facet(cells, c, 2, BoundaryTag::Top));
      if (i == 0) facets.push_back(make_facet(cells, c, 3, BoundaryTag::Left));
      if (slit_column(i) && j == half - 1)
        facets.push_back(make_facet(cells, c, 2, BoundaryTag::SlitLower));
      if (slit_column(i) && j == half)
        facets.push_back(make_facet(cells, c, 0, BoundaryTag::SlitUpper));
    }
  }
  return Mesh(std::move(nodes), std::move(cells), std::move(facets), refinements);
}

Mesh build_lshape_mesh(int base_subdivisions, int refinements) {
  if (base_subdivisions < 1) throw std::invalid_argument("L-shape mesh: base_subdivisions must be >= 1");
  const int n = subdivisions(base_subdivisions, refinements);  // cells per block edge
  const int m = 2 * n;                                          // cells per domain edge
  const double dx = kLShapeSize / m;

  // Strip of whole facets at the right end of the re-entrant edge.
  const int strip_facets = std::max(1, static_cast<int>(std::lround(kGammaUyLength / dx)));
  const double strip = strip_facets * dx;
  if (std::abs(strip - kGammaUyLength) > dx || strip_facets > n) {
    throw std::invalid_argument("L-shape mesh: facet length " + std::to_string(dx) +
                                " mm cannot approximate the 30 mm loading strip; increase refinements");
  }

  const auto inside = [n](int i, int j) { return i >= 0 && j >= 0 && i < 2 * n && j < 2 * n && !(i >= n && j < n); };

  std::vector<Index> grid_to_node(static_cast<std::size_t>((m + 1) * (m + 1)), -1);
  std::vector<Point> nodes;
  const auto node = [&](int i, int j) {
    Index& slot = grid_to_node[static_cast<std::size_t>(j * (m + 1) + i)];
    if (slot < 0) {
      slot = static_cast<Index>(nodes.size());
      nodes.push_back({i * dx, j * dx});
    }
    return slot;
  };

  std::vector<QuadCell> cells;
  std::vector<BoundaryFacet> facets;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (!inside(i, j)) continue;
      cells.push_back({{node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)}, refinements});
      const Index c = static_cast<Index>(cells.size()) - 1;
      if (!inside(i, j - 1)) {
        BoundaryTag tag = BoundaryTag::Bottom;
        if (j > 0) tag = (i >= m - strip_facets) ? BoundaryTag::GammaUy : BoundaryTag::ReentrantFaces;
        facets.push_back(make_facet(cells, c, 0, tag));
      }
      if (!inside(i + 1, j))
        facets.push_back(make_facet(cells, c, 1, i + 1 == m ? BoundaryTag::Right : BoundaryTag::ReentrantFaces));
      if (!inside(i, j + 1)) facets.push_back(make_facet(cells, c, 2, BoundaryTag::Top));
      if (!inside(i - 1, j)) facets.push_back(make_facet(cells, c, 3, BoundaryTag::Left));
    }
  }
  return Mesh(std::move(nodes), std::move(cells), std::move(facets), refinements);
}

Mesh refine_uniform(const Mesh& mesh) {
  std::vector<Point> nodes(mesh.nodes().begin(), mesh.nodes().end());
  std::map<std::pair<Index, Index>, Index> edge_mid;
  const auto midpoint = [&](Index a, Index b) {
    const auto key = std::minmax(a, b);
    auto it = edge_mid.find(key);
    if (it != edge_mid.end()) return it->second;
    const Index id = static_cast<Index>(nodes.size());
    nodes.push_back({0.5 * (mesh.node(a).x + mesh.node(b).x), 0.5 * (mesh.node(a).y + mesh.node(b).y)});
    edge_mid.emplace(key, id);
    return id;
  };

  std::vector<QuadCell> cells;
  cells.reserve(static_cast<std::size_t>(4 * mesh.n_cells()));
  for (Index c = 0; c < mesh.n_cells(); ++c) {
    const auto& v = mesh.cell(c).nodes;
    const int level = mesh.cell(c).level + 1;
    std::array<Index, 4> mid{};
    for (int e = 0; e < 4; ++e) mid[e] = midpoint(v[e], v[(e + 1) % 4]);
    const Index centre = static_cast<Index>(nodes.size());
    nodes.push_back(mesh.cell_center(c));
    cells.push_back({{v[0], mid[0], centre, mid[3]}, level});
    cells.push_back({{mid[0], v[1], mid[1], centre}, level});
    cells.push_back({{centre, mid[1], v[2], mid[2]}, level});
    cells.push_back({{mid[3], centre, mid[2], v[3]}, level});
  }

  // Child k of a cell touches parent edge e for k in {e, e + 1 mod 4}.
  std::vector<BoundaryFacet> facets;
  facets.reserve(2 * mesh.facets().size());
  for (const auto& f : mesh.facets()) {
    for (int k : {f.local_edge, (f.local_edge + 1) % 4}) {
      const Index child = 4 * f.cell + k;
      facets.push_back(make_facet(cells, child, f.local_edge, f.tag));
    }
  }
  return Mesh(std::move(nodes), std::move(cells), std::move(facets), mesh.refinement_level() + 1);
}

}  // namespace pfrac
