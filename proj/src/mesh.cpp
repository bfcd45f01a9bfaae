#include "pftopo/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pftopo {

const char* side_name(Side side) {
  switch (side) {
    case Side::left:
      return "left";
    case Side::right:
      return "right";
    case Side::bottom:
      return "bottom";
    case Side::top:
      return "top";
  }
  return "?";
}

StructuredQuadMesh::StructuredQuadMesh(int nx, int ny, double lx, double ly)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("mesh needs at least one element per axis, got " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (!(lx > 0.0) || !(ly > 0.0)) {
    throw std::invalid_argument("mesh extents must be positive");
  }

  elements_.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      elements_.push_back({node_id(i, j), node_id(i + 1, j), node_id(i + 1, j + 1), node_id(i, j + 1)});
    }
  }

  auto& bottom = edges_[static_cast<std::size_t>(Side::bottom)];
  auto& top = edges_[static_cast<std::size_t>(Side::top)];
  for (int i = 0; i < nx; ++i) {
    bottom.push_back({node_id(i, 0), node_id(i + 1, 0), Side::bottom});
    top.push_back({node_id(i + 1, ny), node_id(i, ny), Side::top});
  }
  auto& left = edges_[static_cast<std::size_t>(Side::left)];
  auto& right = edges_[static_cast<std::size_t>(Side::right)];
  for (int j = 0; j < ny; ++j) {
    right.push_back({node_id(nx, j), node_id(nx, j + 1), Side::right});
    left.push_back({node_id(0, j + 1), node_id(0, j), Side::left});
  }
}

Point2 StructuredQuadMesh::node(int id) const {
  const int i = id % (nx_ + 1);
  const int j = id / (nx_ + 1);
  return {i * lx_ / nx_, j * ly_ / ny_};
}

std::array<Point2, 4> StructuredQuadMesh::element_coords(int e) const {
  const auto& nodes = element(e);
  return {node(nodes[0]), node(nodes[1]), node(nodes[2]), node(nodes[3])};
}

std::span<const BoundaryEdge> StructuredQuadMesh::edges(Side side) const {
  return edges_[static_cast<std::size_t>(side)];
}

std::vector<int> StructuredQuadMesh::side_nodes(Side side) const {
  std::vector<int> ids;
  switch (side) {
    case Side::bottom:
      for (int i = 0; i <= nx_; ++i) ids.push_back(node_id(i, 0));
      break;
    case Side::top:
      for (int i = 0; i <= nx_; ++i) ids.push_back(node_id(i, ny_));
      break;
    case Side::left:
      for (int j = 0; j <= ny_; ++j) ids.push_back(node_id(0, j));
      break;
    case Side::right:
      for (int j = 0; j <= ny_; ++j) ids.push_back(node_id(nx_, j));
      break;
  }
  return ids;
}

StructuredQuadMesh build_mesh(int nx, int ny, double lx, double ly) {
  return StructuredQuadMesh(nx, ny, lx, ly);
}

ShapeEval shape_functions(double xi, double eta) {
  // Local node k sits at (sx[k], sy[k]) in the reference square.
  static constexpr std::array<double, 4> sx{-1.0, 1.0, 1.0, -1.0};
  static constexpr std::array<double, 4> sy{-1.0, -1.0, 1.0, 1.0};
  ShapeEval out;
  for (std::size_t k = 0; k < 4; ++k) {
    out.value[k] = 0.25 * (1.0 + sx[k] * xi) * (1.0 + sy[k] * eta);
    out.dxi[k] = 0.25 * sx[k] * (1.0 + sy[k] * eta);
    out.deta[k] = 0.25 * sy[k] * (1.0 + sx[k] * xi);
  }
  return out;
}

namespace {

struct Gauss1d {
  std::vector<double> x;
  std::vector<double> w;
};

Gauss1d gauss_legendre(int n) {
  switch (n) {
    case 1:
      return {{0.0}, {2.0}};
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return {{-a, a}, {1.0, 1.0}};
    }
    case 3: {
      const double a = std::sqrt(0.6);
      return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      return {{-b, -a, a, b}, {wb, wa, wa, wb}};
    }
    case 5: {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      return {{-b, -a, 0.0, a, b}, {wb, wa, 128.0 / 225.0, wa, wb}};
    }
    default:
      throw std::invalid_argument("Gauss-Legendre order must be in [1,5], got " + std::to_string(n));
  }
}

}  // namespace

std::vector<QuadraturePoint> gauss_square(int n) {
  const auto g = gauss_legendre(n);
  std::vector<QuadraturePoint> rule;
  for (std::size_t j = 0; j < g.x.size(); ++j) {
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      rule.push_back({g.x[i], g.x[j], g.w[i] * g.w[j]});
    }
  }
  return rule;
}

std::vector<QuadraturePoint> gauss_line(int n) {
  const auto g = gauss_legendre(n);
  std::vector<QuadraturePoint> rule;
  for (std::size_t i = 0; i < g.x.size(); ++i) rule.push_back({g.x[i], 0.0, g.w[i]});
  return rule;
}

ElementPointGeometry element_geometry(const std::array<Point2, 4>& coords, double xi, double eta) {
  const ShapeEval s = shape_functions(xi, eta);
  double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    j11 += s.dxi[k] * coords[k].x;
    j12 += s.dxi[k] * coords[k].y;
    j21 += s.deta[k] * coords[k].x;
    j22 += s.deta[k] * coords[k].y;
  }
  ElementPointGeometry g;
  g.det_j = j11 * j22 - j12 * j21;
  if (!(g.det_j > 0.0)) throw std::runtime_error("element with non-positive Jacobian");
  const double inv = 1.0 / g.det_j;
  for (std::size_t k = 0; k < 4; ++k) {
    g.n[k] = s.value[k];
    g.dndx[k] = inv * (j22 * s.dxi[k] - j12 * s.deta[k]);
    g.dndy[k] = inv * (-j21 * s.dxi[k] + j11 * s.deta[k]);
  }
  return g;
}

ElementCache::ElementCache(const StructuredQuadMesh& mesh) {
  const auto rule = gauss_square(2);
  data_.resize(static_cast<std::size_t>(mesh.num_elements()) * kPoints);
  for (int q = 0; q < kPoints; ++q) weights_[static_cast<std::size_t>(q)] = rule[static_cast<std::size_t>(q)].weight;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto coords = mesh.element_coords(e);
    for (int q = 0; q < kPoints; ++q) {
      const auto& p = rule[static_cast<std::size_t>(q)];
      data_[static_cast<std::size_t>(e) * kPoints + static_cast<std::size_t>(q)] = element_geometry(coords, p.xi, p.eta);
    }
  }
}

}  // namespace pftopo
