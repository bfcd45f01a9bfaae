#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pftopo {

/// Nodal scalar field (φ, χ, ...) on a mesh, one value per node.
using NodalField = Eigen::VectorXd;

enum class Side { left, right, bottom, top };

const char* side_name(Side side);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Boundary edge, oriented counter-clockwise around the domain.
struct BoundaryEdge {
  int n0 = 0;
  int n1 = 0;
  Side side = Side::left;
};

/// Regular nx-by-ny grid of bilinear quads on [0,lx]x[0,ly].
///
/// Nodes are numbered row-major with x running fastest: node (i,j) has id
/// j*(nx+1)+i and sits at (i*lx/nx, j*ly/ny). Element (i,j) has id j*nx+i
/// and its four nodes are listed counter-clockwise starting at the
/// lower-left corner.
class StructuredQuadMesh {
 public:
  StructuredQuadMesh(int nx, int ny, double lx, double ly);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double hx() const { return lx_ / nx_; }
  double hy() const { return ly_ / ny_; }
  double area() const { return lx_ * ly_; }

  int num_nodes() const { return (nx_ + 1) * (ny_ + 1); }
  int num_elements() const { return nx_ * ny_; }

  int node_id(int i, int j) const { return j * (nx_ + 1) + i; }
  Point2 node(int id) const;
  const std::array<int, 4>& element(int e) const { return elements_[static_cast<std::size_t>(e)]; }
  std::array<Point2, 4> element_coords(int e) const;

  /// Boundary edges of one side, ordered along increasing x (bottom/top) or y (left/right).
  std::span<const BoundaryEdge> edges(Side side) const;
  /// Node ids on one side, ordered like edges().
  std::vector<int> side_nodes(Side side) const;

 private:
  int nx_;
  int ny_;
  double lx_;
  double ly_;
  std::vector<std::array<int, 4>> elements_;
  std::array<std::vector<BoundaryEdge>, 4> edges_;
};

StructuredQuadMesh build_mesh(int nx, int ny, double lx, double ly);

/// Bilinear shape function values and reference gradients at (xi, eta).
struct ShapeEval {
  std::array<double, 4> value{};
  std::array<double, 4> dxi{};
  std::array<double, 4> deta{};
};

ShapeEval shape_functions(double xi, double eta);

struct QuadraturePoint {
  double xi = 0.0;
  double eta = 0.0;
  double weight = 0.0;
};

/// Tensor-product Gauss-Legendre rule on [-1,1]^2 with n points per axis (1 <= n <= 5).
std::vector<QuadraturePoint> gauss_square(int n);
/// Gauss-Legendre rule on [-1,1]; xi holds the abscissa, eta is unused.
std::vector<QuadraturePoint> gauss_line(int n);

/// Physical-space data of one element at one reference point.
struct ElementPointGeometry {
  std::array<double, 4> n{};
  std::array<double, 4> dndx{};
  std::array<double, 4> dndy{};
  double det_j = 0.0;
};

ElementPointGeometry element_geometry(const std::array<Point2, 4>& coords, double xi, double eta);

/// Physical gradients and weights at the 2x2 Gauss points of every element,
/// computed once per mesh and shared by all assemblers.
class ElementCache {
 public:
  explicit ElementCache(const StructuredQuadMesh& mesh);

  static constexpr int kPoints = 4;

  const ElementPointGeometry& at(int element, int q) const {
    return data_[static_cast<std::size_t>(element) * kPoints + static_cast<std::size_t>(q)];
  }
  double weight(int q) const { return weights_[static_cast<std::size_t>(q)]; }

 private:
  std::vector<ElementPointGeometry> data_;
  std::array<double, kPoints> weights_{};
};

}  // namespace pftopo
