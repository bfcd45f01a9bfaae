#include "pftopo/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pftopo {

namespace {

using Matrix38 = Eigen::Matrix<double, 3, 8>;
using Matrix88 = Eigen::Matrix<double, 8, 8>;

Matrix38 strain_displacement(const ElementPointGeometry& g) {
  Matrix38 b = Matrix38::Zero();
  for (int k = 0; k < 4; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    b(0, 2 * k) = g.dndx[kk];
    b(1, 2 * k + 1) = g.dndy[kk];
    b(2, 2 * k) = g.dndy[kk];
    b(2, 2 * k + 1) = g.dndx[kk];
  }
  return b;
}

double interpolate(const ElementPointGeometry& g, const std::array<int, 4>& nodes, const NodalField& field) {
  double v = 0.0;
  for (std::size_t k = 0; k < 4; ++k) v += g.n[k] * field[nodes[k]];
  return v;
}

bool same_edge(const BoundaryEdge& a, const BoundaryEdge& b) {
  return (a.n0 == b.n0 && a.n1 == b.n1) || (a.n0 == b.n1 && a.n1 == b.n0);
}

}  // namespace

void BoundaryConditions::fix_side(const StructuredQuadMesh& mesh, Side side, bool fix_x, bool fix_y) {
  for (int node : mesh.side_nodes(side)) fix_node(node, fix_x, fix_y);
}

void BoundaryConditions::fix_node(int node, bool fix_x, bool fix_y) {
  if (fix_x) dirichlet.push_back({node, 0, 0.0});
  if (fix_y) dirichlet.push_back({node, 1, 0.0});
}

void BoundaryConditions::add_traction(const StructuredQuadMesh& mesh, Side side, double gx, double gy, double from,
                                      double to) {
  const bool horizontal = side == Side::bottom || side == Side::top;
  const double slack = 1e-9 * (horizontal ? mesh.lx() : mesh.ly());
  for (const auto& edge : mesh.edges(side)) {
    const Point2 a = mesh.node(edge.n0);
    const Point2 b = mesh.node(edge.n1);
    const double ca = horizontal ? a.x : a.y;
    const double cb = horizontal ? b.x : b.y;
    const double lo = std::max(std::min(ca, cb), from);
    const double hi = std::min(std::max(ca, cb), to);
    if (hi - lo <= slack) continue;
    double s0 = (lo - ca) / (cb - ca);
    double s1 = (hi - ca) / (cb - ca);
    if (s0 > s1) std::swap(s0, s1);
    if (s0 * std::abs(cb - ca) <= slack) s0 = 0.0;
    if ((1.0 - s1) * std::abs(cb - ca) <= slack) s1 = 1.0;
    neumann.push_back({edge, gx, gy, s0, s1});
  }
}

void BoundaryConditions::add_traction(const StructuredQuadMesh& mesh, Side side, double gx, double gy) {
  for (const auto& edge : mesh.edges(side)) neumann.push_back({edge, gx, gy});
}

void BoundaryConditions::validate(const StructuredQuadMesh& mesh) const {
  if (dirichlet.empty()) throw std::invalid_argument("boundary conditions: Dirichlet set is empty");
  for (const auto& d : dirichlet) {
    if (d.node < 0 || d.node >= mesh.num_nodes() || (d.component != 0 && d.component != 1)) {
      throw std::invalid_argument("boundary conditions: invalid Dirichlet entry for node " + std::to_string(d.node));
    }
  }
  for (const auto& t : neumann) {
    const auto edges = mesh.edges(t.edge.side);
    const bool found = std::any_of(edges.begin(), edges.end(), [&](const BoundaryEdge& e) { return same_edge(e, t.edge); });
    if (!found) {
      throw std::invalid_argument("boundary conditions: loaded edge (" + std::to_string(t.edge.n0) + "," +
                                  std::to_string(t.edge.n1) + ") is not on the " + side_name(t.edge.side) +
                                  " boundary");
    }
  }
}

Strain2 element_strain(const StructuredQuadMesh& mesh, const ElementPointGeometry& g, int element,
                       const Eigen::VectorXd& u) {
  const auto& nodes = mesh.element(element);
  Strain2 eps;
  for (std::size_t k = 0; k < 4; ++k) {
    const double ux = u[dof_index(nodes[k], 0)];
    const double uy = u[dof_index(nodes[k], 1)];
    eps.xx += g.dndx[k] * ux;
    eps.yy += g.dndy[k] * uy;
    eps.xy += 0.5 * (g.dndy[k] * ux + g.dndx[k] * uy);
  }
  return eps;
}

SparseMatrix assemble_stiffness(const StructuredQuadMesh& mesh, const NodalField& phi,
                                const std::optional<NodalField>& chi, const IsotropicElasticity& mat,
                                const InterpolationSpec& spec) {
  if (phi.size() != mesh.num_nodes() || (chi && chi->size() != mesh.num_nodes())) {
    throw std::invalid_argument("assemble_stiffness: field size does not match mesh node count");
  }
  const ElementCache cache(mesh);
  const ElasticMatrix d = bulk_matrix(mat);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_elements()) * 64);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& nodes = mesh.element(e);
    Matrix88 ke = Matrix88::Zero();
    for (int q = 0; q < ElementCache::kPoints; ++q) {
      const auto& g = cache.at(e, q);
      const double ph = interpolate(g, nodes, phi);
      const double scale = chi ? graded_scale(ph, interpolate(g, nodes, *chi), spec) : single_scale(ph, spec);
      const Matrix38 b = strain_displacement(g);
      ke.noalias() += (scale * cache.weight(q) * g.det_j) * (b.transpose() * d * b);
    }
    for (int a = 0; a < 8; ++a) {
      for (int c = 0; c < 8; ++c) {
        triplets.emplace_back(dof_index(nodes[static_cast<std::size_t>(a / 2)], a % 2),
                              dof_index(nodes[static_cast<std::size_t>(c / 2)], c % 2), ke(a, c));
      }
    }
  }
  SparseMatrix k(2 * mesh.num_nodes(), 2 * mesh.num_nodes());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

Eigen::VectorXd assemble_load(const StructuredQuadMesh& mesh, const BoundaryConditions& bc) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
  const auto rule = gauss_line(2);
  for (const auto& t : bc.neumann) {
    const Point2 a = mesh.node(t.edge.n0);
    const Point2 b = mesh.node(t.edge.n1);
    const double half_length = 0.5 * (t.s1 - t.s0) * std::hypot(b.x - a.x, b.y - a.y);
    for (const auto& p : rule) {
      const double s = t.s0 + 0.5 * (t.s1 - t.s0) * (1.0 + p.xi);
      const double n0 = 1.0 - s;
      const double n1 = s;
      const double w = p.weight * half_length;
      f[dof_index(t.edge.n0, 0)] += w * n0 * t.gx;
      f[dof_index(t.edge.n0, 1)] += w * n0 * t.gy;
      f[dof_index(t.edge.n1, 0)] += w * n1 * t.gx;
      f[dof_index(t.edge.n1, 1)] += w * n1 * t.gy;
    }
  }
  return f;
}

ElasticitySolver::ElasticitySolver(const StructuredQuadMesh& mesh, const IsotropicElasticity& mat,
                                   const InterpolationSpec& spec, BoundaryConditions bc)
    : mesh_(mesh), cache_(mesh), mat_(mat), spec_(spec), bc_(std::move(bc)) {
  bc_.validate(mesh_);
  const int ndof = 2 * mesh_.num_nodes();

  free_index_.assign(static_cast<std::size_t>(ndof), 0);
  prescribed_ = Eigen::VectorXd::Zero(ndof);
  for (const auto& d : bc_.dirichlet) {
    const int dof = dof_index(d.node, d.component);
    free_index_[static_cast<std::size_t>(dof)] = -1;
    prescribed_[dof] = d.value;
  }
  for (auto& idx : free_index_) {
    if (idx == 0) idx = num_free_++;
  }
  load_ = assemble_load(mesh_, bc_);

  const ElasticMatrix d = bulk_matrix(mat_);
  const int ne = mesh_.num_elements();
  unit_stiffness_.resize(static_cast<std::size_t>(ne) * ElementCache::kPoints);
  std::vector<Eigen::Triplet<double>> pattern;
  pattern.reserve(static_cast<std::size_t>(ne) * 64);
  for (int e = 0; e < ne; ++e) {
    const auto& nodes = mesh_.element(e);
    for (int q = 0; q < ElementCache::kPoints; ++q) {
      const auto& g = cache_.at(e, q);
      const Matrix38 b = strain_displacement(g);
      unit_stiffness_[static_cast<std::size_t>(e * ElementCache::kPoints + q)] =
          (cache_.weight(q) * g.det_j) * (b.transpose() * d * b);
    }
    for (int a = 0; a < 8; ++a) {
      const int ra = free_index_[static_cast<std::size_t>(dof_index(nodes[static_cast<std::size_t>(a / 2)], a % 2))];
      for (int c = 0; c < 8; ++c) {
        const int rc = free_index_[static_cast<std::size_t>(dof_index(nodes[static_cast<std::size_t>(c / 2)], c % 2))];
        if (ra >= 0 && rc >= 0) pattern.emplace_back(ra, rc, 1.0);
      }
    }
  }
  reduced_.resize(num_free_, num_free_);
  reduced_.setFromTriplets(pattern.begin(), pattern.end());
  reduced_.makeCompressed();

  value_slot_.assign(static_cast<std::size_t>(ne) * 64, -1);
  const int* outer = reduced_.outerIndexPtr();
  const int* inner = reduced_.innerIndexPtr();
  for (int e = 0; e < ne; ++e) {
    const auto& nodes = mesh_.element(e);
    for (int a = 0; a < 8; ++a) {
      const int ra = free_index_[static_cast<std::size_t>(dof_index(nodes[static_cast<std::size_t>(a / 2)], a % 2))];
      for (int c = 0; c < 8; ++c) {
        const int rc = free_index_[static_cast<std::size_t>(dof_index(nodes[static_cast<std::size_t>(c / 2)], c % 2))];
        if (ra < 0 || rc < 0) continue;
        // Column-major storage: column rc, row ra.
        const int* begin = inner + outer[rc];
        const int* end = inner + outer[rc + 1];
        const int* hit = std::lower_bound(begin, end, ra);
        value_slot_[static_cast<std::size_t>(e * 64 + a * 8 + c)] = static_cast<int>(hit - inner);
      }
    }
  }
  factorization_.analyze(reduced_);
}

void ElasticitySolver::check_fields(const NodalField& phi, const std::optional<NodalField>& chi) const {
  if (phi.size() != mesh_.num_nodes() || (chi && chi->size() != mesh_.num_nodes())) {
    throw std::invalid_argument("state solve: field size does not match mesh node count");
  }
}

StateSolution ElasticitySolver::solve(const NodalField& phi, const std::optional<NodalField>& chi) {
  check_fields(phi, chi);
  double* values = reduced_.valuePtr();
  std::fill(values, values + reduced_.nonZeros(), 0.0);

  Eigen::VectorXd rhs(num_free_);
  for (int dof = 0; dof < load_.size(); ++dof) {
    const int r = free_index_[static_cast<std::size_t>(dof)];
    if (r >= 0) rhs[r] = load_[dof];
  }
  const bool inhomogeneous = prescribed_.lpNorm<Eigen::Infinity>() > 0.0;

  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const auto& nodes = mesh_.element(e);
    Matrix88 ke = Matrix88::Zero();
    for (int q = 0; q < ElementCache::kPoints; ++q) {
      const auto& g = cache_.at(e, q);
      const double ph = interpolate(g, nodes, phi);
      const double scale = chi ? graded_scale(ph, interpolate(g, nodes, *chi), spec_) : single_scale(ph, spec_);
      ke.noalias() += scale * unit_stiffness_[static_cast<std::size_t>(e * ElementCache::kPoints + q)];
    }
    const int* slots = &value_slot_[static_cast<std::size_t>(e * 64)];
    for (int a = 0; a < 8; ++a) {
      for (int c = 0; c < 8; ++c) {
        const int slot = slots[a * 8 + c];
        if (slot >= 0) values[slot] += ke(a, c);
      }
    }
    if (inhomogeneous) {
      for (int a = 0; a < 8; ++a) {
        const int ra = free_index_[static_cast<std::size_t>(dof_index(nodes[static_cast<std::size_t>(a / 2)], a % 2))];
        if (ra < 0) continue;
        for (int c = 0; c < 8; ++c) {
          const int dof_c = dof_index(nodes[static_cast<std::size_t>(c / 2)], c % 2);
          if (free_index_[static_cast<std::size_t>(dof_c)] < 0) rhs[ra] -= ke(a, c) * prescribed_[dof_c];
        }
      }
    }
  }

  factorization_.factorize(reduced_);
  Eigen::VectorXd x = factorization_.solve(rhs);
  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0.0) {
    Eigen::VectorXd r = rhs - reduced_ * x;
    double residual = r.norm() / rhs_norm;
    for (int pass = 0; pass < 3 && residual > 1e-12; ++pass) {
      x += factorization_.solve(r);
      r = rhs - reduced_ * x;
      residual = r.norm() / rhs_norm;
    }
    if (!(residual <= 1e-8)) {
      std::ostringstream msg;
      msg << "state solve: relative residual " << residual << " exceeds 1e-8";
      throw SolverFailure(msg.str(), residual);
    }
  }

  StateSolution out;
  out.u = prescribed_;
  for (int dof = 0; dof < out.u.size(); ++dof) {
    const int r = free_index_[static_cast<std::size_t>(dof)];
    if (r >= 0) out.u[dof] = x[r];
  }
  out.compliance = load_.dot(out.u);
  return out;
}

StateSolution solve_state(const StructuredQuadMesh& mesh, const NodalField& phi, const std::optional<NodalField>& chi,
                          const IsotropicElasticity& mat, const InterpolationSpec& spec, const BoundaryConditions& bc) {
  ElasticitySolver solver(mesh, mat, spec, bc);
  return solver.solve(phi, chi);
}

}  // namespace pftopo
