#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sigmak/expr.hpp"
#include "sigmak/geometry.hpp"

namespace sigmak::grid {

class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedShape : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Shape { Ball, Box, Ellipsoid };

/// Convex analytic domain in R^n, n in {2, 3}.
struct Domain {
  int n = 2;
  Shape shape = Shape::Ball;
  Eigen::VectorXd size;    // Ball: [radius]; Box: half-widths; Ellipsoid: semi-axes
  Eigen::VectorXd center;

  void validate() const;
  bool inside(const Eigen::VectorXd& x) const;
  /// Distance to the boundary from an inside point (exact for all shapes).
  double boundary_distance(const Eigen::VectorXd& x) const;
  /// Distance t > 0 at which the ray from + t*sign*e_dir first crosses the
  /// boundary; requires from inside.
  double axis_cut(const Eigen::VectorXd& from, int dir, int sign) const;
  double diameter() const;
  Eigen::VectorXd half_extent() const;
};

/// Dirichlet data phi on the boundary, affine or expression in x.
struct BoundaryData {
  static BoundaryData affine(Eigen::VectorXd slope, double offset);
  static BoundaryData expression(const std::string& text);

  double eval(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
  bool is_affine() const { return !ast.has_value(); }

  Eigen::VectorXd slope;
  double offset = 0.0;
  std::optional<expr::ExprAst> ast;
};

enum class NodeClass : std::uint8_t { Exterior = 0, BoundaryAdjacent = 1, Interior = 2 };

/// Symmetric-matrix slot enumeration shared by jet stencils and Jacobian
/// assembly: diagonal entries first, then the strict upper triangle.
inline int tri_count(int n) { return n + n * (n - 1) / 2; }
inline int tri_index(int n, int a, int b) {
  if (a == b) return a;
  if (a > b) std::swap(a, b);
  int off = n;
  for (int r = 0; r < a; ++r) off += n - 1 - r;
  return off + (b - a - 1);
}

/// Arm of a boundary-adjacent node that crosses the boundary before the
/// neighboring lattice point.
struct Cut {
  int dir = 0;
  int sign = 1;
  double frac = 0.0;  // crossing distance / h, in (0, 1]
  double phi = 0.0;   // boundary value at the crossing
};

/// Dirichlet closure of a boundary-adjacent node: linear extrapolation
/// through the inward neighbor hits phi at the nearest cut,
///   (1 + frac) u_node - frac u_inner = phi.
struct BoundaryRow {
  int inner = -1;  // compact index of the inward neighbor; -1 collapses to u = phi
  double frac = 0.0;
  double phi = 0.0;
};

/// Finite-difference jet of one node as linear forms in the field values:
///   du_d        = sum_s gw(d, s) u[nodes[s]] + gc[d]
///   d2u_tri(t)  = sum_s hw(t, s) u[nodes[s]] + hc[t]
/// where tri enumerates diagonal entries first, then the strict upper
/// triangle. Constants carry boundary values from cut points.
struct JetStencil {
  std::vector<int> nodes;
  Eigen::MatrixXd gw;
  Eigen::VectorXd gc;
  Eigen::MatrixXd hw;
  Eigen::VectorXd hc;
  bool full_order = true;  // false where a degraded one-sided/LSQ form was used
};

struct Grid {
  Domain domain;
  double h = 0.0;
  Eigen::VectorXi half_counts;  // lattice indices run in [-half_counts, half_counts]
  Eigen::VectorXi dims;

  std::vector<NodeClass> cls;           // per lattice id
  std::vector<int> compact_of;          // lattice id -> compact id or -1
  std::vector<int> lattice_of;          // compact id -> lattice id
  std::vector<std::vector<Cut>> cuts;   // per compact id
  std::vector<BoundaryRow> closure;     // per compact id (boundary-adjacent only)
  std::vector<JetStencil> stencils;     // per compact id

  int inside_count = 0;
  int interior_count = 0;
  int boundary_count = 0;

  int n() const { return domain.n; }
  int lattice_id(const Eigen::VectorXi& idx) const;
  Eigen::VectorXi lattice_idx(int id) const;
  Eigen::VectorXd node_x(int lattice) const;
  Eigen::VectorXd node_x_compact(int c) const { return node_x(lattice_of[c]); }
  NodeClass class_compact(int c) const { return cls[lattice_of[c]]; }
  bool is_interior(int c) const { return class_compact(c) == NodeClass::Interior; }
  std::string describe_node(int c) const;
};

/// Classifies the lattice, samples phi at the exact grid-line/boundary
/// crossings, and precomputes jet stencils and boundary closures.
Grid build_grid(const Domain& domain, double h, const BoundaryData& phi);

/// Scalar field over the non-exterior nodes of a grid.
struct Field {
  std::shared_ptr<const Grid> grid;
  Eigen::VectorXd values;

  static Field zeros(std::shared_ptr<const Grid> g);
  /// Samples a callable u(x) at every non-exterior node.
  template <typename F>
  static Field sample(std::shared_ptr<const Grid> g, F&& f) {
    Field out;
    out.grid = std::move(g);
    out.values.resize(out.grid->inside_count);
    for (int c = 0; c < out.grid->inside_count; ++c) {
      out.values[c] = f(out.grid->node_x_compact(c));
    }
    return out;
  }
};

/// Applies the precomputed stencil at a non-exterior node. Throws
/// SpacelikeViolation (with node location) if the discrete gradient
/// leaves the spacelike range.
geometry::GraphJet fd_jet(const Field& field, int compact);

struct BoundaryCurvatureReport {
  double min_curvature = 0.0;
  double max_curvature = 0.0;
  bool admissible_for_k = false;
};

/// Closed-form principal curvature range of the domain boundary and the
/// verdict whether at least k-1 boundary curvatures are positive. Boxes are
/// non-smooth and rejected.
BoundaryCurvatureReport boundary_curvatures(const Domain& domain, int k);

void dump_field_csv(const Field& field, const std::string& path);
Field load_field_csv(std::shared_ptr<const Grid> grid, const std::string& path);
void dump_classification_csv(const Grid& grid, const std::string& path);

}  // namespace sigmak::grid
