#include "sigmak/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace sigmak::grid {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

constexpr double kMinCutFrac = 0.1;  // closer cuts add no stencil information

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

// Polynomial-fit finite-difference weights: offsets are in units of h,
// result approximates d^order/dx^order at 0 after division by h^order.
VectorXd fd_weights(const std::vector<double>& offsets, int order) {
  const int m = static_cast<int>(offsets.size());
  MatrixXd v(m, m);
  for (int j = 0; j < m; ++j) {
    for (int s = 0; s < m; ++s) v(j, s) = std::pow(offsets[s], j);
  }
  VectorXd rhs = VectorXd::Zero(m);
  rhs[order] = factorial(order);
  return v.fullPivLu().solve(rhs);
}

}  // namespace

void Domain::validate() const {
  if (n < 2 || n > 3) {
    throw std::invalid_argument("Domain: dimension must be 2 or 3");
  }
  const int expect = (shape == Shape::Ball) ? 1 : n;
  if (size.size() != expect) {
    throw std::invalid_argument("Domain: wrong number of size parameters");
  }
  if (!(size.minCoeff() > 0.0)) {
    throw std::invalid_argument("Domain: size parameters must be positive");
  }
  if (center.size() != n) {
    throw std::invalid_argument("Domain: center dimension mismatch");
  }
}

bool Domain::inside(const VectorXd& x) const {
  const VectorXd d = x - center;
  switch (shape) {
    case Shape::Ball:
      return d.norm() < size[0];
    case Shape::Box:
      return (d.cwiseAbs().array() < size.array()).all();
    case Shape::Ellipsoid:
      return d.cwiseQuotient(size).squaredNorm() < 1.0;
  }
  return false;
}

double Domain::boundary_distance(const VectorXd& x) const {
  const VectorXd d = x - center;
  switch (shape) {
    case Shape::Ball:
      return size[0] - d.norm();
    case Shape::Box:
      return (size - d.cwiseAbs()).minCoeff();
    case Shape::Ellipsoid: {
      // Projection onto the ellipsoid: the nearest boundary point is
      // y_i = a_i^2 d_i / (t + a_i^2) with sum (a_i d_i / (t + a_i^2))^2 = 1;
      // for inside points the root satisfies t in (-min a_i^2, 0].
      if (d.norm() < 1e-14) return size.minCoeff();
      const double amin2 = size.minCoeff() * size.minCoeff();
      auto f = [&](double t) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
          const double q = size[i] * d[i] / (t + size[i] * size[i]);
          s += q * q;
        }
        return s;
      };
      double lo = -amin2 * (1.0 - 1e-12), hi = 0.0;
      if (f(hi) >= 1.0) return 0.0;  // on or numerically at the boundary
      while (f(lo) < 1.0) lo = 0.5 * (lo - amin2);  // guard rounding
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) >= 1.0 ? lo : hi) = mid;
      }
      const double t = 0.5 * (lo + hi);
      VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        y[i] = size[i] * size[i] * d[i] / (t + size[i] * size[i]);
      }
      return (y - d).norm();
    }
  }
  return 0.0;
}

double Domain::axis_cut(const VectorXd& from, int dir, int sign) const {
  const VectorXd d = from - center;
  switch (shape) {
    case Shape::Box:
      return size[dir] - sign * d[dir];
    case Shape::Ball: {
      const double b = 2.0 * sign * d[dir];
      const double c0 = d.squaredNorm() - size[0] * size[0];
      return 0.5 * (-b + std::sqrt(b * b - 4.0 * c0));
    }
    case Shape::Ellipsoid: {
      const double a2 = 1.0 / (size[dir] * size[dir]);
      const double b = 2.0 * sign * d[dir] / (size[dir] * size[dir]);
      const double c0 = d.cwiseQuotient(size).squaredNorm() - 1.0;
      return (-b + std::sqrt(b * b - 4.0 * a2 * c0)) / (2.0 * a2);
    }
  }
  return 0.0;
}

double Domain::diameter() const {
  switch (shape) {
    case Shape::Ball:
      return 2.0 * size[0];
    case Shape::Box:
      return 2.0 * size.norm();
    case Shape::Ellipsoid:
      return 2.0 * size.maxCoeff();
  }
  return 0.0;
}

VectorXd Domain::half_extent() const {
  if (shape == Shape::Ball) return VectorXd::Constant(n, size[0]);
  return size;
}

BoundaryData BoundaryData::affine(VectorXd slope, double offset) {
  BoundaryData b;
  b.slope = std::move(slope);
  b.offset = offset;
  return b;
}

BoundaryData BoundaryData::expression(const std::string& text) {
  BoundaryData b;
  b.ast = expr::parse(text);
  if (b.ast->uses_u || b.ast->max_p > 0) {
    throw std::invalid_argument("BoundaryData: phi may depend on x only");
  }
  return b;
}

double BoundaryData::eval(const VectorXd& x) const {
  if (!ast) return slope.dot(x) + offset;
  expr::Env env;
  env.x = x;
  env.p = VectorXd::Zero(x.size());
  return expr::eval(*ast, env);
}

VectorXd BoundaryData::grad(const VectorXd& x) const {
  if (!ast) return slope;
  expr::Env env;
  env.x = x;
  env.p = VectorXd::Zero(x.size());
  return expr::eval_with_partials(*ast, env).dx;
}

int Grid::lattice_id(const VectorXi& idx) const {
  int id = 0, stride = 1;
  for (int d = 0; d < n(); ++d) {
    id += (idx[d] + half_counts[d]) * stride;
    stride *= dims[d];
  }
  return id;
}

VectorXi Grid::lattice_idx(int id) const {
  VectorXi idx(n());
  for (int d = 0; d < n(); ++d) {
    idx[d] = id % dims[d] - half_counts[d];
    id /= dims[d];
  }
  return idx;
}

VectorXd Grid::node_x(int lattice) const {
  const VectorXi idx = lattice_idx(lattice);
  VectorXd x(n());
  for (int d = 0; d < n(); ++d) x[d] = domain.center[d] + idx[d] * h;
  return x;
}

std::string Grid::describe_node(int c) const {
  const VectorXi idx = lattice_idx(lattice_of[c]);
  std::ostringstream out;
  out << "node (";
  for (int d = 0; d < n(); ++d) out << (d ? "," : "") << idx[d];
  out << ")";
  return out.str();
}

namespace {

struct Builder {
  Grid& g;
  const BoundaryData& phi;

  int n() const { return g.n(); }

  bool in_array(const VectorXi& idx) const {
    for (int d = 0; d < n(); ++d) {
      if (std::abs(idx[d]) > g.half_counts[d]) return false;
    }
    return true;
  }

  NodeClass class_at(const VectorXi& idx) const {
    if (!in_array(idx)) return NodeClass::Exterior;
    return g.cls[g.lattice_id(idx)];
  }

  int compact_at(const VectorXi& idx) const {
    if (!in_array(idx)) return -1;
    return g.compact_of[g.lattice_id(idx)];
  }

  bool inside_at(const VectorXi& idx) const { return compact_at(idx) >= 0; }

  // ------- axis stencils -------

  struct AxisPoint {
    double offset;  // in units of h
    int node;       // compact id, or -1 for a known boundary value
    double value;   // phi at the cut when node == -1
  };

  void axis_points(int c, int d, std::vector<AxisPoint>& pts, bool& degraded) const {
    const VectorXi idx = g.lattice_idx(g.lattice_of[c]);
    pts.clear();
    pts.push_back({0.0, c, 0.0});
    int open_side = 0;  // sign of a side with lattice support
    for (int sign : {+1, -1}) {
      VectorXi nb = idx;
      nb[d] += sign;
      const int nb_c = compact_at(nb);
      if (nb_c >= 0) {
        pts.push_back({static_cast<double>(sign), nb_c, 0.0});
        open_side = sign;
      } else {
        const Cut* cut = find_cut(c, d, sign);
        if (cut != nullptr && cut->frac >= kMinCutFrac) {
          pts.push_back({sign * cut->frac, -1, cut->phi});
        }
      }
    }
    // One-sided second-order forms need a fourth point; extend away from
    // the cut side when the lattice allows it.
    const bool has_both_neighbors =
        pts.size() == 3 && pts[1].node >= 0 && pts[2].node >= 0;
    if (!has_both_neighbors && open_side != 0) {
      VectorXi ext = idx;
      ext[d] += 2 * open_side;
      const int ext_c = compact_at(ext);
      if (ext_c >= 0) pts.push_back({2.0 * open_side, ext_c, 0.0});
      VectorXi ext3 = idx;
      ext3[d] += 3 * open_side;
      if (pts.size() < 4 && compact_at(ext3) >= 0) {
        pts.push_back({3.0 * open_side, g.compact_of[g.lattice_id(ext3)], 0.0});
      }
    }
    if (pts.size() < 4 && !has_both_neighbors) degraded = true;
  }

  const Cut* find_cut(int c, int d, int sign) const {
    for (const Cut& cut : g.cuts[c]) {
      if (cut.dir == d && cut.sign == sign) return &cut;
    }
    return nullptr;
  }

  // ------- mixed-derivative stencils -------

  // Candidate 3-point offset sets for a first derivative, with weights in
  // h-units. Central first, then matched one-sided pairs.
  struct OffsetSet {
    std::vector<int> offs;
    VectorXd w;
  };

  std::vector<OffsetSet> first_derivative_sets() const {
    std::vector<OffsetSet> sets;
    for (const std::vector<int>& offs :
         {std::vector<int>{-1, 0, 1}, std::vector<int>{0, 1, 2},
          std::vector<int>{0, -1, -2}}) {
      std::vector<double> d(offs.begin(), offs.end());
      sets.push_back({offs, fd_weights(d, 1)});
    }
    return sets;
  }

  bool try_mixed(int c, int da, int db, const OffsetSet& sa, const OffsetSet& sb,
                 std::vector<std::pair<int, double>>& terms) const {
    const VectorXi idx = g.lattice_idx(g.lattice_of[c]);
    terms.clear();
    for (std::size_t i = 0; i < sa.offs.size(); ++i) {
      for (std::size_t j = 0; j < sb.offs.size(); ++j) {
        const double w = sa.w[i] * sb.w[j];
        if (w == 0.0) continue;
        VectorXi p = idx;
        p[da] += sa.offs[i];
        p[db] += sb.offs[j];
        const int pc = compact_at(p);
        if (pc < 0) return false;
        terms.emplace_back(pc, w);
      }
    }
    return true;
  }

  // Quadratic least-squares fallback over the 5x5(x5) window of inside
  // nodes; returns weights for the xi_a xi_b monomial.
  bool lsq_mixed(int c, int da, int db,
                 std::vector<std::pair<int, double>>& terms) const {
    const VectorXi idx = g.lattice_idx(g.lattice_of[c]);
    std::vector<int> pts;
    std::vector<VectorXd> offs;
    VectorXi lo = VectorXi::Constant(n(), -2), cur(n());
    std::function<void(int)> rec = [&](int d) {
      if (d == n()) {
        VectorXi p = idx + cur;
        const int pc = compact_at(p);
        if (pc >= 0) {
          pts.push_back(pc);
          offs.push_back(cur.cast<double>());
        }
        return;
      }
      for (int o = -2; o <= 2; ++o) {
        cur[d] = o;
        rec(d + 1);
      }
    };
    rec(0);

    const int npar = 1 + n() + tri_count(n());
    const int m = static_cast<int>(pts.size());
    if (m < npar) return false;
    MatrixXd x(m, npar);
    for (int p = 0; p < m; ++p) {
      int col = 0;
      x(p, col++) = 1.0;
      for (int d = 0; d < n(); ++d) x(p, col++) = offs[p][d];
      for (int d = 0; d < n(); ++d) x(p, col++) = offs[p][d] * offs[p][d];
      for (int a = 0; a < n(); ++a) {
        for (int b = a + 1; b < n(); ++b) x(p, col++) = offs[p][a] * offs[p][b];
      }
    }
    // Weight row of the pseudo-inverse for the xi_a xi_b coefficient.
    int want = 1 + 2 * n();
    {
      int col = 0;
      for (int a = 0; a < n(); ++a) {
        for (int b = a + 1; b < n(); ++b) {
          if (a == std::min(da, db) && b == std::max(da, db)) want = 1 + 2 * n() + col;
          ++col;
        }
      }
    }
    const MatrixXd gram = x.transpose() * x + 1e-12 * MatrixXd::Identity(npar, npar);
    const MatrixXd winv = gram.ldlt().solve(x.transpose());
    terms.clear();
    for (int p = 0; p < m; ++p) {
      const double w = winv(want, p);
      if (w != 0.0) terms.emplace_back(pts[p], w);
    }
    return true;
  }

  JetStencil build_stencil(int c) const {
    JetStencil st;
    const int dim = n();
    const int ntri = tri_count(dim);

    // Accumulate (node -> column) while filling weight triplets.
    std::vector<int> nodes;
    auto column = [&](int node) {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] == node) return static_cast<int>(i);
      }
      nodes.push_back(node);
      return static_cast<int>(nodes.size() - 1);
    };

    struct Term {
      int row, col;
      double w;
    };
    std::vector<Term> gterms, hterms;
    VectorXd gc = VectorXd::Zero(dim), hc = VectorXd::Zero(ntri);
    bool degraded = false;

    std::vector<AxisPoint> pts;
    for (int d = 0; d < dim; ++d) {
      axis_points(c, d, pts, degraded);
      std::vector<double> offs(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) offs[i] = pts[i].offset;

      if (pts.size() >= 2) {
        const VectorXd wg = fd_weights(offs, 1);
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double w = wg[i] / g.h;
          if (pts[i].node >= 0) {
            gterms.push_back({d, column(pts[i].node), w});
          } else {
            gc[d] += w * pts[i].value;
          }
        }
      } else {
        degraded = true;
      }
      if (pts.size() >= 3) {
        const VectorXd wh = fd_weights(offs, 2);
        const int t = tri_index(dim, d, d);
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double w = wh[i] / (g.h * g.h);
          if (pts[i].node >= 0) {
            hterms.push_back({t, column(pts[i].node), w});
          } else {
            hc[t] += w * pts[i].value;
          }
        }
      } else {
        degraded = true;
      }
    }

    const std::vector<OffsetSet> sets = first_derivative_sets();
    std::vector<std::pair<int, double>> terms;
    for (int a = 0; a < dim; ++a) {
      for (int b = a + 1; b < dim; ++b) {
        bool done = false;
        // Central product first; matched one-sided sets keep the leading
        // error coefficient smooth, so these all stay second order.
        for (const OffsetSet& sa : sets) {
          for (const OffsetSet& sb : sets) {
            if (try_mixed(c, a, b, sa, sb, terms)) {
              done = true;
              break;
            }
          }
          if (done) break;
        }
        if (!done) {
          done = lsq_mixed(c, a, b, terms);
          degraded = true;
        }
        if (done) {
          const int t = tri_index(dim, a, b);
          for (const auto& [node, w] : terms) {
            hterms.push_back({t, column(node), w / (g.h * g.h)});
          }
        } else {
          degraded = true;  // leave the entry zero; sliver geometry
        }
      }
    }

    const int m = static_cast<int>(nodes.size());
    st.nodes = std::move(nodes);
    st.gw = MatrixXd::Zero(dim, m);
    st.hw = MatrixXd::Zero(ntri, m);
    st.gc = std::move(gc);
    st.hc = std::move(hc);
    for (const Term& t : gterms) st.gw(t.row, t.col) += t.w;
    for (const Term& t : hterms) st.hw(t.row, t.col) += t.w;
    st.full_order = !degraded;
    return st;
  }
};

}  // namespace

Grid build_grid(const Domain& domain, double h, const BoundaryData& phi) {
  domain.validate();
  if (!(h > 0.0)) throw std::invalid_argument("build_grid: h must be positive");
  const VectorXd extent = domain.half_extent();
  if (h > 0.5 * extent.minCoeff()) {
    throw ResolutionError("build_grid: h must be at most a quarter of the smallest domain extent");
  }

  Grid g;
  g.domain = domain;
  g.h = h;
  const int n = domain.n;
  g.half_counts.resize(n);
  g.dims.resize(n);
  long total = 1;
  for (int d = 0; d < n; ++d) {
    g.half_counts[d] = static_cast<int>(std::ceil(extent[d] / h - 1e-12));
    g.dims[d] = 2 * g.half_counts[d] + 1;
    total *= g.dims[d];
  }
  if (total > 40'000'000) {
    throw ResolutionError("build_grid: lattice too large for this configuration");
  }

  g.cls.assign(total, NodeClass::Exterior);
  g.compact_of.assign(total, -1);

  // Pass 1: inside mask and compact indices in lattice scan order.
  for (int id = 0; id < total; ++id) {
    if (domain.inside(g.node_x(id))) {
      g.compact_of[id] = static_cast<int>(g.lattice_of.size());
      g.lattice_of.push_back(id);
      g.cls[id] = NodeClass::Interior;  // refined below
    }
  }
  g.inside_count = static_cast<int>(g.lattice_of.size());
  g.cuts.assign(g.inside_count, {});
  g.closure.assign(g.inside_count, {});

  // Pass 2: cut arms and classification.
  for (int c = 0; c < g.inside_count; ++c) {
    const int id = g.lattice_of[c];
    const VectorXi idx = g.lattice_idx(id);
    const VectorXd x = g.node_x(id);
    for (int d = 0; d < n; ++d) {
      for (int sign : {+1, -1}) {
        VectorXi nb = idx;
        nb[d] += sign;
        bool nb_inside = true;
        for (int q = 0; q < n; ++q) {
          if (std::abs(nb[q]) > g.half_counts[q]) nb_inside = false;
        }
        if (nb_inside) nb_inside = g.compact_of[g.lattice_id(nb)] >= 0;
        if (nb_inside) continue;

        double t = domain.axis_cut(x, d, sign);
        t = std::min(t, h);  // the crossing precedes the exterior neighbor
        Cut cut;
        cut.dir = d;
        cut.sign = sign;
        cut.frac = std::max(t / h, 1e-12);
        VectorXd xcut = x;
        xcut[d] += sign * t;
        cut.phi = phi.eval(xcut);
        g.cuts[c].push_back(cut);
      }
    }
    if (!g.cuts[c].empty()) g.cls[id] = NodeClass::BoundaryAdjacent;
  }

  // Pass 3: Dirichlet closures at boundary-adjacent nodes.
  for (int c = 0; c < g.inside_count; ++c) {
    if (g.cls[g.lattice_of[c]] != NodeClass::BoundaryAdjacent) continue;
    const VectorXi idx = g.lattice_idx(g.lattice_of[c]);
    const Cut* best = nullptr;
    int best_inner = -1;
    for (const Cut& cut : g.cuts[c]) {
      VectorXi inner = idx;
      inner[cut.dir] -= cut.sign;
      bool ok = true;
      for (int q = 0; q < n; ++q) {
        if (std::abs(inner[q]) > g.half_counts[q]) ok = false;
      }
      const int inner_c = ok ? g.compact_of[g.lattice_id(inner)] : -1;
      if (inner_c < 0) continue;
      if (best == nullptr || cut.frac < best->frac) {
        best = &cut;
        best_inner = inner_c;
      }
    }
    BoundaryRow row;
    if (best != nullptr) {
      row.inner = best_inner;
      row.frac = best->frac;
      row.phi = best->phi;
    } else {
      // Sliver: no inward lattice support; pin to the nearest cut value.
      const Cut* nearest = &g.cuts[c][0];
      for (const Cut& cut : g.cuts[c]) {
        if (cut.frac < nearest->frac) nearest = &cut;
      }
      row.inner = -1;
      row.frac = 0.0;
      row.phi = nearest->phi;
    }
    g.closure[c] = row;
  }

  g.boundary_count = 0;
  for (int c = 0; c < g.inside_count; ++c) {
    if (g.cls[g.lattice_of[c]] == NodeClass::BoundaryAdjacent) ++g.boundary_count;
  }
  g.interior_count = g.inside_count - g.boundary_count;

  // Pass 4: jet stencils.
  Builder builder{g, phi};
  g.stencils.reserve(g.inside_count);
  for (int c = 0; c < g.inside_count; ++c) {
    g.stencils.push_back(builder.build_stencil(c));
  }
  return g;
}

Field Field::zeros(std::shared_ptr<const Grid> g) {
  Field f;
  f.grid = std::move(g);
  f.values = VectorXd::Zero(f.grid->inside_count);
  return f;
}

geometry::GraphJet fd_jet(const Field& field, int compact) {
  const Grid& g = *field.grid;
  if (compact < 0 || compact >= g.inside_count) {
    throw std::invalid_argument("fd_jet: node index out of range");
  }
  const JetStencil& st = g.stencils[compact];
  const int m = static_cast<int>(st.nodes.size());
  VectorXd local(m);
  for (int i = 0; i < m; ++i) local[i] = field.values[st.nodes[i]];

  const int n = g.n();
  const VectorXd du = st.gw * local + st.gc;
  const VectorXd tri = st.hw * local + st.hc;
  MatrixXd d2u(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const double v = tri[tri_index(n, a, b)];
      d2u(a, b) = v;
      d2u(b, a) = v;
    }
  }
  try {
    return geometry::make_jet(field.values[compact], du, d2u, g.node_x_compact(compact));
  } catch (const geometry::SpacelikeViolation& ex) {
    throw geometry::SpacelikeViolation(std::string(ex.what()) + " at " +
                                       g.describe_node(compact));
  }
}

BoundaryCurvatureReport boundary_curvatures(const Domain& domain, int k) {
  domain.validate();
  if (k < 1 || k > domain.n) {
    throw std::invalid_argument("boundary_curvatures: k out of range [1, n]");
  }
  BoundaryCurvatureReport rep;
  switch (domain.shape) {
    case Shape::Box:
      throw UnsupportedShape(
          "boundary_curvatures: box boundaries are not smooth; no verdict");
    case Shape::Ball:
      rep.min_curvature = rep.max_curvature = 1.0 / domain.size[0];
      break;
    case Shape::Ellipsoid: {
      const double smax = domain.size.maxCoeff();
      const double smin = domain.size.minCoeff();
      rep.min_curvature = smin / (smax * smax);
      rep.max_curvature = smax / (smin * smin);
      break;
    }
  }
  // Smooth convex shapes here have all n-1 boundary curvatures positive,
  // so at least k-1 are positive for every k <= n.
  rep.admissible_for_k = rep.min_curvature > 0.0;
  return rep;
}

void dump_field_csv(const Field& field, const std::string& path) {
  const Grid& g = *field.grid;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_field_csv: cannot open " + path);
  out.precision(17);
  out << (g.n() == 2 ? "i,j,x1,x2,value\n" : "i,j,k,x1,x2,x3,value\n");
  for (int c = 0; c < g.inside_count; ++c) {
    const VectorXi idx = g.lattice_idx(g.lattice_of[c]);
    const VectorXd x = g.node_x_compact(c);
    for (int d = 0; d < g.n(); ++d) out << idx[d] << ",";
    for (int d = 0; d < g.n(); ++d) out << x[d] << ",";
    out << field.values[c] << "\n";
  }
}

Field load_field_csv(std::shared_ptr<const Grid> grid, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_field_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  Field f = Field::zeros(grid);
  std::vector<bool> seen(grid->inside_count, false);
  const int n = grid->n();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    Eigen::VectorXi idx(n);
    for (int d = 0; d < n; ++d) {
      if (!std::getline(row, cell, ',')) {
        throw std::runtime_error("load_field_csv: malformed row");
      }
      idx[d] = std::stoi(cell);
      if (std::abs(idx[d]) > grid->half_counts[d]) {
        throw std::runtime_error("load_field_csv: node index outside grid");
      }
    }
    for (int d = 0; d < n; ++d) std::getline(row, cell, ',');  // coordinates
    if (!std::getline(row, cell, ',')) {
      throw std::runtime_error("load_field_csv: missing value column");
    }
    const int c = grid->compact_of[grid->lattice_id(idx)];
    if (c < 0) throw std::runtime_error("load_field_csv: value at exterior node");
    f.values[c] = std::stod(cell);
    seen[c] = true;
  }
  for (int c = 0; c < grid->inside_count; ++c) {
    if (!seen[c]) {
      throw std::runtime_error("load_field_csv: field does not cover the grid");
    }
  }
  if (!f.values.allFinite()) {
    throw std::runtime_error("load_field_csv: non-finite values");
  }
  return f;
}

void dump_classification_csv(const Grid& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_classification_csv: cannot open " + path);
  out << (g.n() == 2 ? "i,j,class\n" : "i,j,k,class\n");
  const long total = g.cls.size();
  for (long id = 0; id < total; ++id) {
    const VectorXi idx = g.lattice_idx(static_cast<int>(id));
    for (int d = 0; d < g.n(); ++d) out << idx[d] << ",";
    switch (g.cls[id]) {
      case NodeClass::Exterior: out << "exterior\n"; break;
      case NodeClass::BoundaryAdjacent: out << "boundary\n"; break;
      case NodeClass::Interior: out << "interior\n"; break;
    }
  }
}

}  // namespace sigmak::grid
