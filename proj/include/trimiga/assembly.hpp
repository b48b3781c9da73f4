#ifndef TRIMIGA_ASSEMBLY_HPP
#define TRIMIGA_ASSEMBLY_HPP

#include <array>
#include <functional>
#include <vector>

#include "trimiga/stabilization.hpp"

namespace trimiga {

using ScalarField = std::function<double(const Vec2&)>;

enum class BCType { None, DirichletWeak, DirichletStrong, Neumann };

/// Which boundary parts carry the h^-1 trace term of (.,.)_{1,h,Omega}.
struct WeakBoundary {
  bool trim = true;
  std::array<bool, 4> sides{false, false, false, false};  // bottom,right,top,left
};

struct ProblemData {
  ScalarField f = [](const Vec2&) { return 0.0; };
  ScalarField g_D = [](const Vec2&) { return 0.0; };
  ScalarField g_N = [](const Vec2&) { return 0.0; };
  BCType trim_bc = BCType::DirichletWeak;
  std::array<BCType, 4> side_bc{BCType::None, BCType::None, BCType::None, BCType::None};
  double beta = 1.0;

  WeakBoundary weak_boundary() const {
    WeakBoundary w;
    w.trim = trim_bc == BCType::DirichletWeak;
    for (int s = 0; s < 4; ++s) w.sides[s] = side_bc[s] == BCType::DirichletWeak;
    return w;
  }
};

struct LinearSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<bool> active;
  std::vector<bool> constrained;
  Eigen::VectorXd constrained_value;

  int n() const { return static_cast<int>(A.rows()); }
  std::vector<bool> free_mask() const {
    std::vector<bool> m(active.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = active[i] && !constrained[i];
    return m;
  }
};

// ---------------------------------------------------------------------------
// DOF activity
// ---------------------------------------------------------------------------

/// A DOF is inactive when the kept area inside its support falls below
/// tol times the support measure.
inline std::vector<bool> deactivate_dofs(const TensorSplineSpace& space, const TrimmedMesh& tm,
                                         double tol = 1e-12) {
  std::vector<bool> active(space.dim(), false);
  for (int dof = 0; dof < space.dim(); ++dof) {
    const Rect sup = space.support(dof);
    double kept = 0.0, total = 0.0;
    for (int cy = 0; cy < space.num_cells(1); ++cy) {
      const auto& bpy = space.breakpoints(1);
      if (bpy[cy] < sup.y0 || bpy[cy + 1] > sup.y1) continue;
      for (int cx = 0; cx < space.num_cells(0); ++cx) {
        const auto& bpx = space.breakpoints(0);
        if (bpx[cx] < sup.x0 || bpx[cx + 1] > sup.x1) continue;
        const TrimmedCell& c = tm.cell(CellIndex{cx, cy});
        const Rect r = space.cell_rect({cx, cy});
        kept += c.area_param;
        total += r.area();
      }
    }
    active[dof] = kept >= tol * total && kept > 0.0;
  }
  return active;
}

// ---------------------------------------------------------------------------
// Boundary rules on fitted patch edges
// ---------------------------------------------------------------------------

namespace detail {

/// Frames for the active part of a fitted side within one boundary cell.
/// side: 0 bottom, 1 right, 2 top, 3 left. Normals point out of Omega.
inline std::vector<BoundaryQP> fitted_edge_frames(const TensorSplineSpace& space,
                                                  const GeometryMap& map,
                                                  const TrimRegion& region, int side,
                                                  int cell_along, int order) {
  const int free_axis = (side == 0 || side == 2) ? 0 : 1;
  const auto& bp = space.breakpoints(free_axis);
  const double fixed = (side == 0 || side == 3) ? 0.0 : 1.0;
  std::vector<BoundaryQP> out;
  for (auto [t0, t1] :
       active_edge_intervals(region, side, bp[cell_along], bp[cell_along + 1])) {
    TrimLine line;
    if (free_axis == 0) {
      line.a = Vec2(t0, fixed);
      line.b = Vec2(t1, fixed);
      line.outward = Vec2(0.0, side == 0 ? -1.0 : 1.0);
    } else {
      line.a = Vec2(fixed, t0);
      line.b = Vec2(fixed, t1);
      line.outward = Vec2(side == 3 ? -1.0 : 1.0, 0.0);
    }
    push_line_frames(out, map, line, 0.0, 1.0, order);
  }
  return out;
}

/// Cell index of the boundary cell row/column along a side.
inline CellIndex side_cell(const TensorSplineSpace& space, int side, int along) {
  switch (side) {
    case 0: return {along, 0};
    case 1: return {space.num_cells(0) - 1, along};
    case 2: return {along, space.num_cells(1) - 1};
    default: return {0, along};
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Assembly of the stabilized Nitsche system and the 1,h Gram matrix
// ---------------------------------------------------------------------------

namespace detail {

struct Scatter {
  std::vector<Eigen::Triplet<double>>& trips;
  void block(const std::vector<int>& rows, const std::vector<int>& cols,
             const Eigen::MatrixXd& M) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        if (M(i, j) != 0.0) trips.emplace_back(rows[i], cols[j], M(i, j));
  }
};

/// Value row of the active basis on a cell at a parametric point.
inline Eigen::RowVectorXd trace_row(const TensorSplineSpace& space, const Vec2& xhat) {
  const int m = space.degree() + 1;
  BasisTable tx = eval_basis(space.kv(0), xhat.x(), 0);
  BasisTable ty = eval_basis(space.kv(1), xhat.y(), 0);
  Eigen::RowVectorXd row(m * m);
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) row(a + m * b) = tx.ders(0, a) * ty.ders(0, b);
  return row;
}

}  // namespace detail

/// Stabilized symmetric Nitsche system: volume stiffness, weak-Dirichlet
/// consistency/symmetry/penalty terms with R_h from the plan, Neumann and
/// Dirichlet data on the right-hand side.
inline LinearSystem assemble(const TensorSplineSpace& space, const TrimmedMesh& tm,
                             const GeometryMap& map, const StabilizationPlan& plan,
                             const ProblemData& data, double activity_tol = 1e-12) {
  if (!(data.beta > 0.0)) throw config_error("assemble: beta must be positive");
  const int n = space.dim();
  const int m = space.degree() + 1;
  std::vector<Eigen::Triplet<double>> trips;
  detail::Scatter scatter{trips};
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  // volume terms
  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx) {
      const CellIndex ci{cx, cy};
      const TrimmedCell& cell = tm.cell(ci);
      if (cell.rule.size() == 0) continue;
      const auto dofs = space.active_dofs(ci);
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m * m, m * m);
      Eigen::VectorXd floc = Eigen::VectorXd::Zero(m * m);
      Eigen::MatrixXd g(2, m * m);
      for (std::size_t q = 0; q < cell.rule.size(); ++q) {
        const Vec2& xq = cell.rule.points[q];
        const MapSample& s = cell.map_at_rule[q];
        const Mat2 JinvT = s.J.inverse().transpose();
        BasisTable tx = eval_basis(space.kv(0), xq.x(), 1);
        BasisTable ty = eval_basis(space.kv(1), xq.y(), 1);
        Eigen::RowVectorXd N(m * m);
        for (int b = 0; b < m; ++b)
          for (int a = 0; a < m; ++a) {
            const Vec2 ghat(tx.ders(1, a) * ty.ders(0, b), tx.ders(0, a) * ty.ders(1, b));
            g.col(a + m * b) = JinvT * ghat;
            N(a + m * b) = tx.ders(0, a) * ty.ders(0, b);
          }
        const double w = cell.rule.weights[q] * std::abs(s.detJ);
        K.noalias() += w * g.transpose() * g;
        floc.noalias() += w * data.f(s.x) * N.transpose();
      }
      scatter.block(dofs, dofs, K);
      for (int i = 0; i < m * m; ++i) rhs(dofs[i]) += floc(i);
    }

  // boundary terms on one cell's frame set
  auto add_boundary = [&](const CellIndex& ci, const std::vector<BoundaryQP>& frames,
                          BCType bc) {
    if (frames.empty() || bc == BCType::None || bc == BCType::DirichletStrong) return;
    const int lin = space.linear_cell(ci);
    const TrimmedCell& cell = tm.cell(lin);
    const auto vdofs = space.active_dofs(ci);
    if (bc == BCType::Neumann) {
      for (const BoundaryQP& f : frames) {
        const Eigen::RowVectorXd tr = detail::trace_row(space, f.xhat);
        const double gn = data.g_N(f.x);
        for (int i = 0; i < m * m; ++i) rhs(vdofs[i]) += f.w * gn * tr(i);
      }
      return;
    }
    // weak Dirichlet: flux side comes from the plan on cut cells, plain otherwise
    const bool cut = tm.is_cut(lin);
    LocalFlux plain;
    if (!cut) plain = plain_flux(space, ci);
    const LocalFlux& flux = cut ? plan.at(lin) : plain;
    const double hK = cell.h_K;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(flux.dofs.size(), m * m);  // -R(u) v
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m * m, m * m);             // penalty
    Eigen::VectorXd rc = Eigen::VectorXd::Zero(flux.dofs.size());
    Eigen::VectorXd rp = Eigen::VectorXd::Zero(m * m);
    for (const BoundaryQP& f : frames) {
      const Eigen::RowVectorXd tr = detail::trace_row(space, f.xhat);
      const Eigen::RowVectorXd fr = flux.flux_row(space, f);
      const double gd = data.g_D(f.x);
      C.noalias() -= f.w * fr.transpose() * tr;
      P.noalias() += (data.beta / hK) * f.w * tr.transpose() * tr;
      rc.noalias() -= f.w * gd * fr.transpose();
      rp.noalias() += (data.beta / hK) * f.w * gd * tr.transpose();
    }
    scatter.block(flux.dofs, vdofs, C);
    Eigen::MatrixXd Ct = C.transpose();
    scatter.block(vdofs, flux.dofs, Ct);
    scatter.block(vdofs, vdofs, P);
    for (std::size_t i = 0; i < flux.dofs.size(); ++i) rhs(flux.dofs[i]) += rc(i);
    for (int i = 0; i < m * m; ++i) rhs(vdofs[i]) += rp(i);
  };

  // trim boundary
  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx)
      add_boundary({cx, cy}, tm.cell(CellIndex{cx, cy}).trim_frames, data.trim_bc);

  // fitted sides
  for (int side = 0; side < 4; ++side) {
    if (data.side_bc[side] == BCType::None || data.side_bc[side] == BCType::DirichletStrong)
      continue;
    const int ncells = (side == 0 || side == 2) ? space.num_cells(0) : space.num_cells(1);
    for (int along = 0; along < ncells; ++along) {
      const CellIndex ci = detail::side_cell(space, side, along);
      add_boundary(ci,
                   detail::fitted_edge_frames(space, map, tm.region(), side, along,
                                              tm.quad_order()),
                   data.side_bc[side]);
    }
  }

  LinearSystem sys;
  sys.active = deactivate_dofs(space, tm, activity_tol);
  sys.constrained.assign(n, false);
  sys.constrained_value = Eigen::VectorXd::Zero(n);

  // inactive DOFs: identity rows/columns, zero rhs and coupling
  for (int i = 0; i < n; ++i)
    if (!sys.active[i]) {
      trips.emplace_back(i, i, 1.0);
      rhs(i) = 0.0;
    }
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  if (std::any_of(sys.active.begin(), sys.active.end(), [](bool a) { return !a; })) {
    for (int col = 0; col < sys.A.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, col); it; ++it) {
        const int row = static_cast<int>(it.row());
        if (!sys.active[row] || !sys.active[col])
          it.valueRef() = (row == col && !sys.active[row]) ? 1.0 : 0.0;
      }
    sys.A.prune(0.0);
  }
  sys.b = rhs;
  return sys;
}

/// Gram matrix of (u,v)_{1,h,Omega} = grad.grad over Omega + h^-1 uv on the
/// weak Dirichlet boundary.
inline Eigen::SparseMatrix<double> gram_1h(const TensorSplineSpace& space, const TrimmedMesh& tm,
                                           const GeometryMap& map, const WeakBoundary& weak) {
  const int n = space.dim();
  const int m = space.degree() + 1;
  std::vector<Eigen::Triplet<double>> trips;
  detail::Scatter scatter{trips};

  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx) {
      const CellIndex ci{cx, cy};
      const TrimmedCell& cell = tm.cell(ci);
      if (cell.rule.size() == 0) continue;
      const auto dofs = space.active_dofs(ci);
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m * m, m * m);
      Eigen::MatrixXd g(2, m * m);
      for (std::size_t q = 0; q < cell.rule.size(); ++q) {
        const MapSample& s = cell.map_at_rule[q];
        const Mat2 JinvT = s.J.inverse().transpose();
        BasisTable tx = eval_basis(space.kv(0), cell.rule.points[q].x(), 1);
        BasisTable ty = eval_basis(space.kv(1), cell.rule.points[q].y(), 1);
        for (int b = 0; b < m; ++b)
          for (int a = 0; a < m; ++a) {
            const Vec2 ghat(tx.ders(1, a) * ty.ders(0, b), tx.ders(0, a) * ty.ders(1, b));
            g.col(a + m * b) = JinvT * ghat;
          }
        K.noalias() += cell.rule.weights[q] * std::abs(s.detJ) * g.transpose() * g;
      }
      scatter.block(dofs, dofs, K);
    }

  auto add_trace = [&](const CellIndex& ci, const std::vector<BoundaryQP>& frames) {
    if (frames.empty()) return;
    const TrimmedCell& cell = tm.cell(ci);
    const auto dofs = space.active_dofs(ci);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m * m, m * m);
    for (const BoundaryQP& f : frames) {
      const Eigen::RowVectorXd tr = detail::trace_row(space, f.xhat);
      P.noalias() += (f.w / cell.h_K) * tr.transpose() * tr;
    }
    scatter.block(dofs, dofs, P);
  };

  if (weak.trim)
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx)
        add_trace({cx, cy}, tm.cell(CellIndex{cx, cy}).trim_frames);
  for (int side = 0; side < 4; ++side) {
    if (!weak.sides[side]) continue;
    const int ncells = (side == 0 || side == 2) ? space.num_cells(0) : space.num_cells(1);
    for (int along = 0; along < ncells; ++along)
      add_trace(detail::side_cell(space, side, along),
                detail::fitted_edge_frames(space, map, tm.region(), side, along,
                                           tm.quad_order()));
  }

  Eigen::SparseMatrix<double> B(n, n);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

// ---------------------------------------------------------------------------
// Strong boundary conditions (Greville collocation along fitted sides)
// ---------------------------------------------------------------------------

inline void apply_strong_bc(LinearSystem& sys, const TensorSplineSpace& space,
                            const TrimmedMesh& tm, const GeometryMap& map,
                            const ScalarField& g_D, const std::vector<int>& sides) {
  const int n1 = space.num_basis(0), n2 = space.num_basis(1);
  for (int side : sides) {
    const int free_axis = (side == 0 || side == 2) ? 0 : 1;
    const KnotVector& kv = space.kv(free_axis);
    const int ne = kv.num_basis();
    const double fixed = (side == 0 || side == 3) ? 0.0 : 1.0;
    auto edge_point = [&](double t) {
      return (free_axis == 0) ? Vec2(t, fixed) : Vec2(fixed, t);
    };

    // univariate Greville collocation of g_D on the edge spline
    const auto grev = greville_abscissae(kv);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(ne, ne);
    Eigen::VectorXd rhs(ne);
    for (int i = 0; i < ne; ++i) {
      BasisTable t = eval_basis(kv, grev[i], 0);
      for (int j = 0; j <= kv.degree(); ++j) C(i, t.first + j) = t.ders(0, j);
      rhs(i) = g_D(map.eval(edge_point(grev[i])).x);
    }
    Eigen::VectorXd vals = C.partialPivLu().solve(rhs);

    const auto kept = active_edge_intervals(tm.region(), side, 0.0, 1.0);
    for (int i = 0; i < ne; ++i) {
      // constrain only DOFs whose edge support touches the active edge part
      const auto& U = kv.knots();
      const double s0 = U[i], s1 = U[i + kv.degree() + 1];
      bool touches = false;
      for (auto [a, b] : kept)
        if (std::min(b, s1) - std::max(a, s0) > 1e-14) touches = true;
      if (!touches) continue;
      int dof;
      switch (side) {
        case 0: dof = space.global_index(i, 0); break;
        case 1: dof = space.global_index(n1 - 1, i); break;
        case 2: dof = space.global_index(i, n2 - 1); break;
        default: dof = space.global_index(0, i); break;
      }
      if (!sys.active[dof]) continue;
      sys.constrained[dof] = true;
      sys.constrained_value(dof) = vals(i);
    }
  }

  // symmetric elimination
  const int n = sys.n();
  for (int col = 0; col < sys.A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      if (sys.constrained[col] && !sys.constrained[r])
        sys.b(r) -= it.value() * sys.constrained_value(col);
    }
  for (int col = 0; col < sys.A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      if (sys.constrained[r] || sys.constrained[col])
        it.valueRef() = (r == col) ? 1.0 : 0.0;
    }
  sys.A.prune(0.0);
  for (int i = 0; i < n; ++i)
    if (sys.constrained[i]) sys.b(i) = sys.constrained_value(i);
}

// ---------------------------------------------------------------------------
// Linear solve
// ---------------------------------------------------------------------------

/// Direct sparse solve with symmetric Jacobi prescaling and iterative
/// refinement; verifies the residual on the active equations.
inline Eigen::VectorXd solve(const LinearSystem& sys) {
  const int n = sys.n();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    double diag = sys.A.coeff(i, i);
    if (!(std::abs(diag) > 0.0)) throw numerical_error("solve: zero diagonal entry");
    d(i) = 1.0 / std::sqrt(std::abs(diag));
  }
  Eigen::SparseMatrix<double> S = d.asDiagonal() * sys.A * d.asDiagonal();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw numerical_error("solve: factorization failed");

  Eigen::VectorXd bs = d.asDiagonal() * sys.b;
  Eigen::VectorXd y = ldlt.solve(bs);
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd r = bs - S * y;
    y += ldlt.solve(r);
  }
  Eigen::VectorXd u = d.asDiagonal() * y;

  const double bnorm = sys.b.norm();
  const double rnorm = (sys.b - sys.A * u).norm();
  if (bnorm > 0.0 && rnorm > 1e-10 * bnorm)
    throw numerical_error("solve: residual " + std::to_string(rnorm / bnorm) +
                          " exceeds 1e-10 relative");
  return u;
}

// ---------------------------------------------------------------------------
// Error norms
// ---------------------------------------------------------------------------

struct ErrorNorms {
  double nnorm = 0.0;  ///< ||u - u_h||_{1,h,Omega}
  double l2 = 0.0;
  double nnorm_exact = 0.0;  ///< ||u||_{1,h,Omega} for relative reporting
};

inline ErrorNorms error_norms(const TensorSplineSpace& space, const Eigen::VectorXd& u_h,
                              const ScalarField& u_ex,
                              const std::function<Vec2(const Vec2&)>& grad_ex,
                              const TrimmedMesh& tm, const GeometryMap& map,
                              const WeakBoundary& weak) {
  double grad2 = 0.0, l22 = 0.0, trace2 = 0.0;
  double ex_grad2 = 0.0, ex_trace2 = 0.0;

  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx) {
      const TrimmedCell& cell = tm.cell(CellIndex{cx, cy});
      for (std::size_t q = 0; q < cell.rule.size(); ++q) {
        const Vec2& xq = cell.rule.points[q];
        const MapSample& s = cell.map_at_rule[q];
        const double w = cell.rule.weights[q] * std::abs(s.detJ);
        const Mat2 JinvT = s.J.inverse().transpose();
        const Vec2 gh = JinvT * spline_gradient(space, u_h, xq);
        const Vec2 ge = grad_ex(s.x);
        const double vh = spline_value(space, u_h, xq);
        const double ve = u_ex(s.x);
        grad2 += w * (gh - ge).squaredNorm();
        l22 += w * (vh - ve) * (vh - ve);
        ex_grad2 += w * ge.squaredNorm();
      }
    }

  auto add_trace = [&](const CellIndex& ci, const std::vector<BoundaryQP>& frames) {
    const TrimmedCell& cell = tm.cell(ci);
    for (const BoundaryQP& f : frames) {
      const double vh = spline_value(space, u_h, f.xhat);
      const double ve = u_ex(f.x);
      trace2 += (f.w / cell.h_K) * (vh - ve) * (vh - ve);
      ex_trace2 += (f.w / cell.h_K) * ve * ve;
    }
  };
  if (weak.trim)
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx)
        add_trace({cx, cy}, tm.cell(CellIndex{cx, cy}).trim_frames);
  for (int side = 0; side < 4; ++side) {
    if (!weak.sides[side]) continue;
    const int ncells = (side == 0 || side == 2) ? space.num_cells(0) : space.num_cells(1);
    for (int along = 0; along < ncells; ++along)
      add_trace(detail::side_cell(space, side, along),
                detail::fitted_edge_frames(space, map, tm.region(), side, along,
                                           tm.quad_order()));
  }

  ErrorNorms e;
  e.nnorm = std::sqrt(grad2 + trace2);
  e.l2 = std::sqrt(l22);
  e.nnorm_exact = std::sqrt(ex_grad2 + ex_trace2);
  return e;
}

}  // namespace trimiga

#endif
