#ifndef TRIMIGA_STABILIZATION_HPP
#define TRIMIGA_STABILIZATION_HPP

#include <memory>
#include <unordered_map>
#include <vector>

#include "trimiga/mesh.hpp"

namespace trimiga {

enum class StabMode { None, Parametric, Physical };

inline const char* to_string(StabMode m) {
  switch (m) {
    case StabMode::None: return "none";
    case StabMode::Parametric: return "parametric";
    default: return "physical";
  }
}

// Legendre polynomials on [-1,1], values and derivatives.
inline void legendre_values(int p, double t, double* val, double* der) {
  val[0] = 1.0;
  if (der) der[0] = 0.0;
  if (p >= 1) {
    val[1] = t;
    if (der) der[1] = 1.0;
  }
  for (int k = 2; k <= p; ++k) {
    val[k] = ((2.0 * k - 1.0) * t * val[k - 1] - (k - 1.0) * val[k - 2]) / k;
    if (der) der[k] = der[k - 2] + (2.0 * k - 1.0) * val[k - 1];
  }
}

/// Flux evaluator for one cut cell: maps the (p+1)^2 spline coefficients
/// active on the source cell Q' to normal-flux values on Gamma_K.
struct LocalFlux {
  enum class Kind { Plain, ParametricExt, PhysicalExt };

  Kind kind = Kind::Plain;
  int source_cell = -1;        ///< linear index of Q' (== K for Plain)
  std::vector<int> dofs;       ///< global ids of the local coefficients on Q'
  int p = 0;
  Eigen::MatrixXd op;          ///< coefficient map (extensions only)
  Rect source_rect;            ///< Q' (parametric extension)
  Rect bbox;                   ///< bounding box of K' (physical extension)

  /// Row r with R(v_h)|frame = r . local_coeffs.
  Eigen::RowVectorXd flux_row(const TensorSplineSpace& space, const BoundaryQP& f) const {
    const int m = p + 1;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m * m);
    const Mat2 JinvT = f.J.inverse().transpose();
    if (kind == Kind::Plain) {
      BasisTable tx = eval_basis(space.kv(0), f.xhat.x(), 1);
      BasisTable ty = eval_basis(space.kv(1), f.xhat.y(), 1);
      for (int b = 0; b < m; ++b)
        for (int a = 0; a < m; ++a) {
          const Vec2 ghat(tx.ders(1, a) * ty.ders(0, b), tx.ders(0, a) * ty.ders(1, b));
          row(a + m * b) = (JinvT * ghat).dot(f.normal);
        }
      return row;
    }
    if (kind == Kind::ParametricExt) {
      // parametric gradient of each Bernstein function at xhat (outside Q'),
      // pulled to the physical frame, then composed with the extraction op
      const double tx = (f.xhat.x() - source_rect.x0) / source_rect.width();
      const double ty = (f.xhat.y() - source_rect.y0) / source_rect.height();
      std::vector<double> bx(m), by(m), dbx(m), dby(m);
      bernstein_values(p, tx, bx.data());
      bernstein_values(p, ty, by.data());
      bernstein_derivs(p, tx, dbx.data());
      bernstein_derivs(p, ty, dby.data());
      Eigen::RowVectorXd bern = Eigen::RowVectorXd::Zero(m * m);
      for (int b = 0; b < m; ++b)
        for (int a = 0; a < m; ++a) {
          const Vec2 ghat(dbx[a] * by[b] / source_rect.width(),
                          bx[a] * dby[b] / source_rect.height());
          bern(a + m * b) = (JinvT * ghat).dot(f.normal);
        }
      return bern * op;
    }
    // PhysicalExt: gradient of the physical tensor Legendre polynomial
    const double sx = 2.0 / (bbox.x1 - bbox.x0), sy = 2.0 / (bbox.y1 - bbox.y0);
    const double u = sx * (f.x.x() - bbox.x0) - 1.0, v = sy * (f.x.y() - bbox.y0) - 1.0;
    std::vector<double> lx(m), ly(m), dlx(m), dly(m);
    legendre_values(p, u, lx.data(), dlx.data());
    legendre_values(p, v, ly.data(), dly.data());
    Eigen::RowVectorXd leg = Eigen::RowVectorXd::Zero(m * m);
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) {
        const Vec2 g(sx * dlx[a] * ly[b], sy * lx[a] * dly[b]);
        leg(a + m * b) = g.dot(f.normal);
      }
    return leg * op;
  }

  /// Row giving the extension's value at a parametric point (tests/oracles).
  Eigen::RowVectorXd value_row(const TensorSplineSpace& space, const GeometryMap& map,
                               const Vec2& xhat) const {
    const int m = p + 1;
    if (kind == Kind::Plain) {
      BasisTable tx = eval_basis(space.kv(0), xhat.x(), 0);
      BasisTable ty = eval_basis(space.kv(1), xhat.y(), 0);
      Eigen::RowVectorXd row(m * m);
      for (int b = 0; b < m; ++b)
        for (int a = 0; a < m; ++a) row(a + m * b) = tx.ders(0, a) * ty.ders(0, b);
      return row;
    }
    if (kind == Kind::ParametricExt) {
      const double tx = (xhat.x() - source_rect.x0) / source_rect.width();
      const double ty = (xhat.y() - source_rect.y0) / source_rect.height();
      std::vector<double> bx(m), by(m);
      bernstein_values(p, tx, bx.data());
      bernstein_values(p, ty, by.data());
      Eigen::RowVectorXd bern(m * m);
      for (int b = 0; b < m; ++b)
        for (int a = 0; a < m; ++a) bern(a + m * b) = bx[a] * by[b];
      return bern * op;
    }
    const Vec2 x = map.eval(xhat).x;
    const double u = 2.0 * (x.x() - bbox.x0) / (bbox.x1 - bbox.x0) - 1.0;
    const double v = 2.0 * (x.y() - bbox.y0) / (bbox.y1 - bbox.y0) - 1.0;
    std::vector<double> lx(m), ly(m);
    legendre_values(p, u, lx.data(), nullptr);
    legendre_values(p, v, ly.data(), nullptr);
    Eigen::RowVectorXd leg(m * m);
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) leg(a + m * b) = lx[a] * ly[b];
    return leg * op;
  }
};

/// Plain normal-derivative evaluator on a cell (good cut cells and fitted
/// boundary cells).
inline LocalFlux plain_flux(const TensorSplineSpace& space, CellIndex cell) {
  LocalFlux f;
  f.kind = LocalFlux::Kind::Plain;
  f.source_cell = space.linear_cell(cell);
  f.dofs = space.active_dofs(cell);
  f.p = space.degree();
  return f;
}

/// Polynomial natural extension in the parametric domain: Bernstein
/// coefficients on Q' evaluated past Q' (Bezier extraction realization).
inline LocalFlux parametric_flux_operator(const TensorSplineSpace& space,
                                          const BezierExtraction& extraction, CellIndex K_bad,
                                          CellIndex K_good) {
  (void)K_bad;
  LocalFlux f;
  f.kind = LocalFlux::Kind::ParametricExt;
  f.source_cell = space.linear_cell(K_good);
  f.dofs = space.active_dofs(K_good);
  f.p = space.degree();
  f.op = extraction.cell_operator(K_good);
  f.source_rect = space.cell_rect(K_good);
  return f;
}

/// L2-orthogonal projection onto Q_p(K') in physical coordinates, basis =
/// tensor Legendre on the bounding box of K', Gram from quadrature on the
/// untrimmed cell.
inline LocalFlux physical_flux_operator(const TensorSplineSpace& space, const GeometryMap& map,
                                        CellIndex K_bad, CellIndex K_good, int quad_order) {
  (void)K_bad;
  LocalFlux f;
  f.kind = LocalFlux::Kind::PhysicalExt;
  f.source_cell = space.linear_cell(K_good);
  f.dofs = space.active_dofs(K_good);
  const int p = space.degree();
  f.p = p;
  const int m = p + 1;
  const Rect q = space.cell_rect(K_good);

  // bounding box of K' from a sample grid
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (int j = 0; j <= 4; ++j)
    for (int i = 0; i <= 4; ++i) {
      const Vec2 x = map.eval(Vec2(q.x0 + 0.25 * i * q.width(), q.y0 + 0.25 * j * q.height())).x;
      x0 = std::min(x0, x.x());
      x1 = std::max(x1, x.x());
      y0 = std::min(y0, x.y());
      y1 = std::max(y1, x.y());
    }
  f.bbox = {x0, x1, y0, y1};

  // extra points: the local Gram drives the orthogonality residual, so its
  // quadrature must out-resolve the assembly order on curved cells
  const int gq = quad_order + 4;
  Rule2D rule = tensor_rule(gq, gq, q.x0, q.x1, q.y0, q.y1);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m * m, m * m);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m * m, m * m);
  std::vector<double> lx(m), ly(m);
  Eigen::VectorXd L(m * m), N(m * m);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const MapSample s = map.eval(rule.points[k]);
    const double u = 2.0 * (s.x.x() - x0) / (x1 - x0) - 1.0;
    const double v = 2.0 * (s.x.y() - y0) / (y1 - y0) - 1.0;
    legendre_values(p, u, lx.data(), nullptr);
    legendre_values(p, v, ly.data(), nullptr);
    BasisTable tx = eval_basis(space.kv(0), rule.points[k].x(), 0);
    BasisTable ty = eval_basis(space.kv(1), rule.points[k].y(), 0);
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) {
        L(a + m * b) = lx[a] * ly[b];
        N(a + m * b) = tx.ders(0, a) * ty.ders(0, b);
      }
    const double w = rule.weights[k] * std::abs(s.detJ);
    G.noalias() += w * L * L.transpose();
    M.noalias() += w * L * N.transpose();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw numerical_error("physical_flux_operator: ill-conditioned local Gram matrix");
  f.op = llt.solve(M);
  return f;
}

/// Per-cut-cell flux evaluators realizing R_h for one stabilization mode.
struct StabilizationPlan {
  StabMode mode = StabMode::None;
  double theta = 0.0;
  std::unordered_map<int, LocalFlux> entries;  ///< keyed by linear cut-cell index

  const LocalFlux& at(int cell_linear) const {
    auto it = entries.find(cell_linear);
    if (it == entries.end())
      throw config_error("StabilizationPlan: frame on a cell absent from the plan");
    return it->second;
  }
  bool has(int cell_linear) const { return entries.count(cell_linear) > 0; }
};

inline StabilizationPlan build_plan(const TensorSplineSpace& space, const TrimmedMesh& tm,
                                    const GeometryMap& map, StabMode mode, int quad_order) {
  StabilizationPlan plan;
  plan.mode = mode;
  plan.theta = tm.theta();
  std::unique_ptr<BezierExtraction> extraction;
  if (mode == StabMode::Parametric) extraction = std::make_unique<BezierExtraction>(space);

  for (int lin : tm.cut_cells()) {
    const CellIndex ci = space.cell_at(lin);
    const TrimmedCell& cell = tm.cell(lin);
    if (mode == StabMode::None || cell.label == CellLabel::CutGood) {
      plan.entries.emplace(lin, plain_flux(space, ci));
    } else {
      const CellIndex good = space.cell_at(cell.neighbor);
      if (mode == StabMode::Parametric)
        plan.entries.emplace(lin, parametric_flux_operator(space, *extraction, ci, good));
      else
        plan.entries.emplace(lin, physical_flux_operator(space, map, ci, good, quad_order));
    }
  }
  return plan;
}

/// Flux values R_h(v_h) at the frames of one cut cell; linear in coeffs.
inline std::vector<double> eval_Rh(const StabilizationPlan& plan, const TensorSplineSpace& space,
                                   const Eigen::VectorXd& coeffs, int cell_linear,
                                   const std::vector<BoundaryQP>& frames) {
  const LocalFlux& flux = plan.at(cell_linear);
  Eigen::VectorXd local(flux.dofs.size());
  for (std::size_t i = 0; i < flux.dofs.size(); ++i) local(i) = coeffs(flux.dofs[i]);
  std::vector<double> out;
  out.reserve(frames.size());
  for (const BoundaryQP& f : frames) out.push_back(flux.flux_row(space, f).dot(local));
  return out;
}

/// Stability constant of one cut cell: sup over v_h of
/// ||h^{1/2} R_h(v_h)||^2_{L2(Gamma_K)} / ||grad v_h||^2_{L2(Omega ∩ K')},
/// computed as the top generalized eigenvalue of the two local forms with
/// the gradient form's null space deflated.
inline double stability_ratio(const StabilizationPlan& plan, const TrimmedMesh& tm,
                              const TensorSplineSpace& space, const GeometryMap& map,
                              CellIndex K) {
  (void)map;
  const int lin = space.linear_cell(K);
  const TrimmedCell& cell = tm.cell(lin);
  if (cell.trim_frames.empty())
    throw config_error("stability_ratio: cell has no trim boundary");
  const LocalFlux& flux = plan.at(lin);
  const int nloc = static_cast<int>(flux.dofs.size());

  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(nloc, nloc);
  for (const BoundaryQP& f : cell.trim_frames) {
    const Eigen::RowVectorXd r = flux.flux_row(space, f);
    N.noalias() += cell.h_K * f.w * r.transpose() * r;
  }

  const TrimmedCell& src = tm.cell(flux.source_cell);
  const CellIndex src_ci = space.cell_at(flux.source_cell);
  const int m = space.degree() + 1;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nloc, nloc);
  for (std::size_t q = 0; q < src.rule.size(); ++q) {
    const Vec2& xq = src.rule.points[q];
    const MapSample& s = src.map_at_rule[q];
    const Mat2 JinvT = s.J.inverse().transpose();
    BasisTable txq = eval_basis(space.kv(0), xq.x(), 1);
    BasisTable tyq = eval_basis(space.kv(1), xq.y(), 1);
    Eigen::MatrixXd g(2, nloc);
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) {
        const Vec2 ghat(txq.ders(1, a) * tyq.ders(0, b), txq.ders(0, a) * tyq.ders(1, b));
        g.col(a + m * b) = JinvT * ghat;
      }
    D.noalias() += src.rule.weights[q] * std::abs(s.detJ) * g.transpose() * g;
    (void)src_ci;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  const double dmax = es.eigenvalues().maxCoeff();
  if (!(dmax > 0.0)) throw numerical_error("stability_ratio: zero gradient form");
  std::vector<int> keep;
  for (int i = 0; i < nloc; ++i)
    if (es.eigenvalues()(i) > 1e-12 * dmax) keep.push_back(i);
  if (keep.empty()) throw numerical_error("stability_ratio: gradient form fully deflated");
  Eigen::MatrixXd T(nloc, static_cast<int>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i)
    T.col(i) = es.eigenvectors().col(keep[i]) / std::sqrt(es.eigenvalues()(keep[i]));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> red(T.transpose() * N * T);
  return red.eigenvalues().maxCoeff();
}

}  // namespace trimiga

#endif
