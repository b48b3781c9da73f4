#ifndef TRIMIGA_SPACE_HPP
#define TRIMIGA_SPACE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "trimiga/knots.hpp"
#include "trimiga/quadrature.hpp"

namespace trimiga {

/// Axis-aligned parametric rectangle.
struct Rect {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  Vec2 corner(int k) const {  // CCW from lower-left
    switch (k & 3) {
      case 0: return {x0, y0};
      case 1: return {x1, y0};
      case 2: return {x1, y1};
      default: return {x0, y1};
    }
  }
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
  }
};

/// Grid cell address; lexicographic order compares (ix, iy).
struct CellIndex {
  int ix = 0, iy = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex& a, const CellIndex& b) {
    if (auto c = a.ix <=> b.ix; c != 0) return c;
    return a.iy <=> b.iy;
  }
};

/// Tensor-product spline space on [0,1]^2, equal degree in both directions.
class TensorSplineSpace {
 public:
  TensorSplineSpace(KnotVector kx, KnotVector ky) : kv_{std::move(kx), std::move(ky)} {
    if (kv_[0].degree() != kv_[1].degree())
      throw config_error("TensorSplineSpace: directions must share the degree");
    bp_[0] = kv_[0].breakpoints();
    bp_[1] = kv_[1].breakpoints();
  }

  int degree() const { return kv_[0].degree(); }
  const KnotVector& kv(int dir) const { return kv_[dir]; }
  int num_basis(int dir) const { return kv_[dir].num_basis(); }
  int dim() const { return kv_[0].num_basis() * kv_[1].num_basis(); }

  int num_cells(int dir) const { return static_cast<int>(bp_[dir].size()) - 1; }
  int num_cells() const { return num_cells(0) * num_cells(1); }
  const std::vector<double>& breakpoints(int dir) const { return bp_[dir]; }

  int linear_cell(CellIndex c) const { return c.ix + num_cells(0) * c.iy; }
  CellIndex cell_at(int linear) const { return {linear % num_cells(0), linear / num_cells(0)}; }

  Rect cell_rect(CellIndex c) const {
    return {bp_[0][c.ix], bp_[0][c.ix + 1], bp_[1][c.iy], bp_[1][c.iy + 1]};
  }

  /// Global coefficient index, first direction fastest.
  int global_index(int i1, int i2) const { return i1 + kv_[0].num_basis() * i2; }

  /// First active basis index per direction on a cell.
  std::array<int, 2> first_active(CellIndex c) const {
    return {kv_[0].element_span(c.ix) - degree(), kv_[1].element_span(c.iy) - degree()};
  }

  /// Global indices of the (p+1)^2 basis functions active on a cell,
  /// local ordering first-direction-fastest.
  std::vector<int> active_dofs(CellIndex c) const {
    const int p = degree();
    auto f = first_active(c);
    std::vector<int> dofs((p + 1) * (p + 1));
    int k = 0;
    for (int b = 0; b <= p; ++b)
      for (int a = 0; a <= p; ++a) dofs[k++] = global_index(f[0] + a, f[1] + b);
    return dofs;
  }

  /// Parametric support rectangle of a global basis function.
  Rect support(int gdof) const {
    const int n1 = kv_[0].num_basis();
    const int i1 = gdof % n1, i2 = gdof / n1;
    const auto& u = kv_[0].knots();
    const auto& v = kv_[1].knots();
    const int p = degree();
    return {u[i1], u[i1 + p + 1], v[i2], v[i2 + p + 1]};
  }

 private:
  std::array<KnotVector, 2> kv_;
  std::array<std::vector<double>, 2> bp_;
};

// ---------------------------------------------------------------------------
// Bernstein basis (valid for arguments outside [0,1]: polynomial extension)
// ---------------------------------------------------------------------------

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Bernstein values b_k(t), k=0..p.
inline void bernstein_values(int p, double t, double* out) {
  for (int k = 0; k <= p; ++k)
    out[k] = binomial(p, k) * std::pow(t, k) * std::pow(1.0 - t, p - k);
}

/// Bernstein first derivatives d/dt b_k(t).
inline void bernstein_derivs(int p, double t, double* out) {
  // b_k' = p (b_{k-1,p-1} - b_{k,p-1})
  std::vector<double> lower(p, 0.0);
  if (p >= 1)
    for (int k = 0; k <= p - 1; ++k)
      lower[k] = binomial(p - 1, k) * std::pow(t, k) * std::pow(1.0 - t, p - 1 - k);
  for (int k = 0; k <= p; ++k) {
    double a = (k >= 1) ? lower[k - 1] : 0.0;
    double b = (k <= p - 1) ? lower[k] : 0.0;
    out[k] = p * (a - b);
  }
}

// ---------------------------------------------------------------------------
// Bezier extraction
// ---------------------------------------------------------------------------

/// Per-direction extraction: for element j, bernstein = C[j] * spline_local
/// where spline_local are the p+1 active coefficients on the element.
struct UnivariateExtraction {
  std::vector<Eigen::MatrixXd> element_ops;  // each (p+1) x (p+1)
};

/// Extraction by chained Boehm insertions up to full internal multiplicity.
inline UnivariateExtraction extract_univariate(const KnotVector& kv) {
  const int p = kv.degree();
  const int n = kv.num_basis();
  const auto bps = kv.breakpoints();
  const auto mults = kv.multiplicities();

  // refinement operator T: refined coeffs = T * coeffs, built column-wise
  std::vector<Eigen::VectorXd> cols(n);
  KnotVector fine = kv;
  for (int c = 0; c < n; ++c) cols[c] = Eigen::VectorXd::Unit(n, c);
  for (std::size_t j = 1; j + 1 < bps.size(); ++j) {
    for (int add = mults[j]; add < p; ++add) {
      KnotVector next = fine;
      for (int c = 0; c < n; ++c) {
        auto [nk, nc] = insert_knot(fine, cols[c], bps[j]);
        next = nk;
        cols[c] = std::move(nc);
      }
      fine = next;
    }
  }

  UnivariateExtraction out;
  const int ne = kv.num_elements();
  out.element_ops.reserve(ne);
  for (int e = 0; e < ne; ++e) {
    // refined dofs e*p .. e*p+p restrict to Bernstein on element e
    const int f_orig = kv.element_span(e) - p;
    Eigen::MatrixXd C(p + 1, p + 1);
    for (int r = 0; r <= p; ++r)
      for (int c = 0; c <= p; ++c) C(r, c) = cols[f_orig + c](e * p + r);
    out.element_ops.push_back(std::move(C));
  }
  return out;
}

/// Tensor extraction for all cells of a space.
class BezierExtraction {
 public:
  explicit BezierExtraction(const TensorSplineSpace& space)
      : p_(space.degree()),
        ux_(extract_univariate(space.kv(0))),
        uy_(extract_univariate(space.kv(1))) {}

  /// Operator mapping the (p+1)^2 local spline coefficients on a cell
  /// (first direction fastest) to tensor Bernstein coefficients.
  Eigen::MatrixXd cell_operator(CellIndex c) const {
    const Eigen::MatrixXd& Cx = ux_.element_ops[c.ix];
    const Eigen::MatrixXd& Cy = uy_.element_ops[c.iy];
    const int m = p_ + 1;
    Eigen::MatrixXd K(m * m, m * m);
    for (int by = 0; by < m; ++by)
      for (int bx = 0; bx < m; ++bx)
        for (int ay = 0; ay < m; ++ay)
          for (int ax = 0; ax < m; ++ax)
            K(bx + m * by, ax + m * ay) = Cx(bx, ax) * Cy(by, ay);
    return K;
  }

 private:
  int p_;
  UnivariateExtraction ux_, uy_;
};

/// Evaluate a tensor Bernstein polynomial given its coefficients on a cell
/// rect; (tx, ty) may lie outside [0,1] (natural polynomial extension).
struct BernsteinPatch {
  int p;
  Rect cell;
  Eigen::VectorXd coeffs;  // (p+1)^2, x fastest

  double value(const Vec2& xhat) const {
    const double tx = (xhat.x() - cell.x0) / cell.width();
    const double ty = (xhat.y() - cell.y0) / cell.height();
    std::vector<double> bx(p + 1), by(p + 1);
    bernstein_values(p, tx, bx.data());
    bernstein_values(p, ty, by.data());
    double v = 0.0;
    for (int b = 0; b <= p; ++b)
      for (int a = 0; a <= p; ++a) v += coeffs(a + (p + 1) * b) * bx[a] * by[b];
    return v;
  }

  /// Gradient with respect to the parametric coordinates.
  Vec2 gradient(const Vec2& xhat) const {
    const double tx = (xhat.x() - cell.x0) / cell.width();
    const double ty = (xhat.y() - cell.y0) / cell.height();
    std::vector<double> bx(p + 1), by(p + 1), dbx(p + 1), dby(p + 1);
    bernstein_values(p, tx, bx.data());
    bernstein_values(p, ty, by.data());
    bernstein_derivs(p, tx, dbx.data());
    bernstein_derivs(p, ty, dby.data());
    Vec2 g = Vec2::Zero();
    for (int b = 0; b <= p; ++b)
      for (int a = 0; a <= p; ++a) {
        const double c = coeffs(a + (p + 1) * b);
        g.x() += c * dbx[a] * by[b];
        g.y() += c * bx[a] * dby[b];
      }
    g.x() /= cell.width();
    g.y() /= cell.height();
    return g;
  }
};

// ---------------------------------------------------------------------------
// Spline evaluation and global L2 projection
// ---------------------------------------------------------------------------

/// Value of a tensor spline at a parametric point.
inline double spline_value(const TensorSplineSpace& space, const Eigen::VectorXd& coeffs,
                           const Vec2& xhat) {
  BasisTable tx = eval_basis(space.kv(0), xhat.x(), 0);
  BasisTable ty = eval_basis(space.kv(1), xhat.y(), 0);
  const int p = space.degree();
  double v = 0.0;
  for (int b = 0; b <= p; ++b)
    for (int a = 0; a <= p; ++a)
      v += coeffs(space.global_index(tx.first + a, ty.first + b)) * tx.ders(0, a) * ty.ders(0, b);
  return v;
}

/// Parametric gradient of a tensor spline.
inline Vec2 spline_gradient(const TensorSplineSpace& space, const Eigen::VectorXd& coeffs,
                            const Vec2& xhat) {
  BasisTable tx = eval_basis(space.kv(0), xhat.x(), 1);
  BasisTable ty = eval_basis(space.kv(1), xhat.y(), 1);
  const int p = space.degree();
  Vec2 g = Vec2::Zero();
  for (int b = 0; b <= p; ++b)
    for (int a = 0; a <= p; ++a) {
      const double c = coeffs(space.global_index(tx.first + a, ty.first + b));
      g.x() += c * tx.ders(1, a) * ty.ders(0, b);
      g.y() += c * tx.ders(0, a) * ty.ders(1, b);
    }
  return g;
}

/// Global L2 projection onto the space over the untrimmed parametric square.
inline Eigen::VectorXd l2_project_global(const TensorSplineSpace& space,
                                         const std::function<double(const Vec2&)>& f,
                                         int quad_order) {
  const int p = space.degree();
  const int n = space.dim();
  const int m = p + 1;
  Eigen::SparseMatrix<double> M(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;

  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx) {
      CellIndex c{cx, cy};
      Rect r = space.cell_rect(c);
      Rule2D rule = tensor_rule(quad_order, quad_order, r.x0, r.x1, r.y0, r.y1);
      auto dofs = space.active_dofs(c);
      Eigen::MatrixXd Mloc = Eigen::MatrixXd::Zero(m * m, m * m);
      Eigen::VectorXd bloc = Eigen::VectorXd::Zero(m * m);
      Eigen::VectorXd N(m * m);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        BasisTable tx = eval_basis(space.kv(0), rule.points[q].x(), 0);
        BasisTable ty = eval_basis(space.kv(1), rule.points[q].y(), 0);
        for (int b = 0; b < m; ++b)
          for (int a = 0; a < m; ++a) N(a + m * b) = tx.ders(0, a) * ty.ders(0, b);
        const double w = rule.weights[q];
        Mloc.noalias() += w * N * N.transpose();
        bloc.noalias() += w * f(rule.points[q]) * N;
      }
      for (int i = 0; i < m * m; ++i) {
        rhs(dofs[i]) += bloc(i);
        for (int j = 0; j < m * m; ++j) trips.emplace_back(dofs[i], dofs[j], Mloc(i, j));
      }
    }
  M.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
  if (solver.info() != Eigen::Success)
    throw numerical_error("l2_project_global: Gram factorization failed");
  Eigen::VectorXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success)
    throw numerical_error("l2_project_global: Gram solve failed");
  return x;
}

}  // namespace trimiga

#endif
