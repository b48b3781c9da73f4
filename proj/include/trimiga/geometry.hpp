#ifndef TRIMIGA_GEOMETRY_HPP
#define TRIMIGA_GEOMETRY_HPP

#include <cmath>
#include <variant>
#include <vector>

#include "trimiga/knots.hpp"
#include "trimiga/space.hpp"

namespace trimiga {

struct IdentityMap {};

struct AffineMap {
  Vec2 offset = Vec2::Zero();
  Vec2 scale = Vec2::Ones();
};

/// Tensor NURBS map; control net stored in homogeneous coordinates
/// (w*x, w*y, w), lexicographic with the first direction fastest.
struct NurbsMap {
  KnotVector kx, ky;
  Eigen::Matrix<double, Eigen::Dynamic, 3> cps;
};

struct MapSample {
  Vec2 x;
  Mat2 J;
  double detJ = 1.0;
};

class GeometryMap {
 public:
  GeometryMap() : v_(IdentityMap{}) {}
  explicit GeometryMap(AffineMap m) : v_(std::move(m)) {}
  explicit GeometryMap(NurbsMap m) : v_(std::move(m)) {
    const auto& n = std::get<NurbsMap>(v_);
    if (n.cps.rows() != n.kx.num_basis() * n.ky.num_basis())
      throw config_error("GeometryMap: control net size mismatch");
    for (Eigen::Index i = 0; i < n.cps.rows(); ++i)
      if (!(n.cps(i, 2) > 0.0)) throw config_error("GeometryMap: weights must be positive");
  }

  bool is_identity() const { return std::holds_alternative<IdentityMap>(v_); }
  const NurbsMap* nurbs() const { return std::get_if<NurbsMap>(&v_); }
  const AffineMap* affine() const { return std::get_if<AffineMap>(&v_); }
  NurbsMap* nurbs() { return std::get_if<NurbsMap>(&v_); }

  MapSample eval(const Vec2& xhat) const {
    if (xhat.x() < -1e-12 || xhat.x() > 1.0 + 1e-12 || xhat.y() < -1e-12 ||
        xhat.y() > 1.0 + 1e-12)
      throw config_error("GeometryMap: point outside the closed unit square");
    MapSample s;
    if (const auto* a = std::get_if<AffineMap>(&v_)) {
      s.x = a->offset + Vec2(a->scale.x() * xhat.x(), a->scale.y() * xhat.y());
      s.J << a->scale.x(), 0.0, 0.0, a->scale.y();
    } else if (const auto* n = std::get_if<NurbsMap>(&v_)) {
      s = eval_nurbs(*n, xhat);
    } else {
      s.x = xhat;
      s.J = Mat2::Identity();
    }
    // orientation-reversing parametrizations are allowed; measures use |detJ|
    s.detJ = s.J.determinant();
    if (s.detJ == 0.0) throw numerical_error("GeometryMap: singular Jacobian at sample");
    return s;
  }

 private:
  static MapSample eval_nurbs(const NurbsMap& n, const Vec2& xhat) {
    const int px = n.kx.degree(), py = n.ky.degree();
    BasisTable tx = eval_basis(n.kx, xhat.x(), 1);
    BasisTable ty = eval_basis(n.ky, xhat.y(), 1);
    const int n1 = n.kx.num_basis();
    Eigen::Vector3d H = Eigen::Vector3d::Zero();    // (wx, wy, w)
    Eigen::Vector3d Hx = Eigen::Vector3d::Zero();   // d/dxi
    Eigen::Vector3d Hy = Eigen::Vector3d::Zero();   // d/deta
    for (int b = 0; b <= py; ++b)
      for (int a = 0; a <= px; ++a) {
        const auto row = n.cps.row((tx.first + a) + n1 * (ty.first + b));
        H += tx.ders(0, a) * ty.ders(0, b) * row.transpose();
        Hx += tx.ders(1, a) * ty.ders(0, b) * row.transpose();
        Hy += tx.ders(0, a) * ty.ders(1, b) * row.transpose();
      }
    const double w = H(2);
    MapSample s;
    s.x = Vec2(H(0), H(1)) / w;
    // quotient rule: d(x) = (dH_xy - x dW) / w
    Vec2 dxi = (Vec2(Hx(0), Hx(1)) - s.x * Hx(2)) / w;
    Vec2 deta = (Vec2(Hy(0), Hy(1)) - s.x * Hy(2)) / w;
    s.J.col(0) = dxi;
    s.J.col(1) = deta;
    return s;
  }

  std::variant<IdentityMap, AffineMap, NurbsMap> v_;
};

inline MapSample map_eval(const GeometryMap& map, const Vec2& xhat) { return map.eval(xhat); }

/// Affine map onto an axis-aligned rectangle [x0,x1]x[y0,y1].
inline GeometryMap affine_box(double x0, double x1, double y0, double y1) {
  AffineMap a;
  a.offset = Vec2(x0, y0);
  a.scale = Vec2(x1 - x0, y1 - y0);
  return GeometryMap(a);
}

/// Biquadratic NURBS quarter annulus: direction 1 angular (angle 0 to pi/2),
/// direction 2 radial (radius 1 to 2).
inline GeometryMap quarter_annulus() {
  const int p = 2;
  std::vector<double> bz{0.0, 1.0};
  KnotVector k = make_open_knot_vector(bz, p, p - 1);  // [0,0,0,1,1,1]
  const double w1 = std::sqrt(2.0) / 2.0;
  const double radii[3] = {1.0, 1.5, 2.0};
  NurbsMap m;
  m.kx = k;
  m.ky = k;
  m.cps.resize(9, 3);
  for (int j = 0; j < 3; ++j) {
    const double r = radii[j];
    // angular control points of the exact arc at radius r
    const Vec2 pts[3] = {{r, 0.0}, {r, r}, {0.0, r}};
    const double ws[3] = {1.0, w1, 1.0};
    for (int i = 0; i < 3; ++i) {
      const int idx = i + 3 * j;
      m.cps(idx, 0) = ws[i] * pts[i].x();
      m.cps(idx, 1) = ws[i] * pts[i].y();
      m.cps(idx, 2) = ws[i];
    }
  }
  return GeometryMap(std::move(m));
}

/// Quarter annulus with the angular knot 0.75 inserted twice (C0 knot line)
/// and one interior control point's second homogeneous coordinate set to 0.5,
/// breaking geometric smoothness across xi = 0.75.
inline GeometryMap c0_quarter_annulus() {
  GeometryMap base = quarter_annulus();
  const NurbsMap& src = *base.nurbs();
  const int n1 = src.kx.num_basis();
  const int n2 = src.ky.num_basis();

  // insert 0.75 twice in the angular direction, per homogeneous component
  KnotVector kx = src.kx;
  std::vector<Eigen::VectorXd> comp(3 * n2);  // rows: component + 3*j
  for (int j = 0; j < n2; ++j)
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXd col(n1);
      for (int i = 0; i < n1; ++i) col(i) = src.cps(i + n1 * j, c);
      comp[c + 3 * j] = std::move(col);
    }
  for (int rep = 0; rep < 2; ++rep) {
    KnotVector next = kx;
    for (auto& col : comp) {
      auto [nk, nc] = insert_knot(kx, col, 0.75);
      next = nk;
      col = std::move(nc);
    }
    kx = next;
  }

  NurbsMap m;
  m.kx = kx;
  m.ky = src.ky;
  const int n1new = kx.num_basis();
  m.cps.resize(n1new * n2, 3);
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1new; ++i)
      for (int c = 0; c < 3; ++c) m.cps(i + n1new * j, c) = comp[c + 3 * j](i);

  // Interior control point whose angular basis support ends at the double
  // knot (index 1 of 5), middle radial row: drop its homogeneous
  // y-coordinate to 0.5. This keeps F continuous at xi=0.75, keeps det J
  // away from zero, and breaks the one-sided angular derivative there.
  // Modifying the control point on the knot column itself folds the map.
  m.cps(1 + n1new * 1, 1) = 0.5;
  return GeometryMap(std::move(m));
}

/// Physical quadrature frame on a boundary curve.
struct BoundaryFrame {
  Vec2 x;                    ///< physical point
  double weight = 0.0;       ///< arc-length weight factor, |J * tangent|
  Vec2 normal = Vec2::Zero();///< outward unit normal
};

/// Push a parametric curve point/tangent to the physical domain.
/// outward_right: outward normal lies to the right of the traveling tangent.
inline BoundaryFrame boundary_pushforward(const GeometryMap& map, const Vec2& curve_point,
                                          const Vec2& curve_tangent, bool outward_right) {
  if (curve_tangent.squaredNorm() <= 0.0)
    throw config_error("boundary_pushforward: degenerate tangent");
  MapSample s = map.eval(curve_point);
  const Vec2 t = s.J * curve_tangent;
  BoundaryFrame f;
  f.x = s.x;
  f.weight = t.norm();
  if (f.weight <= 0.0) throw numerical_error("boundary_pushforward: zero pushed tangent");
  f.normal = (outward_right ? rotate90_cw(t) : rotate90_ccw(t)) / f.weight;
  return f;
}

}  // namespace trimiga

#endif
