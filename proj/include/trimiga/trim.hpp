#ifndef TRIMIGA_TRIM_HPP
#define TRIMIGA_TRIM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "trimiga/geometry.hpp"
#include "trimiga/quadrature.hpp"
#include "trimiga/space.hpp"

namespace trimiga {

// ---------------------------------------------------------------------------
// Trim region descriptors
// ---------------------------------------------------------------------------

/// Keep one side of an axis-aligned line in the parametric domain.
struct HalfPlaneParam {
  int axis = 1;
  double threshold = 0.5;
  bool keep_below = true;
};

/// Remove (or keep the outside of) a disk in the parametric domain.
struct DiskParam {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
  bool keep_outside = true;
};

/// Remove an axis-aligned rectangle from the parametric domain.
struct RectRemoveParam {
  Vec2 lo, hi;
};

/// Keep a rotated rectangle, described in physical coordinates
/// (supported with the identity map only).
struct RotatedRectKeepPhysical {
  Vec2 center;
  Vec2 half;
  double alpha = 0.0;
};

/// Straight piece of the trim boundary with its outward direction
/// (outward = pointing out of the kept region Omega).
struct TrimLine {
  Vec2 a, b;
  Vec2 outward;  // unit
};

class TrimRegion {
 public:
  using Variant = std::variant<HalfPlaneParam, DiskParam, RectRemoveParam, RotatedRectKeepPhysical>;

  explicit TrimRegion(Variant v) : v_(std::move(v)) {}

  const Variant& variant() const { return v_; }
  bool is_physical_space() const { return std::holds_alternative<RotatedRectKeepPhysical>(v_); }
  const DiskParam* disk() const { return std::get_if<DiskParam>(&v_); }

  /// Inside predicate for the kept region, in the region's native space.
  bool inside(const Vec2& p) const {
    if (const auto* h = std::get_if<HalfPlaneParam>(&v_)) {
      double c = p[h->axis];
      return h->keep_below ? c < h->threshold : c > h->threshold;
    }
    if (const auto* d = std::get_if<DiskParam>(&v_)) {
      bool in_disk = (p - d->center).norm() < d->radius;
      return d->keep_outside ? !in_disk : in_disk;
    }
    if (const auto* r = std::get_if<RectRemoveParam>(&v_)) {
      bool in_rect = p.x() > r->lo.x() && p.x() < r->hi.x() && p.y() > r->lo.y() &&
                     p.y() < r->hi.y();
      return !in_rect;
    }
    const auto& rr = std::get<RotatedRectKeepPhysical>(v_);
    const double c = std::cos(rr.alpha), s = std::sin(rr.alpha);
    const Vec2 d = p - rr.center;
    const Vec2 local(c * d.x() + s * d.y(), -s * d.x() + c * d.y());
    return std::abs(local.x()) < rr.half.x() && std::abs(local.y()) < rr.half.y();
  }

  /// Straight boundary pieces (unclipped, possibly extending past [0,1]^2).
  std::vector<TrimLine> lines() const {
    std::vector<TrimLine> out;
    if (const auto* h = std::get_if<HalfPlaneParam>(&v_)) {
      TrimLine l;
      if (h->axis == 0) {
        l.a = Vec2(h->threshold, 0.0);
        l.b = Vec2(h->threshold, 1.0);
        l.outward = Vec2(h->keep_below ? 1.0 : -1.0, 0.0);
      } else {
        l.a = Vec2(0.0, h->threshold);
        l.b = Vec2(1.0, h->threshold);
        l.outward = Vec2(0.0, h->keep_below ? 1.0 : -1.0);
      }
      out.push_back(l);
    } else if (const auto* r = std::get_if<RectRemoveParam>(&v_)) {
      // outward of Omega points into the removed rectangle
      out.push_back({{r->lo.x(), r->lo.y()}, {r->hi.x(), r->lo.y()}, {0.0, 1.0}});
      out.push_back({{r->hi.x(), r->lo.y()}, {r->hi.x(), r->hi.y()}, {-1.0, 0.0}});
      out.push_back({{r->hi.x(), r->hi.y()}, {r->lo.x(), r->hi.y()}, {0.0, -1.0}});
      out.push_back({{r->lo.x(), r->hi.y()}, {r->lo.x(), r->lo.y()}, {1.0, 0.0}});
    } else if (const auto* rr = std::get_if<RotatedRectKeepPhysical>(&v_)) {
      const double c = std::cos(rr->alpha), s = std::sin(rr->alpha);
      const Vec2 ex(c, s), ey(-s, c);
      const Vec2 corners[4] = {
          rr->center - rr->half.x() * ex - rr->half.y() * ey,
          rr->center + rr->half.x() * ex - rr->half.y() * ey,
          rr->center + rr->half.x() * ex + rr->half.y() * ey,
          rr->center - rr->half.x() * ex + rr->half.y() * ey,
      };
      for (int k = 0; k < 4; ++k) {
        TrimLine l;
        l.a = corners[k];
        l.b = corners[(k + 1) % 4];
        l.outward = rotate90_cw((l.b - l.a).normalized());
        out.push_back(l);
      }
    }
    return out;
  }

 private:
  Variant v_;
};

// ---------------------------------------------------------------------------
// Polygon utilities (convex clipping, areas)
// ---------------------------------------------------------------------------

using Polygon = std::vector<Vec2>;

inline double polygon_area(const Polygon& poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

/// Sutherland-Hodgman clip of a convex polygon against the half-plane
/// n . (x - p0) <= 0 (keeps the side the inward normal points away from).
inline Polygon clip_halfplane(const Polygon& poly, const Vec2& p0, const Vec2& n) {
  Polygon out;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % m];
    const double dc = n.dot(cur - p0);
    const double dn = n.dot(nxt - p0);
    if (dc <= 0.0) out.push_back(cur);
    if ((dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0)) {
      const double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

inline Polygon rect_polygon(const Rect& r) {
  return {Vec2(r.x0, r.y0), Vec2(r.x1, r.y0), Vec2(r.x1, r.y1), Vec2(r.x0, r.y1)};
}

// ---------------------------------------------------------------------------
// Tile quadrature
// ---------------------------------------------------------------------------

namespace detail {

/// Tensor rule mapped through the degenerate bilinear triangle map
/// X(u,v) = (1-v)((1-u)A + uB) + vC.
inline Rule2D triangle_rule(const Vec2& A, const Vec2& B, const Vec2& C, int order) {
  const int q = order + 1;
  const Rule1D& g = gauss_legendre(q);
  Rule2D out;
  const double area2 = (B - A).x() * (C - A).y() - (B - A).y() * (C - A).x();
  for (int j = 0; j < q; ++j) {
    const double v = 0.5 * (g.points[j] + 1.0), wv = 0.5 * g.weights[j];
    for (int i = 0; i < q; ++i) {
      const double u = 0.5 * (g.points[i] + 1.0), wu = 0.5 * g.weights[i];
      const Vec2 x = (1.0 - v) * ((1.0 - u) * A + u * B) + v * C;
      const double detJ = (1.0 - v) * area2;
      out.points.push_back(x);
      out.weights.push_back(wu * wv * std::abs(detJ));
    }
  }
  return out;
}

/// Fan triangulation of a convex polygon into triangle rules.
inline Rule2D convex_polygon_rule(const Polygon& poly, int order) {
  Rule2D out;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k)
    out.append(triangle_rule(poly[k], poly[k + 1], poly[0], order));
  return out;
}

/// Circle-segment crossing: intersections of |x - c| = r with segment p..q,
/// returned as segment parameters t in [0,1].
inline std::vector<double> circle_segment_crossings(const Vec2& p, const Vec2& q, const Vec2& c,
                                                    double r) {
  const Vec2 d = q - p, f = p - c;
  const double A = d.squaredNorm();
  const double B = 2.0 * f.dot(d);
  const double C = f.squaredNorm() - r * r;
  std::vector<double> ts;
  const double disc = B * B - 4.0 * A * C;
  if (disc <= 0.0 || A <= 0.0) return ts;
  const double sq = std::sqrt(disc);
  for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
    if (t >= -1e-12 && t <= 1.0 + 1e-12) ts.push_back(std::clamp(t, 0.0, 1.0));
  return ts;
}

struct ArcInCell {
  double phi_a = 0.0;   ///< angle at the first crossing (chain start A)
  double dphi = 0.0;    ///< signed angular extent of the in-cell branch A -> B
  Vec2 A, B;            ///< crossing points on the cell boundary
  double sA = 0.0, sB = 0.0;  ///< boundary-loop positions (edge index + t)
};

inline Vec2 loop_point(const Rect& cell, double s) {
  s = std::fmod(s, 4.0);
  if (s < 0) s += 4.0;
  const int e = static_cast<int>(s);
  const double t = s - e;
  const Vec2 a = cell.corner(e), b = cell.corner(e + 1);
  return a + t * (b - a);
}

/// Crossing analysis of a circle with a cell. Throws on unsupported
/// topologies; returns nullopt when the circle misses the cell boundary.
inline std::optional<ArcInCell> arc_in_cell(const Rect& cell, const DiskParam& disk) {
  std::vector<double> s_list;
  for (int e = 0; e < 4; ++e) {
    const Vec2 a = cell.corner(e), b = cell.corner(e + 1);
    auto ts = circle_segment_crossings(a, b, disk.center, disk.radius);
    if (ts.size() > 2) throw tiling_error("arc_in_cell: more than 2 crossings on a cell edge");
    for (double t : ts) s_list.push_back(e + t);
  }
  std::sort(s_list.begin(), s_list.end());
  // merge corner duplicates
  std::vector<double> merged;
  const double stol = 1e-11;
  for (double s : s_list) {
    if (!merged.empty() && (s - merged.back() < stol || s + stol > 4.0 + merged.front()))
      continue;
    merged.push_back(s);
  }
  if (merged.empty()) return std::nullopt;
  if (merged.size() != 2)
    throw tiling_error("arc_in_cell: unsupported number of crossings in a cell");

  ArcInCell arc;
  arc.sA = merged[0];
  arc.sB = merged[1];
  arc.A = loop_point(cell, arc.sA);
  arc.B = loop_point(cell, arc.sB);

  const double phiA = std::atan2(arc.A.y() - disk.center.y(), arc.A.x() - disk.center.x());
  const double phiB = std::atan2(arc.B.y() - disk.center.y(), arc.B.x() - disk.center.x());
  double d_ccw = phiB - phiA;
  while (d_ccw < 0) d_ccw += 2.0 * M_PI;
  while (d_ccw >= 2.0 * M_PI) d_ccw -= 2.0 * M_PI;
  const double d_cw = d_ccw - 2.0 * M_PI;

  auto mid_inside = [&](double dphi) {
    const double phi = phiA + 0.5 * dphi;
    const Vec2 m = disk.center + disk.radius * Vec2(std::cos(phi), std::sin(phi));
    return cell.contains(m, -1e-12);  // strictly inside
  };
  const bool ccw_in = mid_inside(d_ccw), cw_in = mid_inside(d_cw);
  arc.phi_a = phiA;
  if (ccw_in == cw_in) {
    // degenerate tiny arc: pick the shorter branch
    if (std::abs(d_ccw) > std::abs(d_cw))
      arc.dphi = d_cw;
    else
      arc.dphi = d_ccw;
    if (!ccw_in && std::min(std::abs(d_ccw), std::abs(d_cw)) > 1e-9)
      throw tiling_error("arc_in_cell: ambiguous arc branch");
  } else {
    arc.dphi = ccw_in ? d_ccw : d_cw;
  }
  return arc;
}

/// Boundary chain from A to B along the cell edges through the kept region,
/// with the cell corners passed on the way.
inline std::vector<Vec2> kept_chain(const Rect& cell, const TrimRegion& region,
                                    const ArcInCell& arc) {
  // decide walk direction: probe a boundary point just past A on each side
  const double span_fwd = arc.sB - arc.sA;
  const double span_bwd = 4.0 - span_fwd;
  const double delta = 1e-7 * std::min(1.0, std::min(span_fwd, span_bwd));
  const bool fwd_inside = region.inside(loop_point(cell, arc.sA + delta));
  const bool bwd_inside = region.inside(loop_point(cell, arc.sA - delta));
  if (fwd_inside == bwd_inside)
    throw tiling_error("kept_chain: cannot determine kept side of the arc");

  std::vector<Vec2> chain{arc.A};
  if (fwd_inside) {
    // increasing s from sA to sB: corners at integers in (sA, sB)
    for (int c = 1; c <= 3; ++c)
      if (c > arc.sA + 1e-11 && c < arc.sB - 1e-11) chain.push_back(cell.corner(c));
  } else {
    // decreasing s from sA, wrapping, to sB - 4: integers in (sB-4, sA)
    for (int c = 3; c >= -3; --c)
      if (c < arc.sA - 1e-11 && c > arc.sB - 4.0 + 1e-11)
        chain.push_back(cell.corner(((c % 4) + 4) % 4));
  }
  chain.push_back(arc.B);
  return chain;
}

/// Ruled tile between a straight chord and an arc slice, integrated with a
/// tensor rule of (order+2)^2 points; weights carry |det J| of the blend map.
inline Rule2D ruled_arc_tile(const Vec2& c0, const Vec2& c1, const Vec2& center, double radius,
                             double phi0, double phi1, int order) {
  const int q = order + 2;
  const Rule1D& g = gauss_legendre(q);
  Rule2D out;
  for (int j = 0; j < q; ++j) {
    const double v = 0.5 * (g.points[j] + 1.0), wv = 0.5 * g.weights[j];
    for (int i = 0; i < q; ++i) {
      const double u = 0.5 * (g.points[i] + 1.0), wu = 0.5 * g.weights[i];
      const double phi = phi0 + u * (phi1 - phi0);
      const Vec2 arc = center + radius * Vec2(std::cos(phi), std::sin(phi));
      const Vec2 darc = radius * (phi1 - phi0) * Vec2(-std::sin(phi), std::cos(phi));
      const Vec2 line = (1.0 - u) * c0 + u * c1;
      const Vec2 x = (1.0 - v) * line + v * arc;
      const Vec2 xu = (1.0 - v) * (c1 - c0) + v * darc;
      const Vec2 xv = arc - line;
      const double detJ = xu.x() * xv.y() - xu.y() * xv.x();
      out.points.push_back(x);
      out.weights.push_back(wu * wv * std::abs(detJ));
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cut-cell interior quadrature
// ---------------------------------------------------------------------------

/// How a cell sits relative to the kept region.
enum class CellCut { Interior, Exterior, Cut };

/// Exact kept-area and cut classification for the straight-edged regions;
/// disk cells report Cut whenever the circle crosses the cell boundary.
inline CellCut classify_cell_cut(const Rect& cell, const TrimRegion& region) {
  if (const auto* h = std::get_if<HalfPlaneParam>(&region.variant())) {
    const double lo = (h->axis == 0) ? cell.x0 : cell.y0;
    const double hi = (h->axis == 0) ? cell.x1 : cell.y1;
    if (h->threshold > lo && h->threshold < hi) return CellCut::Cut;
    const bool kept = h->keep_below ? (hi <= h->threshold) : (lo >= h->threshold);
    return kept ? CellCut::Interior : CellCut::Exterior;
  }
  if (const auto* r = std::get_if<RectRemoveParam>(&region.variant())) {
    const double ox0 = std::max(cell.x0, r->lo.x()), ox1 = std::min(cell.x1, r->hi.x());
    const double oy0 = std::max(cell.y0, r->lo.y()), oy1 = std::min(cell.y1, r->hi.y());
    const double overlap = std::max(0.0, ox1 - ox0) * std::max(0.0, oy1 - oy0);
    if (overlap <= 0.0) return CellCut::Interior;
    if (overlap >= cell.area()) return CellCut::Exterior;
    return CellCut::Cut;
  }
  if (const auto* d = region.disk()) {
    Rect c = cell;
    auto arc = detail::arc_in_cell(c, *d);
    if (arc && std::abs(arc->dphi) > 1e-12) return CellCut::Cut;
    const Vec2 mid(0.5 * (cell.x0 + cell.x1), 0.5 * (cell.y0 + cell.y1));
    return region.inside(mid) ? CellCut::Interior : CellCut::Exterior;
  }
  // rotated rectangle: clip and compare areas
  Polygon poly = rect_polygon(cell);
  for (const TrimLine& l : region.lines()) poly = clip_halfplane(poly, l.a, l.outward);
  if (poly.size() < 3) return CellCut::Exterior;
  const double a = polygon_area(poly);
  if (a <= 1e-15 * cell.area()) return CellCut::Exterior;
  if (a >= (1.0 - 1e-14) * cell.area()) return CellCut::Interior;
  return CellCut::Cut;
}

/// Interior rule on cell ∩ Omega-hat (parametric points, parametric-measure
/// weights). Interior cells get the plain tensor Gauss rule.
inline Rule2D cut_cell_quadrature(const Rect& cell, const TrimRegion& region, int order) {
  const CellCut cut = classify_cell_cut(cell, region);
  if (cut == CellCut::Exterior) return {};
  if (cut == CellCut::Interior)
    return tensor_rule(order, order, cell.x0, cell.x1, cell.y0, cell.y1);

  if (const auto* h = std::get_if<HalfPlaneParam>(&region.variant())) {
    Rect kept = cell;
    if (h->axis == 0) {
      (h->keep_below ? kept.x1 : kept.x0) = h->threshold;
    } else {
      (h->keep_below ? kept.y1 : kept.y0) = h->threshold;
    }
    return tensor_rule(order, order, kept.x0, kept.x1, kept.y0, kept.y1);
  }

  if (const auto* r = std::get_if<RectRemoveParam>(&region.variant())) {
    std::vector<double> xs{cell.x0, cell.x1}, ys{cell.y0, cell.y1};
    for (double v : {r->lo.x(), r->hi.x()})
      if (v > cell.x0 && v < cell.x1) xs.push_back(v);
    for (double v : {r->lo.y(), r->hi.y()})
      if (v > cell.y0 && v < cell.y1) ys.push_back(v);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    Rule2D out;
    for (std::size_t j = 0; j + 1 < ys.size(); ++j)
      for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const Vec2 mid(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
        if (region.inside(mid))
          out.append(tensor_rule(order, order, xs[i], xs[i + 1], ys[j], ys[j + 1]));
      }
    return out;
  }

  if (const auto* d = region.disk()) {
    auto arc = detail::arc_in_cell(cell, *d);
    if (!arc) throw tiling_error("cut_cell_quadrature: inconsistent disk cut");
    auto chain = detail::kept_chain(cell, region, *arc);
    const int m = static_cast<int>(chain.size()) - 1;
    // split the arc at the angular projections of the chain vertices so the
    // rulings stay near-radial (equal splits fold on uneven chains)
    std::vector<double> t(m + 1);
    t[0] = 0.0;
    t[m] = 1.0;
    for (int i = 1; i < m; ++i) {
      const Vec2 dvi = chain[i] - d->center;
      // wrap the relative angle into the window centered on the arc middle
      double rel = std::atan2(dvi.y(), dvi.x()) - arc->phi_a;
      const double mid = 0.5 * arc->dphi;
      while (rel < mid - M_PI) rel += 2.0 * M_PI;
      while (rel >= mid + M_PI) rel -= 2.0 * M_PI;
      t[i] = std::clamp(rel / arc->dphi, t[i - 1], 1.0);
    }
    Rule2D out;
    for (int i = 0; i < m; ++i) {
      const double arc_len = std::abs((t[i + 1] - t[i]) * arc->dphi) * d->radius;
      const Vec2 edge = chain[i + 1] - chain[i];
      if (arc_len < 1e-14) {
        // degenerate arc slice: keep only if it forms a proper triangle
        const double phi_m = arc->phi_a + 0.5 * (t[i] + t[i + 1]) * arc->dphi;
        const Vec2 am = d->center + d->radius * Vec2(std::cos(phi_m), std::sin(phi_m));
        const double elen = edge.norm();
        if (elen < 1e-14) continue;
        const double dist =
            std::abs(edge.x() * (am.y() - chain[i].y()) - edge.y() * (am.x() - chain[i].x())) /
            elen;
        if (dist < 1e-13) continue;
      }
      out.append(detail::ruled_arc_tile(chain[i], chain[i + 1], d->center, d->radius,
                                        arc->phi_a + t[i] * arc->dphi,
                                        arc->phi_a + t[i + 1] * arc->dphi, order));
    }
    return out;
  }

  // rotated rectangle: convex clip + triangle fan
  Polygon poly = rect_polygon(cell);
  for (const TrimLine& l : region.lines()) poly = clip_halfplane(poly, l.a, l.outward);
  if (poly.size() < 3) return {};
  return detail::convex_polygon_rule(poly, order);
}

/// Kept parametric area of a cell, exact for straight trims.
inline double kept_area_in_cell(const Rect& cell, const TrimRegion& region, int order) {
  const CellCut cut = classify_cell_cut(cell, region);
  if (cut == CellCut::Exterior) return 0.0;
  if (cut == CellCut::Interior) return cell.area();
  if (const auto* h = std::get_if<HalfPlaneParam>(&region.variant())) {
    const double lo = (h->axis == 0) ? cell.x0 : cell.y0;
    const double hi = (h->axis == 0) ? cell.x1 : cell.y1;
    const double other = (h->axis == 0) ? cell.height() : cell.width();
    return other * (h->keep_below ? h->threshold - lo : hi - h->threshold);
  }
  if (const auto* r = std::get_if<RectRemoveParam>(&region.variant())) {
    const double ox0 = std::max(cell.x0, r->lo.x()), ox1 = std::min(cell.x1, r->hi.x());
    const double oy0 = std::max(cell.y0, r->lo.y()), oy1 = std::min(cell.y1, r->hi.y());
    return cell.area() - std::max(0.0, ox1 - ox0) * std::max(0.0, oy1 - oy0);
  }
  if (std::holds_alternative<RotatedRectKeepPhysical>(region.variant())) {
    Polygon poly = rect_polygon(cell);
    for (const TrimLine& l : region.lines()) poly = clip_halfplane(poly, l.a, l.outward);
    return (poly.size() < 3) ? 0.0 : polygon_area(poly);
  }
  return cut_cell_quadrature(cell, region, order).weight_sum();
}

// ---------------------------------------------------------------------------
// Trim boundary quadrature
// ---------------------------------------------------------------------------

/// Quadrature point on the trim boundary with cached map data.
struct BoundaryQP {
  Vec2 xhat;     ///< parametric point
  Vec2 x;        ///< physical point
  double w = 0;  ///< final weight for physical arc-length integrals
  Vec2 normal;   ///< outward unit normal (physical)
  Mat2 J;
  double detJ = 1.0;
};

namespace detail {

/// Liang-Barsky: clip segment a..b to the closed cell, as t-interval.
inline std::optional<std::pair<double, double>> clip_segment(const Rect& cell, const Vec2& a,
                                                             const Vec2& b) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double lo[2] = {cell.x0, cell.y0}, hi[2] = {cell.x1, cell.y1};
  for (int ax = 0; ax < 2; ++ax) {
    if (std::abs(d[ax]) < 1e-300) {
      if (a[ax] < lo[ax] || a[ax] > hi[ax]) return std::nullopt;
      continue;
    }
    double ta = (lo[ax] - a[ax]) / d[ax], tb = (hi[ax] - a[ax]) / d[ax];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

inline void push_line_frames(std::vector<BoundaryQP>& out, const GeometryMap& map,
                             const TrimLine& line, double t0, double t1, int order) {
  const Vec2 tangent = line.b - line.a;
  Rule1D g = gauss_legendre_on(order, t0, t1);
  for (std::size_t q = 0; q < g.size(); ++q) {
    BoundaryQP bq;
    bq.xhat = line.a + g.points[q] * tangent;
    MapSample s = map.eval(bq.xhat);
    // normals transform covariantly; pick the rotation side that matches
    const Vec2 n_cov = s.J.inverse().transpose() * line.outward;
    const bool outward_right = rotate90_cw(s.J * tangent).dot(n_cov) > 0.0;
    BoundaryFrame f = boundary_pushforward(map, bq.xhat, tangent, outward_right);
    bq.x = f.x;
    bq.w = g.weights[q] * f.weight;
    bq.normal = f.normal;
    bq.J = s.J;
    bq.detJ = s.detJ;
    out.push_back(bq);
  }
}

}  // namespace detail

/// Quadrature on Gamma_trim ∩ cell: physical points, arc-length weights,
/// outward normals. Face-coincident straight trims attach to the kept-side
/// cell only.
inline std::vector<BoundaryQP> trim_boundary_rule(const Rect& cell, const TrimRegion& region,
                                                  const GeometryMap& map, int order) {
  std::vector<BoundaryQP> out;

  for (const TrimLine& line : region.lines()) {
    auto clip = detail::clip_segment(cell, line.a, line.b);
    if (!clip) continue;
    auto [t0, t1] = *clip;
    if ((t1 - t0) * (line.b - line.a).norm() < 1e-13) continue;

    // axis-aligned line exactly on a cell face: attach to the kept side
    const Vec2 d = line.b - line.a;
    if (std::abs(d.x()) < 1e-300 || std::abs(d.y()) < 1e-300) {
      const int perp = (std::abs(d.x()) < 1e-300) ? 0 : 1;
      const double coord = line.a[perp];
      const double lo = (perp == 0) ? cell.x0 : cell.y0;
      const double hi = (perp == 0) ? cell.x1 : cell.y1;
      if (coord == lo || coord == hi) {
        const double inner = (coord == lo) ? 1.0 : -1.0;  // direction into the cell
        if (inner * line.outward[perp] > 0.0) continue;   // cell is on the removed side
      } else if (coord < lo || coord > hi) {
        continue;
      }
    }
    detail::push_line_frames(out, map, line, t0, t1, order);
  }

  if (const auto* d = region.disk()) {
    auto arc = detail::arc_in_cell(cell, *d);
    if (arc && std::abs(arc->dphi) > 1e-12) {
      const int q = order + 2;
      Rule1D g = gauss_legendre_on(q, 0.0, 1.0);
      const double radial_sign = d->keep_outside ? -1.0 : 1.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double phi = arc->phi_a + g.points[k] * arc->dphi;
        BoundaryQP bq;
        bq.xhat = d->center + d->radius * Vec2(std::cos(phi), std::sin(phi));
        const Vec2 tangent = d->radius * arc->dphi * Vec2(-std::sin(phi), std::cos(phi));
        const Vec2 outward_param = radial_sign * Vec2(std::cos(phi), std::sin(phi));
        MapSample s = map.eval(bq.xhat);
        const Vec2 n_cov = s.J.inverse().transpose() * outward_param;
        const bool outward_right = rotate90_cw(s.J * tangent).dot(n_cov) > 0.0;
        BoundaryFrame f = boundary_pushforward(map, bq.xhat, tangent, outward_right);
        bq.x = f.x;
        bq.w = g.weights[k] * f.weight;
        bq.normal = f.normal;
        bq.J = s.J;
        bq.detJ = s.detJ;
        out.push_back(bq);
      }
    }
  }
  return out;
}

/// Active sub-intervals of a parametric patch edge inside the kept region.
/// side: 0 bottom (y=0), 1 right (x=1), 2 top (y=1), 3 left (x=0);
/// the interval [t0,t1] is measured in the free coordinate.
inline std::vector<std::pair<double, double>> active_edge_intervals(const TrimRegion& region,
                                                                    int side, double t0,
                                                                    double t1) {
  const int free_axis = (side == 0 || side == 2) ? 0 : 1;
  const double fixed = (side == 0) ? 0.0 : (side == 1) ? 1.0 : (side == 2) ? 1.0 : 0.0;
  auto edge_point = [&](double t) {
    return (free_axis == 0) ? Vec2(t, fixed) : Vec2(fixed, t);
  };

  std::vector<std::pair<double, double>> kept;
  if (const auto* h = std::get_if<HalfPlaneParam>(&region.variant())) {
    if (h->axis == free_axis) {
      double lo = t0, hi = t1;
      if (h->keep_below)
        hi = std::min(hi, h->threshold);
      else
        lo = std::max(lo, h->threshold);
      if (hi > lo) kept.emplace_back(lo, hi);
    } else {
      const bool in = h->keep_below ? fixed < h->threshold : fixed > h->threshold;
      if (in) kept.emplace_back(t0, t1);
    }
    return kept;
  }
  // generic: cut the interval at region boundary crossings, keep by midpoint
  std::vector<double> cuts{t0, t1};
  if (const auto* r = std::get_if<RectRemoveParam>(&region.variant())) {
    for (double v : {r->lo[free_axis], r->hi[free_axis]})
      if (v > t0 && v < t1) cuts.push_back(v);
  } else if (const auto* d = region.disk()) {
    const Vec2 a = edge_point(t0), b = edge_point(t1);
    for (double s : detail::circle_segment_crossings(a, b, d->center, d->radius)) {
      const double v = t0 + s * (t1 - t0);
      if (v > t0 && v < t1) cuts.push_back(v);
    }
  } else {
    for (const TrimLine& l : region.lines()) {
      const Vec2 a = edge_point(t0), b = edge_point(t1);
      const Vec2 d2 = b - a;
      const double denom = l.outward.dot(d2);
      if (std::abs(denom) < 1e-14) continue;
      const double s = l.outward.dot(l.a - a) / denom;
      const double v = t0 + s * (t1 - t0);
      if (v > t0 && v < t1) cuts.push_back(v);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  // classify pieces by a midpoint nudged into the patch (edges can lie on
  // the boundary of an open removed region)
  const Vec2 inward = (side == 0)   ? Vec2(0, 1)
                      : (side == 1) ? Vec2(-1, 0)
                      : (side == 2) ? Vec2(0, -1)
                                    : Vec2(1, 0);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] < 1e-14) continue;
    if (region.inside(edge_point(0.5 * (cuts[i] + cuts[i + 1])) + 1e-9 * inward)) {
      if (!kept.empty() && kept.back().second >= cuts[i] - 1e-14)
        kept.back().second = cuts[i + 1];
      else
        kept.emplace_back(cuts[i], cuts[i + 1]);
    }
  }
  return kept;
}

}  // namespace trimiga

#endif
