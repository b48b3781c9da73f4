#ifndef TRIMIGA_MESH_HPP
#define TRIMIGA_MESH_HPP

#include <limits>
#include <vector>

#include "trimiga/trim.hpp"

namespace trimiga {

enum class CellLabel { Interior, Exterior, CutGood, CutBad };

struct TrimmedCell {
  CellLabel label = CellLabel::Exterior;
  double ratio = 0.0;       ///< |Omega-hat ∩ Q| / |Q| (parametric)
  double area_param = 0.0;  ///< |Omega-hat ∩ Q|
  double phys_ratio = 0.0;  ///< |Omega ∩ K| / |K| (det-J weighted)
  double h_K = 0.0;         ///< physical cell diameter
  Rule2D rule;              ///< interior rule (parametric points/weights)
  std::vector<MapSample> map_at_rule;   ///< cached map samples per rule point
  std::vector<BoundaryQP> trim_frames;  ///< Gamma_trim ∩ K
  int neighbor = -1;  ///< linear index of the good neighbor (CutBad only)
};

class TrimmedMesh;
inline CellIndex select_good_neighbor(const TrimmedMesh& tm, CellIndex bad);

/// Per-cell trim classification and quadrature of a space/geometry pair.
class TrimmedMesh {
 public:
  TrimmedMesh(const TensorSplineSpace& space, const GeometryMap& map, TrimRegion region,
              double theta, int quad_order)
      : space_(&space), map_(&map), region_(std::move(region)), theta_(theta),
        quad_order_(quad_order) {
    if (!(theta > 0.0 && theta <= 1.0) && theta != 0.0)
      throw config_error("TrimmedMesh: theta must be in (0,1] (or 0 to disable)");
    if (region_.is_physical_space() && !map.is_identity())
      throw config_error("TrimmedMesh: physical-space regions require the identity map");
    build();
  }

  const TensorSplineSpace& space() const { return *space_; }
  const GeometryMap& map() const { return *map_; }
  const TrimRegion& region() const { return region_; }
  double theta() const { return theta_; }
  int quad_order() const { return quad_order_; }

  int num_cells() const { return static_cast<int>(cells_.size()); }
  const TrimmedCell& cell(CellIndex c) const { return cells_[space_->linear_cell(c)]; }
  const TrimmedCell& cell(int linear) const { return cells_[linear]; }
  TrimmedCell& cell_mut(int linear) { return cells_[linear]; }

  bool is_cut(int linear) const {
    return cells_[linear].label == CellLabel::CutGood || cells_[linear].label == CellLabel::CutBad;
  }

  /// Linear indices of all cut cells (the discrete G_h).
  std::vector<int> cut_cells() const {
    std::vector<int> out;
    for (int i = 0; i < num_cells(); ++i)
      if (is_cut(i)) out.push_back(i);
    return out;
  }

  double total_kept_area() const {
    double s = 0.0;
    for (const auto& c : cells_) s += c.area_param;
    return s;
  }

  /// Smallest physical active cell measure over cut cells (the eta of the
  /// rotating-square study).
  double min_cut_volume() const {
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& c : cells_)
      if (c.label == CellLabel::CutGood || c.label == CellLabel::CutBad) {
        double vol = 0.0;
        for (std::size_t q = 0; q < c.rule.size(); ++q)
          vol += c.rule.weights[q] * std::abs(c.map_at_rule[q].detJ);
        eta = std::min(eta, vol);
      }
    return eta;
  }

 private:
  void build() {
    const auto& space = *space_;
    cells_.resize(space.num_cells());
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx) {
        CellIndex ci{cx, cy};
        TrimmedCell& cell = cells_[space.linear_cell(ci)];
        const Rect r = space.cell_rect(ci);
        const CellCut cut = classify_cell_cut(r, region_);

        cell.area_param = kept_area_in_cell(r, region_, quad_order_);
        cell.ratio = cell.area_param / r.area();
        if (cut == CellCut::Exterior) {
          cell.label = CellLabel::Exterior;
          continue;
        }
        cell.rule = cut_cell_quadrature(r, region_, quad_order_);
        cell.map_at_rule.reserve(cell.rule.size());
        double phys_area = 0.0;
        for (std::size_t q = 0; q < cell.rule.size(); ++q) {
          cell.map_at_rule.push_back(map_->eval(cell.rule.points[q]));
          phys_area += cell.rule.weights[q] * std::abs(cell.map_at_rule.back().detJ);
        }
        // full physical cell measure from the plain tensor rule
        double full_phys = 0.0;
        {
          Rule2D fr = tensor_rule(quad_order_, quad_order_, r.x0, r.x1, r.y0, r.y1);
          for (std::size_t q = 0; q < fr.size(); ++q)
            full_phys += fr.weights[q] * std::abs(map_->eval(fr.points[q]).detJ);
        }
        cell.phys_ratio = (full_phys > 0.0) ? phys_area / full_phys : 0.0;
        cell.h_K = physical_diameter(r);
        cell.trim_frames = trim_boundary_rule(r, region_, *map_, quad_order_);

        if (cut == CellCut::Interior) {
          cell.label = CellLabel::Interior;
        } else {
          cell.label = (theta_ > 0.0 && cell.ratio >= theta_) || theta_ == 0.0
                           ? CellLabel::CutGood
                           : CellLabel::CutBad;
        }
      }

    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx) {
        CellIndex ci{cx, cy};
        TrimmedCell& cell = cells_[space.linear_cell(ci)];
        if (cell.label == CellLabel::CutBad)
          cell.neighbor = space.linear_cell(select_good_neighbor(*this, ci));
      }
  }

  double physical_diameter(const Rect& r) const {
    Vec2 pts[9];
    int k = 0;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        pts[k++] = map_->eval(Vec2(r.x0 + 0.5 * i * r.width(), r.y0 + 0.5 * j * r.height())).x;
    double d = 0.0;
    for (int i = 0; i < 9; ++i)
      for (int j = i + 1; j < 9; ++j) d = std::max(d, (pts[i] - pts[j]).norm());
    return d;
  }

  const TensorSplineSpace* space_;
  const GeometryMap* map_;
  TrimRegion region_;
  double theta_;
  int quad_order_;
  std::vector<TrimmedCell> cells_;
};

/// Good neighbor of a bad cell: largest physical active ratio wins; ties go
/// to the closest cell (face before corner), then to the lowest
/// lexicographic index. Searches the 3x3 ring, then 5x5, then fails.
inline CellIndex select_good_neighbor(const TrimmedMesh& tm, CellIndex bad) {
  const TensorSplineSpace& space = tm.space();
  if (tm.cell(bad).label != CellLabel::CutBad)
    throw config_error("select_good_neighbor: cell is not CutBad");

  for (int radius = 1; radius <= 2; ++radius) {
    bool found = false;
    CellIndex best{};
    double best_ratio = -1.0;
    int best_cheb = 0, best_manh = 0;
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx) {
        if (dx == 0 && dy == 0) continue;
        if (std::max(std::abs(dx), std::abs(dy)) != radius &&
            radius > 1)  // ring only; radius 1 covers the full 3x3
          continue;
        CellIndex c{bad.ix + dx, bad.iy + dy};
        if (c.ix < 0 || c.iy < 0 || c.ix >= space.num_cells(0) || c.iy >= space.num_cells(1))
          continue;
        const TrimmedCell& tc = tm.cell(c);
        if (tc.label != CellLabel::Interior && tc.label != CellLabel::CutGood) continue;
        const int cheb = std::max(std::abs(dx), std::abs(dy));
        const int manh = std::abs(dx) + std::abs(dy);
        bool better = false;
        if (!found) {
          better = true;
        } else if (tc.phys_ratio != best_ratio) {
          better = tc.phys_ratio > best_ratio;
        } else if (cheb != best_cheb) {
          better = cheb < best_cheb;
        } else if (manh != best_manh) {
          better = manh < best_manh;
        } else {
          better = c < best;
        }
        if (better) {
          found = true;
          best = c;
          best_ratio = tc.phys_ratio;
          best_cheb = cheb;
          best_manh = manh;
        }
      }
    if (found) return best;
  }
  throw tiling_error("select_good_neighbor: no good neighbor within the 5x5 ring");
}

/// Convenience wrapper matching the per-operation signature.
inline TrimmedMesh classify_cells(const TensorSplineSpace& space, const GeometryMap& map,
                                  const TrimRegion& region, double theta, int quad_order) {
  return TrimmedMesh(space, map, region, theta, quad_order);
}

}  // namespace trimiga

#endif
