#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "trimiga/mesh.hpp"
#include "trimiga/trim.hpp"

using namespace trimiga;

namespace {

// Independent oracle: monomial moment over a polygon by Green's theorem,
// integral of x^a y^b = 1/(a+1) * contour integral of x^{a+1} y^b dy.
double polygon_moment(const Polygon& poly, int a, int b) {
  double total = 0.0;
  const Rule1D& g = gauss_legendre(12);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double dy = q.y() - p.y();
    double edge = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double t = 0.5 * (g.points[k] + 1.0);
      const double w = 0.5 * g.weights[k];
      const double x = p.x() + t * (q.x() - p.x());
      const double y = p.y() + t * (q.y() - p.y());
      edge += w * std::pow(x, a + 1) * std::pow(y, b) * dy;
    }
    total += edge;
  }
  return total / (a + 1);
}

double rule_moment(const Rule2D& r, int a, int b) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    s += r.weights[i] * std::pow(r.points[i].x(), a) * std::pow(r.points[i].y(), b);
  return s;
}

TensorSplineSpace grid_space(int level, int p) {
  auto kv = make_open_knot_vector(dyadic_breakpoints(level), p, p - 1);
  return TensorSplineSpace(kv, kv);
}

}  // namespace

TEST_CASE("Gauss-Legendre exactness and weight sums") {
  for (int n = 1; n <= 8; ++n) {
    const Rule1D& g = gauss_legendre(n);
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    REQUIRE(wsum == Catch::Approx(2.0).margin(1e-14));
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * std::pow(g.points[i], d);
      const double exact = (d % 2 == 0) ? 2.0 / (d + 1) : 0.0;
      REQUIRE(s == Catch::Approx(exact).margin(1e-13));
    }
  }
}

TEST_CASE("interior cell gets the plain tensor rule with exact weight sum") {
  Rect cell{0.25, 0.5, 0.5, 0.75};
  TrimRegion region(HalfPlaneParam{1, 0.9, true});
  Rule2D r = cut_cell_quadrature(cell, region, 4);
  REQUIRE(r.size() == 16);
  REQUIRE(r.weight_sum() == Catch::Approx(cell.area()).margin(1e-15));
}

TEST_CASE("half-plane cut weight sum equals the trapezoid area") {
  Rect cell{0.0, 0.25, 0.75, 1.0};
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  Rule2D r = cut_cell_quadrature(cell, region, 4);
  REQUIRE(r.weight_sum() == Catch::Approx(0.25 * (0.757 - 0.75)).margin(1e-12));
  for (std::size_t i = 0; i < r.size(); ++i) {
    REQUIRE(r.weights[i] > 0.0);
    REQUIRE(region.inside(r.points[i]));
  }
}

TEST_CASE("monomial exactness on polygonal cut cells") {
  const int order = 3;  // exact through total degree 5
  SECTION("half plane") {
    Rect cell{0.5, 0.75, 0.5, 0.75};
    TrimRegion region(HalfPlaneParam{0, 0.63, false});
    Rule2D r = cut_cell_quadrature(cell, region, order);
    Polygon kept{{0.63, 0.5}, {0.75, 0.5}, {0.75, 0.75}, {0.63, 0.75}};
    for (int a = 0; a <= 5; ++a)
      for (int b = 0; a + b <= 5; ++b)
        REQUIRE(rule_moment(r, a, b) ==
                Catch::Approx(polygon_moment(kept, a, b)).margin(1e-13));
  }
  SECTION("rectangle removal, corner cell") {
    Rect cell{0.5, 1.0, 0.0, 0.5};
    TrimRegion region(RectRemoveParam{Vec2(2.0 / 3.0, 0.0), Vec2(1.0, 1.0 / 3.0)});
    Rule2D r = cut_cell_quadrature(cell, region, order);
    Polygon kept{{0.5, 0.0},       {2.0 / 3.0, 0.0}, {2.0 / 3.0, 1.0 / 3.0},
                 {1.0, 1.0 / 3.0}, {1.0, 0.5},       {0.5, 0.5}};
    for (int a = 0; a <= 5; ++a)
      for (int b = 0; a + b <= 5; ++b)
        REQUIRE(rule_moment(r, a, b) ==
                Catch::Approx(polygon_moment(kept, a, b)).margin(1e-13));
  }
  SECTION("rotated rectangle") {
    Rect cell{0.25, 0.5, 0.25, 0.5};
    TrimRegion region(RotatedRectKeepPhysical{Vec2(0.485, 0.5), Vec2(0.295, 0.28), 0.3});
    Rule2D r = cut_cell_quadrature(cell, region, order);
    Polygon kept = rect_polygon(cell);
    for (const TrimLine& l : region.lines()) kept = clip_halfplane(kept, l.a, l.outward);
    REQUIRE(kept.size() >= 3);
    for (int a = 0; a <= 5; ++a)
      for (int b = 0; a + b <= 5; ++b)
        REQUIRE(rule_moment(r, a, b) ==
                Catch::Approx(polygon_moment(kept, a, b)).margin(1e-13));
  }
}

TEST_CASE("removed disk area matches the closed form") {
  // parametric area removed by B(0, 0.76) from the unit square: pi 0.76^2 / 4
  const double exact_removed = M_PI * 0.76 * 0.76 / 4.0;
  for (int level : {3, 4}) {
    auto space = grid_space(level, 2);
    TrimRegion region(DiskParam{Vec2(0, 0), 0.76, true});
    double kept = 0.0;
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx)
        kept += cut_cell_quadrature(space.cell_rect({cx, cy}), region, 4).weight_sum();
    REQUIRE(kept == Catch::Approx(1.0 - exact_removed).margin(1e-6));
  }
}

TEST_CASE("measure consistency per region") {
  auto space = grid_space(4, 2);
  auto total_area = [&](const TrimRegion& region) {
    double s = 0.0;
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx)
        s += cut_cell_quadrature(space.cell_rect({cx, cy}), region, 4).weight_sum();
    return s;
  };
  CHECK(total_area(TrimRegion(HalfPlaneParam{1, 0.757, true})) ==
        Catch::Approx(0.757).margin(1e-10));
  CHECK(total_area(TrimRegion(RectRemoveParam{Vec2(2.0 / 3, 0.0), Vec2(1.0, 1.0 / 3)})) ==
        Catch::Approx(1.0 - 1.0 / 9.0).margin(1e-10));
  CHECK(total_area(TrimRegion(RotatedRectKeepPhysical{Vec2(0.485, 0.5), Vec2(0.295, 0.28),
                                                      0.37})) ==
        Catch::Approx(4.0 * 0.295 * 0.28).margin(1e-10));
  CHECK(total_area(TrimRegion(DiskParam{Vec2(0, 0), 0.76, true})) ==
        Catch::Approx(1.0 - M_PI * 0.76 * 0.76 / 4.0).margin(1e-6));
}

TEST_CASE("trim boundary rule: straight line") {
  GeometryMap id;
  auto space = grid_space(5, 3);
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  double total = 0.0;
  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx) {
      auto frames = trim_boundary_rule(space.cell_rect({cx, cy}), region, id, 5);
      for (const auto& f : frames) {
        total += f.w;
        REQUIRE((f.normal - Vec2(0, 1)).norm() < 1e-14);
      }
    }
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("trim boundary rule: disk arc length and affine scaling") {
  auto space = grid_space(4, 2);
  TrimRegion region(DiskParam{Vec2(0, 0), 0.76, true});
  GeometryMap id;
  double len = 0.0;
  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx)
      for (const auto& f : trim_boundary_rule(space.cell_rect({cx, cy}), region, id, 4))
        len += f.w;
  REQUIRE(len == Catch::Approx(M_PI / 2.0 * 0.76).margin(1e-6));

  GeometryMap scaled = affine_box(0.0, 3.0, 0.0, 3.0);
  double len3 = 0.0;
  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx)
      for (const auto& f : trim_boundary_rule(space.cell_rect({cx, cy}), region, scaled, 4))
        len3 += f.w;
  REQUIRE(len3 == Catch::Approx(3.0 * len).margin(1e-9));
}

TEST_CASE("face-coincident trim attaches to the kept side only") {
  GeometryMap id;
  auto space = grid_space(2, 1);  // h = 1/4, faces at 0.5
  TrimRegion region(HalfPlaneParam{1, 0.5, true});
  double total = 0.0;
  int cells_with_frames = 0;
  for (int cy = 0; cy < space.num_cells(1); ++cy)
    for (int cx = 0; cx < space.num_cells(0); ++cx) {
      auto frames = trim_boundary_rule(space.cell_rect({cx, cy}), region, id, 3);
      if (!frames.empty()) {
        ++cells_with_frames;
        REQUIRE(cy == 1);  // the row just below the trim line
      }
      for (const auto& f : frames) total += f.w;
    }
  CHECK(cells_with_frames == 4);
  REQUIRE(total == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("normal sign: displaced points land on the correct side") {
  GeometryMap id;
  auto space = grid_space(4, 2);
  std::vector<TrimRegion> regions;
  regions.emplace_back(HalfPlaneParam{1, 0.757, true});
  regions.emplace_back(DiskParam{Vec2(0, 0), 0.76, true});
  regions.emplace_back(RectRemoveParam{Vec2(2.0 / 3, 0.0), Vec2(1.0, 1.0 / 3)});
  regions.emplace_back(RotatedRectKeepPhysical{Vec2(0.485, 0.5), Vec2(0.295, 0.28), 0.45});
  for (const auto& region : regions) {
    int checked = 0;
    for (int cy = 0; cy < space.num_cells(1) && checked < 100; ++cy)
      for (int cx = 0; cx < space.num_cells(0) && checked < 100; ++cx)
        for (const auto& f :
             trim_boundary_rule(space.cell_rect({cx, cy}), region, id, 5)) {
          REQUIRE_FALSE(region.inside(f.x + 1e-6 * f.normal));
          REQUIRE(region.inside(f.x - 1e-6 * f.normal));
          if (++checked >= 100) break;
        }
    REQUIRE(checked >= 50);
  }
}

TEST_CASE("cut rule points stay strictly inside the kept region") {
  auto space = grid_space(4, 2);
  std::vector<TrimRegion> regions;
  regions.emplace_back(DiskParam{Vec2(0, 0), 0.76, true});
  regions.emplace_back(RotatedRectKeepPhysical{Vec2(0.485, 0.5), Vec2(0.295, 0.28), 0.2});
  for (const auto& region : regions)
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx) {
        Rule2D r = cut_cell_quadrature(space.cell_rect({cx, cy}), region, 3);
        for (std::size_t i = 0; i < r.size(); ++i) {
          REQUIRE(r.weights[i] > 0.0);
          REQUIRE(region.inside(r.points[i]));
        }
      }
}

TEST_CASE("boundary length per cut cell bounded by 4 h_K") {
  GeometryMap id;
  auto space = grid_space(4, 2);
  std::vector<TrimRegion> regions;
  regions.emplace_back(HalfPlaneParam{1, 0.757, true});
  regions.emplace_back(DiskParam{Vec2(0, 0), 0.76, true});
  regions.emplace_back(RectRemoveParam{Vec2(2.0 / 3, 0.0), Vec2(1.0, 1.0 / 3)});
  regions.emplace_back(RotatedRectKeepPhysical{Vec2(0.485, 0.5), Vec2(0.295, 0.28), 0.45});
  for (const auto& region : regions) {
    TrimmedMesh tm(space, id, region, 0.5, 4);
    for (int lin : tm.cut_cells()) {
      double gamma = 0.0;
      for (const auto& f : tm.cell(lin).trim_frames) gamma += f.w;
      REQUIRE(gamma <= 4.0 * tm.cell(lin).h_K);
    }
  }
}

TEST_CASE("edge active intervals") {
  TrimRegion half(HalfPlaneParam{1, 0.757, true});
  auto iv = active_edge_intervals(half, 3, 0.0, 1.0);  // left edge x=0
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].first == Catch::Approx(0.0));
  CHECK(iv[0].second == Catch::Approx(0.757));
  auto top = active_edge_intervals(half, 2, 0.0, 1.0);  // top edge y=1: removed
  CHECK(top.empty());

  TrimRegion rect(RectRemoveParam{Vec2(2.0 / 3, 0.0), Vec2(1.0, 1.0 / 3)});
  auto bottom = active_edge_intervals(rect, 0, 0.0, 1.0);
  REQUIRE(bottom.size() == 1);
  CHECK(bottom[0].second == Catch::Approx(2.0 / 3));
  auto right = active_edge_intervals(rect, 1, 0.0, 1.0);  // x=1 edge
  REQUIRE(right.size() == 1);
  CHECK(right[0].first == Catch::Approx(1.0 / 3));

  TrimRegion disk(DiskParam{Vec2(0, 0), 0.76, true});
  auto left = active_edge_intervals(disk, 3, 0.0, 1.0);
  REQUIRE(left.size() == 1);
  CHECK(left[0].first == Catch::Approx(0.76));
}
