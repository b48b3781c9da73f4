#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "trimiga/space.hpp"

using namespace trimiga;

namespace {

TensorSplineSpace make_space(const std::vector<double>& bp, int p, int k) {
  return TensorSplineSpace(make_open_knot_vector(bp, p, k), make_open_knot_vector(bp, p, k));
}

}  // namespace

TEST_CASE("cell bookkeeping") {
  auto s = make_space({0.0, 0.25, 0.5, 0.75, 1.0}, 2, 1);
  CHECK(s.dim() == 36);
  CHECK(s.num_cells() == 16);
  CHECK(s.cell_rect({1, 2}).x0 == 0.25);
  CHECK(s.cell_rect({1, 2}).y1 == 0.75);
  auto dofs = s.active_dofs({0, 0});
  CHECK(dofs.front() == 0);
  CHECK(static_cast<int>(dofs.size()) == 9);
}

TEST_CASE("extraction of a single-element space is the identity") {
  auto s = make_space({0.0, 1.0}, 2, 1);
  BezierExtraction ex(s);
  Eigen::MatrixXd op = ex.cell_operator({0, 0});
  CHECK((op - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("two-element C0 linear extraction duplicates the shared coefficient") {
  auto kv = make_open_knot_vector(std::vector<double>{0.0, 0.5, 1.0}, 1, 0);
  UnivariateExtraction ex = extract_univariate(kv);
  REQUIRE(ex.element_ops.size() == 2);
  // element 0 active dofs {0,1}: bernstein coeffs = (c0, c1)
  CHECK((ex.element_ops[0] - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  // element 1 active dofs {1,2}: bernstein coeffs = (c1, c2)
  CHECK((ex.element_ops[1] - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("extraction matches the spline on every cell (sampling oracle)") {
  auto s = make_space({0.0, 0.2, 0.4, 0.6, 0.8, 1.0}, 3, 2);
  BezierExtraction ex(s);
  std::mt19937 rng(99);
  std::normal_distribution<double> cd(0.0, 1.0);
  Eigen::VectorXd c(s.dim());
  for (int i = 0; i < c.size(); ++i) c(i) = cd(rng);

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int cy = 0; cy < s.num_cells(1); ++cy)
    for (int cx = 0; cx < s.num_cells(0); ++cx) {
      CellIndex ci{cx, cy};
      auto dofs = s.active_dofs(ci);
      Eigen::VectorXd local(dofs.size());
      for (std::size_t i = 0; i < dofs.size(); ++i) local(i) = c(dofs[i]);
      BernsteinPatch patch{s.degree(), s.cell_rect(ci), ex.cell_operator(ci) * local};
      for (int t = 0; t < 10; ++t) {
        Rect r = s.cell_rect(ci);
        Vec2 x(r.x0 + uni(rng) * r.width(), r.y0 + uni(rng) * r.height());
        REQUIRE(std::abs(patch.value(x) - spline_value(s, c, x)) < 1e-12);
      }
    }
}

TEST_CASE("bernstein patch gradient matches spline gradient") {
  auto s = make_space({0.0, 0.5, 1.0}, 2, 1);
  BezierExtraction ex(s);
  std::mt19937 rng(5);
  std::normal_distribution<double> cd(0.0, 1.0);
  Eigen::VectorXd c(s.dim());
  for (int i = 0; i < c.size(); ++i) c(i) = cd(rng);
  CellIndex ci{1, 0};
  auto dofs = s.active_dofs(ci);
  Eigen::VectorXd local(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) local(i) = c(dofs[i]);
  BernsteinPatch patch{2, s.cell_rect(ci), ex.cell_operator(ci) * local};
  for (double x : {0.55, 0.7, 0.95})
    for (double y : {0.05, 0.25, 0.45}) {
      Vec2 g1 = patch.gradient(Vec2(x, y));
      Vec2 g2 = spline_gradient(s, c, Vec2(x, y));
      REQUIRE((g1 - g2).norm() < 1e-11);
    }
}

TEST_CASE("L2 projection of a constant is all ones") {
  auto s = make_space({0.0, 0.25, 0.5, 0.75, 1.0}, 2, 1);
  Eigen::VectorXd c = l2_project_global(s, [](const Vec2&) { return 1.0; }, 4);
  for (int i = 0; i < c.size(); ++i) REQUIRE(c(i) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("L2 projection reproduces members of the space") {
  auto s = make_space({0.0, 0.25, 0.5, 0.75, 1.0}, 3, 2);
  std::mt19937 rng(123);
  std::normal_distribution<double> cd(0.0, 1.0);
  Eigen::VectorXd c(s.dim());
  for (int i = 0; i < c.size(); ++i) c(i) = cd(rng);
  Eigen::VectorXd proj =
      l2_project_global(s, [&](const Vec2& x) { return spline_value(s, c, x); }, 5);
  REQUIRE((proj - c).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("L2 projection converges at rate p+1") {
  for (int p : {1, 2}) {
    std::vector<double> errs, hs;
    for (int level = 2; level <= 5; ++level) {
      auto s = make_space(dyadic_breakpoints(level), p, p - 1);
      auto f = [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); };
      Eigen::VectorXd c = l2_project_global(s, f, p + 2);
      // L2 error by tensor quadrature
      double err2 = 0.0;
      Rule2D rule = tensor_rule(p + 3, p + 3, 0, 1, 0, 1);
      for (int cy = 0; cy < s.num_cells(1); ++cy)
        for (int cx = 0; cx < s.num_cells(0); ++cx) {
          Rect r = s.cell_rect({cx, cy});
          Rule2D cr = tensor_rule(p + 3, p + 3, r.x0, r.x1, r.y0, r.y1);
          for (std::size_t q = 0; q < cr.size(); ++q) {
            const double d = spline_value(s, c, cr.points[q]) - f(cr.points[q]);
            err2 += cr.weights[q] * d * d;
          }
        }
      errs.push_back(std::sqrt(err2));
      hs.push_back(std::pow(0.5, level));
    }
    // least-squares slope of log err vs log h
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(errs.size());
    for (int i = 0; i < n; ++i) {
      const double X = std::log(hs[i]), Y = std::log(errs[i]);
      sx += X; sy += Y; sxx += X * X; sxy += X * Y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    INFO("p=" << p << " slope=" << slope);
    REQUIRE(slope > p + 1 - 0.2);
  }
}
