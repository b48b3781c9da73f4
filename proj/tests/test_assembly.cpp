#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "trimiga/experiments.hpp"

using namespace trimiga;

namespace {

TensorSplineSpace grid_space(int level, int p) {
  auto kv = make_open_knot_vector(dyadic_breakpoints(level), p, p - 1);
  return TensorSplineSpace(kv, kv);
}

TrimRegion no_trim() { return TrimRegion(HalfPlaneParam{1, 2.0, true}); }

ProblemData patch_data(const ManufacturedSolution& sol, double beta) {
  ProblemData d;
  d.f = sol.f;
  d.g_D = sol.u;
  d.beta = beta;
  d.trim_bc = BCType::DirichletWeak;
  d.side_bc = {BCType::DirichletWeak, BCType::DirichletWeak, BCType::DirichletWeak,
               BCType::DirichletWeak};
  return d;
}

}  // namespace

TEST_CASE("patch test: exact polynomial solutions reproduced through the trim") {
  GeometryMap id;
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  for (int p : {1, 2, 3}) {
    auto space = grid_space(3, p);
    TrimmedMesh tm(space, id, region, 1.0, p + 2);
    StabilizationPlan plan = build_plan(space, tm, id, StabMode::Parametric, p + 2);
    ManufacturedSolution sol = get_solution("poly_q" + std::to_string(p));
    LinearSystem sys = assemble(space, tm, id, plan, patch_data(sol, 10.0 * (p + 1)));
    Eigen::VectorXd u = solve(sys);
    ErrorNorms e = error_norms(space, u, sol.u, sol.grad, tm, id,
                               patch_data(sol, 1.0).weak_boundary());
    INFO("p=" << p << " rel err " << e.nnorm / e.nnorm_exact);
    REQUIRE(e.nnorm / e.nnorm_exact < 1e-9);
  }
}

TEST_CASE("assembled matrix is symmetric") {
  GeometryMap id;
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  auto space = grid_space(3, 2);
  TrimmedMesh tm(space, id, region, 1.0, 4);
  StabilizationPlan plan = build_plan(space, tm, id, StabMode::Parametric, 4);
  LinearSystem sys = assemble(space, tm, id, plan, patch_data(get_solution("poly_q2"), 30.0));
  Eigen::MatrixXd A = Eigen::MatrixXd(sys.A);
  REQUIRE((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-12 * A.cwiseAbs().maxCoeff());
}

TEST_CASE("zero data gives the zero solution") {
  GeometryMap id;
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  auto space = grid_space(3, 2);
  TrimmedMesh tm(space, id, region, 1.0, 4);
  StabilizationPlan plan = build_plan(space, tm, id, StabMode::Parametric, 4);
  LinearSystem sys = assemble(space, tm, id, plan, patch_data(get_solution("zero"), 30.0));
  Eigen::VectorXd u = solve(sys);
  REQUIRE(u.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("theta=0 assembly equals the mode-none assembly exactly") {
  GeometryMap id;
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  auto space = grid_space(4, 2);
  ProblemData data = patch_data(get_solution("poly_q2"), 30.0);

  TrimmedMesh tm(space, id, region, 1.0, 4);  // all cut cells bad
  StabilizationPlan none = build_plan(space, tm, id, StabMode::None, 4);
  LinearSystem a = assemble(space, tm, id, none, data);

  TrimmedMesh tm_good(space, id, region, 1e-9, 4);  // all cut cells good
  StabilizationPlan good = build_plan(space, tm_good, id, StabMode::Parametric, 4);
  LinearSystem b = assemble(space, tm_good, id, good, data);

  REQUIRE(a.A.nonZeros() == b.A.nonZeros());
  Eigen::SparseMatrix<double> diff = a.A - b.A;
  REQUIRE(Eigen::Map<const Eigen::VectorXd>(diff.valuePtr(), diff.nonZeros())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  REQUIRE((a.b - b.b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gram matrix properties") {
  GeometryMap id;
  auto space = grid_space(3, 2);
  SECTION("constant vectors see only the boundary trace term") {
    TrimRegion region(HalfPlaneParam{1, 0.757, true});
    TrimmedMesh tm(space, id, region, 1.0, 4);
    WeakBoundary weak;  // trim only
    Eigen::SparseMatrix<double> B = gram_1h(space, tm, id, weak);
    Eigen::VectorXd ones = Eigen::VectorXd::Constant(space.dim(), 2.0);
    // c^2 * integral of h^-1 over the trim line; h_K = sqrt(2)/8 per cell
    const double expect = 4.0 * (1.0 / (std::sqrt(2.0) / 8.0));
    REQUIRE(ones.dot(B * ones) == Catch::Approx(expect).epsilon(1e-12));
  }
  SECTION("positive semidefinite") {
    TrimRegion region(DiskParam{Vec2(0, 0), 0.76, true});
    TrimmedMesh tm(space, id, region, 0.5, 4);
    WeakBoundary weak;
    Eigen::MatrixXd B = Eigen::MatrixXd(gram_1h(space, tm, id, weak));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
    REQUIRE(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
  }
}

TEST_CASE("gram quadratic form stable under doubled quadrature") {
  GeometryMap id;
  auto space = grid_space(3, 2);
  WeakBoundary weak;
  weak.trim = false;
  weak.sides = {true, true, true, true};
  TrimmedMesh tm1(space, id, no_trim(), 1.0, 4);
  TrimmedMesh tm2(space, id, no_trim(), 1.0, 8);
  Eigen::SparseMatrix<double> B1 = gram_1h(space, tm1, id, weak);
  Eigen::SparseMatrix<double> B2 = gram_1h(space, tm2, id, weak);
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd v(space.dim());
    for (int i = 0; i < v.size(); ++i) v(i) = g(rng);
    REQUIRE(v.dot(B1 * v) == Catch::Approx(v.dot(B2 * v)).epsilon(1e-8));
  }
}

TEST_CASE("strong BC: homogeneous data zeroes the constrained rows") {
  GeometryMap id;
  auto space = grid_space(3, 2);
  TrimmedMesh tm(space, id, no_trim(), 1.0, 4);
  StabilizationPlan plan = build_plan(space, tm, id, StabMode::None, 4);
  ProblemData data;
  data.beta = 1.0;
  data.trim_bc = BCType::None;
  data.side_bc = {BCType::DirichletStrong, BCType::DirichletStrong, BCType::DirichletStrong,
                  BCType::DirichletStrong};
  LinearSystem sys = assemble(space, tm, id, plan, data);
  apply_strong_bc(sys, space, tm, id, data.g_D, {0, 1, 2, 3});
  for (int i = 0; i < sys.n(); ++i)
    if (sys.constrained[i]) {
      REQUIRE(sys.b(i) == 0.0);
      REQUIRE(sys.constrained_value(i) == 0.0);
    }
  // boundary ring is constrained
  REQUIRE(sys.constrained[space.global_index(0, 0)]);
  REQUIRE(sys.constrained[space.global_index(3, 0)]);
  REQUIRE_FALSE(sys.constrained[space.global_index(3, 3)]);
}

TEST_CASE("strong BC: linear datum collocates to the Greville abscissae") {
  GeometryMap id;
  auto space = grid_space(2, 1);
  TrimmedMesh tm(space, id, no_trim(), 1.0, 3);
  StabilizationPlan plan = build_plan(space, tm, id, StabMode::None, 3);
  ProblemData data;
  data.trim_bc = BCType::None;
  data.side_bc[0] = BCType::DirichletStrong;
  LinearSystem sys = assemble(space, tm, id, plan, data);
  apply_strong_bc(sys, space, tm, id, [](const Vec2& x) { return x.x(); }, {0});
  auto grev = greville_abscissae(space.kv(0));
  for (int i = 0; i < space.num_basis(0); ++i) {
    const int dof = space.global_index(i, 0);
    REQUIRE(sys.constrained[dof]);
    REQUIRE(sys.constrained_value(dof) == Catch::Approx(grev[i]).margin(1e-13));
  }
}

TEST_CASE("strong BC trace of the singular L-shape datum converges") {
  GeometryMap aff = affine_box(-2.0, 1.0, -1.0, 2.0);
  TrimRegion region(RectRemoveParam{Vec2(2.0 / 3, 0.0), Vec2(1.0, 1.0 / 3)});
  ManufacturedSolution sol = get_solution("lshape_singular");
  const int p = 2;
  std::vector<double> errs;
  for (int level : {2, 3, 4, 5}) {
    auto space = grid_space(level, p);
    TrimmedMesh tm(space, aff, region, 1.0, p + 2);
    StabilizationPlan plan = build_plan(space, tm, aff, StabMode::Parametric, p + 2);
    ProblemData data;
    data.g_D = sol.u;
    data.trim_bc = BCType::DirichletWeak;
    data.side_bc = {BCType::DirichletStrong, BCType::DirichletStrong, BCType::DirichletStrong,
                    BCType::DirichletStrong};
    LinearSystem sys = assemble(space, tm, aff, plan, data);
    apply_strong_bc(sys, space, tm, aff, data.g_D, {0, 1, 2, 3});
    // sample the constrained trace on the active parts of each side
    double maxerr = 0.0;
    Eigen::VectorXd c = sys.constrained_value;
    for (int side = 0; side < 4; ++side)
      for (auto [a, b] : active_edge_intervals(region, side, 0.0, 1.0))
        for (int k = 1; k < 100; ++k) {
          const double t = a + (b - a) * k / 100.0;
          const Vec2 xh = (side == 0)   ? Vec2(t, 0.0)
                          : (side == 1) ? Vec2(1.0, t)
                          : (side == 2) ? Vec2(t, 1.0)
                                        : Vec2(0.0, t);
          const double tr = spline_value(space, c, xh);
          maxerr = std::max(maxerr, std::abs(tr - sol.u(aff.eval(xh).x)));
        }
    errs.push_back(maxerr);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double rate = std::log2(errs[i - 1] / errs[i]);
    INFO("level step " << i << " rate " << rate);
    REQUIRE(rate >= 2.0 / 3.0);
  }
}

TEST_CASE("solve: identity system and random SPD residual") {
  LinearSystem sys;
  const int n = 50;
  std::mt19937 rng(123);
  std::normal_distribution<double> g;
  SECTION("identity") {
    sys.A.resize(n, n);
    sys.A.setIdentity();
    sys.b = Eigen::VectorXd::Random(n);
    sys.active.assign(n, true);
    sys.constrained.assign(n, false);
    sys.constrained_value = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u = solve(sys);
    REQUIRE((u - sys.b).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("random SPD") {
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) R(i, j) = g(rng);
    Eigen::MatrixXd A = R * R.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    sys.A = A.sparseView();
    sys.b = Eigen::VectorXd::Random(n);
    sys.active.assign(n, true);
    sys.constrained.assign(n, false);
    sys.constrained_value = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u = solve(sys);
    REQUIRE((sys.b - sys.A * u).norm() <= 1e-10 * sys.b.norm());
  }
}

TEST_CASE("error norm of u_h against zero is its discrete norm") {
  GeometryMap id;
  auto space = grid_space(3, 2);
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  TrimmedMesh tm(space, id, region, 1.0, 4);
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  Eigen::VectorXd c(space.dim());
  for (int i = 0; i < c.size(); ++i) c(i) = g(rng);
  WeakBoundary weak;  // trim only
  ErrorNorms e = error_norms(
      space, c, [](const Vec2&) { return 0.0; },
      [](const Vec2&) { return Vec2::Zero().eval(); }, tm, id, weak);
  Eigen::SparseMatrix<double> B = gram_1h(space, tm, id, weak);
  REQUIRE(e.nnorm * e.nnorm == Catch::Approx(c.dot(B * c)).epsilon(1e-10));
}

TEST_CASE("error norm stable under doubled quadrature on a smooth case") {
  GeometryMap id;
  TrimRegion region(HalfPlaneParam{1, 0.757, true});
  ManufacturedSolution sol = get_solution("exp_sin");
  auto space = grid_space(3, 2);
  std::vector<double> vals;
  for (int order : {4, 8}) {
    TrimmedMesh tm(space, id, region, 1.0, order);
    Eigen::VectorXd c = l2_project_global(space, [&](const Vec2& x) { return sol.u(x); }, 6);
    WeakBoundary weak;
    ErrorNorms e = error_norms(space, c, sol.u, sol.grad, tm, id, weak);
    vals.push_back(e.nnorm);
  }
  REQUIRE(std::abs(vals[0] - vals[1]) < 1e-3 * vals[1]);
}
