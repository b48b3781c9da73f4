#ifndef TRIMIGA_EXPERIMENTS_HPP
#define TRIMIGA_EXPERIMENTS_HPP

#include <cstdio>
#include <ostream>
#include <random>

#include "trimiga/config.hpp"
#include "trimiga/eigtools.hpp"
#include "trimiga/solutions.hpp"

namespace trimiga {

// ---------------------------------------------------------------------------
// Scenario builders
// ---------------------------------------------------------------------------

inline GeometryMap build_geometry(const ExperimentConfig& cfg) {
  if (cfg.geometry == "identity") return GeometryMap();
  if (cfg.geometry == "affine")
    return affine_box(cfg.geom_x0, cfg.geom_x1, cfg.geom_y0, cfg.geom_y1);
  if (cfg.geometry == "quarter_annulus") return quarter_annulus();
  if (cfg.geometry == "c0_quarter_annulus") return c0_quarter_annulus();
  throw config_error("unknown geometry: " + cfg.geometry);
}

inline TrimRegion build_region(const ExperimentConfig& cfg) {
  if (cfg.region_kind == "half_plane")
    return TrimRegion(HalfPlaneParam{cfg.region_axis, cfg.region_threshold,
                                     cfg.region_keep_below});
  if (cfg.region_kind == "disk")
    return TrimRegion(DiskParam{Vec2(cfg.region_cx, cfg.region_cy), cfg.region_radius,
                                cfg.region_keep_outside});
  if (cfg.region_kind == "rect_remove")
    return TrimRegion(RectRemoveParam{Vec2(cfg.region_x0, cfg.region_y0),
                                      Vec2(cfg.region_x1, cfg.region_y1)});
  if (cfg.region_kind == "rotated_rect")
    return TrimRegion(RotatedRectKeepPhysical{Vec2(cfg.region_cx, cfg.region_cy),
                                              Vec2(cfg.region_hx, cfg.region_hy),
                                              cfg.region_alpha});
  throw config_error("unknown region kind: " + cfg.region_kind);
}

/// Maximal-smoothness dyadic space; the C0 annulus also forces a C0 knot at
/// the geometry kink (xi = 0.75) so the space refines the geometry.
inline TensorSplineSpace build_space(const std::string& geometry, int level, int p) {
  const auto bp = dyadic_breakpoints(level);
  if (geometry == "c0_quarter_annulus") {
    if (level < 2) throw config_error("c0_quarter_annulus needs level >= 2");
    std::vector<int> cont(bp.size() - 2, p - 1);
    for (std::size_t i = 1; i + 1 < bp.size(); ++i)
      if (bp[i] == 0.75) cont[i - 1] = 0;
    return TensorSplineSpace(make_open_knot_vector(bp, p, cont),
                             make_open_knot_vector(bp, p, p - 1));
  }
  auto kv = make_open_knot_vector(bp, p, p - 1);
  return TensorSplineSpace(kv, kv);
}

/// Space of the epsilon study: the y-breakpoint 0.75 replaced by 0.757-eps.
inline TensorSplineSpace make_eps_space(int level, double eps, int p) {
  auto bpy = dyadic_breakpoints(level);
  bool replaced = false;
  for (double& z : bpy)
    if (z == 0.75) {
      z = 0.757 - eps;
      replaced = true;
    }
  if (!replaced) throw config_error("make_eps_space: level has no breakpoint at 0.75");
  if (!std::is_sorted(bpy.begin(), bpy.end()))
    throw config_error("make_eps_space: eps too large for this level");
  return TensorSplineSpace(make_open_knot_vector(dyadic_breakpoints(level), p, p - 1),
                           make_open_knot_vector(bpy, p, p - 1));
}

inline StabMode parse_mode(const std::string& s) {
  if (s == "none") return StabMode::None;
  if (s == "parametric") return StabMode::Parametric;
  if (s == "physical") return StabMode::Physical;
  throw config_error("unknown stab_mode: " + s);
}

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Stability sweep (the epsilon experiment)
// ---------------------------------------------------------------------------

struct StabilityRow {
  double eps;
  std::string mode;
  double lambda_max, lambda_min;
};

inline std::vector<StabilityRow> run_stability_sweep(const ExperimentConfig& cfg) {
  if (cfg.geometry != "identity" || cfg.region_kind != "half_plane" || cfg.region_axis != 1 ||
      cfg.region_threshold != 0.757 || !cfg.region_keep_below || cfg.degree != 3)
    throw config_error("stability: config inconsistent with the fixed epsilon scenario");
  const int level = cfg.levels.empty() ? 5 : cfg.levels.front();
  std::vector<double> eps = cfg.eps_list;
  if (eps.empty())
    for (int k = 2; k <= 10; ++k) eps.push_back(std::pow(10.0, -k));

  const GeometryMap map;
  const TrimRegion region = build_region(cfg);
  const int order = cfg.effective_quad_order();

  std::vector<StabilityRow> rows;
  for (double e : eps) {
    TensorSplineSpace space = make_eps_space(level, e, cfg.degree);
    TrimmedMesh tm(space, map, region, cfg.theta, order);
    WeakBoundary weak;  // trim only
    Eigen::SparseMatrix<double> B = gram_1h(space, tm, map, weak);
    const std::vector<bool> active = deactivate_dofs(space, tm);
    ProblemData data;
    data.beta = cfg.beta;
    data.trim_bc = BCType::DirichletWeak;
    for (StabMode mode : {StabMode::None, StabMode::Parametric, StabMode::Physical}) {
      StabilizationPlan plan = build_plan(space, tm, map, mode, order);
      LinearSystem sys = assemble(space, tm, map, plan, data);
      auto [lmin, lmax] = gen_eig_extremes(sys.A, B, active);
      rows.push_back({e, to_string(mode), lmax, lmin});
    }
  }
  return rows;
}

inline void write_stability_csv(const std::vector<StabilityRow>& rows, std::ostream& os) {
  os << "eps,mode,lambda_max,lambda_min\n";
  for (const auto& r : rows)
    os << fmt_g(r.eps) << ',' << r.mode << ',' << fmt_g(r.lambda_max) << ','
       << fmt_g(r.lambda_min) << '\n';
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  double h;
  int dofs;
  double err_nnorm, err_l2;
  double rate_nnorm;  // NaN on the first level
};

inline std::vector<double> convergence_rates(const std::vector<double>& hs,
                                             const std::vector<double>& errs) {
  std::vector<double> r(hs.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i < hs.size(); ++i)
    r[i] = std::log(errs[i - 1] / errs[i]) / std::log(hs[i - 1] / hs[i]);
  return r;
}

struct SolveOutput {
  ConvergenceRow row;
  Eigen::VectorXd coeffs;
  LinearSystem sys;
};

/// One assemble+solve of the configured scenario at a given level.
inline SolveOutput solve_level(const ExperimentConfig& cfg, int level) {
  const GeometryMap map = build_geometry(cfg);
  const TrimRegion region = build_region(cfg);
  const int order = cfg.effective_quad_order();
  const ManufacturedSolution sol = get_solution(cfg.solution);

  TensorSplineSpace space = build_space(cfg.geometry, level, cfg.degree);
  // the L-shape corner must sit in an element interior
  if (const auto* r = std::get_if<RectRemoveParam>(&region.variant())) {
    for (double c : {r->lo.x(), r->lo.y(), r->hi.x(), r->hi.y()})
      for (double z : space.breakpoints(0))
        if (c > 0.0 && c < 1.0 && std::abs(c - z) < 1e-12)
          throw config_error("rect corner lies on a knot line");
  }

  TrimmedMesh tm(space, map, region, cfg.theta, order);
  StabilizationPlan plan = build_plan(space, tm, map, parse_mode(cfg.stab_mode), order);

  ProblemData data;
  data.beta = cfg.beta;
  data.f = sol.f;
  data.g_D = sol.u;
  data.trim_bc = BCType::DirichletWeak;
  data.side_bc = {BCType::DirichletStrong, BCType::DirichletStrong, BCType::DirichletStrong,
                  BCType::DirichletStrong};

  LinearSystem sys = assemble(space, tm, map, plan, data);
  apply_strong_bc(sys, space, tm, map, data.g_D, {0, 1, 2, 3});
  Eigen::VectorXd u = solve(sys);

  ErrorNorms err = error_norms(space, u, sol.u, sol.grad, tm, map, data.weak_boundary());
  SolveOutput out;
  int free_count = 0;
  for (bool b : sys.free_mask()) free_count += b;
  out.row = {std::pow(0.5, level), free_count, err.nnorm, err.l2,
             std::numeric_limits<double>::quiet_NaN()};
  out.coeffs = std::move(u);
  out.sys = std::move(sys);
  return out;
}

inline std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& cfg) {
  std::vector<int> levels = cfg.levels;
  if (levels.empty()) levels = {2, 3, 4, 5, 6};
  std::vector<ConvergenceRow> rows;
  std::vector<double> hs, errs;
  for (int level : levels) {
    SolveOutput out = solve_level(cfg, level);
    hs.push_back(out.row.h);
    errs.push_back(out.row.err_nnorm);
    rows.push_back(out.row);
  }
  const auto rates = convergence_rates(hs, errs);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rate_nnorm = rates[i];
  return rows;
}

inline void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& os) {
  os << "h,dofs,err_nnorm,err_l2,rate_nnorm\n";
  for (const auto& r : rows) {
    os << fmt_g(r.h) << ',' << r.dofs << ',' << fmt_g(r.err_nnorm) << ',' << fmt_g(r.err_l2)
       << ',';
    if (!std::isnan(r.rate_nnorm)) os << fmt_g(r.rate_nnorm);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Conditioning studies
// ---------------------------------------------------------------------------

struct ConditioningRow {
  double sweep;  ///< h, eps or alpha
  double eta;    ///< smallest cut volume (rotating square only, else NaN)
  std::string mode;
  double kappa_plain, kappa_jacobi;
};

namespace detail {

/// Stiffness matrix of the configured problem and its free-DOF mask.
inline std::pair<Eigen::SparseMatrix<double>, std::vector<bool>> conditioning_matrix(
    const TensorSplineSpace& space, const TrimmedMesh& tm, const GeometryMap& map,
    StabMode mode, double beta, int order, bool strong_sides) {
  StabilizationPlan plan = build_plan(space, tm, map, mode, order);
  ProblemData data;
  data.beta = beta;
  data.trim_bc = BCType::DirichletWeak;
  if (strong_sides)
    data.side_bc = {BCType::DirichletStrong, BCType::DirichletStrong, BCType::DirichletStrong,
                    BCType::DirichletStrong};
  LinearSystem sys = assemble(space, tm, map, plan, data);
  if (strong_sides) apply_strong_bc(sys, space, tm, map, data.g_D, {0, 1, 2, 3});
  return {sys.A, sys.free_mask()};
}

}  // namespace detail

inline std::vector<ConditioningRow> run_conditioning(const ExperimentConfig& cfg) {
  const int order = cfg.effective_quad_order();
  const StabMode stab = parse_mode(cfg.stab_mode == "none" ? "parametric" : cfg.stab_mode);
  std::vector<ConditioningRow> rows;

  auto push_rows = [&](double sweep, double eta, const TensorSplineSpace& space,
                       const TrimmedMesh& tm_none, const TrimmedMesh& tm_stab,
                       const GeometryMap& map, bool strong_sides) {
    auto [A0, m0] = detail::conditioning_matrix(space, tm_none, map, StabMode::None, cfg.beta,
                                                order, strong_sides);
    rows.push_back({sweep, eta, "none", condition_number(A0, m0, false),
                    condition_number(A0, m0, true)});
    auto [A1, m1] = detail::conditioning_matrix(space, tm_stab, map, stab, cfg.beta, order,
                                                strong_sides);
    rows.push_back({sweep, eta, to_string(stab), condition_number(A1, m1, false),
                    condition_number(A1, m1, true)});
  };

  if (!cfg.alpha_list.empty() || cfg.region_kind == "rotated_rect") {
    // rotating square: kappa vs alpha, eta = min cut volume
    std::vector<double> alphas = cfg.alpha_list;
    if (alphas.empty())
      for (int i = 0; i <= 100; ++i) alphas.push_back(i * M_PI / 200.0);
    const int level = cfg.levels.empty() ? 3 : cfg.levels.front();
    const GeometryMap map = build_geometry(cfg);
    TensorSplineSpace space = build_space(cfg.geometry, level, cfg.degree);
    for (double a : alphas) {
      ExperimentConfig c = cfg;
      c.region_alpha = a;
      const TrimRegion region = build_region(c);
      TrimmedMesh tm_stab(space, map, region, cfg.theta, order);
      TrimmedMesh tm_none(space, map, region, 0.0, order);
      push_rows(a, tm_stab.min_cut_volume(), space, tm_none, tm_stab, map, false);
    }
    return rows;
  }

  if (!cfg.eps_list.empty()) {
    // epsilon geometry at fixed level: kappa vs eps for theta in {0, theta}
    const int level = cfg.levels.empty() ? 5 : cfg.levels.front();
    const GeometryMap map;
    const TrimRegion region = build_region(cfg);
    for (double e : cfg.eps_list) {
      TensorSplineSpace space = make_eps_space(level, e, cfg.degree);
      TrimmedMesh tm_stab(space, map, region, cfg.theta, order);
      TrimmedMesh tm_none(space, map, region, 0.0, order);
      push_rows(e, std::numeric_limits<double>::quiet_NaN(), space, tm_none, tm_stab, map,
                true);
    }
    return rows;
  }

  // kappa vs h (generic geometry; with region.eps > 0 the knot-modified space)
  std::vector<int> levels = cfg.levels.empty() ? std::vector<int>{3, 4, 5} : cfg.levels;
  const GeometryMap map = build_geometry(cfg);
  const TrimRegion region = build_region(cfg);
  for (int level : levels) {
    TensorSplineSpace space = cfg.region_eps > 0.0
                                  ? make_eps_space(level, cfg.region_eps, cfg.degree)
                                  : build_space(cfg.geometry, level, cfg.degree);
    TrimmedMesh tm_stab(space, map, region, cfg.theta, order);
    TrimmedMesh tm_none(space, map, region, 0.0, order);
    push_rows(std::pow(0.5, level), std::numeric_limits<double>::quiet_NaN(), space, tm_none,
              tm_stab, map, true);
  }
  return rows;
}

inline void write_conditioning_csv(const std::vector<ConditioningRow>& rows, std::ostream& os,
                                   const std::string& sweep_name, bool with_eta) {
  os << sweep_name << (with_eta ? ",eta" : "") << ",mode,kappa_plain,kappa_jacobi\n";
  for (const auto& r : rows) {
    os << fmt_g(r.sweep);
    if (with_eta) os << ',' << fmt_g(r.eta);
    os << ',' << r.mode << ',' << fmt_g(r.kappa_plain) << ',' << fmt_g(r.kappa_jacobi) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Invariant battery (CLI `verify`)
// ---------------------------------------------------------------------------

inline bool run_verify(std::ostream& os) {
  int failed = 0;
  auto check = [&](const char* name, bool ok) {
    os << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failed;
  };
  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  {  // partition of unity
    bool ok = true;
    for (int p : {1, 2, 3}) {
      auto kv = make_open_knot_vector(dyadic_breakpoints(3), p, p - 1);
      for (int i = 0; i < 200; ++i) {
        BasisTable t = eval_basis(kv, uni(rng), 0);
        double s = 0;
        for (int j = 0; j <= p; ++j) s += t.ders(0, j);
        ok = ok && std::abs(s - 1.0) < 1e-12;
      }
    }
    check("partition of unity", ok);
  }
  {  // knot insertion invariance
    auto kv = make_open_knot_vector(dyadic_breakpoints(2), 3, 2);
    Eigen::VectorXd c(kv.num_basis());
    for (int i = 0; i < c.size(); ++i) c(i) = uni(rng) - 0.5;
    auto [kv2, c2] = insert_knot(kv, c, 0.31);
    bool ok = true;
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      ok = ok && std::abs(spline_value(kv, c, x) - spline_value(kv2, c2, x)) < 1e-12;
    }
    check("knot insertion invariance", ok);
  }
  {  // extraction consistency
    auto kv = make_open_knot_vector(dyadic_breakpoints(2), 3, 2);
    TensorSplineSpace space(kv, kv);
    BezierExtraction ex(space);
    Eigen::VectorXd c(space.dim());
    for (int i = 0; i < c.size(); ++i) c(i) = uni(rng) - 0.5;
    bool ok = true;
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx) {
        CellIndex ci{cx, cy};
        auto dofs = space.active_dofs(ci);
        Eigen::VectorXd local(dofs.size());
        for (std::size_t i = 0; i < dofs.size(); ++i) local(i) = c(dofs[i]);
        BernsteinPatch patch{3, space.cell_rect(ci), ex.cell_operator(ci) * local};
        Rect r = space.cell_rect(ci);
        for (int t = 0; t < 5; ++t) {
          Vec2 x(r.x0 + uni(rng) * r.width(), r.y0 + uni(rng) * r.height());
          ok = ok && std::abs(patch.value(x) - spline_value(space, c, x)) < 1e-12;
        }
      }
    check("bezier extraction consistency", ok);
  }
  {  // closed-form cut measures
    auto kv = make_open_knot_vector(dyadic_breakpoints(4), 2, 1);
    TensorSplineSpace space(kv, kv);
    TrimRegion region(DiskParam{Vec2(0, 0), 0.76, true});
    double kept = 0, len = 0;
    GeometryMap id;
    for (int cy = 0; cy < space.num_cells(1); ++cy)
      for (int cx = 0; cx < space.num_cells(0); ++cx) {
        kept += cut_cell_quadrature(space.cell_rect({cx, cy}), region, 4).weight_sum();
        for (const auto& f : trim_boundary_rule(space.cell_rect({cx, cy}), region, id, 4))
          len += f.w;
      }
    check("disk area closed form",
          std::abs(kept - (1.0 - M_PI * 0.76 * 0.76 / 4.0)) < 1e-6);
    check("arc length closed form", std::abs(len - M_PI / 2.0 * 0.76) < 1e-6);
  }
  {  // normal signs
    GeometryMap id;
    auto kv = make_open_knot_vector(dyadic_breakpoints(4), 2, 1);
    TensorSplineSpace space(kv, kv);
    std::vector<TrimRegion> regions;
    regions.emplace_back(HalfPlaneParam{1, 0.757, true});
    regions.emplace_back(DiskParam{Vec2(0, 0), 0.76, true});
    regions.emplace_back(RotatedRectKeepPhysical{Vec2(0.485, 0.5), Vec2(0.295, 0.28), 0.45});
    bool ok = true;
    for (const auto& region : regions) {
      int n = 0;
      for (int cy = 0; cy < space.num_cells(1) && n < 50; ++cy)
        for (int cx = 0; cx < space.num_cells(0) && n < 50; ++cx)
          for (const auto& f : trim_boundary_rule(space.cell_rect({cx, cy}), region, id, 3)) {
            ok = ok && !region.inside(f.x + 1e-6 * f.normal) &&
                 region.inside(f.x - 1e-6 * f.normal);
            ++n;
          }
    }
    check("trim normals outward", ok);
  }
  {  // geometry Jacobians vs finite differences
    bool ok = true;
    for (GeometryMap map : {quarter_annulus(), c0_quarter_annulus()}) {
      for (int t = 0; t < 50; ++t) {
        Vec2 x(0.01 + 0.98 * uni(rng), 0.01 + 0.98 * uni(rng));
        if (std::abs(x.x() - 0.75) < 1e-5) continue;
        const double h = 1e-6;
        MapSample s = map.eval(x);
        Mat2 fd;
        fd.col(0) = (map.eval(x + Vec2(h, 0)).x - map.eval(x - Vec2(h, 0)).x) / (2 * h);
        fd.col(1) = (map.eval(x + Vec2(0, h)).x - map.eval(x - Vec2(0, h)).x) / (2 * h);
        ok = ok && (s.J - fd).cwiseAbs().maxCoeff() < 1e-5;
      }
    }
    check("geometry jacobian vs finite differences", ok);
  }
  {  // manufactured solutions: -lap u == f
    bool ok = true;
    for (const char* name : {"exp_sin", "sin_sin", "poly_q2", "poly_q3", "lshape_singular"}) {
      ManufacturedSolution s = get_solution(name);
      for (int t = 0; t < 100; ++t) {
        Vec2 x(0.1 + 0.8 * uni(rng), 0.1 + 0.8 * uni(rng));
        ok = ok && solution_fd_mismatch(s, x, 1e-4) < 1e-5;
      }
    }
    check("manufactured solution consistency", ok);
  }
  {  // rate computation identity
    std::vector<double> hs, errs;
    for (int l = 2; l <= 6; ++l) {
      hs.push_back(std::pow(0.5, l));
      errs.push_back(3.7 * std::pow(hs.back(), 2.5));
    }
    auto r = convergence_rates(hs, errs);
    bool ok = true;
    for (std::size_t i = 1; i < r.size(); ++i) ok = ok && std::abs(r[i] - 2.5) < 1e-12;
    check("rate computation", ok);
  }
  {  // theta monotonicity
    auto kv = make_open_knot_vector(dyadic_breakpoints(4), 2, 1);
    TensorSplineSpace space(kv, kv);
    GeometryMap id;
    TrimRegion region(DiskParam{Vec2(0, 0), 0.76, true});
    TrimmedMesh lo(space, id, region, 0.2, 4), hi(space, id, region, 0.8, 4);
    bool ok = true;
    for (int i = 0; i < space.num_cells(); ++i)
      if (lo.cell(i).label == CellLabel::CutBad)
        ok = ok && hi.cell(i).label == CellLabel::CutBad;
    check("theta classification monotonicity", ok);
  }
  {  // gen-eig and condition-number oracles
    std::normal_distribution<double> gauss;
    const int n = 40;
    Eigen::MatrixXd R(n, n), S(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        R(i, j) = gauss(rng);
        S(i, j) = gauss(rng);
      }
    Eigen::MatrixXd A = R * R.transpose() + Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd B = S * S.transpose() + Eigen::MatrixXd::Identity(n, n);
    auto [lmin, lmax] = gen_eig_extremes(A, B);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B);
    const double rmin = ges.eigenvalues().minCoeff(), rmax = ges.eigenvalues().maxCoeff();
    bool ok = std::abs(lmin - rmin) < 1e-8 * rmax && std::abs(lmax - rmax) < 1e-8 * rmax;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const double ksvd = svd.singularValues().maxCoeff() / svd.singularValues().minCoeff();
    ok = ok && std::abs(condition_number(A, false) - ksvd) < 1e-8 * ksvd;
    check("dense eigen oracles", ok);
  }
  return failed == 0;
}

}  // namespace trimiga

#endif
