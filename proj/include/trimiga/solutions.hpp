#ifndef TRIMIGA_SOLUTIONS_HPP
#define TRIMIGA_SOLUTIONS_HPP

#include <cmath>
#include <string>

#include "trimiga/assembly.hpp"

namespace trimiga {

/// Manufactured solution: u, its gradient, and the matching source f = -lap u.
struct ManufacturedSolution {
  std::string name;
  ScalarField u;
  std::function<Vec2(const Vec2&)> grad;
  ScalarField f;
};

namespace detail {

// fixed generic polynomial of degree p in one variable and its derivatives
inline double poly1(int p, int der, double x) {
  static const double coef[4][5] = {
      {0.0, 0.0, 0.0, 0.0, 0.0},
      {0.7, -1.3, 0.0, 0.0, 0.0},
      {0.4, 0.9, -1.1, 0.0, 0.0},
      {-0.2, 0.8, 1.4, -0.9, 0.0},
  };
  double v = 0.0;
  for (int k = p; k >= der; --k) {
    double c = coef[p][k];
    for (int d = 0; d < der; ++d) c *= (k - d);
    v = v * x + c;
  }
  return v;
}

}  // namespace detail

inline ManufacturedSolution get_solution(const std::string& name) {
  ManufacturedSolution s;
  s.name = name;
  if (name == "zero") {
    s.u = [](const Vec2&) { return 0.0; };
    s.grad = [](const Vec2&) { return Vec2::Zero(); };
    s.f = [](const Vec2&) { return 0.0; };
    return s;
  }
  if (name == "exp_sin") {
    // u = e^x sin(xy)
    s.u = [](const Vec2& x) { return std::exp(x.x()) * std::sin(x.x() * x.y()); };
    s.grad = [](const Vec2& x) {
      const double ex = std::exp(x.x());
      const double sn = std::sin(x.x() * x.y()), cs = std::cos(x.x() * x.y());
      return Vec2(ex * (sn + x.y() * cs), ex * x.x() * cs);
    };
    s.f = [](const Vec2& x) {
      const double ex = std::exp(x.x());
      const double sn = std::sin(x.x() * x.y()), cs = std::cos(x.x() * x.y());
      return -ex * ((1.0 - x.x() * x.x() - x.y() * x.y()) * sn + 2.0 * x.y() * cs);
    };
    return s;
  }
  if (name == "lshape_singular") {
    // r^(2/3) sin(2 phi / 3), phi counterclockwise from the positive x-axis,
    // branch cut through the middle of the removed quadrant
    auto angle = [](const Vec2& x) {
      double phi = std::atan2(x.y(), x.x());
      if (phi < -M_PI / 4.0) phi += 2.0 * M_PI;
      return phi;
    };
    s.u = [angle](const Vec2& x) {
      const double r = x.norm();
      if (r < 1e-14) return 0.0;
      return std::pow(r, 2.0 / 3.0) * std::sin(2.0 * angle(x) / 3.0);
    };
    s.grad = [angle](const Vec2& x) {
      const double r = x.norm();
      if (r < 1e-14) return Vec2::Zero().eval();
      const double phi = angle(x);
      const double c = 2.0 / 3.0 * std::pow(r, -1.0 / 3.0);
      return Vec2(-c * std::sin(phi / 3.0), c * std::cos(phi / 3.0));
    };
    s.f = [](const Vec2&) { return 0.0; };  // harmonic
    return s;
  }
  if (name == "sin_sin") {
    s.u = [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); };
    s.grad = [](const Vec2& x) {
      return Vec2(M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()),
                  M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()));
    };
    s.f = [](const Vec2& x) {
      return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
    };
    return s;
  }
  if (name == "poly_q1" || name == "poly_q2" || name == "poly_q3") {
    const int p = name.back() - '0';
    s.u = [p](const Vec2& x) { return detail::poly1(p, 0, x.x()) * detail::poly1(p, 0, x.y()); };
    s.grad = [p](const Vec2& x) {
      return Vec2(detail::poly1(p, 1, x.x()) * detail::poly1(p, 0, x.y()),
                  detail::poly1(p, 0, x.x()) * detail::poly1(p, 1, x.y()));
    };
    s.f = [p](const Vec2& x) {
      return -(detail::poly1(p, 2, x.x()) * detail::poly1(p, 0, x.y()) +
               detail::poly1(p, 0, x.x()) * detail::poly1(p, 2, x.y()));
    };
    return s;
  }
  throw config_error("unknown manufactured solution: " + name);
}

/// Spot-check -lap u = f by five-point finite differences.
inline double solution_fd_mismatch(const ManufacturedSolution& s, const Vec2& x, double h) {
  const double lap = (s.u(x + Vec2(h, 0)) + s.u(x - Vec2(h, 0)) + s.u(x + Vec2(0, h)) +
                      s.u(x - Vec2(0, h)) - 4.0 * s.u(x)) /
                     (h * h);
  const double f = s.f(x);
  return std::abs(-lap - f) / std::max(1.0, std::abs(f));
}

}  // namespace trimiga

#endif
