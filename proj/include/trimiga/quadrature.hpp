#ifndef TRIMIGA_QUADRATURE_HPP
#define TRIMIGA_QUADRATURE_HPP

#include <cmath>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "trimiga/core.hpp"

namespace trimiga {

/// Nodes/weights on a reference interval.
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

namespace detail {

// Gauss-Legendre nodes on [-1,1] by Newton iteration on P_n; weights
// 2 / ((1-x^2) P_n'(x)^2).
inline Rule1D compute_gauss_legendre(int n) {
  Rule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (n == 1) p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double pn = (n == 1) ? x : p1;
      double pm = (n == 1) ? 1.0 : p0;
      dp = n * (x * pn - pm) / (x * x - 1.0);
      double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.points[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1,1], cached per order.
inline const Rule1D& gauss_legendre(int n) {
  if (n < 1) throw numerical_error("gauss_legendre: order must be >= 1");
  static std::mutex mtx;
  static std::unordered_map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

/// Gauss-Legendre rule mapped to [a,b].
inline Rule1D gauss_legendre_on(int n, double a, double b) {
  const Rule1D& ref = gauss_legendre(n);
  Rule1D out;
  out.points.resize(ref.size());
  out.weights.resize(ref.size());
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out.points[i] = mid + half * ref.points[i];
    out.weights[i] = half * ref.weights[i];
  }
  return out;
}

/// A 2D rule: parametric points with weights (parametric measure).
struct Rule2D {
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  void append(const Rule2D& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
  }
};

/// Tensor Gauss-Legendre rule on an axis-aligned rectangle.
inline Rule2D tensor_rule(int nx, int ny, double x0, double x1, double y0, double y1) {
  Rule1D rx = gauss_legendre_on(nx, x0, x1);
  Rule1D ry = gauss_legendre_on(ny, y0, y1);
  Rule2D out;
  out.points.reserve(rx.size() * ry.size());
  out.weights.reserve(rx.size() * ry.size());
  for (std::size_t j = 0; j < ry.size(); ++j)
    for (std::size_t i = 0; i < rx.size(); ++i) {
      out.points.emplace_back(rx.points[i], ry.points[j]);
      out.weights.push_back(rx.weights[i] * ry.weights[j]);
    }
  return out;
}

}  // namespace trimiga

#endif
