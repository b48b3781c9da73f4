#ifndef TRIMIGA_KNOTS_HPP
#define TRIMIGA_KNOTS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "trimiga/core.hpp"

namespace trimiga {

/// p-open knot vector on [0,1].
class KnotVector {
 public:
  KnotVector() = default;
  KnotVector(int degree, std::vector<double> knots)
      : degree_(degree), knots_(std::move(knots)) {
    validate();
  }

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }

  /// Number of basis functions (Curry-Schoenberg: #knots - p - 1).
  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

  /// Breakpoints: knots without repetition.
  std::vector<double> breakpoints() const {
    std::vector<double> z;
    for (double k : knots_)
      if (z.empty() || k > z.back()) z.push_back(k);
    return z;
  }

  /// Multiplicity of each breakpoint, aligned with breakpoints().
  std::vector<int> multiplicities() const {
    std::vector<double> z = breakpoints();
    std::vector<int> m(z.size(), 0);
    std::size_t j = 0;
    for (double k : knots_) {
      while (k > z[j]) ++j;
      ++m[j];
    }
    return m;
  }

  int num_elements() const { return static_cast<int>(breakpoints().size()) - 1; }

  /// Knot-array index i of the span [xi_i, xi_{i+1}) containing element j.
  int element_span(int elem) const {
    std::vector<double> z = breakpoints();
    double left = z[elem];
    // first knot equal to left, then step to its last occurrence
    auto it = std::lower_bound(knots_.begin(), knots_.end(), left);
    int i = static_cast<int>(it - knots_.begin());
    while (i + 1 < static_cast<int>(knots_.size()) && knots_[i + 1] <= left) ++i;
    return i;
  }

 private:
  void validate() const {
    const int p = degree_;
    const int total = static_cast<int>(knots_.size());
    if (p < 1) throw config_error("KnotVector: degree must be >= 1");
    if (total < 2 * (p + 1)) throw config_error("KnotVector: too few knots");
    if (!std::is_sorted(knots_.begin(), knots_.end()))
      throw config_error("KnotVector: knots must be nondecreasing");
    if (knots_.front() != 0.0 || knots_.back() != 1.0)
      throw config_error("KnotVector: knots must span [0,1]");
    for (int i = 0; i <= p; ++i) {
      if (knots_[i] != 0.0 || knots_[total - 1 - i] != 1.0)
        throw config_error("KnotVector: knot vector must be p-open");
    }
    // internal multiplicities <= p
    int run = 1;
    for (int i = p + 1; i < total - p - 1; ++i) {
      run = (knots_[i] == knots_[i - 1]) ? run + 1 : 1;
      if (run > p) throw config_error("KnotVector: internal multiplicity exceeds degree");
    }
  }

  int degree_ = 0;
  std::vector<double> knots_;
};

/// Open knot vector with uniform internal continuity k (multiplicity p-k).
inline KnotVector make_open_knot_vector(std::span<const double> breakpoints, int degree,
                                        int continuity) {
  const int p = degree;
  if (p < 1) throw config_error("make_open_knot_vector: degree must be >= 1");
  if (continuity < 0 || continuity > p - 1)
    throw config_error("make_open_knot_vector: continuity must be in [0, p-1]");
  if (breakpoints.size() < 2 || breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
    throw config_error("make_open_knot_vector: breakpoints must start at 0 and end at 1");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i] > breakpoints[i - 1]))
      throw config_error("make_open_knot_vector: breakpoints must be strictly increasing");

  const int mult = p - continuity;
  std::vector<double> knots(p + 1, 0.0);
  for (std::size_t i = 1; i + 1 < breakpoints.size(); ++i)
    knots.insert(knots.end(), mult, breakpoints[i]);
  knots.insert(knots.end(), p + 1, 1.0);
  return KnotVector(p, std::move(knots));
}

/// Open knot vector with per-internal-breakpoint continuity.
inline KnotVector make_open_knot_vector(std::span<const double> breakpoints, int degree,
                                        std::span<const int> continuity) {
  const int p = degree;
  if (continuity.size() + 2 != breakpoints.size())
    throw config_error("make_open_knot_vector: one continuity per internal breakpoint");
  std::vector<double> knots(p + 1, 0.0);
  for (std::size_t i = 1; i + 1 < breakpoints.size(); ++i) {
    const int k = continuity[i - 1];
    if (k < 0 || k > p - 1)
      throw config_error("make_open_knot_vector: continuity must be in [0, p-1]");
    knots.insert(knots.end(), p - k, breakpoints[i]);
  }
  knots.insert(knots.end(), p + 1, 1.0);
  return KnotVector(p, std::move(knots));
}

/// Uniform dyadic breakpoints 0, h, 2h, ..., 1 with h = 2^-level.
inline std::vector<double> dyadic_breakpoints(int level) {
  const int n = 1 << level;
  std::vector<double> z(n + 1);
  for (int i = 0; i <= n; ++i) z[i] = static_cast<double>(i) / n;
  z.back() = 1.0;
  return z;
}

/// Index i with knots[i] <= x < knots[i+1]; right-continuous, x=1 maps to the
/// last nonempty span.
inline int find_span(const KnotVector& kv, double x) {
  const auto& xi = kv.knots();
  const int p = kv.degree();
  const int n = kv.num_basis();
  if (x < 0.0 || x > 1.0) throw config_error("find_span: x outside [0,1]");
  if (x >= 1.0) {
    int i = n - 1;
    while (xi[i] >= xi[i + 1]) --i;  // cannot underflow: span [xi_p, ...) nonempty
    return i;
  }
  auto it = std::upper_bound(xi.begin() + p, xi.begin() + n + 1, x);
  return static_cast<int>(it - xi.begin()) - 1;
}

/// Nonzero basis values and derivatives at x.
struct BasisTable {
  int first = 0;           ///< index of the first nonzero basis function
  Eigen::MatrixXd ders;    ///< (max_order+1) x (p+1); row d = d-th derivatives
  double value(int local) const { return ders(0, local); }
};

/// Cox-de Boor values + derivatives up to max_order (NURBS-book DersBasisFuns).
inline BasisTable eval_basis(const KnotVector& kv, double x, int max_order) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  const int span = find_span(kv, x);
  const int nd = std::min(max_order, p);

  Eigen::MatrixXd ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - U[span + 1 - j];
    right[j] = U[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  BasisTable out;
  out.first = span - p;
  out.ders = Eigen::MatrixXd::Zero(max_order + 1, p + 1);
  for (int j = 0; j <= p; ++j) out.ders(0, j) = ndu(j, p);

  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      int rk = r - k, pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      int j1 = (rk >= -1) ? 1 : -rk;
      int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      out.ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double r = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) out.ders(k, j) *= r;
    r *= (p - k);
  }
  return out;
}

/// Boehm single-knot insertion; the returned spline is pointwise identical.
inline std::pair<KnotVector, Eigen::VectorXd> insert_knot(const KnotVector& kv,
                                                          const Eigen::VectorXd& coeffs,
                                                          double xbar) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  const int n = kv.num_basis();
  if (coeffs.size() != n) throw config_error("insert_knot: coefficient count mismatch");
  if (!(xbar > 0.0 && xbar < 1.0)) throw config_error("insert_knot: knot must be in (0,1)");
  // internal multiplicities stay <= p (KnotVector invariant)
  const int mult = static_cast<int>(std::count(U.begin(), U.end(), xbar));
  if (mult >= p) throw config_error("insert_knot: multiplicity overflow");

  const int k = find_span(kv, xbar);
  std::vector<double> newU(U.begin(), U.end());
  newU.insert(newU.begin() + k + 1, xbar);

  Eigen::VectorXd q(n + 1);
  for (int i = 0; i <= k - p; ++i) q(i) = coeffs(i);
  for (int i = k - p + 1; i <= k; ++i) {
    double denom = U[i + p] - U[i];
    double alpha = (denom > 0.0) ? (xbar - U[i]) / denom : 0.0;
    q(i) = alpha * coeffs(i) + (1.0 - alpha) * coeffs(i - 1);
  }
  for (int i = k + 1; i <= n; ++i) q(i) = coeffs(i - 1);
  return {KnotVector(p, std::move(newU)), std::move(q)};
}

/// Greville abscissae (knot averages).
inline std::vector<double> greville_abscissae(const KnotVector& kv) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  std::vector<double> g(kv.num_basis());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int j = 1; j <= p; ++j) s += U[i + j];
    g[i] = s / p;
  }
  return g;
}

/// Evaluate a univariate spline (value only) at x.
inline double spline_value(const KnotVector& kv, const Eigen::VectorXd& coeffs, double x) {
  BasisTable t = eval_basis(kv, x, 0);
  double v = 0.0;
  for (int j = 0; j <= kv.degree(); ++j) v += coeffs(t.first + j) * t.ders(0, j);
  return v;
}

}  // namespace trimiga

#endif
