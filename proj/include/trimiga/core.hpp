#ifndef TRIMIGA_CORE_HPP
#define TRIMIGA_CORE_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace trimiga {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Raised when an input file / config is malformed (CLI exit code 2).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a solver, factorization or quadrature construction fails
/// (CLI exit code 3).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a trim configuration falls outside the supported cut
/// topologies (more than 2 crossings per cell edge, several curve branches
/// in one cell, bad element without good neighbor).
struct tiling_error : numerical_error {
  using numerical_error::numerical_error;
};

inline Vec2 rotate90_ccw(const Vec2& v) { return Vec2(-v.y(), v.x()); }
inline Vec2 rotate90_cw(const Vec2& v) { return Vec2(v.y(), -v.x()); }

}  // namespace trimiga

#endif
