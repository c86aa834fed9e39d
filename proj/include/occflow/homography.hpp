#ifndef OCCFLOW_HOMOGRAPHY_HPP
#define OCCFLOW_HOMOGRAPHY_HPP

#include <vector>

#include <Eigen/Dense>

#include "occflow/errors.hpp"

namespace occflow {

// 3x3 projective transform over BEV cell coordinates, normalized so
// m(2,2) = 1 after estimation. Must stay invertible.
struct Homography {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  static Homography identity() { return Homography{}; }

  static Homography translation(double dx, double dy) {
    Homography h;
    h.m(0, 2) = dx;
    h.m(1, 2) = dy;
    return h;
  }

  // Rigid transform about a pivot: p' = R(deg) (p - pivot) + pivot + t.
  static Homography rigid(double deg, double tx, double ty, double pivot_x,
                          double pivot_y);

  bool is_finite() const { return m.allFinite(); }
  bool is_invertible() const {
    return is_finite() && std::abs(m.determinant()) > 1e-12;
  }

  Homography inverse() const;

  // Applies the transform with perspective division. Throws
  // ProjectiveDivideByZero when the point maps to the line at infinity.
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;

  // Same, but reports failure instead of throwing (hot loops).
  bool try_apply(const Eigen::Vector2d& p, Eigen::Vector2d& out) const;
};

// Scales so m(2,2) = 1 when possible; leaves the matrix untouched when
// that entry is numerically zero.
Homography normalized(const Homography& h);

// k-th matrix power (k >= 0), renormalized. Realizes constant-velocity
// extrapolation: the one-step transform applied k times.
Homography compose(const Homography& h, unsigned k);

// Mean of forward and backward transfer distances for one point pair.
double symmetric_transfer_error(const Homography& h,
                                const Eigen::Vector2d& src,
                                const Eigen::Vector2d& dst);

// Mean symmetric transfer discrepancy between two transforms, averaged
// over a point set (e.g. every cell center of a map).
double mean_transfer_discrepancy(const Homography& a, const Homography& b,
                                 const std::vector<Eigen::Vector2d>& points);

}  // namespace occflow

#endif  // OCCFLOW_HOMOGRAPHY_HPP
