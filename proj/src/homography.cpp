#include "occflow/homography.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace occflow {

namespace {
constexpr double kHomogeneousEps = 1e-12;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

Homography Homography::rigid(double deg, double tx, double ty, double pivot_x,
                             double pivot_y) {
  const double rad = deg * kPi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  Homography h;
  h.m << c, -s, pivot_x + tx - c * pivot_x + s * pivot_y,
         s,  c, pivot_y + ty - s * pivot_x - c * pivot_y,
         0,  0, 1;
  return h;
}

Homography Homography::inverse() const {
  if (!is_invertible()) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "homography is not invertible");
  }
  Homography inv;
  inv.m = m.inverse();
  return normalized(inv);
}

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& p) const {
  Eigen::Vector2d out;
  if (!try_apply(p, out)) {
    throw Error(ErrorCode::ProjectiveDivideByZero,
                "point (" + std::to_string(p.x()) + "," + std::to_string(p.y()) +
                    ") maps to the line at infinity");
  }
  return out;
}

bool Homography::try_apply(const Eigen::Vector2d& p, Eigen::Vector2d& out) const {
  const double w = m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
  if (std::abs(w) < kHomogeneousEps) return false;
  out.x() = (m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2)) / w;
  out.y() = (m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2)) / w;
  return true;
}

Homography normalized(const Homography& h) {
  Homography out = h;
  if (std::abs(out.m(2, 2)) > kHomogeneousEps) {
    out.m /= out.m(2, 2);
  }
  return out;
}

Homography compose(const Homography& h, unsigned k) {
  Homography out;  // identity
  for (unsigned i = 0; i < k; ++i) {
    out.m = out.m * h.m;
  }
  return normalized(out);
}

double symmetric_transfer_error(const Homography& h,
                                const Eigen::Vector2d& src,
                                const Eigen::Vector2d& dst) {
  Eigen::Vector2d fwd, bwd;
  const Homography inv = h.inverse();
  if (!h.try_apply(src, fwd) || !inv.try_apply(dst, bwd)) {
    return std::numeric_limits<double>::infinity();
  }
  return 0.5 * ((fwd - dst).norm() + (bwd - src).norm());
}

double mean_transfer_discrepancy(const Homography& a, const Homography& b,
                                 const std::vector<Eigen::Vector2d>& points) {
  if (points.empty()) return 0.0;
  const Homography a_inv = a.inverse();
  const Homography b_inv = b.inverse();
  double total = 0.0;
  for (const auto& p : points) {
    Eigen::Vector2d fa, fb, ra, rb;
    if (!a.try_apply(p, fa) || !b.try_apply(p, fb) || !a_inv.try_apply(p, ra) ||
        !b_inv.try_apply(p, rb)) {
      return std::numeric_limits<double>::infinity();
    }
    total += 0.5 * ((fa - fb).norm() + (ra - rb).norm());
  }
  return total / static_cast<double>(points.size());
}

}  // namespace occflow
