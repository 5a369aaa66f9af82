#include "bevstream/geometry.hpp"

#include <cmath>
#include <numbers>

#include "bevstream/error.hpp"

namespace bevstream {

double normalize_angle(double radians) {
  constexpr double kPi = std::numbers::pi;
  double a = std::remainder(radians, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Pose2::Pose2(double x, double y, double yaw) : x_(x), y_(y), yaw_(normalize_angle(yaw)) {}

std::array<double, 2> Pose2::apply(double px, double py) const {
  const double c = std::cos(yaw_);
  const double s = std::sin(yaw_);
  return {x_ + c * px - s * py, y_ + s * px + c * py};
}

Pose2 pose_compose(const Pose2& a, const Pose2& b) {
  const auto t = a.apply(b.x(), b.y());
  return {t[0], t[1], a.yaw() + b.yaw()};
}

Pose2 pose_inverse(const Pose2& p) {
  const double c = std::cos(p.yaw());
  const double s = std::sin(p.yaw());
  // -R^T t
  return {-(c * p.x() + s * p.y()), -(-s * p.x() + c * p.y()), -p.yaw()};
}

void GridGeometry::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::kInvalidGeometry, "resolution must be positive");
  }
  if (height == 0 || width == 0) {
    throw Error(ErrorCode::kInvalidGeometry, "grid must have at least one cell");
  }
}

std::array<double, 2> GridGeometry::ego_to_cell(double x, double y) const {
  return {center_col() + x / resolution, center_row() + y / resolution};
}

std::array<double, 2> GridGeometry::cell_to_ego(double col, double row) const {
  return {(col - center_col()) * resolution, (row - center_row()) * resolution};
}

GridTransform GridTransform::translation(double dcol, double drow) {
  return {{1.0, 0.0, dcol, 0.0, 1.0, drow}};
}

std::array<double, 2> GridTransform::apply(double col, double row) const {
  return {m[0] * col + m[1] * row + m[2], m[3] * col + m[4] * row + m[5]};
}

bool GridTransform::is_identity() const {
  return m[0] == 1.0 && m[1] == 0.0 && m[2] == 0.0 && m[3] == 0.0 && m[4] == 1.0 && m[5] == 0.0;
}

namespace {
constexpr double kIntegerTolerance = 1e-9;

bool near_integer(double v) { return std::abs(v - std::round(v)) <= kIntegerTolerance; }
}  // namespace

bool GridTransform::is_integer_translation() const {
  return std::abs(m[0] - 1.0) <= kIntegerTolerance && std::abs(m[1]) <= kIntegerTolerance &&
         std::abs(m[3]) <= kIntegerTolerance && std::abs(m[4] - 1.0) <= kIntegerTolerance &&
         near_integer(m[2]) && near_integer(m[5]);
}

std::array<long, 2> GridTransform::integer_offset() const {
  return {std::lround(m[2]), std::lround(m[5])};
}

GridTransform compose(const GridTransform& t_ij, const GridTransform& t_jk) {
  const auto& a = t_jk.m;
  const auto& b = t_ij.m;
  return {{a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4], a[0] * b[2] + a[1] * b[5] + a[2],
           a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]}};
}

GridTransform relative_transform(const Pose2& dst_pose, const Pose2& src_pose,
                                 const GridGeometry& geometry) {
  geometry.validate();
  if (dst_pose.x() == src_pose.x() && dst_pose.y() == src_pose.y() &&
      dst_pose.yaw() == src_pose.yaw()) {
    return GridTransform::identity();
  }
  // dst ego -> world -> src ego
  const Pose2 rel = pose_compose(pose_inverse(src_pose), dst_pose);
  const double c = std::cos(rel.yaw());
  const double s = std::sin(rel.yaw());
  const double cc = geometry.center_col();
  const double cr = geometry.center_row();
  // cell_s = center + R (cell_d - center) + t / res
  return {{c, -s, cc - (c * cc - s * cr) + rel.x() / geometry.resolution,
           s, c, cr - (s * cc + c * cr) + rel.y() / geometry.resolution}};
}

}  // namespace bevstream
