#pragma once

#include <array>
#include <cstddef>

namespace bevstream {

/// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

/// Planar rigid pose of the ego frame expressed in the world frame.
/// Yaw is normalized on construction.
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double yaw);

  static Pose2 identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double yaw() const { return yaw_; }

  /// Maps a point given in this pose's local frame into the parent frame.
  std::array<double, 2> apply(double px, double py) const;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double yaw_ = 0.0;
};

/// Rigid motion "apply b, then a".
Pose2 pose_compose(const Pose2& a, const Pose2& b);
Pose2 pose_inverse(const Pose2& p);

/// Square-cell BEV raster. The ego origin sits at cell ((W-1)/2, (H-1)/2);
/// ego +x runs along increasing column, ego +y along increasing row.
struct GridGeometry {
  std::size_t height = 128;
  std::size_t width = 128;
  double resolution = 0.8;  // meters per cell

  double center_col() const { return (static_cast<double>(width) - 1.0) / 2.0; }
  double center_row() const { return (static_cast<double>(height) - 1.0) / 2.0; }

  /// Throws ErrorCode::kInvalidGeometry unless resolution > 0 and both sizes are positive.
  void validate() const;

  std::array<double, 2> ego_to_cell(double x, double y) const;
  std::array<double, 2> cell_to_ego(double col, double row) const;

  bool operator==(const GridGeometry&) const = default;
};

/// Affine map from destination-grid cell coordinates (col, row) to
/// source-grid cell coordinates:
///   [col_s]   [a00 a01] [col_d]   [b0]
///   [row_s] = [a10 a11] [row_d] + [b1]
struct GridTransform {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};  // row-major 2x3

  static GridTransform identity() { return {}; }
  static GridTransform translation(double dcol, double drow);

  std::array<double, 2> apply(double col, double row) const;

  bool is_identity() const;
  /// True when the linear part is the identity and the offset is integral
  /// (within 1e-9 cells).
  bool is_integer_translation() const;
  /// Integral (dcol, drow) offsets; only meaningful when is_integer_translation().
  std::array<long, 2> integer_offset() const;
};

/// compose(t_ij, t_jk) maps i-cells to k-cells: it applies t_ij first and
/// t_jk to the result.
GridTransform compose(const GridTransform& t_ij, const GridTransform& t_jk);

/// Transform that resamples a grid rendered at src_pose into the ego frame
/// of dst_pose: destination cell -> source cell of the same world point.
GridTransform relative_transform(const Pose2& dst_pose, const Pose2& src_pose,
                                 const GridGeometry& geometry);

}  // namespace bevstream
