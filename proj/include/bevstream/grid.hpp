#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bevstream/geometry.hpp"

namespace bevstream {

/// Dense C x H x W feature map, channel-major (plane by plane, row-major
/// inside each plane).
class FeatureGrid {
 public:
  FeatureGrid() = default;
  /// Zero-filled grid.
  FeatureGrid(std::size_t channels, const GridGeometry& geometry);
  FeatureGrid(std::size_t channels, const GridGeometry& geometry, std::vector<double> data);

  static FeatureGrid zeros_like(const FeatureGrid& other) {
    return FeatureGrid(other.channels(), other.geometry());
  }

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return geometry_.height; }
  std::size_t width() const { return geometry_.width; }
  double resolution() const { return geometry_.resolution; }
  const GridGeometry& geometry() const { return geometry_; }
  std::size_t plane_size() const { return geometry_.height * geometry_.width; }
  std::size_t size() const { return data_.size(); }
  std::size_t byte_size() const { return data_.size() * sizeof(double); }

  double& at(std::size_t c, std::size_t row, std::size_t col) {
    return data_[(c * geometry_.height + row) * geometry_.width + col];
  }
  double at(std::size_t c, std::size_t row, std::size_t col) const {
    return data_[(c * geometry_.height + row) * geometry_.width + col];
  }

  std::span<double> plane(std::size_t c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(std::size_t c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const FeatureGrid& other) const {
    return channels_ == other.channels_ && geometry_ == other.geometry_;
  }
  bool all_finite() const;

  FeatureGrid& operator+=(const FeatureGrid& other);
  FeatureGrid& operator*=(double scale);

 private:
  std::size_t channels_ = 0;
  GridGeometry geometry_{};
  std::vector<double> data_;
};

FeatureGrid operator+(FeatureGrid a, const FeatureGrid& b);
FeatureGrid operator-(FeatureGrid a, const FeatureGrid& b);
FeatureGrid operator*(double s, FeatureGrid a);

/// Convolution weights laid out [out][in][kh][kw].
class ConvKernel {
 public:
  ConvKernel() = default;
  /// Zero-filled kernel.
  ConvKernel(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
             std::size_t kernel_w);
  ConvKernel(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
             std::size_t kernel_w, std::vector<double> weights);

  /// out == in, centre tap = scale on the diagonal.
  static ConvKernel identity(std::size_t channels, std::size_t kernel_size = 1, double scale = 1.0);

  std::size_t out_channels() const { return out_; }
  std::size_t in_channels() const { return in_; }
  std::size_t kernel_h() const { return kh_; }
  std::size_t kernel_w() const { return kw_; }
  std::size_t radius_h() const { return kh_ / 2; }
  std::size_t radius_w() const { return kw_ / 2; }
  std::size_t parameter_count() const { return weights_.size(); }

  double& at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) {
    return weights_[((o * in_ + i) * kh_ + dy) * kw_ + dx];
  }
  double at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) const {
    return weights_[((o * in_ + i) * kh_ + dy) * kw_ + dx];
  }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }

  bool same_shape(const ConvKernel& other) const {
    return out_ == other.out_ && in_ == other.in_ && kh_ == other.kh_ && kw_ == other.kw_;
  }

  ConvKernel& operator+=(const ConvKernel& other);
  ConvKernel& operator*=(double scale);

 private:
  std::size_t out_ = 0;
  std::size_t in_ = 0;
  std::size_t kh_ = 0;
  std::size_t kw_ = 0;
  std::vector<double> weights_;
};

enum class Activation { kIdentity, kRelu, kTanh };

/// Same-size correlation with zero padding and stride 1.
FeatureGrid conv2d(const FeatureGrid& input, const ConvKernel& kernel,
                   Activation activation = Activation::kIdentity);

void apply_activation(FeatureGrid& grid, Activation activation);

/// Stacks b's planes after a's.
FeatureGrid channel_concat(const FeatureGrid& a, const FeatureGrid& b);
FeatureGrid channel_concat(std::span<const FeatureGrid> parts);
FeatureGrid channel_slice(const FeatureGrid& grid, std::size_t first, std::size_t count);

/// Splits the input-channel axis into `parts` equal chunks.
std::vector<ConvKernel> channel_split(const ConvKernel& kernel, std::size_t parts);
/// Inverse of channel_split: stacks chunks along the input-channel axis.
ConvKernel kernel_concat(std::span<const ConvKernel> chunks);

/// Bilinear resampling: output(c, dst) = src(c, t(dst)). Taps that fall
/// outside the source contribute zero. Zero-weight taps are skipped so any
/// integer translation (including identity) reproduces the source bits.
FeatureGrid grid_sample(const FeatureGrid& src, const GridTransform& t);

FeatureGrid all_ones(const GridGeometry& geometry, std::size_t channels, double scale);

/// Max |a - b| over cells at least `margin` cells from every border.
double max_abs_diff_interior(const FeatureGrid& a, const FeatureGrid& b, std::size_t margin);
double max_abs_diff(const FeatureGrid& a, const FeatureGrid& b);
/// Mean of one channel over the interior region.
double interior_mean(const FeatureGrid& grid, std::size_t channel, std::size_t margin);

}  // namespace bevstream
