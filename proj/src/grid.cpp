#include "bevstream/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "bevstream/error.hpp"

namespace bevstream {

namespace {

std::string dims(const FeatureGrid& g) {
  return std::to_string(g.channels()) + "x" + std::to_string(g.height()) + "x" +
         std::to_string(g.width());
}

void require_same_shape(const FeatureGrid& a, const FeatureGrid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kShape, std::string(what) + ": " + dims(a) + " vs " + dims(b));
  }
}

}  // namespace

FeatureGrid::FeatureGrid(std::size_t channels, const GridGeometry& geometry)
    : channels_(channels), geometry_(geometry) {
  geometry_.validate();
  data_.assign(channels * geometry.height * geometry.width, 0.0);
}

FeatureGrid::FeatureGrid(std::size_t channels, const GridGeometry& geometry,
                         std::vector<double> data)
    : channels_(channels), geometry_(geometry), data_(std::move(data)) {
  geometry_.validate();
  if (data_.size() != channels * geometry.height * geometry.width) {
    throw Error(ErrorCode::kShape, "grid data length does not match C*H*W");
  }
}

bool FeatureGrid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

FeatureGrid& FeatureGrid::operator+=(const FeatureGrid& other) {
  require_same_shape(*this, other, "grid add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

FeatureGrid& FeatureGrid::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

FeatureGrid operator+(FeatureGrid a, const FeatureGrid& b) { return a += b; }

FeatureGrid operator-(FeatureGrid a, const FeatureGrid& b) {
  require_same_shape(a, b, "grid subtract");
  auto out = a.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= in[i];
  return a;
}

FeatureGrid operator*(double s, FeatureGrid a) { return a *= s; }

ConvKernel::ConvKernel(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
                       std::size_t kernel_w)
    : ConvKernel(out_channels, in_channels, kernel_h, kernel_w,
                 std::vector<double>(out_channels * in_channels * kernel_h * kernel_w, 0.0)) {}

ConvKernel::ConvKernel(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
                       std::size_t kernel_w, std::vector<double> weights)
    : out_(out_channels), in_(in_channels), kh_(kernel_h), kw_(kernel_w),
      weights_(std::move(weights)) {
  if (weights_.size() != out_ * in_ * kh_ * kw_) {
    throw Error(ErrorCode::kShape, "kernel weight length does not match out*in*kh*kw");
  }
}

ConvKernel ConvKernel::identity(std::size_t channels, std::size_t kernel_size, double scale) {
  ConvKernel k(channels, channels, kernel_size, kernel_size);
  for (std::size_t c = 0; c < channels; ++c) k.at(c, c, kernel_size / 2, kernel_size / 2) = scale;
  return k;
}

ConvKernel& ConvKernel::operator+=(const ConvKernel& other) {
  if (!same_shape(other)) throw Error(ErrorCode::kShape, "kernel add: shape mismatch");
  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] += other.weights_[i];
  return *this;
}

ConvKernel& ConvKernel::operator*=(double scale) {
  for (double& w : weights_) w *= scale;
  return *this;
}

void apply_activation(FeatureGrid& grid, Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      for (double& v : grid.data()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::kTanh:
      for (double& v : grid.data()) v = std::tanh(v);
      return;
  }
}

// Each kernel tap is one GEMM over a zero-padded copy of the input. With
// the padded row pitch, a tap offset is a constant shift of the flat pixel
// index, so a whole tap reduces to Y += X[shift:shift+n] * W_tap. Output
// columns that land in the padding are discarded.
FeatureGrid conv2d(const FeatureGrid& input, const ConvKernel& kernel, Activation activation) {
  if (input.channels() != kernel.in_channels()) {
    throw Error(ErrorCode::kShape, "conv2d: input has " + std::to_string(input.channels()) +
                                       " channels, kernel expects " +
                                       std::to_string(kernel.in_channels()));
  }
  if (kernel.kernel_h() % 2 == 0 || kernel.kernel_w() % 2 == 0) {
    throw Error(ErrorCode::kUnsupportedKernel, "conv2d: kernel sizes must be odd");
  }

  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

  const auto h = static_cast<Eigen::Index>(input.height());
  const auto w = static_cast<Eigen::Index>(input.width());
  const auto rh = static_cast<Eigen::Index>(kernel.radius_h());
  const auto rw = static_cast<Eigen::Index>(kernel.radius_w());
  const auto kh = static_cast<Eigen::Index>(kernel.kernel_h());
  const auto kw = static_cast<Eigen::Index>(kernel.kernel_w());
  const auto cin = static_cast<Eigen::Index>(kernel.in_channels());
  const auto cout = static_cast<Eigen::Index>(kernel.out_channels());
  const Eigen::Index pitch = w + 2 * rw;
  const Eigen::Index rows_out = h * pitch;

  FeatureGrid output(kernel.out_channels(), input.geometry());
  if (cin == 0 || cout == 0) return output;

  const bool padded = rh > 0 || rw > 0;
  Matrix x_padded;
  if (padded) {
    x_padded = Matrix::Zero((h + 2 * rh) * pitch + 2 * rw, cin);
    for (Eigen::Index c = 0; c < cin; ++c) {
      const auto plane = input.plane(static_cast<std::size_t>(c));
      for (Eigen::Index y = 0; y < h; ++y) {
        std::copy_n(plane.data() + y * w, w, x_padded.col(c).data() + (y + rh) * pitch + rw);
      }
    }
  }
  const Eigen::Map<const Matrix> x_plain(input.data().data(), h * w, cin);

  Matrix y_out = Matrix::Zero(rows_out, cout);
  Matrix tap(cin, cout);
  for (Eigen::Index dy = 0; dy < kh; ++dy) {
    for (Eigen::Index dx = 0; dx < kw; ++dx) {
      bool nonzero = false;
      for (Eigen::Index o = 0; o < cout; ++o) {
        for (Eigen::Index i = 0; i < cin; ++i) {
          const double v = kernel.at(o, i, dy, dx);
          tap(i, o) = v;
          nonzero = nonzero || v != 0.0;
        }
      }
      if (!nonzero) continue;
      if (padded) {
        y_out.noalias() += x_padded.middleRows(dy * pitch + dx, rows_out) * tap;
      } else {
        y_out.noalias() += x_plain * tap;
      }
    }
  }

  for (Eigen::Index o = 0; o < cout; ++o) {
    auto plane = output.plane(static_cast<std::size_t>(o));
    for (Eigen::Index y = 0; y < h; ++y) {
      std::copy_n(y_out.col(o).data() + y * pitch, w, plane.data() + y * w);
    }
  }
  apply_activation(output, activation);
  return output;
}

FeatureGrid channel_concat(const FeatureGrid& a, const FeatureGrid& b) {
  const FeatureGrid parts[] = {a, b};
  return channel_concat(parts);
}

FeatureGrid channel_concat(std::span<const FeatureGrid> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShape, "channel_concat: no inputs");
  std::size_t channels = 0;
  for (const auto& p : parts) {
    if (!(p.geometry() == parts.front().geometry())) {
      throw Error(ErrorCode::kShape, "channel_concat: spatial size or resolution mismatch");
    }
    channels += p.channels();
  }
  std::vector<double> data;
  data.reserve(channels * parts.front().plane_size());
  for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return FeatureGrid(channels, parts.front().geometry(), std::move(data));
}

FeatureGrid channel_slice(const FeatureGrid& grid, std::size_t first, std::size_t count) {
  if (first + count > grid.channels()) {
    throw Error(ErrorCode::kShape, "channel_slice: range exceeds channel count");
  }
  const auto begin = grid.data().begin() + static_cast<std::ptrdiff_t>(first * grid.plane_size());
  return FeatureGrid(count, grid.geometry(),
                     std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(
                                                            count * grid.plane_size())));
}

std::vector<ConvKernel> channel_split(const ConvKernel& kernel, std::size_t parts) {
  if (parts == 0 || kernel.in_channels() % parts != 0) {
    throw Error(ErrorCode::kShape, "channel_split: " + std::to_string(kernel.in_channels()) +
                                       " input channels do not split into " +
                                       std::to_string(parts) + " equal chunks");
  }
  const std::size_t chunk = kernel.in_channels() / parts;
  std::vector<ConvKernel> out;
  out.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    ConvKernel k(kernel.out_channels(), chunk, kernel.kernel_h(), kernel.kernel_w());
    for (std::size_t o = 0; o < kernel.out_channels(); ++o)
      for (std::size_t i = 0; i < chunk; ++i)
        for (std::size_t dy = 0; dy < kernel.kernel_h(); ++dy)
          for (std::size_t dx = 0; dx < kernel.kernel_w(); ++dx)
            k.at(o, i, dy, dx) = kernel.at(o, p * chunk + i, dy, dx);
    out.push_back(std::move(k));
  }
  return out;
}

ConvKernel kernel_concat(std::span<const ConvKernel> chunks) {
  if (chunks.empty()) throw Error(ErrorCode::kShape, "kernel_concat: no chunks");
  const auto& first = chunks.front();
  std::size_t in = 0;
  for (const auto& c : chunks) {
    if (c.out_channels() != first.out_channels() || c.kernel_h() != first.kernel_h() ||
        c.kernel_w() != first.kernel_w()) {
      throw Error(ErrorCode::kShape, "kernel_concat: chunk shapes disagree");
    }
    in += c.in_channels();
  }
  ConvKernel out(first.out_channels(), in, first.kernel_h(), first.kernel_w());
  std::size_t offset = 0;
  for (const auto& c : chunks) {
    for (std::size_t o = 0; o < c.out_channels(); ++o)
      for (std::size_t i = 0; i < c.in_channels(); ++i)
        for (std::size_t dy = 0; dy < c.kernel_h(); ++dy)
          for (std::size_t dx = 0; dx < c.kernel_w(); ++dx)
            out.at(o, offset + i, dy, dx) = c.at(o, i, dy, dx);
    offset += c.in_channels();
  }
  return out;
}

namespace {

FeatureGrid shift_copy(const FeatureGrid& src, long dcol, long drow) {
  FeatureGrid out = FeatureGrid::zeros_like(src);
  const auto h = static_cast<long>(src.height());
  const auto w = static_cast<long>(src.width());
  const long col_begin = std::max(0L, -dcol);
  const long col_end = std::min(w, w - dcol);
  if (col_begin >= col_end) return out;
  for (std::size_t c = 0; c < src.channels(); ++c) {
    for (long row = 0; row < h; ++row) {
      const long src_row = row + drow;
      if (src_row < 0 || src_row >= h) continue;
      const double* from = src.plane(c).data() + src_row * w;
      double* to = out.plane(c).data() + row * w;
      std::copy(from + col_begin + dcol, from + col_end + dcol, to + col_begin);
    }
  }
  return out;
}

}  // namespace

FeatureGrid grid_sample(const FeatureGrid& src, const GridTransform& t) {
  if (t.is_identity()) return src;
  if (t.is_integer_translation()) {
    const auto [dcol, drow] = t.integer_offset();
    return shift_copy(src, dcol, drow);
  }

  FeatureGrid out = FeatureGrid::zeros_like(src);
  const auto h = static_cast<long>(src.height());
  const auto w = static_cast<long>(src.width());
  const std::size_t plane = src.plane_size();

  struct Tap {
    std::size_t offset;
    double weight;
  };
  std::vector<Tap> taps;
  std::vector<std::size_t> tap_begin(plane + 1, 0);
  taps.reserve(plane * 4);

  for (long row = 0; row < h; ++row) {
    for (long col = 0; col < w; ++col) {
      const auto [sc, sr] = t.apply(static_cast<double>(col), static_cast<double>(row));
      const double c0 = std::floor(sc);
      const double r0 = std::floor(sr);
      const double fc = sc - c0;
      const double fr = sr - r0;
      const long ic = static_cast<long>(c0);
      const long ir = static_cast<long>(r0);
      const double wts[4] = {(1.0 - fr) * (1.0 - fc), (1.0 - fr) * fc, fr * (1.0 - fc), fr * fc};
      const long rr[4] = {ir, ir, ir + 1, ir + 1};
      const long cc[4] = {ic, ic + 1, ic, ic + 1};
      for (int k = 0; k < 4; ++k) {
        if (wts[k] == 0.0 || rr[k] < 0 || rr[k] >= h || cc[k] < 0 || cc[k] >= w) continue;
        taps.push_back({static_cast<std::size_t>(rr[k] * w + cc[k]), wts[k]});
      }
      tap_begin[static_cast<std::size_t>(row * w + col) + 1] = taps.size();
    }
  }

  for (std::size_t c = 0; c < src.channels(); ++c) {
    const auto in = src.plane(c);
    auto dst = out.plane(c);
    for (std::size_t p = 0; p < plane; ++p) {
      double acc = 0.0;
      for (std::size_t k = tap_begin[p]; k < tap_begin[p + 1]; ++k) {
        acc += taps[k].weight * in[taps[k].offset];
      }
      dst[p] = acc;
    }
  }
  return out;
}

FeatureGrid all_ones(const GridGeometry& geometry, std::size_t channels, double scale) {
  if (channels == 0) throw Error(ErrorCode::kShape, "all_ones: channels must be >= 1");
  FeatureGrid g(channels, geometry);
  std::fill(g.data().begin(), g.data().end(), scale);
  return g;
}

double max_abs_diff_interior(const FeatureGrid& a, const FeatureGrid& b, std::size_t margin) {
  require_same_shape(a, b, "max_abs_diff_interior");
  if (2 * margin >= a.height() || 2 * margin >= a.width()) {
    throw Error(ErrorCode::kShape, "max_abs_diff_interior: margin leaves no interior");
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t r = margin; r < a.height() - margin; ++r)
      for (std::size_t col = margin; col < a.width() - margin; ++col)
        worst = std::max(worst, std::abs(a.at(c, r, col) - b.at(c, r, col)));
  return worst;
}

double max_abs_diff(const FeatureGrid& a, const FeatureGrid& b) {
  return max_abs_diff_interior(a, b, 0);
}

double interior_mean(const FeatureGrid& grid, std::size_t channel, std::size_t margin) {
  if (channel >= grid.channels()) throw Error(ErrorCode::kShape, "interior_mean: bad channel");
  if (2 * margin >= grid.height() || 2 * margin >= grid.width()) {
    throw Error(ErrorCode::kShape, "interior_mean: margin leaves no interior");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = margin; r < grid.height() - margin; ++r)
    for (std::size_t c = margin; c < grid.width() - margin; ++c, ++n) sum += grid.at(channel, r, c);
  return sum / static_cast<double>(n);
}

}  // namespace bevstream
