#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "annobench/errors.hpp"

namespace annobench {

inline constexpr int kNumClasses = 4;

// Spatial dimensions, outermost first. Rank is 2 or 3 for every tensor kind.
using Dims = std::vector<std::uint32_t>;

inline std::size_t element_count(const Dims& dims) {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

inline void check_spatial_dims(const Dims& dims) {
  if (dims.size() != 2 && dims.size() != 3)
    throw DataError("spatial rank must be 2 or 3, got " +
                    std::to_string(dims.size()));
  for (std::uint32_t d : dims)
    if (d == 0) throw DataError("spatial dims must all be >= 1");
}

// Dense row-major grid over one scalar type. The flat payload is the unit of
// bit-exact serialization; Eigen maps give math access without copies.
template <typename Scalar>
class Grid {
 public:
  using MatrixType =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Grid() = default;
  Grid(Dims dims, std::vector<Scalar> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    check_spatial_dims(dims_);
    if (data_.size() != element_count(dims_))
      throw DataError("grid payload has " + std::to_string(data_.size()) +
                      " elements, dims require " +
                      std::to_string(element_count(dims_)));
  }

  static Grid constant(Dims dims, Scalar v) {
    std::vector<Scalar> data(element_count(dims), v);
    return Grid(std::move(dims), std::move(data));
  }

  const Dims& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return data_.size(); }
  std::span<const Scalar> values() const { return data_; }

  Scalar operator()(std::size_t r, std::size_t c) const {
    return data_[r * dims_[1] + c];
  }
  Scalar operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  // 2-D view as an Eigen matrix; rows follow dim 0.
  Eigen::Map<const MatrixType> matrix() const {
    if (rank() != 2) throw DataError("matrix view requires a 2-D grid");
    return {data_.data(), static_cast<Eigen::Index>(dims_[0]),
            static_cast<Eigen::Index>(dims_[1])};
  }

  // Bitwise payload equality (exact round trips even for odd float bits).
  bool operator==(const Grid& other) const {
    return dims_ == other.dims_ &&
           std::memcmp(data_.data(), other.data_.data(),
                       data_.size() * sizeof(Scalar)) == 0;
  }

 private:
  Dims dims_;
  std::vector<Scalar> data_;
};

enum class Dtype : std::uint8_t { u8 = 0, f32 = 1 };

// Scalar intensity grid, 2-D or 3-D, stored in its native precision.
class Volume {
 public:
  explicit Volume(Grid<std::uint8_t> g) : storage_(std::move(g)) {}
  explicit Volume(Grid<float> g) : storage_(std::move(g)) {}

  Dtype dtype() const {
    return std::holds_alternative<Grid<std::uint8_t>>(storage_) ? Dtype::u8
                                                                : Dtype::f32;
  }
  const Dims& dims() const {
    return std::visit([](const auto& g) -> const Dims& { return g.dims(); },
                      storage_);
  }
  int rank() const { return static_cast<int>(dims().size()); }
  std::size_t size() const { return element_count(dims()); }

  const Grid<std::uint8_t>& u8() const {
    return std::get<Grid<std::uint8_t>>(storage_);
  }
  const Grid<float>& f32() const { return std::get<Grid<float>>(storage_); }

  // Intensities on a common [0, 1] scale: u8 data divided by 255, float data
  // taken as-is. This is the input scale of the segmenter features.
  Grid<float> unit_floats() const {
    if (dtype() == Dtype::f32) return f32();
    const auto& g = u8();
    std::vector<float> out(g.size());
    auto src = g.values();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<float>(src[i] / 255.0);
    return Grid<float>(g.dims(), std::move(out));
  }

  bool operator==(const Volume& other) const {
    return storage_ == other.storage_;
  }

 private:
  std::variant<Grid<std::uint8_t>, Grid<float>> storage_;
};

// Per-pixel class ids in {0..3}; 0 = background, 1 = CSF, 2 = GM, 3 = WM.
// Values are validated on construction, never at use.
class LabelMap {
 public:
  explicit LabelMap(Grid<std::uint8_t> g) : grid_(std::move(g)) {
    auto vals = grid_.values();
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (vals[i] >= kNumClasses)
        throw DataError("label value " + std::to_string(vals[i]) +
                        " at element " + std::to_string(i) + " is >= " +
                        std::to_string(kNumClasses));
  }

  const Dims& dims() const { return grid_.dims(); }
  int rank() const { return grid_.rank(); }
  std::size_t size() const { return grid_.size(); }
  std::span<const std::uint8_t> values() const { return grid_.values(); }
  std::uint8_t operator()(std::size_t r, std::size_t c) const {
    return grid_(r, c);
  }
  const Grid<std::uint8_t>& grid() const { return grid_; }

  bool operator==(const LabelMap& other) const { return grid_ == other.grid_; }

 private:
  Grid<std::uint8_t> grid_;
};

// Per-pixel 4-channel probability field, channel-interleaved (the 4 class
// probabilities of one pixel are contiguous). Channel sums must be 1 within
// kSumTolerance.
class ProbMap {
 public:
  static constexpr double kSumTolerance = 1e-5;

  ProbMap(Dims spatial_dims, std::vector<float> interleaved)
      : dims_(std::move(spatial_dims)), data_(std::move(interleaved)) {
    check_spatial_dims(dims_);
    const std::size_t n = element_count(dims_);
    if (data_.size() != n * kNumClasses)
      throw DataError("probability payload has " +
                      std::to_string(data_.size()) + " values, dims require " +
                      std::to_string(n * kNumClasses));
    for (std::size_t p = 0; p < n; ++p) {
      double sum = 0.0;
      for (int c = 0; c < kNumClasses; ++c) {
        const float v = data_[p * kNumClasses + c];
        if (!(v >= 0.0f && v <= 1.0f))
          throw DataError("probability out of [0,1] at pixel " +
                          std::to_string(p) + " channel " + std::to_string(c));
        sum += v;
      }
      if (std::abs(sum - 1.0) > kSumTolerance)
        throw DataError("channel sum " + std::to_string(sum) + " at pixel " +
                        std::to_string(p) + " is not 1 within 1e-5");
    }
  }

  const Dims& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t pixels() const { return element_count(dims_); }
  std::span<const float> values() const { return data_; }

  // Channels as a 4 x pixels Eigen matrix (column per pixel); the
  // interleaved layout is exactly column-major storage for this shape.
  Eigen::Map<const Eigen::Matrix4Xf> channels() const {
    return {data_.data(), 4, static_cast<Eigen::Index>(pixels())};
  }

  bool operator==(const ProbMap& other) const {
    return dims_ == other.dims_ &&
           std::memcmp(data_.data(), other.data_.data(),
                       data_.size() * sizeof(float)) == 0;
  }

 private:
  Dims dims_;
  std::vector<float> data_;
};

// 2-D slice of a 3-D grid; the result keeps the two non-selected dims in
// ascending axis order.
template <typename Scalar>
Grid<Scalar> slice2d(const Grid<Scalar>& g, int axis, std::uint32_t index) {
  if (g.rank() != 3) throw DataError("slice2d requires a 3-D input");
  if (axis < 0 || axis > 2)
    throw DataError("slice axis must be 0, 1 or 2, got " +
                    std::to_string(axis));
  const Dims& d = g.dims();
  if (index >= d[axis])
    throw DataError("slice index " + std::to_string(index) +
                    " out of range for axis " + std::to_string(axis) +
                    " of extent " + std::to_string(d[axis]));

  Dims out_dims;
  for (int a = 0; a < 3; ++a)
    if (a != axis) out_dims.push_back(d[a]);

  std::vector<Scalar> out(element_count(out_dims));
  std::size_t pos = 0;
  for (std::uint32_t i = 0; i < out_dims[0]; ++i)
    for (std::uint32_t j = 0; j < out_dims[1]; ++j) {
      switch (axis) {
        case 0: out[pos++] = g(index, i, j); break;
        case 1: out[pos++] = g(i, index, j); break;
        default: out[pos++] = g(i, j, index); break;
      }
    }
  return Grid<Scalar>(std::move(out_dims), std::move(out));
}

inline Volume slice2d(const Volume& v, int axis, std::uint32_t index) {
  if (v.dtype() == Dtype::u8) return Volume(slice2d(v.u8(), axis, index));
  return Volume(slice2d(v.f32(), axis, index));
}

inline LabelMap slice2d(const LabelMap& m, int axis, std::uint32_t index) {
  return LabelMap(slice2d(m.grid(), axis, index));
}

// Stacks equally shaped 2-D grids into a 3-D grid along axis 0.
template <typename Scalar>
Grid<Scalar> stack_axis0(std::span<const Grid<Scalar>> slices) {
  if (slices.empty()) throw DataError("cannot stack an empty slice list");
  const Dims& sd = slices.front().dims();
  std::vector<Scalar> out;
  out.reserve(slices.size() * element_count(sd));
  for (const auto& s : slices) {
    if (s.dims() != sd) throw DataError("stacked slices must share dims");
    out.insert(out.end(), s.values().begin(), s.values().end());
  }
  return Grid<Scalar>(
      Dims{static_cast<std::uint32_t>(slices.size()), sd[0], sd[1]},
      std::move(out));
}

}  // namespace annobench
