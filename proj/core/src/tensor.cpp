#include "thlnet/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <sstream>

namespace thl {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
  }
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape_));
  }
  return shape_[static_cast<std::size_t>(axis)];
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape_numel(shape) != static_cast<std::int64_t>(data_.size())) {
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

namespace {

// Exponent-bits test, OR-reduced so the loop vectorizes.
template <typename T, typename U>
bool finite_bits(const std::vector<T>& data, U exp_mask) {
  U bad = 0;
  for (T v : data) bad |= static_cast<U>((std::bit_cast<U>(v) & exp_mask) == exp_mask);
  return bad == 0;
}

}  // namespace

template <typename T>
bool Tensor<T>::all_finite() const noexcept {
  if constexpr (std::is_same_v<T, float>) {
    return finite_bits(data_, std::uint32_t{0x7f800000u});
  } else {
    return finite_bits(data_, std::uint64_t{0x7ff0000000000000ull});
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace thl
