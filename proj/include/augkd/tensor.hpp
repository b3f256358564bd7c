#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace augkd {

/// Dense row-major n-dimensional array. Owns its storage; shapes are
/// plain int vectors so index arithmetic stays cheap and obvious.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(numel_of(shape_)), T(0));
  }

  Tensor(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != numel_of(shape_))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, T value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  template <typename... Ix>
  T& operator()(Ix... idx) {
    return data_[static_cast<size_t>(offset(idx...))];
  }
  template <typename... Ix>
  const T& operator()(Ix... idx) const {
    return data_[static_cast<size_t>(offset(idx...))];
  }

  /// Row-major offset of a multi-index; bounds-checked on rank only.
  template <typename... Ix>
  int64_t offset(Ix... idx) const {
    constexpr int n = sizeof...(Ix);
    if (n != static_cast<int>(shape_.size()))
      throw std::invalid_argument("Tensor: index rank mismatch");
    int64_t ids[n] = {static_cast<int64_t>(idx)...};
    int64_t off = 0;
    for (int i = 0; i < n; ++i) off = off * shape_[static_cast<size_t>(i)] + ids[i];
    return off;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
  void zero() { fill(T(0)); }

  /// In-place reshape; element count must be preserved.
  void reshape(std::vector<int> new_shape) {
    if (numel_of(new_shape) != numel())
      throw std::invalid_argument("Tensor: reshape changes element count");
    shape_ = std::move(new_shape);
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  static int64_t numel_of(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  static std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace augkd
