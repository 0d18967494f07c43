#pragma once
#include <cstddef>
#include <cstdint>
#include <vector>

#include "jecrl/error.hpp"

namespace jecrl {

// Dense row-major 2D array. The workhorse container for pixel planes,
// coefficient grids, cost maps and friends.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : h_(height), w_(width), data_(static_cast<size_t>(height) * width, fill) {
    if (height < 0 || width < 0) throw DataError("Grid: negative dimensions");
  }

  int height() const { return h_; }
  int width() const { return w_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int i, int j) { return data_[static_cast<size_t>(i) * w_ + j]; }
  const T& at(int i, int j) const { return data_[static_cast<size_t>(i) * w_ + j]; }
  T& operator[](size_t idx) { return data_[idx]; }
  const T& operator[](size_t idx) const { return data_[idx]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool same_shape(int h, int w) const { return h_ == h && w_ == w; }
  template <typename U>
  bool same_shape(const Grid<U>& o) const { return h_ == o.height() && w_ == o.width(); }

  void fill(T v) { data_.assign(data_.size(), v); }

 private:
  int h_ = 0, w_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;

}  // namespace jecrl
