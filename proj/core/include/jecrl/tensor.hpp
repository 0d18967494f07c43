#pragma once
#include <cstddef>
#include <string>
#include <vector>

namespace jecrl {

// Dense tensor of up to 4 axes with a same-shape gradient buffer. Layout is
// row-major; 4-axis tensors are interpreted as batch × height × width ×
// channels (NHWC). Values are double throughout — gradient-check tolerances
// demand it — and only the checkpoint container narrows to f32.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;  // values
  std::vector<double> g;  // gradient, same shape

  Tensor() = default;
  explicit Tensor(std::vector<int> s) { reshape(std::move(s)); }

  void reshape(std::vector<int> s);
  size_t size() const { return v.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  size_t idx4(int n, int i, int j, int c) const {
    return ((static_cast<size_t>(n) * shape[1] + i) * shape[2] + j) * shape[3] + c;
  }
  double& at4(int n, int i, int j, int c) { return v[idx4(n, i, j, c)]; }
  double at4(int n, int i, int j, int c) const { return v[idx4(n, i, j, c)]; }

  void zero_grad();
  void fill(double value);
  // Throws NumericError naming `what` if any value is NaN/Inf.
  void check_finite(const std::string& what) const;
};

}  // namespace jecrl
