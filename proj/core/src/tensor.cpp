#include "jecrl/tensor.hpp"

#include <cmath>

#include "jecrl/error.hpp"

namespace jecrl {

void Tensor::reshape(std::vector<int> s) {
  if (s.empty() || s.size() > 4) throw DataError("Tensor: rank must be 1..4");
  size_t n = 1;
  for (int d : s) {
    if (d <= 0) throw DataError("Tensor: dimensions must be positive");
    n *= static_cast<size_t>(d);
  }
  shape = std::move(s);
  v.assign(n, 0.0);
  g.assign(n, 0.0);
}

void Tensor::zero_grad() { g.assign(g.size(), 0.0); }

void Tensor::fill(double value) { v.assign(v.size(), value); }

void Tensor::check_finite(const std::string& what) const {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(what + ": non-finite value");
}

}  // namespace jecrl
