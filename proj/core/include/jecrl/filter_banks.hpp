#pragma once
#include <string>
#include <vector>

#include "jecrl/grid.hpp"
#include "jecrl/tensor.hpp"

namespace jecrl {

// A set of square high-pass / transform filters used by the environment
// network's preprocessing layer and by the gradient-propagation analysis.
// Filters keep their native sizes; for the convolution layer they are
// embedded centered into a common kernel×kernel window (zero-padded), which
// leaves the correlation output unchanged.
struct FilterBank {
  std::string name;
  int kernel = 0;                 // common window size (max native size)
  std::vector<RealGrid> filters;  // native, square, possibly mixed sizes

  // Conv weight tensor {count, kernel, kernel, 1} with centered embedding.
  Tensor conv_weights() const;
};

// Orthonormal n×n DCT-II basis filter for frequencies (u,v), zero-based.
RealGrid dct_basis_filter(int n, int u, int v);

FilterBank dct8_bank();   // all 64 8×8 DCT basis filters
FilterBank dct4_bank();   // all 16 4×4 DCT basis filters
FilterBank srm30_bank();  // the 30 standard normalized SRM residual kernels

// "dct8" | "dct4" | "srm30"; unknown names are data errors.
FilterBank bank_by_name(const std::string& name);

}  // namespace jecrl
