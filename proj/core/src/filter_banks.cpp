#include "jecrl/filter_banks.hpp"

#include <cmath>
#include <numbers>

#include "jecrl/error.hpp"

namespace jecrl {

namespace {

// Counter-clockwise quarter turn, applied r times.
RealGrid rot90(const RealGrid& in, int r) {
  RealGrid out = in;
  for (int t = 0; t < r; ++t) {
    const int n = out.height();
    RealGrid next(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) next.at(i, j) = out.at(j, n - 1 - i);
    out = next;
  }
  return out;
}

RealGrid scaled(RealGrid g, double inv_div) {
  for (double& v : g) v *= inv_div;
  return g;
}

RealGrid grid3(std::initializer_list<double> vals) {
  RealGrid g(3, 3);
  int i = 0;
  for (double v : vals) g[i++] = v;
  return g;
}

RealGrid grid5(std::initializer_list<double> vals) {
  RealGrid g(5, 5);
  int i = 0;
  for (double v : vals) g[i++] = v;
  return g;
}

constexpr int kDirs8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1},
                              {1, 1},   {1, 0},  {1, -1}, {0, -1}};

}  // namespace

RealGrid dct_basis_filter(int n, int u, int v) {
  if (n <= 0 || u < 0 || u >= n || v < 0 || v >= n)
    throw DataError("DCT basis frequency out of range");
  const double wu = (u == 0) ? 1.0 : std::numbers::sqrt2;
  const double wv = (v == 0) ? 1.0 : std::numbers::sqrt2;
  RealGrid z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      z.at(i, j) = (wu * wv / n) *
                   std::cos(std::numbers::pi * u * (2 * i + 1) / (2.0 * n)) *
                   std::cos(std::numbers::pi * v * (2 * j + 1) / (2.0 * n));
  return z;
}

Tensor FilterBank::conv_weights() const {
  const int count = static_cast<int>(filters.size());
  Tensor w({count, kernel, kernel, 1});
  for (int f = 0; f < count; ++f) {
    const RealGrid& k = filters[f];
    const int off = (kernel - k.height()) / 2;  // centered embedding
    for (int i = 0; i < k.height(); ++i)
      for (int j = 0; j < k.width(); ++j)
        w.v[((f * kernel + off + i) * kernel + off + j)] = k.at(i, j);
  }
  return w;
}

FilterBank dct8_bank() {
  FilterBank b;
  b.name = "dct8";
  b.kernel = 8;
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) b.filters.push_back(dct_basis_filter(8, u, v));
  return b;
}

FilterBank dct4_bank() {
  FilterBank b;
  b.name = "dct4";
  b.kernel = 4;
  for (int u = 0; u < 4; ++u)
    for (int v = 0; v < 4; ++v) b.filters.push_back(dct_basis_filter(4, u, v));
  return b;
}

FilterBank srm30_bank() {
  FilterBank b;
  b.name = "srm30";
  b.kernel = 5;

  // First order: neighbor minus center, all 8 directions.
  for (auto [di, dj] : kDirs8) {
    RealGrid k(3, 3);
    k.fill(0.0);
    k.at(1, 1) = -1.0;
    k.at(1 + di, 1 + dj) = 1.0;
    b.filters.push_back(k);
  }

  // Second order [1,-2,1]/2 along the four axes.
  b.filters.push_back(scaled(grid3({0, 0, 0, 1, -2, 1, 0, 0, 0}), 0.5));
  b.filters.push_back(scaled(grid3({0, 1, 0, 0, -2, 0, 0, 1, 0}), 0.5));
  b.filters.push_back(scaled(grid3({1, 0, 0, 0, -2, 0, 0, 0, 1}), 0.5));
  b.filters.push_back(scaled(grid3({0, 0, 1, 0, -2, 0, 1, 0, 0}), 0.5));

  // Third order [1,-3,3,-1]/3 rooted at the center, all 8 directions.
  for (auto [di, dj] : kDirs8) {
    RealGrid k(5, 5);
    k.fill(0.0);
    const double taps[4] = {1, -3, 3, -1};
    for (int t = -1; t <= 2; ++t) k.at(2 + t * di, 2 + t * dj) = taps[t + 1] / 3.0;
    b.filters.push_back(k);
  }

  // SQUARE 3x3 / 4 and SQUARE 5x5 / 12.
  const RealGrid sq3 = grid3({-1, 2, -1, 2, -4, 2, -1, 2, -1});
  b.filters.push_back(scaled(sq3, 0.25));
  const RealGrid sq5 = grid5({-1, 2,  -2, 2,  -1,  //
                              2,  -6, 8,  -6, 2,   //
                              -2, 8,  -12, 8, -2,  //
                              2,  -6, 8,  -6, 2,   //
                              -1, 2,  -2, 2,  -1});
  b.filters.push_back(scaled(sq5, 1.0 / 12.0));

  // EDGE 3x3 (four rotations) / 4.
  const RealGrid e3 = grid3({-1, 2, -1, 2, -4, 2, 0, 0, 0});
  for (int r = 0; r < 4; ++r) b.filters.push_back(scaled(rot90(e3, r), 0.25));

  // EDGE 5x5 (four rotations) / 12.
  const RealGrid e5 = grid5({-1, 2,  -2, 2,  -1,  //
                             2,  -6, 8,  -6, 2,   //
                             -2, 8,  -12, 8, -2,  //
                             0,  0,  0,  0,  0,   //
                             0,  0,  0,  0,  0});
  for (int r = 0; r < 4; ++r)
    b.filters.push_back(scaled(rot90(e5, r), 1.0 / 12.0));

  return b;
}

FilterBank bank_by_name(const std::string& name) {
  if (name == "dct8") return dct8_bank();
  if (name == "dct4") return dct4_bank();
  if (name == "srm30") return srm30_bank();
  throw DataError("unknown filter bank: " + name);
}

}  // namespace jecrl
