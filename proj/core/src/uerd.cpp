#include "jecrl/uerd.hpp"

#include <cmath>

#include "jecrl/error.hpp"

namespace jecrl {

BlockEnergyMap block_energy(const JpegImage& image) {
  image.validate();
  BlockEnergyMap energy(image.blocks_y(), image.blocks_x());
  for (int a = 0; a < image.blocks_y(); ++a) {
    for (int b = 0; b < image.blocks_x(); ++b) {
      double e = 0.0;
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l)
          e += std::abs(static_cast<double>(image.coeff(a, b, k, l))) * image.table.at(k, l);
      energy.at(a, b) = e;
    }
  }
  return energy;
}

RealGrid block_suitability(const BlockEnergyMap& energy) {
  RealGrid suit(energy.height(), energy.width());
  for (int a = 0; a < energy.height(); ++a) {
    for (int b = 0; b < energy.width(); ++b) {
      double neighbors = 0.0;
      for (int da = -1; da <= 1; ++da) {
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          const int na = a + da, nb = b + db;
          if (na < 0 || nb < 0 || na >= energy.height() || nb >= energy.width()) continue;
          neighbors += energy.at(na, nb);
        }
      }
      const double denom = energy.at(a, b) + 0.25 * neighbors;
      suit.at(a, b) = denom > 0.0 ? 1.0 / denom : kWetCost;
    }
  }
  return suit;
}

RealGrid mode_suitability(const QuantTable& table) {
  table.validate();
  RealGrid suit(8, 8);
  for (int k = 0; k < 8; ++k)
    for (int l = 0; l < 8; ++l) suit.at(k, l) = table.at(k, l);
  suit.at(0, 0) = 0.5 * (table.at(1, 0) + table.at(0, 1));
  return suit;
}

CostMap uerd_cost(const JpegImage& image) {
  const RealGrid block = block_suitability(block_energy(image));
  const RealGrid mode = mode_suitability(image.table);
  CostMap costs(image.height, image.width);
  for (int i = 0; i < image.height; ++i)
    for (int j = 0; j < image.width; ++j)
      costs.at(i, j) = block.at(i / 8, j / 8) * mode.at(i % 8, j % 8);
  return costs;
}

namespace {

// db4 analysis pair, unit l2 norm; g is the alternating-flip of h.
constexpr double kDb4Low[8] = {-0.010597401784997278, 0.032883011666982945,
                               0.030841381835986965,  -0.18703481171888114,
                               -0.027983769416983849, 0.63088076792959036,
                               0.71484657055254153,   0.23037781330885523};

std::array<double, 8> db4_high() {
  std::array<double, 8> g{};
  for (int k = 0; k < 8; ++k) g[k] = (k % 2 == 0 ? 1.0 : -1.0) * kDb4Low[7 - k];
  return g;
}

// Mirror (symmetric) index: ...2,1,0 | 0,1,2... reflected at both ends.
int mirror(int i, int n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - 1 - i;
  // A second fold covers kernels wider than the plane (not expected here).
  if (i < 0 || i >= n) return mirror(i, n);
  return i;
}

}  // namespace

std::array<RealGrid, 3> wavelet_kernels() {
  const auto g = db4_high();
  std::array<RealGrid, 3> kernels{RealGrid(8, 8), RealGrid(8, 8), RealGrid(8, 8)};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      kernels[0].at(i, j) = kDb4Low[i] * g[j];  // LH: low rows, high cols
      kernels[1].at(i, j) = g[i] * kDb4Low[j];  // HL
      kernels[2].at(i, j) = g[i] * g[j];        // HH
    }
  }
  return kernels;
}

TextureMap wavelet_texture(const PixelPlane& pixels) {
  if (pixels.empty()) throw DataError("wavelet_texture: empty plane");
  const auto kernels = wavelet_kernels();
  const int h = pixels.height(), w = pixels.width();
  // Center the even-sized kernel on offsets -3..4.
  constexpr int kLo = -3, kHi = 4;
  TextureMap out;
  out.reserve(3);
  for (const RealGrid& ker : kernels) {
    RealGrid ch(h, w);
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        for (int di = kLo; di <= kHi; ++di)
          for (int dj = kLo; dj <= kHi; ++dj)
            acc += pixels.at(mirror(i + di, h), mirror(j + dj, w)) *
                   ker.at(di - kLo, dj - kLo);
        ch.at(i, j) = std::abs(acc);
      }
    }
    out.push_back(std::move(ch));
  }
  return out;
}

TextureMap msu_texture(const JpegImage& image) {
  const BlockEnergyMap energy = block_energy(image);
  RealGrid weighted(energy.height(), energy.width());
  for (int a = 0; a < energy.height(); ++a) {
    for (int b = 0; b < energy.width(); ++b) {
      double neighbors = 0.0;
      for (int da = -1; da <= 1; ++da) {
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          const int na = a + da, nb = b + db;
          if (na < 0 || nb < 0 || na >= energy.height() || nb >= energy.width()) continue;
          neighbors += energy.at(na, nb);
        }
      }
      weighted.at(a, b) = energy.at(a, b) + 0.25 * neighbors;
    }
  }
  RealGrid up(image.height, image.width);
  for (int i = 0; i < image.height; ++i)
    for (int j = 0; j < image.width; ++j) up.at(i, j) = weighted.at(i / 8, j / 8);
  TextureMap out;
  out.push_back(std::move(up));
  return out;
}

}  // namespace jecrl
