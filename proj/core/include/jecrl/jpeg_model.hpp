#pragma once
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "jecrl/grid.hpp"

namespace jecrl {

// Quantization steps per DCT mode, row-major (k,l), zero-based in code.
struct QuantTable {
  std::array<uint16_t, 64> steps{};

  uint16_t at(int k, int l) const { return steps[static_cast<size_t>(k) * 8 + l]; }
  uint16_t& at(int k, int l) { return steps[static_cast<size_t>(k) * 8 + l]; }
  void validate() const;  // every step >= 1
  bool operator==(const QuantTable&) const = default;
};

// A grayscale JPEG at the quantized-coefficient level. Coefficient (a,b,k,l)
// (block row/col, mode row/col, all zero-based here) lives at flat pixel
// position (8a+k, 8b+l) of the H×W grid.
struct JpegImage {
  int height = 0;
  int width = 0;
  Grid<int32_t> coeffs;
  QuantTable table;

  int blocks_y() const { return height / 8; }
  int blocks_x() const { return width / 8; }
  int32_t coeff(int a, int b, int k, int l) const { return coeffs.at(8 * a + k, 8 * b + l); }
  int32_t& coeff(int a, int b, int k, int l) { return coeffs.at(8 * a + k, 8 * b + l); }
  void validate() const;  // dims positive multiples of 8, grid shape matches
};

// Real-valued intensities; deliberately neither rounded nor clamped so the
// pixel-domain chain stays linear in the coefficients.
using PixelPlane = RealGrid;

// The 64 orthonormal 8×8 DCT basis filters Z^{u,v}, u,v in 0..7.
class DctBasisBank {
 public:
  // filter(u,v) returns the 8×8 grid row-major: element (i,j) at [i*8+j].
  const double* filter(int u, int v) const { return &z_[(static_cast<size_t>(u) * 8 + v) * 64]; }
  double z(int u, int v, int i, int j) const { return filter(u, v)[i * 8 + j]; }

 private:
  friend DctBasisBank build_dct_basis();
  std::array<double, 64 * 64> z_{};
};

// z_{i,j}^{u,v} = (w_u w_v / 8) cos(πu(2i+1)/16) cos(πv(2j+1)/16), w_0 = 1,
// w_k = √2 otherwise. Orthonormal by construction.
DctBasisBank build_dct_basis();

// Shared basis instance (built once; the bank is immutable).
const DctBasisBank& dct_basis();

// Rounding-free decompression: per block, 128·shift + Σ x·s·Z^{k,l}.
PixelPlane decompress(const JpegImage& image, bool level_shift = true);

// Blockwise forward DCT (no level shift, no scaling): output (8a+k, 8b+l) =
// ⟨block (a,b) of plane, Z^{k,l}⟩. Adjoint of the synthesis in decompress.
RealGrid blockwise_dct(const PixelPlane& plane);

// Forward quantization: round(blockwise_dct(plane − 128·shift) / s). The
// counterpart of decompress for building coefficient images from pixels.
JpegImage quantize_plane(const PixelPlane& plane, const QuantTable& table,
                         bool level_shift = true);

// Standard IJG luminance table scaling; qf in 1..100.
QuantTable quality_to_quant_table(int qf);

// Number of nonzero AC coefficients (mode (0,0) excluded).
int64_t count_nzac(const JpegImage& image);

// Baseline-sequential grayscale JPEG → quantized coefficients. Progressive,
// arithmetic, multi-component and restart-interval streams are rejected.
JpegImage parse_baseline_jpeg(std::span<const uint8_t> bytes);

// ".jcoef" coefficient container (magic JCF1, little-endian throughout).
JpegImage read_jcoef(const std::filesystem::path& path);
void write_jcoef(const std::filesystem::path& path, const JpegImage& image);

}  // namespace jecrl
