#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jecrl/distortion.hpp"
#include "jecrl/filter_banks.hpp"
#include "jecrl/jpeg_model.hpp"

namespace jecrl {

// Accumulated gradient magnitudes flowing from one residual filter back to
// each of the 64 DCT modes: e_{k,l} = Σ_{a,b} Σ_{i,j} |∂s_{i,j}/∂m_{a,b,k,l}|.
struct AccumGradMatrix {
  std::string filter_label;
  RealGrid e;  // 8×8, entries ≥ 0
};

struct AnalysisOptions {
  // The default follows the linear chain only (dequantize → block synthesis
  // → filter correlation). include_truncation additionally zeroes positions
  // whose residual saturates the TLU on the given image, which makes the
  // result image-dependent (and considerably slower).
  bool include_truncation = false;
  double truncation = 8.0;
};

// Stride-1 zero-padded correlation of a pixel plane with one filter, center
// at (fh/2, fw/2). This is the residual map the matrices accumulate through.
PixelPlane filter_residual(const PixelPlane& pixels, const RealGrid& filter);

std::vector<AccumGradMatrix> accum_grad_matrices(const JpegImage& image,
                                                 const FilterBank& bank,
                                                 const AnalysisOptions& opt = {});
// Element-wise mean over an image set (shapes may differ between images).
std::vector<AccumGradMatrix> accum_grad_matrices(
    const std::vector<const JpegImage*>& images, const FilterBank& bank,
    const AnalysisOptions& opt = {});

// Per-matrix min-max normalization to [0,1]; a constant matrix maps to 0.
RealGrid normalize_matrix(const RealGrid& e);

// r_{k,l,n}: how many filters rank mode (k,l) within their top n;
// s_n: how many modes have r_{k,l,n} > 0. Ranks use descending entry order
// with ties broken by ascending (k,l).
struct TopNStats {
  std::vector<Grid<int>> rate;  // rate[n], n = 0..64, each 8×8
  std::vector<int> s;           // s[n], n = 0..64
};

TopNStats top_n_stats(const std::vector<AccumGradMatrix>& matrices);

// CSV text "n,s_<bank1>,s_<bank2>,..." for plotting the s_n curves.
std::string sn_csv(const std::vector<std::pair<std::string, TopNStats>>& banks);

// min over thresholds of (false-alarm rate + missed-detection rate)/2, the
// sweep including the degenerate all-cover / all-stego decisions.
double detection_error(const std::vector<double>& cover_scores,
                       const std::vector<double>& stego_scores);

// 8-bit grayscale emission. Binary PGM (P5), maxval 255.
void write_pgm(const std::string& path, const Grid<uint8_t>& img);
Grid<uint8_t> read_pgm(const std::string& path);

// min-max quantization to [0,255]; a constant map renders mid-gray (128).
Grid<uint8_t> minmax_quantize(const RealGrid& map);
// {−1, 0, +1} → {0, 128, 255}.
Grid<uint8_t> modification_levels(const ModificationMap& m);

}  // namespace jecrl
