#include "jecrl/synthetic.hpp"

#include <algorithm>

#include "jecrl/error.hpp"
#include "jecrl/rng.hpp"

namespace jecrl {

JpegImage synthetic_halfnoise_cover(int height, int width, int qf,
                                    uint64_t seed) {
  if (height <= 0 || width <= 0 || height % 8 != 0 || width % 8 != 0)
    throw DataError("synthetic cover dimensions must be positive multiples of 8");
  Rng rng(seed);
  PixelPlane p(height, width);
  const double slope = 96.0 / (height + width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      double v = 80.0 + slope * (i + j);
      if (j >= width / 2) v += (rng.uniform() - 0.5) * 96.0;
      p.at(i, j) = std::clamp(v, 0.0, 255.0);
    }
  return quantize_plane(p, quality_to_quant_table(qf));
}

std::vector<JpegImage> synthetic_halfnoise_corpus(int count, int height,
                                                  int width, int qf,
                                                  uint64_t seed) {
  if (count <= 0) throw DataError("synthetic corpus size must be positive");
  std::vector<JpegImage> out;
  out.reserve(static_cast<size_t>(count));
  for (int n = 0; n < count; ++n)
    out.push_back(synthetic_halfnoise_cover(height, width, qf, seed + n));
  return out;
}

}  // namespace jecrl
