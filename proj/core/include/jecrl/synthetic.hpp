#pragma once
#include <cstdint>
#include <vector>

#include "jecrl/jpeg_model.hpp"

namespace jecrl {

// Deterministic toy cover: a smooth diagonal ramp on the left half and the
// same ramp plus uniform noise on the right, quantized at the given quality.
// The two halves give the cost-learning loop an unambiguous smooth/textured
// contrast to separate.
JpegImage synthetic_halfnoise_cover(int height, int width, int qf, uint64_t seed);

// count covers generated from consecutive per-image seeds seed, seed+1, ...
std::vector<JpegImage> synthetic_halfnoise_corpus(int count, int height,
                                                  int width, int qf,
                                                  uint64_t seed);

}  // namespace jecrl
