#pragma once
#include <array>
#include <vector>

#include "jecrl/distortion.hpp"
#include "jecrl/grid.hpp"
#include "jecrl/jpeg_model.hpp"

namespace jecrl {

// Per-block energy E_{a,b} = Σ |x|·s, one entry per 8×8 block.
using BlockEnergyMap = RealGrid;

// Pixel-level texture complexity; one Grid per channel (3 for the wavelet
// provider, 1 for the block-energy provider).
using TextureMap = std::vector<RealGrid>;

BlockEnergyMap block_energy(const JpegImage& image);

// 1 / (E + 0.25·Σ existing 8-neighbors). Neighbors outside the image are
// omitted, not zero-padded; an all-zero neighborhood yields the wet sentinel.
RealGrid block_suitability(const BlockEnergyMap& energy);

// DC mode gets 0.5·(s_{1,0} + s_{0,1}) (zero-based); AC modes their own step.
RealGrid mode_suitability(const QuantTable& table);

// UERD: cost = block suitability × mode suitability, broadcast per block.
CostMap uerd_cost(const JpegImage& image);

// Directional residual magnitudes |pixels ⊛ K_c| for the three 8×8 wavelet
// kernels LH/HL/HH (outer products of the 8-tap decomposition pair),
// mirror-padded. Channels ordered LH, HL, HH.
TextureMap wavelet_texture(const PixelPlane& pixels);

// Neighborhood-weighted block energy, nearest-neighbor upsampled 8× to pixel
// resolution (single channel).
TextureMap msu_texture(const JpegImage& image);

// The three wavelet kernels as 8×8 row-major grids (exposed for tests).
std::array<RealGrid, 3> wavelet_kernels();

}  // namespace jecrl
