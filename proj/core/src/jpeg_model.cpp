#include "jecrl/jpeg_model.hpp"

#include <cmath>
#include <limits>

#include "jecrl/error.hpp"
#include "jecrl/fsio.hpp"

namespace jecrl {

void QuantTable::validate() const {
  for (auto s : steps)
    if (s < 1) throw DataError("QuantTable: steps must be >= 1");
}

void JpegImage::validate() const {
  if (height <= 0 || width <= 0 || height % 8 != 0 || width % 8 != 0)
    throw DataError("JpegImage: dimensions must be positive multiples of 8");
  if (!coeffs.same_shape(height, width))
    throw DataError("JpegImage: coefficient grid shape mismatch");
  table.validate();
}

DctBasisBank build_dct_basis() {
  DctBasisBank bank;
  constexpr double kPi = 3.14159265358979323846;
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      const double wu = u == 0 ? 1.0 : std::sqrt(2.0);
      const double wv = v == 0 ? 1.0 : std::sqrt(2.0);
      double* f = &bank.z_[(static_cast<size_t>(u) * 8 + v) * 64];
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          f[i * 8 + j] = (wu * wv / 8.0) * std::cos(kPi * u * (2 * i + 1) / 16.0) *
                         std::cos(kPi * v * (2 * j + 1) / 16.0);
    }
  }
  return bank;
}

const DctBasisBank& dct_basis() {
  static const DctBasisBank bank = build_dct_basis();
  return bank;
}

PixelPlane decompress(const JpegImage& image, bool level_shift) {
  image.validate();
  const DctBasisBank& bank = dct_basis();
  PixelPlane plane(image.height, image.width, level_shift ? 128.0 : 0.0);
  for (int a = 0; a < image.blocks_y(); ++a) {
    for (int b = 0; b < image.blocks_x(); ++b) {
      for (int k = 0; k < 8; ++k) {
        for (int l = 0; l < 8; ++l) {
          const double c = image.coeff(a, b, k, l);
          if (c == 0.0) continue;
          const double scaled = c * image.table.at(k, l);
          const double* f = bank.filter(k, l);
          for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
              plane.at(8 * a + i, 8 * b + j) += scaled * f[i * 8 + j];
        }
      }
    }
  }
  return plane;
}

RealGrid blockwise_dct(const PixelPlane& plane) {
  if (plane.height() % 8 != 0 || plane.width() % 8 != 0 || plane.empty())
    throw DataError("blockwise_dct: dimensions must be positive multiples of 8");
  const DctBasisBank& bank = dct_basis();
  RealGrid out(plane.height(), plane.width());
  for (int a = 0; a < plane.height() / 8; ++a) {
    for (int b = 0; b < plane.width() / 8; ++b) {
      for (int k = 0; k < 8; ++k) {
        for (int l = 0; l < 8; ++l) {
          const double* f = bank.filter(k, l);
          double acc = 0.0;
          for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
              acc += plane.at(8 * a + i, 8 * b + j) * f[i * 8 + j];
          out.at(8 * a + k, 8 * b + l) = acc;
        }
      }
    }
  }
  return out;
}

JpegImage quantize_plane(const PixelPlane& plane, const QuantTable& table, bool level_shift) {
  table.validate();
  PixelPlane shifted = plane;
  if (level_shift)
    for (auto& v : shifted) v -= 128.0;
  const RealGrid raw = blockwise_dct(shifted);
  JpegImage img;
  img.height = plane.height();
  img.width = plane.width();
  img.table = table;
  img.coeffs = Grid<int32_t>(img.height, img.width);
  for (int i = 0; i < img.height; ++i)
    for (int j = 0; j < img.width; ++j)
      img.coeffs.at(i, j) =
          static_cast<int32_t>(std::lround(raw.at(i, j) / table.at(i % 8, j % 8)));
  return img;
}

QuantTable quality_to_quant_table(int qf) {
  if (qf < 1 || qf > 100) throw DataError("quality factor must be in 1..100");
  // Annex-K luminance base table, natural (row-major) order.
  static constexpr int kBase[64] = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  const int scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
  QuantTable t;
  for (int i = 0; i < 64; ++i) {
    int s = (kBase[i] * scale + 50) / 100;
    if (s < 1) s = 1;
    if (s > 255) s = 255;
    t.steps[i] = static_cast<uint16_t>(s);
  }
  return t;
}

int64_t count_nzac(const JpegImage& image) {
  image.validate();
  int64_t n = 0;
  for (int i = 0; i < image.height; ++i)
    for (int j = 0; j < image.width; ++j)
      if ((i % 8 != 0 || j % 8 != 0) && image.coeffs.at(i, j) != 0) ++n;
  return n;
}

JpegImage read_jcoef(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes.data(), bytes.size());
  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != "JCF1") throw DataError(path.string() + ": not a .jcoef file");
  JpegImage img;
  img.height = static_cast<int>(r.u32());
  img.width = static_cast<int>(r.u32());
  if (img.height <= 0 || img.width <= 0 || img.height % 8 || img.width % 8)
    throw DataError(path.string() + ": bad dimensions");
  for (auto& s : img.table.steps) s = r.u16();
  img.coeffs = Grid<int32_t>(img.height, img.width);
  for (auto& c : img.coeffs) c = r.i16();
  if (r.remaining() != 0) throw DataError(path.string() + ": trailing bytes");
  img.validate();
  return img;
}

void write_jcoef(const std::filesystem::path& path, const JpegImage& image) {
  image.validate();
  ByteWriter w;
  w.bytes("JCF1", 4);
  w.u32(static_cast<uint32_t>(image.height));
  w.u32(static_cast<uint32_t>(image.width));
  for (auto s : image.table.steps) w.u16(s);
  for (auto c : image.coeffs) {
    if (c < std::numeric_limits<int16_t>::min() || c > std::numeric_limits<int16_t>::max())
      throw DataError("write_jcoef: coefficient out of i16 range");
    w.i16(static_cast<int16_t>(c));
  }
  write_file_atomic(path, w.buffer().data(), w.buffer().size());
}

}  // namespace jecrl
