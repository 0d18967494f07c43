#include <stdio.h>  // libjpeg needs FILE before jpeglib.h
#include <jpeglib.h>

#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "jecrl/error.hpp"
#include "jecrl/jpeg_model.hpp"
#include "jecrl/rng.hpp"

using namespace jecrl;

namespace {

// Reference-encoder JPEG of a grayscale plane, in memory.
std::vector<uint8_t> encode_gray(const std::vector<uint8_t>& pixels, int h, int w,
                                 int quality, bool progressive = false) {
  jpeg_compress_struct c;
  jpeg_error_mgr err;
  c.err = jpeg_std_error(&err);
  jpeg_create_compress(&c);

  unsigned char* buf = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&c, &buf, &size);

  c.image_width = static_cast<JDIMENSION>(w);
  c.image_height = static_cast<JDIMENSION>(h);
  c.input_components = 1;
  c.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&c);
  jpeg_set_quality(&c, quality, TRUE);
  c.optimize_coding = TRUE;
  if (progressive) jpeg_simple_progression(&c);

  jpeg_start_compress(&c, TRUE);
  while (c.next_scanline < c.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(&pixels[static_cast<size_t>(c.next_scanline) * w]);
    jpeg_write_scanlines(&c, &row, 1);
  }
  jpeg_finish_compress(&c);
  jpeg_destroy_compress(&c);

  std::vector<uint8_t> out(buf, buf + size);
  free(buf);
  return out;
}

// The reference decoder's view of the quantized coefficients.
Grid<int32_t> reference_coefficients(const std::vector<uint8_t>& jpeg, int h, int w) {
  jpeg_decompress_struct d;
  jpeg_error_mgr err;
  d.err = jpeg_std_error(&err);
  jpeg_create_decompress(&d);
  jpeg_mem_src(&d, const_cast<uint8_t*>(jpeg.data()), jpeg.size());
  jpeg_read_header(&d, TRUE);
  jvirt_barray_ptr* arrays = jpeg_read_coefficients(&d);

  Grid<int32_t> coeffs(h, w);
  const jpeg_component_info& comp = d.comp_info[0];
  for (JDIMENSION row = 0; row < comp.height_in_blocks; ++row) {
    JBLOCKARRAY rows = d.mem->access_virt_barray(
        reinterpret_cast<j_common_ptr>(&d), arrays[0], row, 1, FALSE);
    for (JDIMENSION col = 0; col < comp.width_in_blocks; ++col)
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l)
          coeffs.at(static_cast<int>(row) * 8 + k, static_cast<int>(col) * 8 + l) =
              rows[0][col][k * 8 + l];
  }
  jpeg_finish_decompress(&d);
  jpeg_destroy_decompress(&d);
  return coeffs;
}

std::vector<uint8_t> random_pixels(int h, int w, uint64_t seed) {
  Rng rng(seed);
  std::vector<uint8_t> px(static_cast<size_t>(h) * w);
  for (size_t i = 0; i < px.size(); ++i) {
    // Smooth gradient plus noise: exercises both short and long Huffman codes.
    const int base = static_cast<int>((i % w) * 2 % 200);
    px[i] = static_cast<uint8_t>(std::min<uint64_t>(255, base + rng.below(56)));
  }
  return px;
}

}  // namespace

TEST_CASE("parser matches the reference decoder coefficient for coefficient") {
  for (auto [h, w, q, seed] : {std::tuple{32, 40, 85, 1ull},
                               std::tuple{64, 64, 75, 2ull},
                               std::tuple{16, 16, 95, 3ull}}) {
    const std::vector<uint8_t> jpeg = encode_gray(random_pixels(h, w, seed), h, w, q);
    const JpegImage img = parse_baseline_jpeg(jpeg);
    REQUIRE(img.height == h);
    REQUIRE(img.width == w);
    const Grid<int32_t> want = reference_coefficients(jpeg, h, w);
    int mismatches = 0;
    for (size_t i = 0; i < want.size(); ++i)
      if (img.coeffs[i] != want[i]) ++mismatches;
    CHECK(mismatches == 0);
  }
}

TEST_CASE("parser recovers the encoder's quantization table") {
  const int h = 16, w = 16;
  const std::vector<uint8_t> jpeg = encode_gray(random_pixels(h, w, 4), h, w, 75);
  const JpegImage img = parse_baseline_jpeg(jpeg);
  CHECK(img.table == quality_to_quant_table(75));
}

TEST_CASE("single-block constant image decodes to a lone DC coefficient") {
  const std::vector<uint8_t> px(64, 192);
  const std::vector<uint8_t> jpeg = encode_gray(px, 8, 8, 75);
  const JpegImage img = parse_baseline_jpeg(jpeg);
  CHECK(img.coeff(0, 0, 0, 0) != 0);
  int nonzero = 0;
  for (int32_t c : img.coeffs) nonzero += (c != 0);
  CHECK(nonzero == 1);
}

TEST_CASE("parser error classes") {
  const std::vector<uint8_t> px = random_pixels(16, 16, 5);
  std::vector<uint8_t> jpeg = encode_gray(px, 16, 16, 75);

  SUBCASE("missing EOI is malformed") {
    jpeg.resize(jpeg.size() - 2);
    CHECK_THROWS_WITH_AS(parse_baseline_jpeg(jpeg), doctest::Contains("malformed"),
                         DataError);
  }
  SUBCASE("progressive streams are rejected as unsupported") {
    const std::vector<uint8_t> prog = encode_gray(px, 16, 16, 75, /*progressive=*/true);
    CHECK_THROWS_WITH_AS(parse_baseline_jpeg(prog), doctest::Contains("unsupported"),
                         DataError);
  }
  SUBCASE("garbage is malformed") {
    std::vector<uint8_t> junk(100, 0x55);
    CHECK_THROWS_AS(parse_baseline_jpeg(junk), DataError);
  }
  SUBCASE("empty input is malformed") {
    CHECK_THROWS_AS(parse_baseline_jpeg(std::vector<uint8_t>{}), DataError);
  }
}
