#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "jecrl/error.hpp"
#include "jecrl/jpeg_model.hpp"

// Minimal baseline-sequential decoder: enough to recover the quantized
// coefficients of single-component (grayscale) streams exactly as stored.
// Anything outside that envelope is rejected loudly rather than guessed at.

namespace jecrl {
namespace {

// zigzag index -> natural (row-major) index
constexpr int kZigzag[64] = {0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18,
                             11, 4,  5,  12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
                             13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43,
                             36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45,
                             38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

[[noreturn]] void malformed(const std::string& why) { throw DataError("malformed JPEG: " + why); }
[[noreturn]] void unsupported(const std::string& what) {
  throw DataError("unsupported JPEG variant: " + what);
}

struct Cursor {
  const uint8_t* p;
  const uint8_t* end;

  size_t left() const { return static_cast<size_t>(end - p); }
  uint8_t u8() {
    if (p >= end) malformed("truncated stream");
    return *p++;
  }
  int u16be() {
    const int hi = u8();
    return (hi << 8) | u8();
  }
  void skip(size_t n) {
    if (left() < n) malformed("truncated segment");
    p += n;
  }
};

// Canonical Huffman table in the decode form of the JPEG standard (F.2.2.3).
struct HuffTable {
  bool present = false;
  std::array<int, 17> mincode{}, maxcode{}, valptr{};
  std::vector<uint8_t> symbols;

  void build(const uint8_t counts[16], const uint8_t* syms, int total) {
    symbols.assign(syms, syms + total);
    int code = 0, k = 0;
    for (int len = 1; len <= 16; ++len) {
      if (counts[len - 1] == 0) {
        maxcode[len] = -1;  // no codes of this length
      } else {
        valptr[len] = k;
        mincode[len] = code;
        k += counts[len - 1];
        code += counts[len - 1];
        maxcode[len] = code - 1;
      }
      code <<= 1;
    }
    present = true;
  }
};

// Bit-level reader over the entropy-coded segment. Handles byte stuffing
// (FF 00) and stops hard at any real marker.
struct BitReader {
  Cursor& in;
  uint8_t cur = 0;
  int nbits = 0;

  int bit() {
    if (nbits == 0) {
      if (in.p >= in.end) malformed("truncated entropy data");
      uint8_t byte = *in.p++;
      if (byte == 0xFF) {
        if (in.p >= in.end) malformed("truncated entropy data");
        const uint8_t tag = *in.p++;
        if (tag == 0x00) {
          // stuffed literal FF
        } else if (tag >= 0xD0 && tag <= 0xD7) {
          unsupported("restart markers");
        } else {
          malformed("marker before end of scan");
        }
      }
      cur = byte;
      nbits = 8;
    }
    --nbits;
    return (cur >> nbits) & 1;
  }

  int receive(int n) {
    int v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | bit();
    return v;
  }

  int decode(const HuffTable& t) {
    int code = 0;
    for (int len = 1; len <= 16; ++len) {
      code = (code << 1) | bit();
      if (t.maxcode[len] >= code && code >= t.mincode[len] && t.maxcode[len] >= 0) {
        const int idx = t.valptr[len] + code - t.mincode[len];
        if (idx < 0 || idx >= static_cast<int>(t.symbols.size())) malformed("bad Huffman code");
        return t.symbols[idx];
      }
    }
    malformed("Huffman code longer than 16 bits");
  }
};

// Sign extension of an s-bit magnitude (JPEG "EXTEND" procedure).
int extend(int v, int s) { return s > 0 && v < (1 << (s - 1)) ? v - (1 << s) + 1 : v; }

}  // namespace

JpegImage parse_baseline_jpeg(std::span<const uint8_t> bytes) {
  Cursor in{bytes.data(), bytes.data() + bytes.size()};
  if (in.left() < 2 || in.u8() != 0xFF || in.u8() != 0xD8) malformed("missing SOI");

  std::array<QuantTable, 4> qtables;
  std::array<bool, 4> qpresent{};
  std::array<HuffTable, 4> dc_tables, ac_tables;

  int height = 0, width = 0, comp_tq = -1;
  bool have_sof = false;

  // ----- marker segments up to start-of-scan -----
  int dc_sel = 0, ac_sel = 0;
  for (;;) {
    uint8_t byte = in.u8();
    if (byte != 0xFF) malformed("expected marker");
    uint8_t marker = in.u8();
    while (marker == 0xFF) marker = in.u8();  // fill bytes
    if (marker == 0xD9) malformed("empty scan");  // EOI before SOS

    if (marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) continue;  // bare markers

    const int len = in.u16be();
    if (len < 2) malformed("bad segment length");
    Cursor seg{in.p, in.p + (len - 2)};
    if (in.left() < static_cast<size_t>(len - 2)) malformed("truncated segment");
    in.p += len - 2;

    if (marker == 0xDB) {  // DQT: one or more tables, zigzag order
      while (seg.left() > 0) {
        const int pq_tq = seg.u8();
        const int pq = pq_tq >> 4, tq = pq_tq & 15;
        if (pq > 1 || tq > 3) malformed("bad DQT header");
        QuantTable t;
        for (int z = 0; z < 64; ++z) {
          const int v = pq ? seg.u16be() : seg.u8();
          if (v < 1) malformed("zero quantization step");
          t.steps[kZigzag[z]] = static_cast<uint16_t>(v);
        }
        qtables[tq] = t;
        qpresent[tq] = true;
      }
    } else if (marker == 0xC0) {  // SOF0: baseline sequential
      if (have_sof) malformed("duplicate SOF");
      const int precision = seg.u8();
      if (precision != 8) unsupported("sample precision " + std::to_string(precision));
      height = seg.u16be();
      width = seg.u16be();
      const int nf = seg.u8();
      if (nf != 1) unsupported(std::to_string(nf) + "-component image");
      seg.u8();  // component id
      const int hv = seg.u8();
      if (hv != 0x11) unsupported("subsampled component");
      comp_tq = seg.u8();
      if (height <= 0 || width <= 0) malformed("bad dimensions");
      if (height % 8 != 0 || width % 8 != 0)
        throw DataError("unsupported geometry: dimensions must be multiples of 8");
      have_sof = true;
    } else if (marker == 0xC4) {  // DHT: one or more tables
      while (seg.left() > 0) {
        const int tc_th = seg.u8();
        const int tc = tc_th >> 4, th = tc_th & 15;
        if (tc > 1 || th > 3) malformed("bad DHT header");
        uint8_t counts[16];
        int total = 0;
        for (auto& c : counts) {
          c = seg.u8();
          total += c;
        }
        if (total > 256) malformed("oversized Huffman table");
        if (seg.left() < static_cast<size_t>(total)) malformed("truncated DHT");
        (tc == 0 ? dc_tables : ac_tables)[th].build(counts, seg.p, total);
        seg.skip(total);
      }
    } else if (marker == 0xDD) {  // DRI
      if (seg.u16be() != 0) unsupported("restart intervals");
    } else if (marker == 0xDA) {  // SOS
      if (!have_sof) malformed("SOS before SOF");
      const int ns = seg.u8();
      if (ns != 1) unsupported("multi-component scan");
      seg.u8();  // component selector
      const int td_ta = seg.u8();
      dc_sel = td_ta >> 4;
      ac_sel = td_ta & 15;
      const int ss = seg.u8(), se = seg.u8(), ah_al = seg.u8();
      if (ss != 0 || se != 63 || ah_al != 0) unsupported("non-baseline scan parameters");
      break;  // entropy-coded data follows
    } else if ((marker >= 0xC1 && marker <= 0xCF) && marker != 0xC4 && marker != 0xC8) {
      // SOF1..15 minus DHT/JPG: progressive, arithmetic, hierarchical, ...
      unsupported("SOF marker 0x" + std::to_string(marker));
    } else if ((marker >= 0xE0 && marker <= 0xEF) || marker == 0xFE) {
      // APPn / COM: metadata, ignored
    } else {
      unsupported("marker 0x" + std::to_string(marker));
    }
  }

  if (comp_tq < 0 || comp_tq > 3 || !qpresent[comp_tq]) malformed("missing quantization table");
  const HuffTable& dc = dc_tables[dc_sel];
  const HuffTable& ac = ac_tables[ac_sel];
  if (!dc.present || !ac.present) malformed("missing Huffman table");

  JpegImage img;
  img.height = height;
  img.width = width;
  img.table = qtables[comp_tq];
  img.coeffs = Grid<int32_t>(height, width);

  // ----- entropy-coded scan: one 8x8 block per MCU, row-major -----
  BitReader br{in};
  int pred = 0;
  for (int a = 0; a < height / 8; ++a) {
    for (int b = 0; b < width / 8; ++b) {
      int block[64] = {};
      const int t = br.decode(dc);
      if (t > 15) malformed("bad DC category");
      pred += extend(br.receive(t), t);
      block[0] = pred;
      for (int idx = 1; idx <= 63;) {
        const int rs = br.decode(ac);
        const int r = rs >> 4, s = rs & 15;
        if (s == 0) {
          if (r == 15) {  // ZRL: sixteen zeros
            idx += 16;
            continue;
          }
          break;  // EOB
        }
        idx += r;
        if (idx > 63) malformed("AC run past end of block");
        block[kZigzag[idx]] = extend(br.receive(s), s);
        ++idx;
      }
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l) img.coeff(a, b, k, l) = block[k * 8 + l];
    }
  }

  // ----- trailer: optional fill bytes, then EOI -----
  while (in.left() >= 2 && in.p[0] == 0xFF && in.p[1] == 0xFF) ++in.p;
  if (in.left() < 2 || in.p[0] != 0xFF || in.p[1] != 0xD9) malformed("missing EOI");

  img.validate();
  return img;
}

}  // namespace jecrl
