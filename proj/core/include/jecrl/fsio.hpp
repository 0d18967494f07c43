#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace jecrl {

// Whole-file helpers. Writes go to a sibling temp file first and are renamed
// into place, so readers never observe a half-written artifact.
std::vector<uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const void* data, size_t size);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// Little-endian scalar plumbing for the binary containers.
class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : p_(data), end_(data + size) {}
  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  int16_t i16() { return static_cast<int16_t>(u16()); }
  float f32();
  void bytes(void* out, size_t n);
  size_t remaining() const { return static_cast<size_t>(end_ - p_); }

 private:
  void need(size_t n);
  const uint8_t* p_;
  const uint8_t* end_;
};

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void i16(int16_t v) { u16(static_cast<uint16_t>(v)); }
  void f32(float v);
  void bytes(const void* data, size_t n);
  const std::vector<uint8_t>& buffer() const { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

// FNV-1a 64-bit content fingerprint (hex), used by run manifests.
std::string fnv1a_hex(const void* data, size_t size);
std::string file_digest(const std::filesystem::path& path);

}  // namespace jecrl
