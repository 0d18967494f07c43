#include "jecrl/fsio.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "jecrl/error.hpp"

namespace jecrl {

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const auto size = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> buf(static_cast<size_t>(size));
  if (size > 0) f.read(reinterpret_cast<char*>(buf.data()), size);
  if (!f) throw DataError("short read on " + path.string());
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const void* data, size_t size) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open " + tmp + " for writing");
    if (size > 0) f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    f.flush();
    if (!f) throw DataError("short write on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("rename " + tmp + " -> " + path.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

void ByteReader::need(size_t n) {
  if (static_cast<size_t>(end_ - p_) < n) throw DataError("truncated binary stream");
}

uint8_t ByteReader::u8() {
  need(1);
  return *p_++;
}

uint16_t ByteReader::u16() {
  need(2);
  uint16_t v = static_cast<uint16_t>(p_[0] | (p_[1] << 8));
  p_ += 2;
  return v;
}

uint32_t ByteReader::u32() {
  need(4);
  uint32_t v = static_cast<uint32_t>(p_[0]) | (static_cast<uint32_t>(p_[1]) << 8) |
               (static_cast<uint32_t>(p_[2]) << 16) | (static_cast<uint32_t>(p_[3]) << 24);
  p_ += 4;
  return v;
}

uint64_t ByteReader::u64() {
  const uint64_t lo = u32();
  const uint64_t hi = u32();
  return lo | (hi << 32);
}

float ByteReader::f32() {
  const uint32_t bits = u32();
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void ByteReader::bytes(void* out, size_t n) {
  need(n);
  std::memcpy(out, p_, n);
  p_ += n;
}

void ByteWriter::u16(uint16_t v) {
  buf_.push_back(static_cast<uint8_t>(v & 0xff));
  buf_.push_back(static_cast<uint8_t>(v >> 8));
}

void ByteWriter::u32(uint32_t v) {
  for (int s = 0; s < 32; s += 8) buf_.push_back(static_cast<uint8_t>((v >> s) & 0xff));
}

void ByteWriter::u64(uint64_t v) {
  u32(static_cast<uint32_t>(v & 0xffffffffu));
  u32(static_cast<uint32_t>(v >> 32));
}

void ByteWriter::f32(float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  u32(bits);
}

void ByteWriter::bytes(const void* data, size_t n) {
  const auto* p = reinterpret_cast<const uint8_t*>(data);
  buf_.insert(buf_.end(), p, p + n);
}

std::string fnv1a_hex(const void* data, size_t size) {
  const auto* p = reinterpret_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return fnv1a_hex(bytes.data(), bytes.size());
}

}  // namespace jecrl
