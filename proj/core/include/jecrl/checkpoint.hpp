#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace jecrl {

// ".jckpt" checkpoint container (magic JCK1). Tensor payloads are f32 —
// callers that need bit-exact resume must quantize their live f64 state to
// f32 at save time so the in-memory and on-disk values agree.
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct Checkpoint {
  static constexpr uint32_t kVersion = 1;
  uint32_t version = kVersion;
  std::vector<NamedTensor> tensors;
  uint64_t step = 0;
  // Opaque named state (RNG streams, data-order cursors), stored verbatim.
  std::vector<std::pair<std::string, std::string>> blobs;

  const NamedTensor* find(const std::string& name) const;
  const std::string* find_blob(const std::string& name) const;
};

Checkpoint read_jckpt(const std::filesystem::path& path);
void write_jckpt(const std::filesystem::path& path, const Checkpoint& ckpt);

// Rounds a double buffer through f32 in place and returns the f32 image.
std::vector<float> quantize_f32_inplace(std::vector<double>& values);

struct Param;  // layers.hpp
// Copies checkpoint tensors into the named parameters; every parameter must
// be present with a matching element count.
void load_params(const Checkpoint& ckpt, const std::vector<Param*>& params);

}  // namespace jecrl
