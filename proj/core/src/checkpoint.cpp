#include "jecrl/checkpoint.hpp"

#include "jecrl/error.hpp"
#include "jecrl/fsio.hpp"
#include "jecrl/layers.hpp"

namespace jecrl {

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const std::string* Checkpoint::find_blob(const std::string& name) const {
  for (const auto& [k, v] : blobs)
    if (k == name) return &v;
  return nullptr;
}

Checkpoint read_jckpt(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes.data(), bytes.size());
  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != "JCK1")
    throw DataError(path.string() + ": not a .jckpt file");
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != Checkpoint::kVersion)
    throw DataError(path.string() + ": unsupported checkpoint version " +
                    std::to_string(ckpt.version));
  const uint32_t ntensors = r.u32();
  ckpt.tensors.resize(ntensors);
  for (auto& t : ckpt.tensors) {
    const uint32_t nlen = r.u32();
    t.name.resize(nlen);
    r.bytes(t.name.data(), nlen);
    const uint8_t rank = r.u8();
    if (rank == 0 || rank > 4) throw DataError(path.string() + ": bad tensor rank");
    size_t numel = 1;
    t.shape.resize(rank);
    for (auto& d : t.shape) {
      d = static_cast<int>(r.u32());
      if (d <= 0) throw DataError(path.string() + ": bad tensor dimension");
      numel *= static_cast<size_t>(d);
    }
    t.data.resize(numel);
    for (auto& v : t.data) v = r.f32();
  }
  ckpt.step = r.u64();
  const uint32_t nblobs = r.u32();
  ckpt.blobs.resize(nblobs);
  for (auto& [name, data] : ckpt.blobs) {
    const uint32_t nlen = r.u32();
    name.resize(nlen);
    r.bytes(name.data(), nlen);
    const uint32_t dlen = r.u32();
    data.resize(dlen);
    r.bytes(data.data(), dlen);
  }
  if (r.remaining() != 0) throw DataError(path.string() + ": trailing bytes");
  return ckpt;
}

void write_jckpt(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ByteWriter w;
  w.bytes("JCK1", 4);
  w.u32(ckpt.version);
  w.u32(static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    w.u32(static_cast<uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u8(static_cast<uint8_t>(t.shape.size()));
    size_t numel = 1;
    for (int d : t.shape) {
      w.u32(static_cast<uint32_t>(d));
      numel *= static_cast<size_t>(d);
    }
    if (numel != t.data.size()) throw DataError("write_jckpt: shape/data mismatch");
    for (float v : t.data) w.f32(v);
  }
  w.u64(ckpt.step);
  w.u32(static_cast<uint32_t>(ckpt.blobs.size()));
  for (const auto& [name, data] : ckpt.blobs) {
    w.u32(static_cast<uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<uint32_t>(data.size()));
    w.bytes(data.data(), data.size());
  }
  write_file_atomic(path, w.buffer().data(), w.buffer().size());
}

std::vector<float> quantize_f32_inplace(std::vector<double>& values) {
  std::vector<float> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>(values[i]);
    values[i] = static_cast<double>(out[i]);
  }
  return out;
}

void load_params(const Checkpoint& ckpt, const std::vector<Param*>& params) {
  for (Param* p : params) {
    const NamedTensor* t = ckpt.find(p->name);
    if (!t) throw DataError("checkpoint missing parameter " + p->name);
    if (t->data.size() != p->t.v.size())
      throw DataError("checkpoint shape mismatch for " + p->name);
    for (size_t i = 0; i < t->data.size(); ++i)
      p->t.v[i] = static_cast<double>(t->data[i]);
  }
}

}  // namespace jecrl
