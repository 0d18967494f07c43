#pragma once
#include <cstdint>
#include <iosfwd>
#include <random>

namespace jecrl {

// Deterministic random source. Wraps mt19937_64 but maps to doubles by hand:
// the standard's distribution objects are implementation-defined, and we need
// bit-identical streams for reproducible runs and resumable checkpoints.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1): top 53 bits of the engine output.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Integer uniform on [0, n) via rejection (unbiased).
  uint64_t below(uint64_t n);

  // Standard normal via Box-Muller; one spare value is cached.
  double normal();

  // Engine + spare state, round-trippable as text (mt19937_64 streaming is
  // pinned by the standard, so this is portable).
  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace jecrl
