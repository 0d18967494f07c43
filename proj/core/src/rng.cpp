#include "jecrl/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "jecrl/error.hpp"

namespace jecrl {

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw DataError("Rng::below: n must be positive");
  // Rejection sampling over the largest multiple of n.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = eng_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1-u keeps the log argument strictly positive.
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

void Rng::save(std::ostream& os) const {
  os << eng_ << '\n' << (have_spare_ ? 1 : 0) << '\n';
  // The spare is serialized via its bit pattern to stay exact.
  const auto bits = *reinterpret_cast<const uint64_t*>(&spare_);
  os << bits << '\n';
}

void Rng::load(std::istream& is) {
  int flag = 0;
  uint64_t bits = 0;
  is >> eng_ >> flag >> bits;
  if (!is) throw DataError("Rng::load: truncated state");
  have_spare_ = flag != 0;
  spare_ = *reinterpret_cast<const double*>(&bits);
}

}  // namespace jecrl
