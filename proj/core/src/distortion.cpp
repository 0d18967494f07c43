#include "jecrl/distortion.hpp"

#include <cmath>
#include <cstdlib>

#include "jecrl/error.hpp"
#include "jecrl/fsio.hpp"
#include "jecrl/rng.hpp"

namespace jecrl {

PolicyTensor::PolicyTensor(RealGrid q) : q_(std::move(q)) {
  for (double v : q_)
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("PolicyTensor: change probability outside [0,1]");
}

double PayloadSpec::resolve_bits(const JpegImage& image) const {
  if (value < 0) throw DataError("payload must be nonnegative");
  const double bits =
      mode == Mode::kBits ? value : value * static_cast<double>(count_nzac(image));
  const double cap = static_cast<double>(image.height) * image.width * std::log2(3.0);
  if (bits > cap) throw DataError("infeasible payload: exceeds the ternary entropy bound");
  return bits;
}

PayloadSpec PayloadSpec::parse(const std::string& text) {
  PayloadSpec spec;
  size_t pos = 0;
  double v;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw DataError("bad payload '" + text + "': expected <number>bits or <number>bpnzAC");
  }
  const std::string suffix = text.substr(pos);
  if (suffix == "bits")
    spec.mode = Mode::kBits;
  else if (suffix == "bpnzAC")
    spec.mode = Mode::kBpnzAC;
  else
    throw DataError("bad payload suffix '" + suffix + "': expected 'bits' or 'bpnzAC'");
  if (v < 0) throw DataError("payload must be nonnegative");
  spec.value = v;
  return spec;
}

double additive_distortion(const JpegImage& x, const JpegImage& y, const CostMap& costs) {
  if (!x.coeffs.same_shape(y.coeffs) || !costs.same_shape(x.coeffs))
    throw DataError("additive_distortion: dimension mismatch");
  double total = 0.0;
  for (size_t i = 0; i < costs.size(); ++i) {
    const int m = y.coeffs[i] - x.coeffs[i];
    if (m < -1 || m > 1) throw DataError("additive_distortion: |y - x| > 1");
    if (m != 0) total += costs[i];
  }
  return total;
}

PolicyTensor probabilities_from_costs(const CostMap& costs, double lambda) {
  if (lambda < 0) throw DataError("probabilities_from_costs: negative lambda");
  RealGrid q(costs.height(), costs.width());
  for (size_t i = 0; i < costs.size(); ++i) {
    const double rho = costs[i];
    if (rho < 0) throw DataError("probabilities_from_costs: negative cost");
    if (rho >= kWetCost / 2) {
      q[i] = 0.0;  // wet coefficient: never modified
      continue;
    }
    const double e = std::exp(-lambda * rho);
    q[i] = 2.0 * e / (1.0 + 2.0 * e);
  }
  return PolicyTensor(std::move(q));
}

double ternary_entropy_bits(double q) {
  double h = 0.0;
  const double half = q / 2.0;
  if (half > 0.0) h -= 2.0 * half * std::log2(half);
  const double p0 = 1.0 - q;
  if (p0 > 0.0) h -= p0 * std::log2(p0);
  return h;
}

double payload_entropy(const PolicyTensor& policy) {
  double bits = 0.0;
  const RealGrid& q = policy.change_prob();
  for (double v : q) bits += ternary_entropy_bits(v);
  return bits;
}

double solve_lambda(const CostMap& costs, double target_bits) {
  const double n = static_cast<double>(costs.size());
  if (!(target_bits > 0.0) || target_bits >= n * std::log2(3.0) + 1e-9)
    throw DataError("solve_lambda: payload outside (0, N*log2(3))");
  const auto entropy_at = [&](double lam) {
    return payload_entropy(probabilities_from_costs(costs, lam));
  };
  constexpr double kTolBits = 1e-3;
  constexpr int kMaxIter = 200;

  // λ=0 is the entropy maximum; a target at (or numerically above) it is
  // already met at the bracket's low end.
  if (entropy_at(0.0) <= target_bits + kTolBits) return 0.0;

  double lo = 0.0, hi = 1.0;
  int iters = 0;
  while (entropy_at(hi) > target_bits) {
    lo = hi;
    hi *= 2.0;
    if (++iters > kMaxIter) throw NumericError("solve_lambda: bracket expansion failed");
  }
  for (int i = 0; i < kMaxIter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double h = entropy_at(mid);
    if (std::abs(h - target_bits) < kTolBits) return mid;
    (h > target_bits ? lo : hi) = mid;
  }
  throw NumericError("solve_lambda: no convergence in 200 bisection steps");
}

ModificationMap simulate_embedding(const PolicyTensor& policy, uint64_t seed) {
  Rng rng(seed);
  const RealGrid& q = policy.change_prob();
  ModificationMap map(q.height(), q.width());
  for (size_t i = 0; i < q.size(); ++i) {
    const double u = rng.uniform();
    const double half = q[i] / 2.0;
    map[i] = u < half ? int8_t{-1} : (u < 1.0 - half ? int8_t{0} : int8_t{1});
  }
  return map;
}

CostMap costs_from_policy(const RealGrid& q) {
  // The ceiling sits at 2/3 itself so the uniform-policy fixed point
  // q = 2/3 -> rho = ln(1) = 0 holds exactly (2.0 / double(2/3) rounds to
  // exactly 3.0); anything above clamps to zero cost rather than going
  // negative, and the floor keeps saturated probabilities at a finite
  // wet-like cost.
  constexpr double kFloor = 1e-6;
  constexpr double kCeil = 2.0 / 3.0;
  CostMap costs(q.height(), q.width());
  for (size_t i = 0; i < q.size(); ++i) {
    const double qi = std::min(std::max(q[i], kFloor), kCeil);
    costs[i] = std::log(2.0 / qi - 2.0);
  }
  return costs;
}

// ----- .jmap container -----

JmapData read_jmap(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes.data(), bytes.size());
  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != "JMP1") throw DataError(path.string() + ": not a .jmap file");
  JmapData d;
  d.height = static_cast<int>(r.u32());
  d.width = static_cast<int>(r.u32());
  d.channels = r.u8();
  if (d.height <= 0 || d.width <= 0 || d.channels <= 0)
    throw DataError(path.string() + ": bad .jmap header");
  const size_t n = static_cast<size_t>(d.height) * d.width * d.channels;
  d.values.resize(n);
  for (auto& v : d.values) v = r.f32();
  if (r.remaining() != 0) throw DataError(path.string() + ": trailing bytes");
  return d;
}

void write_jmap(const std::filesystem::path& path, const JmapData& data) {
  if (data.values.size() !=
      static_cast<size_t>(data.height) * data.width * data.channels)
    throw DataError("write_jmap: value count does not match header");
  ByteWriter w;
  w.bytes("JMP1", 4);
  w.u32(static_cast<uint32_t>(data.height));
  w.u32(static_cast<uint32_t>(data.width));
  w.u8(static_cast<uint8_t>(data.channels));
  for (float v : data.values) w.f32(v);
  write_file_atomic(path, w.buffer().data(), w.buffer().size());
}

CostMap costmap_from_jmap(const JmapData& data) {
  if (data.channels != 1) throw DataError("cost map .jmap must have 1 channel");
  CostMap costs(data.height, data.width);
  for (size_t i = 0; i < costs.size(); ++i) {
    costs[i] = data.values[i];
    if (!(costs[i] >= 0.0)) throw DataError("cost map entry negative or NaN");
  }
  return costs;
}

JmapData jmap_from_costmap(const CostMap& costs) {
  JmapData d;
  d.height = costs.height();
  d.width = costs.width();
  d.channels = 1;
  d.values.reserve(costs.size());
  for (double v : costs) d.values.push_back(static_cast<float>(v));
  return d;
}

PolicyTensor policy_from_jmap(const JmapData& data) {
  if (data.channels != 3) throw DataError("policy .jmap must have 3 channels");
  RealGrid q(data.height, data.width);
  for (int i = 0; i < data.height; ++i) {
    for (int j = 0; j < data.width; ++j) {
      const double pm = data.at(i, j, 0), p0 = data.at(i, j, 1), pp = data.at(i, j, 2);
      if (std::abs(pm + p0 + pp - 1.0) > 1e-6 || std::abs(pm - pp) > 1e-6)
        throw DataError("policy .jmap violates the symmetric-triple invariants");
      q.at(i, j) = pm + pp;
    }
  }
  return PolicyTensor(std::move(q));
}

JmapData jmap_from_policy(const PolicyTensor& policy) {
  JmapData d;
  d.height = policy.height();
  d.width = policy.width();
  d.channels = 3;
  d.values.reserve(static_cast<size_t>(d.height) * d.width * 3);
  for (int i = 0; i < d.height; ++i) {
    for (int j = 0; j < d.width; ++j) {
      d.values.push_back(static_cast<float>(policy.pi_minus(i, j)));
      d.values.push_back(static_cast<float>(policy.pi_zero(i, j)));
      d.values.push_back(static_cast<float>(policy.pi_plus(i, j)));
    }
  }
  return d;
}

ModificationMap modification_from_jmap(const JmapData& data) {
  if (data.channels != 1) throw DataError("modification .jmap must have 1 channel");
  ModificationMap map(data.height, data.width);
  for (size_t i = 0; i < map.size(); ++i) {
    const float v = data.values[i];
    if (v != -1.0f && v != 0.0f && v != 1.0f)
      throw DataError("modification .jmap entry outside {-1,0,+1}");
    map[i] = static_cast<int8_t>(v);
  }
  return map;
}

JmapData jmap_from_modification(const ModificationMap& map) {
  JmapData d;
  d.height = map.height();
  d.width = map.width();
  d.channels = 1;
  d.values.reserve(map.size());
  for (auto m : map) d.values.push_back(static_cast<float>(m));
  return d;
}

}  // namespace jecrl
