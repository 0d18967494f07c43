// Acceptance harness: the twelve end-to-end guarantees the library ships
// under, each verified at its stated tolerance and printed as one PASS/FAIL
// line. Exits with the number of failed criteria (0 = all green).
//
// Build as a standalone binary (no doctest) so a plain run gives the
// one-screen summary:
//
//   [PASS] 01 dct basis orthonormality and block round trip      (0.8s)
//   ...
#include <stdio.h>  // libjpeg needs FILE before jpeglib.h
#include <jpeglib.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "jecrl/analysis.hpp"
#include "jecrl/checkpoint.hpp"
#include "jecrl/config.hpp"
#include "jecrl/distortion.hpp"
#include "jecrl/env_net.hpp"
#include "jecrl/error.hpp"
#include "jecrl/filter_banks.hpp"
#include "jecrl/jpeg_model.hpp"
#include "jecrl/policy_net.hpp"
#include "jecrl/rng.hpp"
#include "jecrl/synthetic.hpp"
#include "jecrl/trainer.hpp"
#include "jecrl/uerd.hpp"
#include "test_util.hpp"

using namespace jecrl;
namespace fs = std::filesystem;

namespace {

std::string failf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::path(JEC_TEST_TMPDIR) / "acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 01 — the 64 DCT basis filters are orthonormal to 1e-10, and synthesizing a
// coefficient grid to pixels then analyzing it back recovers the dequantized
// values to 1e-9 on 1000 random grids, in under 5 seconds.
std::string crit_dct_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  const DctBasisBank& basis = dct_basis();
  double worst_gram = 0.0;
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v)
      for (int u2 = 0; u2 < 8; ++u2)
        for (int v2 = 0; v2 < 8; ++v2) {
          double dot = 0.0;
          for (int t = 0; t < 64; ++t)
            dot += basis.filter(u, v)[t] * basis.filter(u2, v2)[t];
          const double want = (u == u2 && v == v2) ? 1.0 : 0.0;
          worst_gram = std::max(worst_gram, std::abs(dot - want));
        }
  if (worst_gram >= 1e-10)
    return failf("gram deviation %.3g >= 1e-10", worst_gram);

  Rng rng(101);
  double worst_rt = 0.0;
  const int qfs[3] = {50, 75, 95};
  for (int trial = 0; trial < 1000; ++trial) {
    const JpegImage img = testutil::random_image(16, 16, rng, qfs[trial % 3]);
    const PixelPlane plane = decompress(img, /*level_shift=*/false);
    const RealGrid freq = blockwise_dct(plane);
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        const double recovered =
            freq.at(i, j) / static_cast<double>(img.table.at(i % 8, j % 8));
        worst_rt = std::max(
            worst_rt, std::abs(recovered - static_cast<double>(img.coeffs.at(i, j))));
      }
  }
  if (worst_rt >= 1e-9) return failf("round-trip deviation %.3g >= 1e-9", worst_rt);
  const double dt = seconds_since(t0);
  if (dt >= 5.0) return failf("took %.2fs, budget 5s", dt);
  return "";
}

// ---------------------------------------------------------------------------
// 02 — the payload solver lands within 1e-3 bits of the requested entropy on
// 100 random cost maps at 10%/30%/50% of capacity, lambda is monotone in the
// payload, all in under 10 seconds.
std::string crit_lambda_solver() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const CostMap costs = testutil::random_grid(16, 16, rng, 0.1, 8.0);
    const double cap = 256.0 * std::log2(3.0);
    double prev_lambda = -1.0;
    for (const double frac : {0.1, 0.3, 0.5}) {
      const double target = frac * cap;
      const double lambda = solve_lambda(costs, target);
      const double got = payload_entropy(probabilities_from_costs(costs, lambda));
      if (std::abs(got - target) > 1e-3)
        return failf("trial %d frac %.1f: |%.6f - %.6f| > 1e-3 bits", trial, frac,
                     got, target);
      // Smaller payloads need harder suppression: lambda must fall as the
      // fraction rises.
      if (prev_lambda >= 0.0 && lambda >= prev_lambda)
        return failf("trial %d: lambda not monotone (%.6g -> %.6g)", trial,
                     prev_lambda, lambda);
      prev_lambda = lambda;
    }
    // Entropy itself decreases strictly in lambda.
    double prev_h = 1e300;
    for (int k = 0; k < 10; ++k) {
      const double h =
          payload_entropy(probabilities_from_costs(costs, 0.25 * (k + 1)));
      if (h >= prev_h)
        return failf("trial %d: entropy not decreasing in lambda at %.2f", trial,
                     0.25 * (k + 1));
      prev_h = h;
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 10.0) return failf("took %.2fs, budget 10s", dt);
  return "";
}

// ---------------------------------------------------------------------------
// 03 — cost-from-probability inverts probability-from-cost at lambda = 1 to
// 1e-9 across q in [0.01, 0.66], and the q = 2/3 <-> rho = 0 fixed point is
// exact in both directions.
std::string crit_cost_probability_identity() {
  for (double q = 0.01; q <= 0.66 + 1e-12; q += 0.001) {
    RealGrid one(1, 1, q);
    const CostMap rho = costs_from_policy(one);
    const PolicyTensor back = probabilities_from_costs(rho, 1.0);
    if (std::abs(back.change_prob().at(0, 0) - q) > 1e-9)
      return failf("q=%.3f round trip off by %.3g", q,
                   std::abs(back.change_prob().at(0, 0) - q));
  }
  const CostMap rho_fp = costs_from_policy(RealGrid(1, 1, 2.0 / 3.0));
  if (rho_fp.at(0, 0) != 0.0)
    return failf("q=2/3 must give rho exactly 0, got %.17g", rho_fp.at(0, 0));
  for (const double lambda : {0.25, 1.0, 7.5}) {
    const PolicyTensor p = probabilities_from_costs(CostMap(1, 1, 0.0), lambda);
    if (p.change_prob().at(0, 0) != 2.0 / 3.0)
      return failf("rho=0 at lambda=%.2f must give q exactly 2/3, got %.17g",
                   lambda, p.change_prob().at(0, 0));
    if (p.pi_plus(0, 0) != 1.0 / 3.0)
      return failf("rho=0 must give pi(+1) exactly 1/3");
  }
  return "";
}

// ---------------------------------------------------------------------------
// 04 — library UERD costs match an independent transcription (block energies
// by quadruple loop, 0.5(s_21 + s_12) DC rule, explicit suitability product)
// to 1e-9 on 20 random 32x32 images.
CostMap uerd_transcription(const JpegImage& img) {
  const int by = img.blocks_y(), bx = img.blocks_x();
  RealGrid energy(by, bx);
  for (int a = 0; a < by; ++a)
    for (int b = 0; b < bx; ++b) {
      double e = 0.0;
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l)
          e += std::abs(static_cast<double>(img.coeff(a, b, k, l))) *
               img.table.at(k, l);
      energy.at(a, b) = e;
    }
  RealGrid mode(8, 8);
  for (int k = 0; k < 8; ++k)
    for (int l = 0; l < 8; ++l) mode.at(k, l) = img.table.at(k, l);
  mode.at(0, 0) = 0.5 * (img.table.at(1, 0) + img.table.at(0, 1));

  CostMap costs(img.height, img.width);
  for (int a = 0; a < by; ++a)
    for (int b = 0; b < bx; ++b) {
      double nsum = 0.0;
      for (int da = -1; da <= 1; ++da)
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          if (a + da < 0 || a + da >= by || b + db < 0 || b + db >= bx) continue;
          nsum += energy.at(a + da, b + db);
        }
      const double denom = energy.at(a, b) + 0.25 * nsum;
      const double suit = denom == 0.0 ? kWetCost : 1.0 / denom;
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l)
          costs.at(8 * a + k, 8 * b + l) = suit * mode.at(k, l);
    }
  return costs;
}

std::string crit_uerd_oracle() {
  Rng rng(303);
  const int qfs[3] = {50, 75, 95};
  for (int trial = 0; trial < 20; ++trial) {
    const JpegImage img =
        testutil::random_image(32, 32, rng, qfs[trial % 3], trial % 2 ? 6 : 20);
    const CostMap got = uerd_cost(img);
    const CostMap want = uerd_transcription(img);
    for (size_t i = 0; i < got.size(); ++i)
      if (std::abs(got[i] - want[i]) > 1e-9)
        return failf("trial %d entry %zu: |%.12g - %.12g| > 1e-9", trial, i, got[i],
                     want[i]);
  }
  return "";
}

// ---------------------------------------------------------------------------
// 05 — every layer kind passes central finite differences at 1e-4 relative
// error over its randomized configuration plan, and the environment's
// coefficient-domain gradient map matches DCT-space finite differences at
// 1e-3 on 20 probed coefficients.
std::string crit_gradient_checks() {
  Rng rng(404);
  int configs = 0;
  for (const auto& [kind, reps] : testutil::layer_fd_plan())
    for (int r = 0; r < reps; ++r) {
      const double err = testutil::layer_fd_config(kind, rng);
      ++configs;
      if (err >= 1e-4)
        return failf("%s config %d: fd rel err %.3g >= 1e-4", kind.c_str(), r, err);
    }
  if (configs < 50) return failf("only %d layer configs exercised", configs);

  EnvNetConfig ecfg;
  ecfg.widths = {8, 8, 8, 8, 8};
  Rng init(23);
  EnvNet net(ecfg, init);
  // The classifier head initializes at zero (chance level); deterministic
  // nonzero weights keep the probe from comparing 0 against 0.
  Rng winit(41);
  for (Param* p : net.params())
    if (p->name == "env.fc.w")
      for (double& v : p->t.v) v = 0.05 * winit.normal();

  Rng img_rng(29);
  const JpegImage cover = testutil::random_image(16, 16, img_rng, 75, 8);
  const PixelPlane plane = decompress(cover);
  PixelPlane stego = plane;
  Rng noise(31);
  for (auto& v : stego) v += noise.uniform() < 0.1 ? 1.0 : 0.0;
  net.forward({&plane, &stego}, false);
  net.backward_cross_entropy({0, 1});
  const GradientMap g = net.gradient_map(1, cover.table);

  Rng pick(37);
  const double h = 1e-4;  // stays on one linear piece of the TLU/ReLU chain
  int compared = 0;
  for (int t = 0; t < 20; ++t) {
    const int a = static_cast<int>(pick.uniform() * 2);
    const int b = static_cast<int>(pick.uniform() * 2);
    const int k = static_cast<int>(pick.uniform() * 8);
    const int l = static_cast<int>(pick.uniform() * 8);
    const RealGrid z = dct_basis_filter(8, k, l);
    const double step = h * cover.table.at(k, l);
    double loss_p = 0, loss_m = 0;
    for (const double sgn : {1.0, -1.0}) {
      PixelPlane perturbed = stego;
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          perturbed.at(8 * a + i, 8 * b + j) += sgn * step * z.at(i, j);
      net.forward({&plane, &perturbed}, false);
      (sgn > 0 ? loss_p : loss_m) = env_loss(net.softmax(0), net.softmax(1));
    }
    const double fd = (loss_p - loss_m) / (2.0 * h);
    const double an = g.at(8 * a + k, 8 * b + l);
    if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
    if (testutil::rel_err(an, fd) >= 1e-3)
      return failf("gradient map (%d,%d,%d,%d): rel err %.3g >= 1e-3", a, b, k, l,
                   testutil::rel_err(an, fd));
    ++compared;
  }
  if (compared < 15) return failf("only %d of 20 gradient-map probes informative", compared);
  return "";
}

// ---------------------------------------------------------------------------
// 06 — the phase/mode rearrangement is an exact bijection: volume -> grid ->
// volume and grid -> volume -> grid are bitwise identities on 100 random
// shapes.
std::string crit_rearrange_bijection() {
  Rng rng(505);
  for (int t = 0; t < 100; ++t) {
    const int by = 1 + static_cast<int>(rng.below(5));
    const int bx = 1 + static_cast<int>(rng.below(5));
    Tensor v = testutil::random_tensor({by, bx, 64}, rng, 3.0);
    const RealGrid g = mode_rearrange(v);
    if (g.height() != 8 * by || g.width() != 8 * bx)
      return failf("trial %d: rearranged shape %dx%d", t, g.height(), g.width());
    const Tensor back = phase_split(g);
    if (back.shape != v.shape) return failf("trial %d: shape not restored", t);
    for (size_t i = 0; i < v.size(); ++i)
      if (back.v[i] != v.v[i]) return failf("trial %d: volume entry %zu moved", t, i);

    const RealGrid grid = testutil::random_grid(8 * by, 8 * bx, rng, -4.0, 4.0);
    const RealGrid round = mode_rearrange(phase_split(grid));
    for (size_t i = 0; i < grid.size(); ++i)
      if (round[i] != grid[i]) return failf("trial %d: grid entry %zu moved", t, i);
  }
  return "";
}

// ---------------------------------------------------------------------------
// 07 — embedding simulation draws the three symbols at the policy's rates
// (chi-square at alpha = 0.001 over 10,000 draws per probe) and is bitwise
// reproducible under a fixed seed.
std::string crit_sampler_statistics() {
  for (const double q : {0.1, 0.37, 0.6}) {
    const PolicyTensor p(RealGrid(1, 1, q));
    const int n = 10000;
    std::map<int, int> counts{{-1, 0}, {0, 0}, {1, 0}};
    for (int t = 0; t < n; ++t)
      counts[simulate_embedding(p, 77000 + static_cast<uint64_t>(t)).at(0, 0)]++;
    const double e_pm = n * q / 2.0, e_0 = n * (1.0 - q);
    double chi2 = 0.0;
    chi2 += (counts[-1] - e_pm) * (counts[-1] - e_pm) / e_pm;
    chi2 += (counts[1] - e_pm) * (counts[1] - e_pm) / e_pm;
    chi2 += (counts[0] - e_0) * (counts[0] - e_0) / e_0;
    if (chi2 >= 13.8155)  // chi2_{0.999, df=2}
      return failf("q=%.2f: chi-square %.3f >= 13.8155", q, chi2);
  }

  Rng rng(606);
  const PolicyTensor p(testutil::random_grid(24, 24, rng, 0.0, 0.66));
  const ModificationMap a = simulate_embedding(p, 4242);
  const ModificationMap b = simulate_embedding(p, 4242);
  if (std::memcmp(a.data(), b.data(), a.size()) != 0)
    return failf("same seed produced different maps");
  const ModificationMap c = simulate_embedding(p, 4243);
  if (std::memcmp(a.data(), c.data(), a.size()) == 0)
    return failf("different seeds produced identical maps");
  return "";
}

// ---------------------------------------------------------------------------
// 08 — the reward law is exactly r = xi * sign(m) * g, checked over every
// (modification, gradient-sign) combination at two xi scales.
std::string crit_reward_law() {
  const double gvals[3] = {-2.5, 0.0, 1.75};
  for (const double xi : {1.0, 1e7}) {
    ModificationMap m(3, 3);
    GradientMap g(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        m.at(i, j) = static_cast<int8_t>(i - 1);
        g.at(i, j) = gvals[j];
      }
    const RewardMap r = reward_map(m, g, xi);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int mod = i - 1;
        const double want = mod == 0 ? 0.0 : xi * (mod > 0 ? gvals[j] : -gvals[j]);
        if (r.at(i, j) != want)
          return failf("m=%d g=%.2f xi=%.0e: reward %.17g, want %.17g", mod,
                       gvals[j], xi, r.at(i, j), want);
      }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 09 — on 20 random unit-quantization images, every one of the 64 block-DCT
// residual filters concentrates its accumulated gradient on its own mode
// (argmax 64/64), and the dct8 coverage curve dominates dct4 and srm30 for
// every n, in under 2 minutes.
std::string crit_gradient_analysis() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(707);
  std::vector<JpegImage> images;
  for (int t = 0; t < 20; ++t) {
    JpegImage img = testutil::random_image(32, 32, rng, 75, 20);
    img.table.steps.fill(1);  // unit steps keep the mode geometry unweighted
    images.push_back(std::move(img));
  }
  std::vector<const JpegImage*> ptrs;
  for (const JpegImage& img : images) ptrs.push_back(&img);

  const FilterBank banks[3] = {dct8_bank(), dct4_bank(), srm30_bank()};
  std::vector<TopNStats> stats;
  for (const FilterBank& bank : banks)
    stats.push_back(top_n_stats(accum_grad_matrices(ptrs, bank)));

  const std::vector<AccumGradMatrix> dct8 = accum_grad_matrices(ptrs, banks[0]);
  for (int f = 0; f < 64; ++f) {
    int arg = 0;
    for (int t = 1; t < 64; ++t)
      if (dct8[static_cast<size_t>(f)].e[static_cast<size_t>(t)] >
          dct8[static_cast<size_t>(f)].e[static_cast<size_t>(arg)])
        arg = t;
    if (arg != f)
      return failf("dct8 filter %d: argmax mode %d, want %d", f, arg, f);
  }

  for (int n = 0; n <= 64; ++n) {
    if (stats[0].s[static_cast<size_t>(n)] < stats[1].s[static_cast<size_t>(n)])
      return failf("s_%d: dct8 %d < dct4 %d", n, stats[0].s[static_cast<size_t>(n)],
                   stats[1].s[static_cast<size_t>(n)]);
    if (stats[0].s[static_cast<size_t>(n)] < stats[2].s[static_cast<size_t>(n)])
      return failf("s_%d: dct8 %d < srm30 %d", n, stats[0].s[static_cast<size_t>(n)],
                   stats[2].s[static_cast<size_t>(n)]);
  }
  const double dt = seconds_since(t0);
  if (dt >= 120.0) return failf("took %.1fs, budget 120s", dt);
  return "";
}

// ---------------------------------------------------------------------------
// 10 — 500 adversarial steps on half-smooth/half-noisy covers at 0.4 bpnzAC:
// (a) the learned policy hits each cover's payload within 5%, (b) the noisy
// half carries more change probability than the smooth half, and (c) with the
// environment off (capacity-only) the entropy gap decays monotonically across
// smoothed windows.
Config toy_config() {
  Config cfg;
  cfg.set("train.batch", "4");
  cfg.set("train.iters", "500");
  cfg.set("train.lr.policy", "0.15");
  cfg.set("train.decay_every", "1000");  // no decay inside the 500 steps
  cfg.set("adam.beta2", "0.99");
  // The 500-step budget wants a hotter schedule than the desk defaults:
  // a heavier capacity pull to land the payload in time and a larger
  // reward coefficient so the adversarial term keeps pace with it.
  cfg.set("train.beta", "0.03");
  cfg.set("train.xi", "1e8");
  return cfg;
}

std::string crit_toy_training() {
  const auto covers = synthetic_halfnoise_corpus(16, 64, 64, 75, 42);

  Config cfg = toy_config();
  Trainer tr(cfg.train_config(), cfg.policy_config(), cfg.env_config(), covers);
  for (int i = 0; i < 500; ++i) tr.step();

  double sum_smooth = 0.0, sum_noisy = 0.0, mean_h = 0.0, mean_c = 0.0;
  for (size_t i = 0; i < covers.size(); ++i) {
    const PolicyTensor pt = tr.policy().forward_single(covers[i], true);
    mean_h += payload_entropy(pt);
    mean_c += 0.4 * static_cast<double>(count_nzac(covers[i]));
    const RealGrid& q = pt.change_prob();
    for (int r = 0; r < q.height(); ++r)
      for (int c = 0; c < q.width(); ++c)
        (c < q.width() / 2 ? sum_smooth : sum_noisy) += q.at(r, c);
  }
  mean_h /= static_cast<double>(covers.size());
  mean_c /= static_cast<double>(covers.size());
  if (std::abs(mean_h - mean_c) > 0.05 * mean_c)
    return failf("final payload entropy %.1f vs target %.1f (off %.1f%%)", mean_h,
                 mean_c, 100.0 * std::abs(mean_h - mean_c) / mean_c);
  if (sum_noisy <= sum_smooth)
    return failf("noisy-half mean q %.4f not above smooth-half %.4f",
                 sum_noisy / (covers.size() * 2048.0),
                 sum_smooth / (covers.size() * 2048.0));

  // Capacity-only: same schedule, no adversary, alpha = 0.
  Config ccfg = toy_config();
  ccfg.set("train.alpha", "0");
  ccfg.set("env.enabled", "false");
  Trainer cap(ccfg.train_config(), ccfg.policy_config(), ccfg.env_config(), covers);
  double mean_target = 0.0;
  for (const JpegImage& c : covers)
    mean_target += 0.4 * static_cast<double>(count_nzac(c));
  mean_target /= static_cast<double>(covers.size());
  std::vector<double> gap;
  for (int i = 0; i < 500; ++i)
    gap.push_back(std::abs(cap.step().payload_entropy - mean_target));
  // 200-step smoothing window slid in 50-step strides.
  std::vector<double> smooth;
  for (int w = 0; w + 200 <= 500; w += 50) {
    double s = 0.0;
    for (int i = 0; i < 200; ++i) s += gap[static_cast<size_t>(w + i)];
    smooth.push_back(s / 200.0);
  }
  for (size_t w = 1; w < smooth.size(); ++w)
    if (smooth[w] > smooth[w - 1])
      return failf("capacity gap rose between windows %zu and %zu (%.3f -> %.3f)",
                   w - 1, w, smooth[w - 1], smooth[w]);
  return "";
}

// ---------------------------------------------------------------------------
// 11 — two identically seeded runs emit bit-identical telemetry over 100
// steps, and a run restored from a mid-run checkpoint continues bit-exactly
// (same telemetry rows, byte-identical final checkpoint).
Config determinism_config() {
  Config cfg;
  cfg.set("train.batch", "2");
  cfg.set("train.iters", "100");
  cfg.set("train.checkpoint_every", "50");
  cfg.set("train.image_size", "32");
  cfg.set("train.corpus", "4");
  return cfg;
}

std::string crit_bit_determinism() {
  Config cfg = determinism_config();
  const auto covers = synthetic_halfnoise_corpus(4, 32, 32, 75, 99);

  const auto render = [](const StepTelemetry& m) {
    char line[256];
    snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
             static_cast<long long>(m.iteration), m.l_a, m.l_r, m.l_c, m.l_e,
             m.mean_reward, m.payload_entropy, m.env_accuracy);
    return std::string(line);
  };

  Trainer a(cfg.train_config(), cfg.policy_config(), cfg.env_config(), covers);
  Trainer b(cfg.train_config(), cfg.policy_config(), cfg.env_config(), covers);
  std::vector<std::string> rows_a;
  for (int i = 0; i < 100; ++i) {
    rows_a.push_back(render(a.step()));
    const std::string rb = render(b.step());
    if (rows_a.back() != rb)
      return failf("step %d: twin runs diverged\n  a: %s\n  b: %s", i + 1,
                   rows_a.back().c_str(), rb.c_str());
  }
  const CostMap ca = export_costs(a.policy(), covers[0]);
  const CostMap cb = export_costs(b.policy(), covers[0]);
  if (std::memcmp(ca.data(), cb.data(), ca.size() * sizeof(double)) != 0)
    return failf("exported cost maps differ between twin runs");

  // Full run through the artifact path, then a second run restored from the
  // midpoint checkpoint: identical tail rows, identical final checkpoint.
  const fs::path dir_full = scratch_dir("det_full");
  Trainer full(cfg.train_config(), cfg.policy_config(), cfg.env_config(), covers);
  full.run(dir_full);

  const fs::path dir_resumed = scratch_dir("det_resumed");
  Trainer resumed(cfg.train_config(), cfg.policy_config(), cfg.env_config(), covers,
                  dir_full / "ckpt_50.jckpt");
  if (resumed.iteration() != 50)
    return failf("restored trainer reports iteration %lld, want 50",
                 static_cast<long long>(resumed.iteration()));
  resumed.run(dir_resumed);

  std::vector<std::string> full_rows, resumed_rows;
  {
    std::istringstream fs_(read_text(dir_full / "telemetry.csv"));
    for (std::string l; std::getline(fs_, l);) full_rows.push_back(l);
    std::istringstream rs(read_text(dir_resumed / "telemetry.csv"));
    for (std::string l; std::getline(rs, l);) resumed_rows.push_back(l);
  }
  if (full_rows.size() != 101 || resumed_rows.size() != 51)
    return failf("telemetry row counts %zu/%zu, want 101/51", full_rows.size(),
                 resumed_rows.size());
  if (full_rows[0] != resumed_rows[0]) return failf("telemetry headers differ");
  for (size_t r = 1; r < resumed_rows.size(); ++r)
    if (resumed_rows[r] != full_rows[50 + r])
      return failf("restored row %zu differs from the uninterrupted run:\n  %s\n  %s",
                   r, resumed_rows[r].c_str(), full_rows[50 + r].c_str());
  // The in-memory twin must match the artifact path up to the first
  // checkpoint (saving narrows the live state to f32, so the paths may
  // differ in the last bits afterwards).
  for (size_t r = 1; r <= 50; ++r)
    if (full_rows[r] != rows_a[r - 1])
      return failf("artifact row %zu differs from the stepped run", r);

  const std::string ck_full = read_text(dir_full / "ckpt_final.jckpt");
  const std::string ck_res = read_text(dir_resumed / "ckpt_final.jckpt");
  if (ck_full.empty() || ck_full != ck_res)
    return failf("final checkpoints differ (%zu vs %zu bytes)", ck_full.size(),
                 ck_res.size());
  return "";
}

// ---------------------------------------------------------------------------
// 12 — the entropy-coded JPEG parser agrees with the reference decoder
// coefficient for coefficient, recovers the quantization table, and maps the
// failure modes to typed errors: truncated and garbage streams are
// "malformed", progressive streams are "unsupported".
std::vector<uint8_t> encode_reference(const std::vector<uint8_t>& pixels, int h,
                                      int w, int quality, bool progressive) {
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
    JSAMPROW row =
        const_cast<JSAMPROW>(&pixels[static_cast<size_t>(c.next_scanline) * w]);
    jpeg_write_scanlines(&c, &row, 1);
  }
  jpeg_finish_compress(&c);
  jpeg_destroy_compress(&c);
  std::vector<uint8_t> out(buf, buf + size);
  free(buf);
  return out;
}

Grid<int32_t> decode_reference(const std::vector<uint8_t>& jpeg, int h, int w) {
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
          coeffs.at(static_cast<int>(row) * 8 + k,
                    static_cast<int>(col) * 8 + l) = rows[0][col][k * 8 + l];
  }
  jpeg_finish_decompress(&d);
  jpeg_destroy_decompress(&d);
  return coeffs;
}

std::string crit_jpeg_parser() {
  Rng rng(909);
  for (const auto [h, w, q] :
       {std::tuple{32, 40, 85}, std::tuple{64, 64, 75}, std::tuple{16, 16, 95}}) {
    std::vector<uint8_t> px(static_cast<size_t>(h) * w);
    for (size_t i = 0; i < px.size(); ++i) {
      const int base = static_cast<int>((i % static_cast<size_t>(w)) * 2 % 200);
      px[i] = static_cast<uint8_t>(std::min<uint64_t>(255, base + rng.below(56)));
    }
    const std::vector<uint8_t> jpeg = encode_reference(px, h, w, q, false);
    const JpegImage img = parse_baseline_jpeg(jpeg);
    if (img.height != h || img.width != w)
      return failf("%dx%d q%d: parsed size %dx%d", h, w, q, img.height, img.width);
    if (img.table != quality_to_quant_table(q))
      return failf("%dx%d q%d: quantization table mismatch", h, w, q);
    const Grid<int32_t> want = decode_reference(jpeg, h, w);
    for (size_t i = 0; i < want.size(); ++i)
      if (img.coeffs[i] != want[i])
        return failf("%dx%d q%d: coefficient %zu is %d, reference %d", h, w, q, i,
                     img.coeffs[i], want[i]);

    // Error classes on this same stream.
    std::vector<uint8_t> truncated(jpeg.begin(), jpeg.end() - 2);
    try {
      parse_baseline_jpeg(truncated);
      return failf("truncated stream accepted");
    } catch (const DataError& e) {
      if (std::string(e.what()).find("malformed") == std::string::npos)
        return failf("truncated stream: '%s' lacks 'malformed'", e.what());
    }
    const std::vector<uint8_t> prog = encode_reference(px, h, w, q, true);
    try {
      parse_baseline_jpeg(prog);
      return failf("progressive stream accepted");
    } catch (const DataError& e) {
      if (std::string(e.what()).find("unsupported") == std::string::npos)
        return failf("progressive stream: '%s' lacks 'unsupported'", e.what());
    }
  }
  try {
    parse_baseline_jpeg(std::vector<uint8_t>(100, 0x55));
    return failf("garbage accepted");
  } catch (const DataError&) {
  }
  try {
    parse_baseline_jpeg({});
    return failf("empty input accepted");
  } catch (const DataError&) {
  }
  return "";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<std::string()> body;
  };
  const std::vector<Criterion> criteria = {
      {"dct basis orthonormality and block round trip", crit_dct_round_trip},
      {"payload solver accuracy and monotonicity", crit_lambda_solver},
      {"cost/probability identity and 2/3 fixed point", crit_cost_probability_identity},
      {"uerd costs match the independent transcription", crit_uerd_oracle},
      {"finite-difference gradient checks (layers + env map)", crit_gradient_checks},
      {"mode/phase rearrangement is an exact bijection", crit_rearrange_bijection},
      {"sampler chi-square statistics and seed determinism", crit_sampler_statistics},
      {"reward law over all sign combinations", crit_reward_law},
      {"gradient analysis: mode concentration and coverage", crit_gradient_analysis},
      {"toy adversarial training shapes the policy", crit_toy_training},
      {"bit-identical telemetry and checkpoint restore", crit_bit_determinism},
      {"jpeg parser reference agreement and error classes", crit_jpeg_parser},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
      detail = criteria[i].body();
    } catch (const std::exception& e) {
      detail = failf("unexpected %s", e.what());
    }
    const double dt = seconds_since(t0);
    if (detail.empty()) {
      printf("[PASS] %02zu %-55s (%.1fs)\n", i + 1, criteria[i].name, dt);
    } else {
      printf("[FAIL] %02zu %-55s (%.1fs)\n       %s\n", i + 1, criteria[i].name, dt,
             detail.c_str());
      ++failures;
    }
    fflush(stdout);
  }
  if (failures == 0)
    printf("all %zu criteria passed\n", criteria.size());
  else
    printf("%d of %zu criteria FAILED\n", failures, criteria.size());
  return failures;
}
