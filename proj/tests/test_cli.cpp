// Drives the jec binary end to end: artifact round trips, replay manifests,
// determinism under --seed, and the exit-code contract (0 ok, 1 usage,
// 2 data error, 3 numeric failure).
#include <stdio.h>  // libjpeg needs FILE before jpeglib.h
#include <jpeglib.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "jecrl/distortion.hpp"
#include "jecrl/jpeg_model.hpp"
#include "jecrl/rng.hpp"
#include "jecrl/uerd.hpp"
#include "test_util.hpp"

using namespace jecrl;
using testutil::random_image;
namespace fs = std::filesystem;

namespace {

std::string bin() { return JEC_BIN; }

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::path(JEC_TEST_TMPDIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Exit code of a shell command, -1 if it died without exiting.
int run(const std::string& cmd) {
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Reference-encoder JPEG of a grayscale plane, in memory.
std::vector<uint8_t> encode_gray(const std::vector<uint8_t>& pixels, int h, int w,
                                 int quality) {
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

}  // namespace

TEST_CASE("cli: cost-uerd writes the cost map and a replay manifest") {
  const fs::path dir = fresh_dir("cli_uerd");
  Rng rng(11);
  const JpegImage img = random_image(32, 32, rng);
  const fs::path in = dir / "cover.jcoef", out = dir / "costs.jmap";
  write_jcoef(in, img);

  CHECK(run(bin() + " cost-uerd --in " + in.string() + " --out " + out.string()) == 0);

  const CostMap got = costmap_from_jmap(read_jmap(out));
  const CostMap want = uerd_cost(img);
  REQUIRE(got.height() == 32);
  REQUIRE(got.width() == 32);
  size_t mismatches = 0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j)
      // .jmap stores float32; the CLI output must be the narrowed library value.
      if (got.at(i, j) != static_cast<double>(static_cast<float>(want.at(i, j))))
        ++mismatches;
  CHECK(mismatches == 0);

  const std::string manifest = slurp(dir / "costs.jmap.manifest.json");
  CHECK(contains(manifest, "\"command\": \"cost-uerd\""));
  CHECK(contains(manifest, in.string()));
  CHECK(contains(manifest, out.string()));
  CHECK(contains(manifest, "\"train.payload\": \"0.4bpnzAC\""));
}

TEST_CASE("cli: embed-sim is reproducible for a fixed seed") {
  const fs::path dir = fresh_dir("cli_sim");
  Rng rng(12);
  const JpegImage img = random_image(32, 32, rng);
  const fs::path in = dir / "cover.jcoef", costs = dir / "costs.jmap";
  write_jcoef(in, img);
  REQUIRE(run(bin() + " cost-uerd --in " + in.string() + " --out " + costs.string()) == 0);

  const std::string common = bin() + " embed-sim --in " + in.string() +
                             " --costs " + costs.string() + " --payload 0.2bpnzAC";
  const fs::path s1 = dir / "s1.jcoef", s2 = dir / "s2.jcoef", s3 = dir / "s3.jcoef";
  CHECK(run(common + " --seed 7 --out " + s1.string()) == 0);
  CHECK(run(common + " --seed 7 --out " + s2.string()) == 0);
  CHECK(run(common + " --seed 8 --out " + s3.string()) == 0);
  CHECK(slurp(s1) == slurp(s2));
  CHECK(slurp(s1) != slurp(s3));

  // Modification-map output: exact ternary levels that reproduce the stego.
  const fs::path mpath = dir / "mod.jmap";
  CHECK(run(common + " --seed 7 --out " + mpath.string()) == 0);
  const JmapData mdata = read_jmap(mpath);
  CHECK(mdata.channels == 1);
  const ModificationMap m = modification_from_jmap(mdata);
  const JpegImage stego = read_jcoef(s1);
  size_t bad = 0, changed = 0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      const int d = stego.coeffs.at(i, j) - img.coeffs.at(i, j);
      if (d != m.at(i, j)) ++bad;
      if (d != 0) ++changed;
    }
  CHECK(bad == 0);
  CHECK(changed > 0);
  CHECK(contains(slurp(dir / "s1.jcoef.manifest.json"), "\"seed\": 7"));
}

TEST_CASE("cli: unreachable payloads exit with the numeric-failure code") {
  const fs::path dir = fresh_dir("cli_numeric");
  Rng rng(13);
  const JpegImage img = random_image(32, 32, rng);
  const fs::path in = dir / "cover.jcoef", costs = dir / "costs.jmap";
  write_jcoef(in, img);
  REQUIRE(run(bin() + " cost-uerd --in " + in.string() + " --out " + costs.string()) == 0);

  // 32x32 holds at most 1024*log2(3) ~ 1623 bits: a megabit fails the entropy
  // bound up front and is classed as bad data.
  const fs::path err = dir / "err.txt";
  CHECK(run(bin() + " lambda-solve --in " + in.string() + " --costs " + costs.string() +
            " --payload 1000000bits 2> " + err.string()) == 2);
  CHECK(contains(slurp(err), "infeasible payload"));

  // All-zero costs pin every coefficient at the uniform ternary, so the
  // entropy cannot drop to 100 bits: the solver itself fails, exit 3.
  const fs::path zpath = dir / "zero.jmap";
  write_jmap(zpath, jmap_from_costmap(CostMap(32, 32)));
  CHECK(run(bin() + " lambda-solve --in " + in.string() + " --costs " + zpath.string() +
            " --payload 100bits 2> " + err.string()) == 3);
  CHECK(contains(slurp(err), "jec: "));
  CHECK(contains(slurp(err), "solve_lambda"));

  // A feasible spec on the same artifacts solves and reports the triple.
  const fs::path outtxt = dir / "lambda.txt";
  CHECK(run(bin() + " lambda-solve --in " + in.string() + " --costs " + costs.string() +
            " --payload 0.2bpnzAC > " + outtxt.string()) == 0);
  const std::string line = slurp(outtxt);
  CHECK(contains(line, "lambda="));
  CHECK(contains(line, "entropy_bits="));
  CHECK(contains(line, "target_bits="));
}

TEST_CASE("cli: usage errors exit 1") {
  const fs::path dir = fresh_dir("cli_usage");
  CHECK(run(bin() + " 2> /dev/null") == 1);                        // no subcommand
  CHECK(run(bin() + " frobnicate 2> /dev/null") == 1);             // unknown subcommand
  CHECK(run(bin() + " cost-uerd --in a.jcoef 2> /dev/null") == 1); // missing --out
  CHECK(run(bin() + " cost-uerd --in a --out b --frob 2> /dev/null") == 1);
  CHECK(run(bin() + " --version > " + (dir / "v.txt").string()) == 0);
  CHECK(!slurp(dir / "v.txt").empty());
}

TEST_CASE("cli: config mistakes surface as data errors") {
  const fs::path dir = fresh_dir("cli_config");
  Rng rng(14);
  write_jcoef(dir / "cover.jcoef", random_image(16, 16, rng));

  std::ofstream(dir / "bad.cfg") << "train.alhpa=2\n";
  const fs::path err = dir / "err.txt";
  CHECK(run(bin() + " cost-uerd --in " + (dir / "cover.jcoef").string() + " --out " +
            (dir / "c.jmap").string() + " --config " + (dir / "bad.cfg").string() +
            " 2> " + err.string()) == 2);
  CHECK(contains(slurp(err), "unknown config key: train.alhpa"));

  CHECK(run(bin() + " cost-uerd --in " + (dir / "cover.jcoef").string() + " --out " +
            (dir / "c.jmap").string() + " --config " + (dir / "missing.cfg").string() +
            " 2> " + err.string()) == 2);
  CHECK(contains(slurp(err), "jec: "));

  // Reading a .jmap where a .jcoef is expected is a data error, not a crash.
  REQUIRE(run(bin() + " cost-uerd --in " + (dir / "cover.jcoef").string() + " --out " +
              (dir / "c.jmap").string()) == 0);
  CHECK(run(bin() + " cost-uerd --in " + (dir / "c.jmap").string() + " --out " +
            (dir / "d.jmap").string() + " 2> " + err.string()) == 2);
}

TEST_CASE("cli: train smoke run emits telemetry, checkpoint, and manifest") {
  const fs::path dir = fresh_dir("cli_train");
  std::ofstream(dir / "small.cfg") << "policy.widths = 4,8,8,8\n"
                                   << "env.widths = 8,8,8,8,8\n"
                                   << "train.corpus = 4\n"
                                   << "train.image_size = 32\n";
  const fs::path run_dir = dir / "run";
  CHECK(run(bin() + " train --in synthetic:halfnoise --out " + run_dir.string() +
            " --iters 4 --batch 2 --seed 5 --config " + (dir / "small.cfg").string()) == 0);

  const std::string telemetry = slurp(run_dir / "telemetry.csv");
  std::vector<std::string> lines;
  std::istringstream ts(telemetry);
  for (std::string l; std::getline(ts, l);) lines.push_back(l);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "iteration,l_A,l_R,l_C,l_E,mean_reward,payload_entropy,env_accuracy");
  CHECK(lines[1].rfind("1,", 0) == 0);
  CHECK(lines[4].rfind("4,", 0) == 0);
  CHECK(!slurp(run_dir / "epochs.log").empty());
  CHECK(fs::exists(run_dir / "ckpt_final.jckpt"));
  const std::string manifest = slurp(run_dir / "manifest.json");
  CHECK(contains(manifest, "\"command\": \"train\""));
  CHECK(contains(manifest, "\"train.seed\": \"5\""));

  // The final checkpoint drives export-costs on a fresh image of the same geometry.
  Rng rng(15);
  const fs::path probe = dir / "probe.jcoef";
  write_jcoef(probe, random_image(32, 32, rng));
  const fs::path costs = dir / "learned.jmap";
  CHECK(run(bin() + " export-costs --in " + probe.string() + " --model " +
            (run_dir / "ckpt_final.jckpt").string() + " --out " + costs.string() +
            " --config " + (dir / "small.cfg").string()) == 0);
  const CostMap cm = costmap_from_jmap(read_jmap(costs));
  REQUIRE(cm.height() == 32);
  size_t finite = 0;
  for (double c : cm)
    if (std::isfinite(c) && c >= 0.0) ++finite;
  CHECK(finite == cm.height() * cm.width());
}

TEST_CASE("cli: analyze-gradients writes curves, matrices, and heatmaps") {
  const fs::path dir = fresh_dir("cli_analyze");
  Rng rng(16);
  write_jcoef(dir / "img.jcoef", random_image(16, 16, rng));
  const fs::path out_dir = dir / "analysis";
  CHECK(run(bin() + " analyze-gradients --in " + (dir / "img.jcoef").string() +
            " --out " + out_dir.string() + " --bank dct4") == 0);

  std::vector<std::string> lines;
  std::istringstream ss(slurp(out_dir / "sn.csv"));
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  REQUIRE(lines.size() == 66);  // header + n = 0..64
  CHECK(lines[0] == "n,s_dct4");
  CHECK(lines[1] == "0,0");
  CHECK(lines[65].rfind("64,", 0) == 0);

  std::istringstream ms(slurp(out_dir / "dct4_matrices.csv"));
  lines.clear();
  for (std::string l; std::getline(ms, l);) lines.push_back(l);
  REQUIRE(lines.size() == 17);  // header + 16 filters
  CHECK(lines[0].rfind("filter,e_00,e_01", 0) == 0);
  CHECK(lines[1].rfind("dct4.0,", 0) == 0);

  for (int f = 0; f < 16; ++f) {
    const fs::path hm = out_dir / ("heatmap_dct4_" + std::to_string(f) + ".pgm");
    REQUIRE(fs::exists(hm));
    CHECK(slurp(hm).rfind("P5\n", 0) == 0);
  }
  CHECK(contains(slurp(out_dir / "manifest.json"), "\"command\": \"analyze-gradients\""));
}

TEST_CASE("cli: emit-maps renders modification and cost maps as PGM") {
  const fs::path dir = fresh_dir("cli_emit");
  Rng rng(17);
  const JpegImage img = random_image(32, 32, rng);
  write_jcoef(dir / "cover.jcoef", img);
  REQUIRE(run(bin() + " cost-uerd --in " + (dir / "cover.jcoef").string() + " --out " +
              (dir / "costs.jmap").string()) == 0);
  REQUIRE(run(bin() + " embed-sim --in " + (dir / "cover.jcoef").string() + " --costs " +
              (dir / "costs.jmap").string() + " --seed 3 --out " +
              (dir / "mod.jmap").string()) == 0);

  CHECK(run(bin() + " emit-maps --in " + (dir / "mod.jmap").string() + " --out " +
            (dir / "mod.pgm").string()) == 0);
  CHECK(run(bin() + " emit-maps --in " + (dir / "costs.jmap").string() + " --out " +
            (dir / "costs.pgm").string()) == 0);
  for (const char* name : {"mod.pgm", "costs.pgm"}) {
    const std::string pgm = slurp(dir / name);
    CHECK(pgm.rfind("P5\n", 0) == 0);
    CHECK(contains(pgm, "32 32"));
  }
}

TEST_CASE("cli: detect-pe reports the error rate and rejects bad labels") {
  const fs::path dir = fresh_dir("cli_pe");
  std::ofstream(dir / "scores.csv") << "label,score\n"
                                    << "cover,0\ncover,1\nstego,2\nstego,3\n";
  const fs::path out = dir / "pe.txt";
  CHECK(run(bin() + " detect-pe --in " + (dir / "scores.csv").string() + " > " +
            out.string()) == 0);
  CHECK(slurp(out).rfind("P_E=0\n", 0) == 0);  // perfectly separated scores

  std::ofstream(dir / "bad.csv") << "label,score\ncover,0\nspam,1\n";
  const fs::path err = dir / "err.txt";
  CHECK(run(bin() + " detect-pe --in " + (dir / "bad.csv").string() + " 2> " +
            err.string()) == 2);
  CHECK(contains(slurp(err), ":3: label must be cover/stego/0/1"));
}

TEST_CASE("cli: parse-jpeg extracts coefficients and rejects garbage") {
  const fs::path dir = fresh_dir("cli_parse");
  Rng rng(18);
  std::vector<uint8_t> pixels(16 * 16);
  for (auto& p : pixels) p = static_cast<uint8_t>(rng.below(256));
  const std::vector<uint8_t> jpeg = encode_gray(pixels, 16, 16, 80);
  std::ofstream(dir / "img.jpg", std::ios::binary)
      .write(reinterpret_cast<const char*>(jpeg.data()),
             static_cast<std::streamsize>(jpeg.size()));

  const fs::path out = dir / "img.jcoef";
  CHECK(run(bin() + " parse-jpeg --in " + (dir / "img.jpg").string() + " --out " +
            out.string()) == 0);
  const JpegImage img = read_jcoef(out);
  CHECK(img.height == 16);
  CHECK(img.width == 16);

  std::ofstream(dir / "junk.jpg", std::ios::binary) << "definitely not a jpeg";
  const fs::path err = dir / "err.txt";
  CHECK(run(bin() + " parse-jpeg --in " + (dir / "junk.jpg").string() + " --out " +
            (dir / "junk.jcoef").string() + " 2> " + err.string()) == 2);
  CHECK(contains(slurp(err), "jec: "));
}
