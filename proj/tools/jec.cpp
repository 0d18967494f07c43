// jec — one binary, subcommand per workflow. Exit codes: 0 ok, 1 usage,
// 2 data error, 3 numeric failure.
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "jecrl/analysis.hpp"
#include "jecrl/checkpoint.hpp"
#include "jecrl/config.hpp"
#include "jecrl/error.hpp"
#include "jecrl/fsio.hpp"
#include "jecrl/synthetic.hpp"
#include "jecrl/trainer.hpp"
#include "jecrl/uerd.hpp"

#ifndef JEC_VERSION
#define JEC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace jecrl;

namespace {

// Flag values shared across subcommands. CLI11 only fills what the chosen
// subcommand declares.
struct Args {
  std::string in, out, costs, payload, config_file, variant, bank = "all", model;
  uint64_t seed = 0;
  bool seed_given = false;
  int qf = 75, iters = -1, batch = -1, threads = 1;
  bool qf_given = false;
  bool include_truncation = false;
};

// Resolution order: defaults → variant preset → config file → flags.
Config resolve_config(const Args& a) {
  Config cfg;
  if (!a.variant.empty()) cfg.apply_variant(a.variant);
  if (!a.config_file.empty()) cfg.load_file(a.config_file);
  if (a.seed_given) cfg.set("train.seed", std::to_string(a.seed));
  if (a.iters >= 0) cfg.set("train.iters", std::to_string(a.iters));
  if (a.batch >= 0) cfg.set("train.batch", std::to_string(a.batch));
  if (a.qf_given) cfg.set("train.qf", std::to_string(a.qf));
  if (!a.payload.empty()) cfg.set("train.payload", a.payload);
  return cfg;
}

// Replay record: written atomically before any output file.
void write_manifest(const fs::path& path, const std::string& command,
                    const Config& cfg, uint64_t seed,
                    const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
  json m;
  m["tool"] = "jec";
  m["version"] = JEC_VERSION;
  m["command"] = command;
  m["seed"] = seed;
  json jcfg = json::object();
  for (const auto& [k, v] : cfg.snapshot()) jcfg[k] = v;
  m["config"] = jcfg;
  json jin = json::object();
  for (const fs::path& p : inputs) jin[p.string()] = file_digest(p);
  m["inputs"] = jin;
  json jout = json::array();
  for (const fs::path& p : outputs) jout.push_back(p.string());
  m["outputs"] = jout;
  write_file_atomic(path, m.dump(2) + "\n");
}

fs::path manifest_path(const fs::path& primary_out) {
  if (fs::is_directory(primary_out)) return primary_out / "manifest.json";
  return fs::path(primary_out.string() + ".manifest.json");
}

int cmd_cost_uerd(const Args& a) {
  const Config cfg = resolve_config(a);
  const JpegImage img = read_jcoef(a.in);
  write_manifest(manifest_path(a.out), "cost-uerd", cfg, 0, {a.in}, {a.out});
  const CostMap costs = uerd_cost(img);
  write_jmap(a.out, jmap_from_costmap(costs));
  return 0;
}

int cmd_lambda_solve(const Args& a) {
  const Config cfg = resolve_config(a);
  const JpegImage img = read_jcoef(a.in);
  const CostMap costs = costmap_from_jmap(read_jmap(a.costs));
  if (!costs.same_shape(img.coeffs))
    throw DataError("cost map shape does not match the image");
  const PayloadSpec payload = PayloadSpec::parse(
      a.payload.empty() ? cfg.str("train.payload") : a.payload);
  const double target = payload.resolve_bits(img);
  const double lambda = solve_lambda(costs, target);
  const double entropy =
      payload_entropy(probabilities_from_costs(costs, lambda));
  char line[160];
  std::snprintf(line, sizeof line,
                "lambda=%.17g entropy_bits=%.17g target_bits=%.17g\n", lambda,
                entropy, target);
  std::fputs(line, stdout);
  if (!a.out.empty()) {
    write_manifest(manifest_path(a.out), "lambda-solve", cfg, 0,
                   {a.in, a.costs}, {a.out});
    json r{{"lambda", lambda}, {"entropy_bits", entropy}, {"target_bits", target}};
    write_file_atomic(a.out, r.dump(2) + "\n");
  }
  return 0;
}

int cmd_embed_sim(const Args& a) {
  const Config cfg = resolve_config(a);
  const JpegImage img = read_jcoef(a.in);
  const CostMap costs = costmap_from_jmap(read_jmap(a.costs));
  if (!costs.same_shape(img.coeffs))
    throw DataError("cost map shape does not match the image");
  const PayloadSpec payload = PayloadSpec::parse(
      a.payload.empty() ? cfg.str("train.payload") : a.payload);
  const double lambda = solve_lambda(costs, payload.resolve_bits(img));
  const PolicyTensor policy = probabilities_from_costs(costs, lambda);
  const ModificationMap m = simulate_embedding(policy, a.seed);

  write_manifest(manifest_path(a.out), "embed-sim", cfg, a.seed,
                 {a.in, a.costs}, {a.out});
  const std::string ext = fs::path(a.out).extension().string();
  if (ext == ".jcoef") {
    JpegImage stego = img;
    for (size_t i = 0; i < stego.coeffs.size(); ++i) stego.coeffs[i] += m[i];
    write_jcoef(a.out, stego);
  } else if (ext == ".jmap") {
    write_jmap(a.out, jmap_from_modification(m));
  } else {
    throw DataError("embed-sim output must be .jcoef (stego) or .jmap (map)");
  }
  return 0;
}

int cmd_train(const Args& a) {
  const Config cfg = resolve_config(a);
  const TrainConfig tc = cfg.train_config();
  const fs::path out_dir = a.out;
  fs::create_directories(out_dir);

  std::vector<JpegImage> covers = resolve_cover_source(
      a.in, cfg.integer("train.corpus"), cfg.integer("train.image_size"),
      cfg.integer("train.qf"), tc.seed);

  std::vector<fs::path> inputs;
  if (a.in.rfind("synthetic:", 0) != 0)
    for (const auto& e : fs::directory_iterator(a.in))
      if (e.path().extension() == ".jcoef") inputs.push_back(e.path());
  if (!a.model.empty()) inputs.push_back(a.model);
  write_manifest(out_dir / "manifest.json", "train", cfg, tc.seed, inputs,
                 {out_dir / "telemetry.csv", out_dir / "epochs.log",
                  out_dir / "ckpt_final.jckpt"});

  std::optional<fs::path> resume;
  if (!a.model.empty()) resume = fs::path(a.model);
  Trainer trainer(tc, cfg.policy_config(), cfg.env_config(), std::move(covers),
                  resume);
  trainer.run(out_dir);
  return 0;
}

int cmd_export_costs(const Args& a) {
  const Config cfg = resolve_config(a);
  const JpegImage img = read_jcoef(a.in);
  Rng dummy(0);
  PolicyNet policy(cfg.policy_config(), dummy);
  load_params(read_jckpt(a.model), policy.params());
  write_manifest(manifest_path(a.out), "export-costs", cfg, 0,
                 {a.in, a.model}, {a.out});
  write_jmap(a.out, jmap_from_costmap(export_costs(policy, img)));
  return 0;
}

int cmd_analyze_gradients(const Args& a) {
  const Config cfg = resolve_config(a);
  const fs::path out_dir = a.out;
  fs::create_directories(out_dir);

  std::vector<JpegImage> images;
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.in)) {
    images = load_cover_dir(a.in);
    for (const auto& e : fs::directory_iterator(a.in))
      if (e.path().extension() == ".jcoef") inputs.push_back(e.path());
  } else {
    images.push_back(read_jcoef(a.in));
    inputs.push_back(a.in);
  }
  std::vector<const JpegImage*> ptrs;
  for (const JpegImage& img : images) ptrs.push_back(&img);

  std::vector<std::string> banks;
  if (a.bank == "all")
    banks = {"dct8", "dct4", "srm30"};
  else
    banks = {a.bank};

  write_manifest(out_dir / "manifest.json", "analyze-gradients", cfg, 0,
                 inputs, {out_dir / "sn.csv"});

  AnalysisOptions opt;
  opt.include_truncation = a.include_truncation;
  opt.truncation = cfg.num("env.truncation");

  std::vector<std::pair<std::string, TopNStats>> curves;
  for (const std::string& name : banks) {
    const FilterBank bank = bank_by_name(name);
    const std::vector<AccumGradMatrix> mats =
        accum_grad_matrices(ptrs, bank, opt);
    for (size_t f = 0; f < mats.size(); ++f) {
      const fs::path hm =
          out_dir / ("heatmap_" + name + "_" + std::to_string(f) + ".pgm");
      write_pgm(hm.string(), minmax_quantize(normalize_matrix(mats[f].e)));
    }
    // Raw matrices, one row per filter: label, then the 64 entries.
    std::string csv = "filter";
    for (int k = 0; k < 8; ++k)
      for (int l = 0; l < 8; ++l)
        csv += ",e_" + std::to_string(k) + std::to_string(l);
    csv += "\n";
    for (const AccumGradMatrix& m : mats) {
      csv += m.filter_label;
      for (double v : m.e) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        csv += buf;
      }
      csv += "\n";
    }
    write_file_atomic(out_dir / (name + "_matrices.csv"), csv);
    curves.emplace_back(name, top_n_stats(mats));
  }
  write_file_atomic(out_dir / "sn.csv", sn_csv(curves));
  return 0;
}

int cmd_emit_maps(const Args& a) {
  const Config cfg = resolve_config(a);
  const JmapData data = read_jmap(a.in);
  write_manifest(manifest_path(a.out), "emit-maps", cfg, 0, {a.in}, {a.out});
  if (data.channels == 3) {
    // Policy triple: render the change probability q = π(−1) + π(+1).
    const PolicyTensor p = policy_from_jmap(data);
    write_pgm(a.out, minmax_quantize(p.change_prob()));
    return 0;
  }
  // Single channel: a map of exact {−1,0,+1} levels renders as a ternary
  // image, anything else min-max normalizes.
  bool ternary = true;
  for (float v : data.values)
    ternary = ternary && (v == -1.0f || v == 0.0f || v == 1.0f);
  if (ternary) {
    write_pgm(a.out, modification_levels(modification_from_jmap(data)));
  } else {
    write_pgm(a.out, minmax_quantize(costmap_from_jmap(data)));
  }
  return 0;
}

int cmd_parse_jpeg(const Args& a) {
  const Config cfg = resolve_config(a);
  const std::vector<uint8_t> bytes = read_file(a.in);
  const JpegImage img = parse_baseline_jpeg(bytes);
  write_manifest(manifest_path(a.out), "parse-jpeg", cfg, 0, {a.in}, {a.out});
  write_jcoef(a.out, img);
  return 0;
}

int cmd_detect_pe(const Args& a) {
  const Config cfg = resolve_config(a);
  std::ifstream is(a.in);
  if (!is) throw DataError("cannot read score file " + a.in);
  std::vector<double> covers, stegos;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "label,score") continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError(a.in + ":" + std::to_string(lineno) +
                      ": expected label,score");
    const std::string label = line.substr(0, comma);
    double score = 0;
    try {
      score = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw DataError(a.in + ":" + std::to_string(lineno) + ": bad score");
    }
    if (label == "cover" || label == "0")
      covers.push_back(score);
    else if (label == "stego" || label == "1")
      stegos.push_back(score);
    else
      throw DataError(a.in + ":" + std::to_string(lineno) +
                      ": label must be cover/stego/0/1");
  }
  const double pe = detection_error(covers, stegos);
  std::printf("P_E=%.17g\n", pe);
  if (!a.out.empty()) {
    write_manifest(manifest_path(a.out), "detect-pe", cfg, 0, {a.in}, {a.out});
    json r{{"p_e", pe},
           {"covers", covers.size()},
           {"stegos", stegos.size()}};
    write_file_atomic(a.out, r.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JPEG-domain embedding cost learning and analysis toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", JEC_VERSION);

  Args a;
  const auto add_common = [&](CLI::App* sub, bool with_seed = true) {
    sub->add_option("--config", a.config_file, "key=value configuration file");
    sub->add_option("--variant", a.variant,
                    "preset: base|I|II|III|IV|V|VI|juni|msu");
    sub->add_option("--threads", a.threads, "worker thread cap")
        ->check(CLI::PositiveNumber);
    if (with_seed)
      sub->add_option("--seed", a.seed, "random seed")
          ->each([&](const std::string&) { a.seed_given = true; });
  };

  CLI::App* uerd = app.add_subcommand("cost-uerd", "UERD embedding cost map");
  uerd->add_option("--in", a.in, ".jcoef input")->required();
  uerd->add_option("--out", a.out, ".jmap cost output")->required();
  add_common(uerd, false);

  CLI::App* lam = app.add_subcommand("lambda-solve",
                                     "solve the payload temperature");
  lam->add_option("--in", a.in, ".jcoef input")->required();
  lam->add_option("--costs", a.costs, ".jmap cost map")->required();
  lam->add_option("--payload", a.payload, "e.g. 0.4bpnzAC or 1000bits");
  lam->add_option("--out", a.out, "optional JSON result");
  add_common(lam, false);

  CLI::App* sim = app.add_subcommand("embed-sim",
                                     "simulate distortion-optimal embedding");
  sim->add_option("--in", a.in, ".jcoef cover")->required();
  sim->add_option("--costs", a.costs, ".jmap cost map")->required();
  sim->add_option("--payload", a.payload, "payload spec");
  sim->add_option("--out", a.out, ".jcoef stego or .jmap modification map")
      ->required();
  add_common(sim);

  CLI::App* tr = app.add_subcommand("train", "run the cost-learning loop");
  tr->add_option("--in", a.in, ".jcoef directory or synthetic:halfnoise")
      ->required();
  tr->add_option("--out", a.out, "output directory")->required();
  tr->add_option("--iters", a.iters, "total iterations");
  tr->add_option("--batch", a.batch, "batch size");
  tr->add_option("--payload", a.payload, "payload spec");
  tr->add_option("--qf", a.qf, "synthetic-source JPEG quality")
      ->each([&](const std::string&) { a.qf_given = true; });
  tr->add_option("--model", a.model, "checkpoint to resume from");
  add_common(tr);

  CLI::App* ex = app.add_subcommand("export-costs",
                                    "policy costs for one image");
  ex->add_option("--in", a.in, ".jcoef input")->required();
  ex->add_option("--model", a.model, ".jckpt policy weights")->required();
  ex->add_option("--out", a.out, ".jmap cost output")->required();
  add_common(ex, false);

  CLI::App* an = app.add_subcommand("analyze-gradients",
                                    "gradient propagation analysis");
  an->add_option("--in", a.in, ".jcoef file or directory")->required();
  an->add_option("--out", a.out, "output directory")->required();
  an->add_option("--bank", a.bank, "dct8|dct4|srm30|all (default all)");
  an->add_flag("--include-truncation", a.include_truncation,
               "mask saturated residuals (image-dependent variant)");
  add_common(an, false);

  CLI::App* em = app.add_subcommand("emit-maps", "render a .jmap as PGM");
  em->add_option("--in", a.in, ".jmap input")->required();
  em->add_option("--out", a.out, ".pgm output")->required();
  add_common(em, false);

  CLI::App* pj = app.add_subcommand("parse-jpeg",
                                    "extract baseline JPEG coefficients");
  pj->add_option("--in", a.in, ".jpg input")->required();
  pj->add_option("--out", a.out, ".jcoef output")->required();
  add_common(pj, false);

  CLI::App* pe = app.add_subcommand("detect-pe",
                                    "detection error from a score CSV");
  pe->add_option("--in", a.in, "CSV with label,score rows")->required();
  pe->add_option("--out", a.out, "optional JSON result");
  add_common(pe, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (uerd->parsed()) return cmd_cost_uerd(a);
    if (lam->parsed()) return cmd_lambda_solve(a);
    if (sim->parsed()) return cmd_embed_sim(a);
    if (tr->parsed()) return cmd_train(a);
    if (ex->parsed()) return cmd_export_costs(a);
    if (an->parsed()) return cmd_analyze_gradients(a);
    if (em->parsed()) return cmd_emit_maps(a);
    if (pj->parsed()) return cmd_parse_jpeg(a);
    if (pe->parsed()) return cmd_detect_pe(a);
    std::fprintf(stderr, "jec: no command\n");
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "jec: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "jec: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "jec: %s\n", e.what());
    return 2;
  }
}
