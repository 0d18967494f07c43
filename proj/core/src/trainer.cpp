#include "jecrl/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "jecrl/checkpoint.hpp"
#include "jecrl/error.hpp"
#include "jecrl/fsio.hpp"
#include "jecrl/synthetic.hpp"

namespace jecrl {

namespace {

// Stream-splitting constants so init/data/sample draws never interleave.
constexpr uint64_t kDataStream = 0x9e3779b97f4a7c15ULL;
constexpr uint64_t kSampleStream = 0xda942042e4dd58b5ULL;

std::string rng_blob(const Rng& rng) {
  std::ostringstream os;
  rng.save(os);
  return os.str();
}

void rng_from_blob(Rng& rng, const std::string& blob) {
  std::istringstream is(blob);
  rng.load(is);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch < 1) throw DataError("batch size must be >= 1");
  if (iters < 1) throw DataError("iteration count must be >= 1");
  if (payload.value <= 0.0) throw DataError("payload must be positive");
  if (update_policy < 1 || update_env < 1)
    throw DataError("update ratio parts must be >= 1");
  if (checkpoint_every < 0) throw DataError("checkpoint cadence must be >= 0");
  if (warmup < 0) throw DataError("warmup must be >= 0");
}

Trainer::Trainer(const TrainConfig& cfg, const PolicyNetConfig& pcfg,
                 const EnvNetConfig& ecfg, std::vector<JpegImage> covers,
                 const std::optional<std::filesystem::path>& restore_from)
    : cfg_(cfg),
      covers_(std::move(covers)),
      policy_([&] {
        cfg_.validate();
        if (covers_.size() < static_cast<size_t>(cfg_.batch))
          throw DataError("cover set smaller than one batch");
        Rng init_rng(cfg_.seed);
        return PolicyNet(pcfg, init_rng);
      }()),
      policy_adam_(policy_.params(true), cfg_.policy_adam),
      data_rng_(cfg_.seed ^ kDataStream),
      sample_rng_(cfg_.seed ^ kSampleStream) {
  for (const JpegImage& img : covers_) {
    img.validate();
    if (img.height != covers_[0].height || img.width != covers_[0].width)
      throw DataError("training covers must share one shape");
    target_bits_.push_back(cfg_.payload.resolve_bits(img));
  }
  if (cfg_.env_enabled) {
    // A second init stream, offset so policy init is identical with the
    // environment present or absent.
    Rng env_init(cfg_.seed + 1);
    env_.emplace(ecfg, env_init);
    env_adam_.emplace(env_->params(true), cfg_.env_adam);
  }
  reshuffle();
  if (restore_from) {
    const Checkpoint ck = read_jckpt(*restore_from);
    iteration_ = static_cast<int64_t>(ck.step);

    load_params(ck, policy_.params());
    if (env_) load_params(ck, env_->params());

    const auto load_moments = [&](Adam& adam, const std::string& prefix) {
      for (Adam::MomentRef mr : adam.moments()) {
        for (const char* kind : {".m", ".v"}) {
          const NamedTensor* t = ck.find(prefix + *mr.param_name + kind);
          if (!t) throw DataError("checkpoint missing optimizer state for " +
                                  *mr.param_name);
          std::vector<double>& dst = kind[1] == 'm' ? *mr.m : *mr.v;
          if (t->data.size() != dst.size())
            throw DataError("checkpoint optimizer shape mismatch for " +
                            *mr.param_name);
          for (size_t i = 0; i < t->data.size(); ++i)
            dst[i] = static_cast<double>(t->data[i]);
        }
      }
    };
    load_moments(policy_adam_, "adam.policy.");
    if (env_adam_) load_moments(*env_adam_, "adam.env.");

    const std::string* meta = ck.find_blob("meta");
    if (!meta) throw DataError("checkpoint missing meta blob");
    ByteReader br(reinterpret_cast<const uint8_t*>(meta->data()), meta->size());
    policy_adam_.set_step_count(br.u64());
    const uint64_t env_steps = br.u64();
    if (env_adam_) env_adam_->set_step_count(env_steps);
    epoch_ = static_cast<int64_t>(br.u64());
    cursor_ = br.u64();
    const uint64_t n_perm = br.u64();
    if (n_perm != covers_.size())
      throw DataError("checkpoint cover count does not match the data set");
    for (uint32_t& p : perm_) p = br.u32();

    const std::string* dr = ck.find_blob("rng.data");
    const std::string* sr = ck.find_blob("rng.sample");
    if (!dr || !sr) throw DataError("checkpoint missing RNG state");
    rng_from_blob(data_rng_, *dr);
    rng_from_blob(sample_rng_, *sr);
    pending_epoch_log_ = false;  // the saved permutation was already logged
  }
}

void Trainer::reshuffle() {
  perm_.resize(covers_.size());
  std::iota(perm_.begin(), perm_.end(), 0u);
  for (size_t i = perm_.size() - 1; i > 0; --i)
    std::swap(perm_[i], perm_[data_rng_.below(i + 1)]);
  cursor_ = 0;
  ++epoch_;
  pending_epoch_log_ = true;
}

std::vector<const JpegImage*> Trainer::next_batch() {
  // Epochs are whole batches; a short remainder starts the next epoch.
  if (cursor_ + static_cast<size_t>(cfg_.batch) > perm_.size()) reshuffle();
  std::vector<const JpegImage*> batch;
  batch.reserve(static_cast<size_t>(cfg_.batch));
  for (int i = 0; i < cfg_.batch; ++i)
    batch.push_back(&covers_[perm_[cursor_++]]);
  return batch;
}

StepTelemetry Trainer::step() {
  const std::vector<const JpegImage*> batch = next_batch();
  const int n = cfg_.batch;
  const double hw =
      static_cast<double>(batch[0]->height) * batch[0]->width;

  StepTelemetry t;
  t.iteration = ++iteration_;
  t.env_accuracy = 0.5;

  for (int rep = 0; rep < cfg_.update_policy; ++rep) {
    std::vector<PolicyTensor> policies = policy_.forward(batch, true);

    std::vector<ModificationMap> mods;
    std::vector<RealGrid> rewards;
    std::vector<const PixelPlane*> plane_ptrs;
    std::vector<PixelPlane> planes;
    std::vector<int> labels;
    mods.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      mods.push_back(simulate_embedding(policies[static_cast<size_t>(i)],
                                        sample_rng_.next_u64()));

    if (env_) {
      planes.reserve(static_cast<size_t>(2 * n));
      for (int i = 0; i < n; ++i) {
        const JpegImage& x = *batch[static_cast<size_t>(i)];
        JpegImage y = x;
        const ModificationMap& m = mods[static_cast<size_t>(i)];
        for (size_t c = 0; c < y.coeffs.size(); ++c) y.coeffs[c] += m[c];
        planes.push_back(decompress(x));
        planes.push_back(decompress(y));
        labels.push_back(0);
        labels.push_back(1);
      }
      for (const PixelPlane& p : planes) plane_ptrs.push_back(&p);
      env_->forward(plane_ptrs, true);
      t.l_e = env_->backward_cross_entropy(labels);
      t.env_accuracy = env_->accuracy(labels);
      for (int i = 0; i < n; ++i) {
        const GradientMap g =
            env_->gradient_map(2 * i + 1, batch[static_cast<size_t>(i)]->table);
        rewards.push_back(reward_map(mods[static_cast<size_t>(i)], g, cfg_.xi));
      }
    } else {
      for (int i = 0; i < n; ++i)
        rewards.emplace_back(batch[static_cast<size_t>(i)]->coeffs.height(),
                             batch[static_cast<size_t>(i)]->coeffs.width());
    }

    t.l_a = t.l_r = t.l_c = t.mean_reward = t.payload_entropy = 0.0;
    std::vector<RealGrid> grads;
    grads.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const size_t s = static_cast<size_t>(i);
      const size_t cover = perm_[cursor_ - static_cast<size_t>(n) + s];
      const PolicyLossTerms terms =
          policy_loss(policies[s], mods[s], rewards[s], target_bits_[cover],
                      cfg_.alpha, cfg_.beta);
      t.l_a += terms.l_a / n;
      t.l_r += terms.l_r / n;
      t.l_c += terms.l_c / n;
      t.payload_entropy += terms.entropy / n;
      t.mean_reward +=
          std::accumulate(rewards[s].begin(), rewards[s].end(), 0.0) / (hw * n);
      RealGrid g = policy_loss_q_grad(policies[s], mods[s], rewards[s],
                                      target_bits_[cover], cfg_.alpha, cfg_.beta);
      for (double& v : g) v /= n;  // batch loss is the mean over images
      grads.push_back(std::move(g));
    }

    if (iteration_ > cfg_.warmup) {
      policy_.backward(grads);
      policy_adam_.step();
    }
  }

  if (env_) {
    // The reward backward already accumulated parameter gradients from the
    // final cover/stego pairs; the environment updates after the policy.
    env_adam_->step();
    for (int extra = 1; extra < cfg_.update_env; ++extra) {
      // Additional environment steps re-run the same pairs.
      std::vector<const PixelPlane*> ptrs;
      const Tensor& in = env_->graph().tensor(0);
      // Re-forward on the tensor already loaded: rebuild plane views.
      std::vector<PixelPlane> replay;
      const int h = in.shape[1], w = in.shape[2];
      replay.reserve(static_cast<size_t>(in.shape[0]));
      for (int s = 0; s < in.shape[0]; ++s) {
        PixelPlane p(h, w);
        std::copy_n(in.v.begin() + static_cast<long>(s) * h * w, p.size(),
                    p.begin());
        replay.push_back(std::move(p));
      }
      std::vector<int> labels;
      for (int s = 0; s < in.shape[0]; ++s) labels.push_back(s % 2);
      for (const PixelPlane& p : replay) ptrs.push_back(&p);
      env_->forward(ptrs, true);
      env_->backward_cross_entropy(labels);
      env_adam_->step();
    }
  }

  for (double v : {t.l_a, t.l_r, t.l_c, t.l_e, t.mean_reward, t.payload_entropy})
    if (!std::isfinite(v)) throw NumericError("non-finite training loss");
  return t;
}

void Trainer::append_epoch_log(const std::filesystem::path& out_dir) const {
  std::ofstream os(out_dir / "epochs.log", std::ios::app);
  if (!os) throw DataError("cannot open epoch log in " + out_dir.string());
  os << "epoch " << epoch_ << ":";
  for (uint32_t p : perm_) os << ' ' << p;
  os << '\n';
}

void Trainer::run(const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path csv = out_dir / "telemetry.csv";
  const bool fresh = !std::filesystem::exists(csv) ||
                     std::filesystem::file_size(csv) == 0;
  std::ofstream os(csv, std::ios::app);
  if (!os) throw DataError("cannot open telemetry file " + csv.string());
  if (fresh)
    os << "iteration,l_A,l_R,l_C,l_E,mean_reward,payload_entropy,env_accuracy\n";

  while (iteration_ < cfg_.iters) {
    if (pending_epoch_log_) {
      append_epoch_log(out_dir);
      pending_epoch_log_ = false;
    }
    StepTelemetry t;
    try {
      t = step();
    } catch (const NumericError& e) {
      os << "# aborted at iteration " << (iteration_ + 1) << ": " << e.what()
         << '\n';
      os.flush();
      throw;
    }
    char row[360];
    std::snprintf(row, sizeof row,
                  "%" PRId64 ",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  t.iteration, t.l_a, t.l_r, t.l_c, t.l_e, t.mean_reward,
                  t.payload_entropy, t.env_accuracy);
    os << row;
    if (pending_epoch_log_) {
      // A reshuffle happened inside this step; record it right away.
      append_epoch_log(out_dir);
      pending_epoch_log_ = false;
    }

    if (env_) {
      acc_window_.push_back(t.env_accuracy);
      if (acc_window_.size() > 100) acc_window_.pop_front();
      if (acc_window_.size() == 100 && iteration_ % 100 == 0) {
        const double mean =
            std::accumulate(acc_window_.begin(), acc_window_.end(), 0.0) / 100.0;
        if (mean > 0.99 || mean < 0.5)
          std::fprintf(stderr,
                       "stability warning: environment accuracy %.3f over the "
                       "last 100 steps (iteration %" PRId64 ")\n",
                       mean, iteration_);
      }
    }

    if (cfg_.checkpoint_every > 0 && iteration_ % cfg_.checkpoint_every == 0 &&
        iteration_ < cfg_.iters)
      save_checkpoint(out_dir /
                      ("ckpt_" + std::to_string(iteration_) + ".jckpt"));
  }
  save_checkpoint(out_dir / "ckpt_final.jckpt");
}

void Trainer::save_checkpoint(const std::filesystem::path& path) {
  Checkpoint ck;
  ck.step = static_cast<uint64_t>(iteration_);

  const auto dump_params = [&](std::vector<Param*> params) {
    for (Param* p : params)
      ck.tensors.push_back({p->name, p->t.shape, quantize_f32_inplace(p->t.v)});
  };
  dump_params(policy_.params());
  if (env_) dump_params(env_->params());

  const auto dump_moments = [&](Adam& adam, const std::string& prefix) {
    for (Adam::MomentRef mr : adam.moments()) {
      ck.tensors.push_back(
          {prefix + *mr.param_name + ".m", {static_cast<int>(mr.m->size())},
           quantize_f32_inplace(*mr.m)});
      ck.tensors.push_back(
          {prefix + *mr.param_name + ".v", {static_cast<int>(mr.v->size())},
           quantize_f32_inplace(*mr.v)});
    }
  };
  dump_moments(policy_adam_, "adam.policy.");
  if (env_adam_) dump_moments(*env_adam_, "adam.env.");

  ByteWriter meta;
  meta.u64(policy_adam_.step_count());
  meta.u64(env_adam_ ? env_adam_->step_count() : 0);
  meta.u64(static_cast<uint64_t>(epoch_));
  meta.u64(cursor_);
  meta.u64(perm_.size());
  for (uint32_t p : perm_) meta.u32(p);
  ck.blobs.emplace_back("meta", std::string(meta.buffer().begin(),
                                            meta.buffer().end()));
  ck.blobs.emplace_back("rng.data", rng_blob(data_rng_));
  ck.blobs.emplace_back("rng.sample", rng_blob(sample_rng_));

  write_jckpt(path, ck);
}

CostMap export_costs(PolicyNet& policy, const JpegImage& image) {
  const PolicyTensor q = policy.forward_single(image, false);
  return costs_from_policy(q.change_prob());
}

std::vector<JpegImage> load_cover_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jcoef")
      files.push_back(entry.path());
  if (files.empty())
    throw DataError("no .jcoef files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<JpegImage> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_jcoef(f));
  return out;
}

std::vector<JpegImage> resolve_cover_source(const std::string& source,
                                            int count, int image_size, int qf,
                                            uint64_t seed) {
  if (source.rfind("synthetic:", 0) == 0) {
    if (source != "synthetic:halfnoise")
      throw DataError("unknown synthetic source: " + source);
    return synthetic_halfnoise_corpus(count, image_size, image_size, qf,
                                      seed ^ 0x5851f42d4c957f2dULL);
  }
  return load_cover_dir(source);
}

}  // namespace jecrl
