#include "jecrl/adam.hpp"

#include <cmath>

#include "jecrl/error.hpp"

namespace jecrl {

Adam::Adam(std::vector<Param*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Param* p : params_) {
    m_.emplace_back(p->t.size(), 0.0);
    v_.emplace_back(p->t.size(), 0.0);
  }
}

double Adam::lr_for_step(uint64_t step) const {
  if (cfg_.decay_every <= 0) return cfg_.lr;
  const uint64_t k = step / static_cast<uint64_t>(cfg_.decay_every);
  return cfg_.lr * std::pow(cfg_.decay_factor, static_cast<double>(k));
}

void Adam::step() {
  const double lr = lr_for_step(t_);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    if (!p.learnable) continue;
    if (p.t.g.size() != p.t.v.size()) throw DataError("Adam: grad/value shape mismatch");
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (size_t j = 0; j < p.t.v.size(); ++j) {
      const double g = p.t.g[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.t.v[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

std::vector<Adam::MomentRef> Adam::moments() {
  std::vector<MomentRef> out;
  out.reserve(params_.size());
  for (size_t i = 0; i < params_.size(); ++i)
    out.push_back(MomentRef{&params_[i]->name, &m_[i], &v_[i]});
  return out;
}

}  // namespace jecrl
