#include "dpdforge/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdforge {

AdamW::AdamW(const ParameterSet& params, const AdamWConfig& cfg)
    : cfg_(cfg),
      m_(params.size(), 0.0),
      v_(params.size(), 0.0),
      frozen_(params.frozen_mask()) {
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0)
        throw std::invalid_argument("AdamW: betas must lie in [0, 1)");
}

void AdamW::step(ParameterSet& params, std::span<const double> grad) {
    if (grad.size() != m_.size() || params.size() != m_.size())
        throw std::invalid_argument("AdamW: gradient/parameter size mismatch");
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    std::span<double> w = params.flat();
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (frozen_[k] != 0) continue;
        const double g = grad[k];
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m_[k] / bc1;
        const double v_hat = v_[k] / bc2;
        w[k] -= cfg_.lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) + cfg_.weight_decay * w[k]);
    }
}

void AdamW::restore(long step_count, std::span<const double> m, std::span<const double> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
        throw std::invalid_argument("AdamW: restore size mismatch");
    step_count_ = step_count;
    for (std::size_t k = 0; k < m_.size(); ++k) {
        m_[k] = m[k];
        v_[k] = v[k];
    }
}

double PlateauScheduler::update(double metric) {
    if (metric < best_) {
        best_ = metric;
        stale_ = 0;
        return lr_;
    }
    ++stale_;
    if (stale_ >= cfg_.patience) {
        lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
        stale_ = 0;
    }
    return lr_;
}

}  // namespace dpdforge
