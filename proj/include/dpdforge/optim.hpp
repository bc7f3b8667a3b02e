#ifndef DPDFORGE_OPTIM_HPP
#define DPDFORGE_OPTIM_HPP

// AdamW with decoupled weight decay and a reduce-on-plateau learning-rate
// scheduler. Frozen parameters keep their exact bit pattern across steps.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dpdforge/params.hpp"

namespace dpdforge {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

class AdamW {
public:
    AdamW(const ParameterSet& params, const AdamWConfig& cfg);

    // w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + wd * w); frozen scalars untouched
    void step(ParameterSet& params, std::span<const double> grad);

    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    long step_count() const { return step_count_; }
    const AdamWConfig& config() const { return cfg_; }

    std::span<const double> first_moment() const { return m_; }
    std::span<const double> second_moment() const { return v_; }
    void restore(long step_count, std::span<const double> m, std::span<const double> v);

private:
    AdamWConfig cfg_;
    long step_count_ = 0;
    std::vector<double> m_, v_;
    std::vector<char> frozen_;
};

struct PlateauConfig {
    double factor = 0.5;
    int patience = 5;
    double min_lr = 1e-6;
};

class PlateauScheduler {
public:
    PlateauScheduler(double initial_lr, const PlateauConfig& cfg)
        : cfg_(cfg), lr_(initial_lr) {}

    // Feed the per-epoch validation metric (lower is better). Returns the lr
    // in effect after the update.
    double update(double metric);

    double lr() const { return lr_; }
    double best_metric() const { return best_; }
    int epochs_since_improvement() const { return stale_; }

private:
    PlateauConfig cfg_;
    double lr_;
    double best_ = std::numeric_limits<double>::infinity();
    int stale_ = 0;
};

}  // namespace dpdforge

#endif
