#include <doctest.h>

#include <cmath>

#include "dpdforge/optim.hpp"

using namespace dpdforge;

namespace {

ParameterSet single_param(double value, bool frozen = false) {
    ParameterSet p;
    p.add("w", 1, 1, frozen);
    p.flat()[0] = value;
    return p;
}

}  // namespace

TEST_CASE("one adamw step matches the hand-computed update") {
    ParameterSet p = single_param(1.0);
    AdamWConfig cfg;  // lr 1e-3, betas (0.9, 0.999), eps 1e-8, wd 0.01
    AdamW opt(p, cfg);
    const double g = 1.0;
    opt.step(p, std::span<const double>(&g, 1));

    // bias-corrected moments after one unit-gradient step are both 1
    const double expected = 1.0 - 1e-3 * (1.0 / (1.0 + 1e-8) + 0.01 * 1.0);
    CHECK(p.flat()[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(p.flat()[0] == doctest::Approx(0.99899).epsilon(1e-5));
}

TEST_CASE("zero gradient and zero decay leave parameters untouched") {
    ParameterSet p = single_param(0.731);
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt(p, cfg);
    const double g = 0.0;
    for (int k = 0; k < 10; ++k) opt.step(p, std::span<const double>(&g, 1));
    CHECK(p.flat()[0] == 0.731);
}

TEST_CASE("frozen parameters ignore gradients and decay") {
    ParameterSet p;
    p.add("trainable", 1, 1, false);
    p.add("frozen", 1, 1, true);
    p.flat()[0] = 1.0;
    p.flat()[1] = 1.0;
    AdamW opt(p, {});
    const double g[2] = {1.0, 1.0};
    opt.step(p, g);
    CHECK(p.flat()[0] < 1.0);
    CHECK(p.flat()[1] == 1.0);
}

TEST_CASE("zero weight decay reduces adamw to adam") {
    ParameterSet p = single_param(0.4);
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt(p, cfg);

    double w = 0.4, m = 0.0, v = 0.0;
    for (int step = 1; step <= 5; ++step) {
        const double g = 0.3 * step;
        opt.step(p, std::span<const double>(&g, 1));
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double mh = m / (1.0 - std::pow(cfg.beta1, step));
        const double vh = v / (1.0 - std::pow(cfg.beta2, step));
        w -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        CHECK(p.flat()[0] == doctest::Approx(w).epsilon(1e-15));
    }
}

TEST_CASE("pure decay shrinks the weight by lr*wd*w per step") {
    ParameterSet p = single_param(2.0);
    AdamWConfig cfg;
    cfg.weight_decay = 0.1;
    AdamW opt(p, cfg);
    const double g = 0.0;
    double w = 2.0;
    for (int k = 0; k < 4; ++k) {
        opt.step(p, std::span<const double>(&g, 1));
        w -= cfg.lr * cfg.weight_decay * w;
        CHECK(p.flat()[0] == doctest::Approx(w).epsilon(1e-15));
    }
}

TEST_CASE("plateau scheduler cuts the rate only after stalling") {
    PlateauConfig cfg;
    cfg.factor = 0.5;
    cfg.patience = 2;
    cfg.min_lr = 1e-6;
    {
        PlateauScheduler s(1e-3, cfg);
        double metric = -10.0;
        for (int e = 0; e < 6; ++e) {
            metric -= 1.0;  // always improving
            CHECK(s.update(metric) == 1e-3);
        }
    }
    {
        PlateauScheduler s(1e-3, cfg);
        CHECK(s.update(-10.0) == 1e-3);  // sets the best
        CHECK(s.update(-10.0) == 1e-3);  // stale 1
        CHECK(s.update(-10.0) == 5e-4);  // stale 2 -> cut on the 3rd flat epoch
        CHECK(s.update(-10.0) == 5e-4);
        CHECK(s.update(-10.0) == 2.5e-4);
    }
    {
        PlateauScheduler s(2e-6, cfg);
        for (int e = 0; e < 8; ++e) s.update(1.0);
        CHECK(s.lr() == 1e-6);  // clamped
        s.update(1.0);
        CHECK(s.lr() == 1e-6);
    }
}

TEST_CASE("improvement resets the stall counter") {
    PlateauConfig cfg;
    cfg.patience = 3;
    PlateauScheduler s(1e-3, cfg);
    s.update(5.0);
    s.update(5.0);
    s.update(5.0);
    CHECK(s.epochs_since_improvement() == 2);
    s.update(4.0);  // improvement
    CHECK(s.epochs_since_improvement() == 0);
    CHECK(s.lr() == 1e-3);
}
