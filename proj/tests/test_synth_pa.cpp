#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dpdforge/rng.hpp"
#include "dpdforge/synth_pa.hpp"

using namespace dpdforge;

namespace {

SynthPaConfig bare(int memory, int order) {
    SynthPaConfig cfg;
    cfg.memory_depth = memory;
    cfg.nonlinearity_order = order;
    cfg.saturation_level.reset();
    cfg.coefficients.assign(static_cast<std::size_t>(memory + 1) * cfg.num_orders(), {0.0, 0.0});
    return cfg;
}

IqSequence random_sequence(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    IqSequence s;
    s.sample_rate_hz = 1e6;
    s.samples.resize(n);
    for (auto& v : s.samples) v = {rng.gaussian(), rng.gaussian()};
    return s;
}

}  // namespace

TEST_CASE("identity coefficients pass the signal through") {
    SynthPaConfig cfg = bare(0, 1);
    cfg.coefficients[0] = {1.0, 0.0};
    const IqSequence u = random_sequence(64, 1);
    const IqSequence y = synth_pa_forward(cfg, u);
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(y.samples[k].i == u.samples[k].i);
        CHECK(y.samples[k].q == u.samples[k].q);
    }
}

TEST_CASE("third-order compression on a single sample") {
    SynthPaConfig cfg = bare(0, 3);
    cfg.coefficients[0] = {1.0, 0.0};
    cfg.coefficients[1] = {-0.1, 0.0};
    IqSequence u;
    u.samples = {{1.0, 0.0}};
    const IqSequence y = synth_pa_forward(cfg, u);
    CHECK(y.samples[0].i == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(y.samples[0].q == doctest::Approx(0.0));
}

TEST_CASE("one-tap memory echoes the previous sample") {
    SynthPaConfig cfg = bare(1, 1);
    cfg.coefficients[0] = {1.0, 0.0};
    cfg.coefficients[1] = {0.2, 0.0};
    IqSequence u;
    u.samples = {{1.0, 0.0}, {0.0, 0.0}};
    const IqSequence y = synth_pa_forward(cfg, u);
    CHECK(y.samples[0].i == doctest::Approx(1.0));
    CHECK(y.samples[1].i == doctest::Approx(0.2));
    CHECK(y.samples[1].q == doctest::Approx(0.0));
}

TEST_CASE("linear-only config scales every sample exactly") {
    SynthPaConfig cfg = bare(0, 1);
    cfg.coefficients[0] = {0.75, 0.0};
    const IqSequence u = random_sequence(256, 2);
    const IqSequence y = synth_pa_forward(cfg, u);
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(y.samples[k].i == 0.75 * u.samples[k].i);
        CHECK(y.samples[k].q == 0.75 * u.samples[k].q);
    }
}

TEST_CASE("forward pass is time invariant") {
    const SynthPaConfig cfg = default_synth_pa();
    const IqSequence u = random_sequence(200, 3);
    const std::size_t shift = 5;
    IqSequence shifted;
    shifted.sample_rate_hz = u.sample_rate_hz;
    shifted.samples.assign(shift, IqSample{});
    shifted.samples.insert(shifted.samples.end(), u.samples.begin(), u.samples.end());

    const IqSequence y = synth_pa_forward(cfg, u);
    const IqSequence ys = synth_pa_forward(cfg, shifted);
    for (std::size_t k = static_cast<std::size_t>(cfg.memory_depth); k < u.size(); ++k) {
        CHECK(ys.samples[k + shift].i == y.samples[k].i);
        CHECK(ys.samples[k + shift].q == y.samples[k].q);
    }
}

TEST_CASE("soft saturation bounds the output envelope") {
    SynthPaConfig cfg = bare(0, 1);
    cfg.coefficients[0] = {1.0, 0.0};
    cfg.saturation_level = 0.8;
    const IqSequence u = random_sequence(512, 4);
    const IqSequence y = synth_pa_forward(cfg, u);
    for (std::size_t k = 0; k < y.size(); ++k) {
        CHECK(abs_iq(y.samples[k]) < 0.8);
        // saturation preserves phase
        const double cross = y.samples[k].i * u.samples[k].q - y.samples[k].q * u.samples[k].i;
        CHECK(std::fabs(cross) <= 1e-12);
    }
}

TEST_CASE("amplitude quantization snaps the envelope to uniform levels") {
    SynthPaConfig cfg = bare(0, 1);
    cfg.coefficients[0] = {1.0, 0.0};
    cfg.saturation_level = 1.0;
    cfg.amplitude_quantization_bits = 4;
    const double step = 1.0 / 16.0;
    const IqSequence u = random_sequence(256, 5);
    const IqSequence y = synth_pa_forward(cfg, u);
    for (const IqSample& s : y.samples) {
        const double levels = abs_iq(s) / step;
        CHECK(std::fabs(levels - std::round(levels)) <= 1e-9);
    }
}

TEST_CASE("serial and parallel forward passes agree bit for bit") {
    const SynthPaConfig cfg = default_synth_pa();
    const IqSequence u = random_sequence(4096, 6);
    const IqSequence a = synth_pa_forward(cfg, u, par::Mode::serial);
    const IqSequence b = synth_pa_forward(cfg, u, par::Mode::openmp);
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.size() * sizeof(IqSample)) == 0);
}

TEST_CASE("config validation rejects malformed grids") {
    SynthPaConfig cfg = bare(2, 5);
    cfg.coefficients.pop_back();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = bare(0, 4);  // even order
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = bare(0, 1);
    cfg.coefficients[0] = {1.0, 0.0};
    IqSequence empty;
    CHECK_THROWS_AS(synth_pa_forward(cfg, empty), std::invalid_argument);
}

TEST_CASE("pinned default amplifier keeps a unit linear tap") {
    const SynthPaConfig cfg = default_synth_pa();
    CHECK(cfg.memory_depth == 3);
    CHECK(cfg.nonlinearity_order == 7);
    CHECK(cfg.coeff(0, 0) == std::complex<double>(1.0, 0.0));
    CHECK(cfg.saturation_level.has_value());
    CHECK(*cfg.saturation_level == doctest::Approx(1.2));
    // magnitudes decay by tap and order
    CHECK(std::abs(cfg.coeff(1, 0)) < std::abs(cfg.coeff(0, 0)));
    CHECK(std::abs(cfg.coeff(0, 2)) < std::abs(cfg.coeff(0, 1)));
}
