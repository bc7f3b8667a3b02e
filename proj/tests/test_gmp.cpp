#include <doctest.h>

#include <cmath>
#include <complex>

#include "dpdforge/gradcheck.hpp"
#include "dpdforge/metrics.hpp"
#include "dpdforge/models.hpp"
#include "dpdforge/rng.hpp"

using namespace dpdforge;
using cd = std::complex<double>;

namespace {

IqSequence random_sequence(std::size_t n, std::uint64_t seed, double scale = 0.7) {
    Rng rng(seed);
    IqSequence s;
    s.sample_rate_hz = 1e6;
    s.samples.resize(n);
    for (auto& v : s.samples) v = {scale * rng.gaussian(), scale * rng.gaussian()};
    return s;
}

}  // namespace

TEST_CASE("design row basics") {
    {
        GmpPlan plan;
        plan.memory_depth = 0;
        plan.orders = {1};
        plan.lag_radius = 0;
        const auto terms = plan.terms();
        REQUIRE(terms.size() == 1);
        IqSequence x = random_sequence(4, 1);
        cd row[1];
        gmp_design_row(x.samples, 2, terms, row);
        CHECK(row[0] == to_complex(x.samples[2]));
    }
    {
        GmpPlan plan;
        plan.memory_depth = 1;
        plan.orders = {1};
        plan.lag_radius = 0;
        const auto terms = plan.terms();
        REQUIRE(terms.size() == 2);
        IqSequence x;
        x.samples = {{1.0, 0.0}, {2.0, 0.0}};
        cd row[2];
        gmp_design_row(x.samples, 1, terms, row);
        CHECK(row[0] == cd(2.0, 0.0));  // delay 0
        CHECK(row[1] == cd(1.0, 0.0));  // delay 1
        // before the start everything is zero padded
        gmp_design_row(x.samples, 0, terms, row);
        CHECK(row[1] == cd(0.0, 0.0));
    }
}

TEST_CASE("term count is the size of the index product minus the trim") {
    GmpPlan plan;
    plan.memory_depth = 4;
    plan.orders = {1, 3, 5};
    plan.lag_radius = 2;
    CHECK(plan.term_count() == 5 * 3 * 5);
    plan.trim = 7;
    CHECK(plan.term_count() == 5 * 3 * 5 - 7);
    // trimming drops cross terms of the highest order first
    const auto terms = plan.terms();
    int high_cross = 0;
    for (const GmpTerm& t : terms)
        if (t.order == 5 && t.lag != 0) ++high_cross;
    CHECK(high_cross == 5 * 4 - 7);  // order-5 cross terms lost all 7 drops
}

TEST_CASE("trim beyond the cross terms is rejected") {
    GmpPlan plan;
    plan.memory_depth = 0;
    plan.orders = {1};
    plan.lag_radius = 0;
    plan.trim = 1;
    CHECK_THROWS_AS(plan.terms(), std::invalid_argument);
}

TEST_CASE("least squares recovers a pure linear gain") {
    GmpPlan plan;
    plan.memory_depth = 1;
    plan.orders = {1, 3};
    plan.lag_radius = 0;
    const IqSequence x = random_sequence(512, 2);
    IqSequence y = x;
    for (auto& s : y.samples) {
        const cd v = cd(s.i, s.q) * cd(2.0, 0.0);
        s = to_iq(v);
    }
    std::unique_ptr<SequenceModel> m = gmp_fit(x.samples, y.samples, plan, 0.0);
    const std::span<const double> c = m->params().flat();
    // canonical order: (p=1, m=0), (p=1, m=1), (p=3, m=0), (p=3, m=1)
    CHECK(std::fabs(c[0] - 2.0) <= 1e-9);
    CHECK(std::fabs(c[1]) <= 1e-9);
    for (std::size_t k = 2; k < c.size(); ++k) CHECK(std::fabs(c[k]) <= 1e-9);
}

TEST_CASE("least squares identifies an in-family model") {
    GmpPlan plan;
    plan.memory_depth = 1;
    plan.orders = {1, 3, 5};
    plan.lag_radius = 0;  // six distinct basis columns
    const auto terms = plan.terms();
    Rng rng(9);
    std::vector<cd> truth(terms.size());
    for (auto& v : truth) v = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));

    const IqSequence x = random_sequence(2048, 10);
    IqSequence y;
    y.sample_rate_hz = x.sample_rate_hz;
    y.samples.resize(x.size());
    std::vector<cd> row(terms.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        gmp_design_row(x.samples, static_cast<long>(n), terms, row.data());
        cd acc(0.0, 0.0);
        for (std::size_t k = 0; k < terms.size(); ++k) acc += truth[k] * row[k];
        y.samples[n] = to_iq(acc);
    }

    std::unique_ptr<SequenceModel> m = gmp_fit(x.samples, y.samples, plan, 0.0);
    const std::span<const double> c = m->params().flat();
    for (std::size_t k = 0; k < terms.size(); ++k) {
        CHECK(std::fabs(c[2 * k] - truth[k].real()) <= 1e-8);
        CHECK(std::fabs(c[2 * k + 1] - truth[k].imag()) <= 1e-8);
    }
    // noiseless in-family data fits to numerical silence
    const std::vector<IqSample> pred = m->forward(x.samples);
    CHECK(nmse(pred, y.samples).db <= -80.0);
}

TEST_CASE("rank deficiency with zero ridge is an error") {
    GmpPlan plan;  // default: order-1 cross lags duplicate the linear column
    plan.memory_depth = 1;
    const IqSequence x = random_sequence(256, 4);
    CHECK_THROWS(gmp_fit(x.samples, x.samples, plan, 0.0));
    // the default ridge absorbs the duplicated columns
    CHECK_NOTHROW(gmp_fit(x.samples, x.samples, plan));
    // and too few rows cannot be solved at all
    const IqSequence tiny = random_sequence(8, 5);
    CHECK_THROWS(gmp_fit(tiny.samples, tiny.samples, plan, 0.0));
}

TEST_CASE("gmp model trains through the tape on its coefficients") {
    ModelConfig cfg;
    cfg.family = "gmp";
    cfg.gmp.memory_depth = 1;
    cfg.gmp.orders = {1, 3};
    cfg.gmp.lag_radius = 1;
    std::unique_ptr<SequenceModel> m = make_model(cfg);
    Rng rng(6);
    for (double& v : m->params().flat()) v = 0.3 * rng.uniform(-1.0, 1.0);
    const IqSequence in = random_sequence(6, 7);
    const IqSequence tgt = random_sequence(6, 8);
    const GradCheckReport r = gradient_check(*m, in.samples, tgt.samples, 1e-6, 100, 3);
    INFO("worst " << r.worst_rel_err);
    CHECK(r.pass);
    CHECK_FALSE(m->input_differentiable());
}

TEST_CASE("identity-initialized gmp passes the signal through") {
    ModelConfig cfg;
    cfg.family = "gmp";
    std::unique_ptr<SequenceModel> m = make_model(cfg);
    const IqSequence x = random_sequence(32, 12);
    const std::vector<IqSample> u = m->forward(x.samples);
    for (std::size_t k = 0; k < x.size(); ++k) {
        CHECK(u[k].i == doctest::Approx(x.samples[k].i).epsilon(1e-15));
        CHECK(u[k].q == doctest::Approx(x.samples[k].q).epsilon(1e-15));
    }
}
