#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dpdforge/pipeline.hpp"
#include "dpdforge/rng.hpp"

using namespace dpdforge;

namespace {

// a dgru whose only action is the skip path scaled by g: an exactly linear
// amplifier model usable inside the differentiable cascade
GoldCheckpoint linear_pa_checkpoint(double g, int hidden = 4) {
    ModelConfig cfg;
    cfg.family = "dgru";
    cfg.hidden = hidden;
    std::unique_ptr<SequenceModel> m = make_model(cfg);
    ParameterSet& p = m->params();
    for (double& v : p.flat()) v = 0.0;
    std::span<double> w = p.values(p.find("out.w"));
    const std::size_t in_dim = static_cast<std::size_t>(hidden) + 6;
    w[0 * in_dim + static_cast<std::size_t>(hidden)] = g;
    w[1 * in_dim + static_cast<std::size_t>(hidden) + 1] = g;
    GoldCheckpoint gold;
    gold.checkpoint = save_checkpoint(*m);
    gold.metric = 0.0;
    gold.epoch = 0;
    return gold;
}

OfdmConfig toy_ofdm(int num_symbols, std::uint64_t seed) {
    OfdmConfig cfg;
    cfg.num_channels = 2;
    cfg.channel_bw_hz = 10e6;
    cfg.subcarriers_per_channel = 16;
    cfg.qam_order = 16;
    cfg.sample_rate_hz = 80e6;
    cfg.num_symbols = num_symbols;
    cfg.seed = seed;
    return cfg;
}

ChannelPlan toy_plan() {
    ChannelPlan plan;
    plan.main_bw_hz = 20e6;
    plan.adjacent_offset_hz = 20e6;
    plan.adjacent_bw_hz = 20e6;
    return plan;
}

PsdConfig toy_psd() {
    PsdConfig cfg;
    cfg.segment_len = 64;
    cfg.overlap = 32;
    return cfg;
}

struct ToyData {
    DatasetSplit split;
    OfdmReference reference;
};

// linear-gain data: y = g * x over a small multicarrier stimulus
ToyData linear_data(std::size_t n, double g, std::uint64_t seed) {
    OfdmConfig cfg = toy_ofdm(static_cast<int>(n / 144 + 2), seed);
    auto [x_full, ref] = generate_ofdm(cfg);
    REQUIRE(x_full.size() >= n);
    IqSequence x;
    x.sample_rate_hz = cfg.sample_rate_hz;
    x.samples.assign(x_full.samples.begin(), x_full.samples.begin() + static_cast<std::ptrdiff_t>(n));
    IqSequence y = x;
    for (auto& s : y.samples) {
        s.i *= g;
        s.q *= g;
    }
    return {split_dataset(x, y, {0.6, 0.2, 0.2}), std::move(ref)};
}

}  // namespace

TEST_CASE("batch gradients agree bit for bit across execution modes") {
    const ToyData data = linear_data(600, 2.0, 5);
    ModelConfig mc;
    mc.family = "dgru";
    mc.hidden = 4;
    mc.seed = 2;
    std::unique_ptr<SequenceModel> model = make_model(mc);
    const FramedDataset frames = frame_sequence(data.split.train.input, data.split.train.output, 20, 3);
    std::vector<std::size_t> batch;
    for (std::size_t k = 0; k < frames.num_frames; k += 2) batch.push_back(k);

    std::vector<double> g_serial(model->params().size(), 0.0);
    std::vector<double> g_omp(model->params().size(), 0.0);
    const double l1 = pa_batch_gradient(*model, frames, batch, g_serial, par::Mode::serial);
    const double l2 = pa_batch_gradient(*model, frames, batch, g_omp, par::Mode::openmp);
    CHECK(l1 == l2);
    CHECK(std::memcmp(g_serial.data(), g_omp.data(), g_serial.size() * sizeof(double)) == 0);

    // and for the cascade
    std::unique_ptr<SequenceModel> pa = load_checkpoint(linear_pa_checkpoint(2.0).checkpoint);
    std::fill(g_serial.begin(), g_serial.end(), 0.0);
    std::fill(g_omp.begin(), g_omp.end(), 0.0);
    const double c1 = cascade_batch_gradient(*model, *pa, frames, batch, g_serial, par::Mode::serial);
    const double c2 = cascade_batch_gradient(*model, *pa, frames, batch, g_omp, par::Mode::openmp);
    CHECK(c1 == c2);
    CHECK(std::memcmp(g_serial.data(), g_omp.data(), g_serial.size() * sizeof(double)) == 0);
}

TEST_CASE("pa training on a linear amplifier reaches deep accuracy") {
    const ToyData data = linear_data(2000, 2.0, 6);
    ModelConfig mc;
    mc.family = "dgru";
    mc.hidden = 4;
    mc.seed = 4;
    TrainConfig tc;
    tc.epochs = 20;
    tc.batch_size = 64;
    tc.frame_len = 50;
    tc.stride = 1;
    tc.seed = 9;
    // a few hundred optimizer steps must cover the distance to gain 2
    tc.initial_lr = 1e-2;
    tc.adamw.weight_decay = 0.0;
    const auto [gold, history] = train_pa(data.split, mc, tc);
    INFO("best validation nmse " << gold.metric << " dB at epoch " << gold.epoch);
    CHECK(gold.metric <= -60.0);
    CHECK(history.epochs.size() == 20);
    // gold metric is the minimum of the recorded history
    double best = 1e9;
    for (const EpochRecord& r : history.epochs) best = std::min(best, r.val_nmse_db);
    CHECK(gold.metric == best);
}

TEST_CASE("pa training is deterministic given the seed") {
    const ToyData data = linear_data(800, 1.5, 7);
    ModelConfig mc;
    mc.family = "gru";
    mc.hidden = 3;
    mc.seed = 8;
    TrainConfig tc;
    tc.epochs = 3;
    tc.frame_len = 20;
    tc.stride = 2;
    tc.seed = 10;
    const auto [g1, h1] = train_pa(data.split, mc, tc);
    const auto [g2, h2] = train_pa(data.split, mc, tc);
    CHECK(g1.checkpoint.dump() == g2.checkpoint.dump());
    CHECK(g1.epoch == g2.epoch);
    REQUIRE(h1.epochs.size() == h2.epochs.size());
    for (std::size_t e = 0; e < h1.epochs.size(); ++e) {
        CHECK(h1.epochs[e].train_loss == h2.epochs[e].train_loss);
        CHECK(h1.epochs[e].val_nmse_db == h2.epochs[e].val_nmse_db);
    }
}

TEST_CASE("gmp family trains in a single shot") {
    const ToyData data = linear_data(600, 2.0, 13);
    ModelConfig mc;
    mc.family = "gmp";
    mc.gmp.memory_depth = 2;
    TrainConfig tc;
    tc.epochs = 40;  // ignored by the least-squares path
    const auto [gold, history] = train_pa(data.split, mc, tc);
    CHECK(history.epochs.size() == 1);
    CHECK(gold.metric <= -80.0);  // linear data is inside the basis family
}

TEST_CASE("dpd training through a frozen linear amplifier converges to identity") {
    const ToyData data = linear_data(2000, 2.0, 14);
    const GoldCheckpoint pa = linear_pa_checkpoint(2.0);
    const std::string pa_bytes = pa.checkpoint.dump();

    ModelConfig dc;
    dc.family = "dgru";
    dc.hidden = 4;
    dc.seed = 14;
    TrainConfig tc;
    tc.epochs = 15;
    tc.frame_len = 50;
    tc.stride = 2;  // desk-scale shortcut, still plenty of frames
    tc.seed = 15;

    EvalContext ctx;
    ctx.plan = toy_plan();
    ctx.psd = toy_psd();
    ctx.reference = &data.reference;

    const auto [gold, history] = train_dpd(data.split, pa, dc, tc, ctx);

    // freeze invariant: the amplifier checkpoint is byte-identical
    CHECK(pa.checkpoint.dump() == pa_bytes);

    // the analytic optimum of the cascade is the identity map
    std::unique_ptr<SequenceModel> dpd = load_checkpoint(gold.checkpoint);
    const IqSequence u = predistort(*dpd, data.split.test.input);
    double err = 0.0, den = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double di = u.samples[k].i - data.split.test.input.samples[k].i;
        const double dq = u.samples[k].q - data.split.test.input.samples[k].q;
        err += di * di + dq * dq;
        den += abs2(data.split.test.input.samples[k]);
    }
    const double ident_db = 10.0 * std::log10(err / den);
    INFO("identity error " << ident_db << " dB");
    CHECK(ident_db <= -30.0);

    // a trained pre-distorter keeps the crest factor in a sane band
    const double papr_in = papr_db(data.split.test.input.samples);
    const double papr_u = papr_db(u.samples);
    CHECK(papr_u >= papr_in - 1.0);
    CHECK(papr_u <= papr_in + 3.0);

    // gold selection matches the recorded history
    double best = 1e300;
    for (const EpochRecord& r : history.epochs)
        best = std::min(best, 0.5 * (r.val_acpr_l_dbc + r.val_acpr_r_dbc));
    CHECK(gold.metric == best);
    CHECK(gold.checkpoint.at("target_gain").get<double>() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("sim_eval composes the cascade exactly") {
    const ToyData data = linear_data(600, 2.0, 16);
    std::unique_ptr<SequenceModel> pa = load_checkpoint(linear_pa_checkpoint(2.0).checkpoint);

    EvalContext ctx;
    ctx.plan = toy_plan();
    ctx.psd = toy_psd();
    ctx.reference = &data.reference;
    ctx.partition_offset = data.split.test.offset;

    // identity pre-distorter through a perfectly linear amplifier
    const MetricReport r = sim_eval(nullptr, *pa, data.split.test.input, 2.0, ctx);
    CHECK(r.nmse_db == doctest::Approx(-150.0));
    CHECK(r.evm_db <= -140.0);
    CHECK(r.gain == 2.0);

    // report fields equal direct metric calls on the same sequences
    IqSequence y_hat;
    y_hat.sample_rate_hz = data.split.test.input.sample_rate_hz;
    y_hat.samples = pa->forward(data.split.test.input.samples);
    const auto [l, rr] = acpr(y_hat, ctx.plan, ctx.psd);
    CHECK(r.acpr_left_dbc == l);
    CHECK(r.acpr_right_dbc == rr);
    CHECK(r.papr_db == papr_db(data.split.test.input.samples));
}

TEST_CASE("training aborts on divergence") {
    const ToyData data = linear_data(600, 2.0, 17);
    ModelConfig mc;
    mc.family = "dgru";
    mc.hidden = 4;
    TrainConfig tc;
    tc.epochs = 3;
    tc.frame_len = 20;
    tc.initial_lr = 1e9;  // hopeless step size
    CHECK_THROWS_AS(train_pa(data.split, mc, tc), DivergenceError);
}

TEST_CASE("gmp as amplifier model is rejected in the cascade") {
    const ToyData data = linear_data(600, 2.0, 18);
    ModelConfig gmp_cfg;
    gmp_cfg.family = "gmp";
    std::unique_ptr<SequenceModel> gmp_pa = make_model(gmp_cfg);
    GoldCheckpoint gold;
    gold.checkpoint = save_checkpoint(*gmp_pa);
    ModelConfig dc;
    dc.family = "dgru";
    dc.hidden = 2;
    TrainConfig tc;
    tc.epochs = 1;
    EvalContext ctx;
    ctx.plan = toy_plan();
    ctx.psd = toy_psd();
    CHECK_THROWS_AS(train_dpd(data.split, gold, dc, tc, ctx), std::invalid_argument);
}

TEST_CASE("gmp pre-distorter trains through the frozen neural amplifier") {
    const ToyData data = linear_data(1200, 2.0, 19);
    const GoldCheckpoint pa = linear_pa_checkpoint(2.0);
    ModelConfig dc;
    dc.family = "gmp";
    dc.gmp.memory_depth = 1;
    dc.gmp.orders = {1, 3};
    dc.gmp.lag_radius = 0;
    TrainConfig tc;
    tc.epochs = 8;
    tc.frame_len = 30;
    tc.stride = 3;
    tc.seed = 20;
    EvalContext ctx;
    ctx.plan = toy_plan();
    ctx.psd = toy_psd();
    const auto [gold, history] = train_dpd(data.split, pa, dc, tc, ctx);
    // identity start is already optimal for a linear amplifier; training
    // must not walk away from it
    std::unique_ptr<SequenceModel> dpd = load_checkpoint(gold.checkpoint);
    const IqSequence u = predistort(*dpd, data.split.test.input);
    const NmseResult ident = nmse(u.samples, data.split.test.input.samples);
    CHECK(ident.db <= -25.0);
}

TEST_CASE("sweep continues past unreachable budgets") {
    const ToyData data = linear_data(900, 2.0, 22);
    Dataset ds;
    ds.split = data.split;
    ds.reference = data.reference;
    ds.meta.sample_rate_hz = 80e6;
    const GoldCheckpoint pa = linear_pa_checkpoint(2.0);
    TrainConfig tc;
    tc.epochs = 2;
    tc.frame_len = 20;
    tc.stride = 4;
    const std::vector<SweepRow> rows =
        sweep_budgets({"dgru", "gru"}, {43, 226}, ds, pa, tc, 0.05, 1);
    REQUIRE(rows.size() == 4);
    int failures = 0, successes = 0;
    for (const SweepRow& r : rows) {
        if (!r.ok) {
            ++failures;
            CHECK(std::isnan(r.sim_acpr_l_dbc));
        } else {
            ++successes;
            CHECK(std::llabs(static_cast<long long>(r.params) -
                             static_cast<long long>(r.target_params)) <=
                  static_cast<long long>(0.05 * static_cast<double>(r.target_params) + 1));
        }
    }
    CHECK(failures == 1);  // no gru config reaches 43 parameters within 5%
    CHECK(successes == 3);
}
