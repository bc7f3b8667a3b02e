#include "dpdforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "dpdforge/rng.hpp"

namespace dpdforge {

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1 || frame_len < 1 || stride < 1)
        throw std::invalid_argument("TrainConfig: epochs, batch_size, frame_len, stride must be positive");
    if (stride > frame_len) throw std::invalid_argument("TrainConfig: stride must not exceed frame_len");
    if (initial_lr <= 0.0) throw std::invalid_argument("TrainConfig: initial_lr must be positive");
    if (gain_mode == TargetGainMode::fixed && fixed_gain <= 0.0)
        throw std::invalid_argument("TrainConfig: fixed target gain must be positive");
}

namespace {

std::vector<double> flat_frame(std::span<const IqSample> s) {
    std::vector<double> out(2 * s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        out[2 * k] = s[k].i;
        out[2 * k + 1] = s[k].q;
    }
    return out;
}

// one frame of the PA-modeling loss graph; returns the loss node
double pa_frame_grad(const SequenceModel& model, FrameView f, std::span<double> grad_out,
                     double seed) {
    ad::Tape tape;
    const std::vector<ad::NodeId> pnodes = push_params(tape, model.params());
    std::vector<ad::NodeId> inputs(f.input.size());
    for (std::size_t t = 0; t < f.input.size(); ++t) {
        const double v[2] = {f.input[t].i, f.input[t].q};
        inputs[t] = tape.constant(std::span<const double>(v, 2));
    }
    const std::vector<ad::NodeId> outs = model.build_frame(tape, pnodes, inputs);
    const ad::NodeId loss = ad::frame_mse(tape, outs, flat_frame(f.target));
    tape.backward(loss, seed);
    accumulate_param_grads(tape, pnodes, model.params(), grad_out);
    return tape.scalar(loss);
}

double cascade_frame_grad(const SequenceModel& dpd, const SequenceModel& pa, FrameView f,
                          std::span<double> grad_out, double seed) {
    ad::Tape tape;
    const std::vector<ad::NodeId> dpd_nodes = push_params(tape, dpd.params());
    const std::vector<ad::NodeId> pa_nodes = push_params(tape, pa.params());
    std::vector<ad::NodeId> inputs(f.input.size());
    for (std::size_t t = 0; t < f.input.size(); ++t) {
        const double v[2] = {f.input[t].i, f.input[t].q};
        inputs[t] = tape.constant(std::span<const double>(v, 2));
    }
    const std::vector<ad::NodeId> u = dpd.build_frame(tape, dpd_nodes, inputs);
    const std::vector<ad::NodeId> outs = pa.build_frame(tape, pa_nodes, u);
    const ad::NodeId loss = ad::frame_mse(tape, outs, flat_frame(f.target));
    tape.backward(loss, seed);
    // only the pre-distorter trains; the frozen amplifier keeps its values
    accumulate_param_grads(tape, dpd_nodes, dpd.params(), grad_out);
    return tape.scalar(loss);
}

template <typename FrameGrad>
double batch_gradient_impl(const FrameGrad& frame_grad, std::size_t param_count,
                           const FramedDataset& frames, std::span<const std::size_t> batch,
                           std::span<double> grad_out, par::Mode mode) {
    if (grad_out.size() != param_count)
        throw std::invalid_argument("batch_gradient: gradient buffer size mismatch");
    if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
    const double seed = 1.0 / static_cast<double>(batch.size());

    // per-frame slots, reduced in frame order below
    std::vector<std::vector<double>> slots(batch.size());
    std::vector<double> losses(batch.size(), 0.0);
    par::for_each_index(batch.size(), mode, [&](std::size_t b) {
        slots[b].assign(param_count, 0.0);
        losses[b] = frame_grad(frames.frame(batch[b]), std::span<double>(slots[b]), seed);
    });

    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        loss += losses[b] * seed;
        const std::vector<double>& s = slots[b];
        for (std::size_t k = 0; k < param_count; ++k) grad_out[k] += s[k];
    }
    return loss;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t run_seed, int epoch) {
    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k) perm[k] = k;
    Rng rng(mix_seed(run_seed, 0xE70C0000ULL + static_cast<std::uint64_t>(epoch)));
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t j = k + rng.uniform_int(n - k);
        std::swap(perm[k], perm[j]);
    }
    return perm;
}

void check_finite_loss(double loss, double initial_loss) {
    if (!std::isfinite(loss) || (initial_loss > 0.0 && loss > 1e6 * initial_loss))
        throw DivergenceError("training diverged: loss " + std::to_string(loss));
}

}  // namespace

double pa_batch_gradient(const SequenceModel& model, const FramedDataset& frames,
                         std::span<const std::size_t> batch, std::span<double> grad_out,
                         par::Mode mode) {
    return batch_gradient_impl(
        [&](FrameView f, std::span<double> g, double seed) {
            return pa_frame_grad(model, f, g, seed);
        },
        model.params().size(), frames, batch, grad_out, mode);
}

double cascade_batch_gradient(const SequenceModel& dpd, const SequenceModel& pa,
                              const FramedDataset& frames, std::span<const std::size_t> batch,
                              std::span<double> grad_out, par::Mode mode) {
    return batch_gradient_impl(
        [&](FrameView f, std::span<double> g, double seed) {
            return cascade_frame_grad(dpd, pa, f, g, seed);
        },
        dpd.params().size(), frames, batch, grad_out, mode);
}

double resolve_target_gain(const TrainConfig& cfg, const DatasetSplit& split) {
    if (cfg.gain_mode == TargetGainMode::fixed) return cfg.fixed_gain;
    return target_gain(split.train.input.samples, split.train.output.samples);
}

std::pair<GoldCheckpoint, TrainHistory> train_pa(const DatasetSplit& split,
                                                 const ModelConfig& model_cfg,
                                                 const TrainConfig& cfg) {
    cfg.validate();
    TrainHistory history;
    history.phase = "pa";

    if (model_cfg.family == "gmp") {
        // single-shot least squares; epochs do not apply
        std::unique_ptr<SequenceModel> model =
            gmp_fit(split.train.input.samples, split.train.output.samples, model_cfg.gmp);
        const std::vector<IqSample> val_pred = model->forward(split.validation.input.samples);
        const double val_nmse = nmse(val_pred, split.validation.output.samples).db;
        GoldCheckpoint gold{save_checkpoint(*model), val_nmse, 1};
        EpochRecord rec;
        rec.epoch = 1;
        rec.train_loss = 0.0;
        rec.val_nmse_db = val_nmse;
        rec.lr = 0.0;
        history.epochs.push_back(rec);
        return {std::move(gold), std::move(history)};
    }

    std::unique_ptr<SequenceModel> model = make_model(model_cfg);
    const FramedDataset frames =
        frame_sequence(split.train.input, split.train.output,
                       static_cast<std::size_t>(cfg.frame_len), static_cast<std::size_t>(cfg.stride));

    AdamWConfig acfg = cfg.adamw;
    acfg.lr = cfg.initial_lr;
    AdamW opt(model->params(), acfg);
    PlateauScheduler sched(cfg.initial_lr, cfg.scheduler);

    GoldCheckpoint gold;
    std::vector<double> grad(model->params().size());
    double initial_loss = -1.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::vector<std::size_t> perm = epoch_permutation(frames.num_frames, cfg.seed, epoch);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < perm.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count =
                std::min(static_cast<std::size_t>(cfg.batch_size), perm.size() - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            const double loss = pa_batch_gradient(
                *model, frames, std::span<const std::size_t>(perm).subspan(start, count), grad);
            if (initial_loss < 0.0) initial_loss = loss;
            check_finite_loss(loss, initial_loss);
            opt.step(model->params(), grad);
            epoch_loss += loss * static_cast<double>(count);
        }
        epoch_loss /= static_cast<double>(frames.num_frames);

        const std::vector<IqSample> val_pred = model->forward(split.validation.input.samples);
        const double val_nmse = nmse(val_pred, split.validation.output.samples).db;
        opt.set_lr(sched.update(val_nmse));

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss;
        rec.val_nmse_db = val_nmse;
        rec.lr = opt.lr();
        history.epochs.push_back(rec);
        if (val_nmse < gold.metric) {
            gold.checkpoint = save_checkpoint(*model);
            gold.metric = val_nmse;
            gold.epoch = epoch;
        }
    }
    return {std::move(gold), std::move(history)};
}

std::pair<GoldCheckpoint, TrainHistory> train_dpd(const DatasetSplit& split,
                                                  const GoldCheckpoint& pa_gold,
                                                  const ModelConfig& dpd_cfg,
                                                  const TrainConfig& cfg,
                                                  const EvalContext& ctx) {
    cfg.validate();
    std::unique_ptr<SequenceModel> pa = load_checkpoint(pa_gold.checkpoint);
    if (!pa->input_differentiable())
        throw std::invalid_argument(
            "train_dpd: the amplifier model must be differentiable in its input");
    pa->params().set_all_frozen(true);

    const double gain = resolve_target_gain(cfg, split);
    std::unique_ptr<SequenceModel> dpd = make_model(dpd_cfg);

    // cascade target: G * x over the training input
    IqSequence train_target;
    train_target.sample_rate_hz = split.train.input.sample_rate_hz;
    train_target.samples.resize(split.train.input.size());
    for (std::size_t k = 0; k < train_target.samples.size(); ++k) {
        train_target.samples[k].i = gain * split.train.input.samples[k].i;
        train_target.samples[k].q = gain * split.train.input.samples[k].q;
    }
    const FramedDataset frames =
        frame_sequence(split.train.input, train_target, static_cast<std::size_t>(cfg.frame_len),
                       static_cast<std::size_t>(cfg.stride));

    AdamWConfig acfg = cfg.adamw;
    acfg.lr = cfg.initial_lr;
    AdamW opt(dpd->params(), acfg);
    PlateauScheduler sched(cfg.initial_lr, cfg.scheduler);

    TrainHistory history;
    history.phase = "dpd";
    GoldCheckpoint gold;
    std::vector<double> grad(dpd->params().size());
    double initial_loss = -1.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::vector<std::size_t> perm = epoch_permutation(frames.num_frames, cfg.seed, epoch);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < perm.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count =
                std::min(static_cast<std::size_t>(cfg.batch_size), perm.size() - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            const double loss = cascade_batch_gradient(
                *dpd, *pa, frames, std::span<const std::size_t>(perm).subspan(start, count), grad);
            if (initial_loss < 0.0) initial_loss = loss;
            check_finite_loss(loss, initial_loss);
            opt.step(dpd->params(), grad);
            epoch_loss += loss * static_cast<double>(count);
        }
        epoch_loss /= static_cast<double>(frames.num_frames);

        // simulated validation metrics through the frozen amplifier model
        const std::vector<IqSample> u = dpd->forward(split.validation.input.samples);
        IqSequence y_hat;
        y_hat.sample_rate_hz = split.validation.input.sample_rate_hz;
        y_hat.samples = pa->forward(u);
        const auto [acpr_l, acpr_r] = acpr(y_hat, ctx.plan, ctx.psd);
        double evm = std::numeric_limits<double>::quiet_NaN();
        if (ctx.reference != nullptr) {
            const SymbolAlignment align =
                align_to_symbol_boundaries(split.validation.offset, y_hat.size(),
                                           ctx.reference->cfg, ctx.reference->num_symbols);
            if (align.num_symbols >= 1) {
                const OfdmReference slice = ctx.reference->slice(align.first_symbol, align.num_symbols);
                const std::size_t span_len = static_cast<std::size_t>(align.num_symbols) *
                                             static_cast<std::size_t>(slice.cfg.symbol_hop());
                evm = evm_db(std::span<const IqSample>(y_hat.samples).subspan(align.skip, span_len),
                             slice, gain);
            }
        }
        const double mean_acpr = 0.5 * (acpr_l + acpr_r);
        opt.set_lr(sched.update(mean_acpr));

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss;
        rec.val_acpr_l_dbc = acpr_l;
        rec.val_acpr_r_dbc = acpr_r;
        rec.val_evm_db = evm;
        rec.lr = opt.lr();
        history.epochs.push_back(rec);
        if (mean_acpr < gold.metric) {
            nlohmann::json ckpt = save_checkpoint(*dpd);
            ckpt["target_gain"] = gain;
            gold.checkpoint = std::move(ckpt);
            gold.metric = mean_acpr;
            gold.epoch = epoch;
        }
    }
    return {std::move(gold), std::move(history)};
}

MetricReport sim_eval(const SequenceModel* dpd, const SequenceModel& pa, const IqSequence& x,
                      double gain, const EvalContext& ctx) {
    IqSequence u;
    u.sample_rate_hz = x.sample_rate_hz;
    u.samples = dpd != nullptr ? dpd->forward(x.samples) : x.samples;
    IqSequence y_hat;
    y_hat.sample_rate_hz = x.sample_rate_hz;
    y_hat.samples = pa.forward(u.samples);

    std::vector<IqSample> target(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        target[k].i = gain * x.samples[k].i;
        target[k].q = gain * x.samples[k].q;
    }

    MetricReport report;
    report.gain = gain;
    report.nmse_db = nmse(y_hat.samples, target).db;
    const auto [l, r] = acpr(y_hat, ctx.plan, ctx.psd);
    report.acpr_left_dbc = l;
    report.acpr_right_dbc = r;
    report.papr_db = papr_db(u.samples);
    report.evm_db = std::numeric_limits<double>::quiet_NaN();
    if (ctx.reference != nullptr) {
        const SymbolAlignment align = align_to_symbol_boundaries(
            ctx.partition_offset, y_hat.size(), ctx.reference->cfg, ctx.reference->num_symbols);
        if (align.num_symbols >= 1) {
            const OfdmReference slice = ctx.reference->slice(align.first_symbol, align.num_symbols);
            const std::size_t span_len = static_cast<std::size_t>(align.num_symbols) *
                                         static_cast<std::size_t>(slice.cfg.symbol_hop());
            report.evm_db =
                evm_db(std::span<const IqSample>(y_hat.samples).subspan(align.skip, span_len),
                       slice, gain);
        }
    }
    return report;
}

IqSequence predistort(const SequenceModel& dpd, const IqSequence& x) {
    IqSequence u;
    u.sample_rate_hz = x.sample_rate_hz;
    u.samples = dpd.forward(x.samples);
    return u;
}

std::vector<SweepRow> sweep_budgets(const std::vector<std::string>& families,
                                    const std::vector<std::size_t>& budgets, const Dataset& data,
                                    const GoldCheckpoint& pa_gold, const TrainConfig& cfg,
                                    double budget_tolerance, int jobs) {
    std::vector<SweepRow> rows(families.size() * budgets.size());
    EvalContext ctx;
    if (data.reference) ctx.reference = &*data.reference;

    auto run_cell = [&](std::size_t cell) {
        const std::string& family = families[cell / budgets.size()];
        const std::size_t budget = budgets[cell % budgets.size()];
        SweepRow& row = rows[cell];
        row.family = family;
        row.target_params = budget;
        try {
            ModelConfig dpd_cfg =
                search_config_for_budget(family, budget, budget_tolerance, cfg.seed);
            row.params = count_params(*make_model(dpd_cfg));
            EvalContext cell_ctx = ctx;
            cell_ctx.partition_offset = data.split.test.offset;
            auto [gold, history] = train_dpd(data.split, pa_gold, dpd_cfg, cfg, cell_ctx);
            std::unique_ptr<SequenceModel> dpd = load_checkpoint(gold.checkpoint);
            std::unique_ptr<SequenceModel> pa = load_checkpoint(pa_gold.checkpoint);
            const double gain = resolve_target_gain(cfg, data.split);
            const MetricReport report =
                sim_eval(dpd.get(), *pa, data.split.test.input, gain, cell_ctx);
            row.sim_acpr_l_dbc = report.acpr_left_dbc;
            row.sim_acpr_r_dbc = report.acpr_right_dbc;
            row.sim_evm_db = report.evm_db;
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    };

    if (jobs <= 1) {
        for (std::size_t cell = 0; cell < rows.size(); ++cell) run_cell(cell);
    } else {
        // cells are independent; per-cell kernels go serial to avoid nesting
        const par::Mode saved = par::mode();
        par::set_mode(par::Mode::serial);
        std::vector<std::thread> workers;
        const std::size_t total = rows.size();
        for (int w = 0; w < jobs && w < static_cast<int>(total); ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t cell = static_cast<std::size_t>(w); cell < total;
                     cell += static_cast<std::size_t>(jobs))
                    run_cell(cell);
            });
        }
        for (std::thread& t : workers) t.join();
        par::set_mode(saved);
    }
    return rows;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path.string());
    if (history.phase == "dpd") {
        std::fputs("epoch,train_loss,val_sim_acpr_l_dbc,val_sim_acpr_r_dbc,val_sim_evm_db,lr\n", f);
        for (const EpochRecord& r : history.epochs)
            std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss,
                         r.val_acpr_l_dbc, r.val_acpr_r_dbc, r.val_evm_db, r.lr);
    } else {
        std::fputs("epoch,train_loss,val_nmse_db,lr\n", f);
        for (const EpochRecord& r : history.epochs)
            std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_nmse_db, r.lr);
    }
    std::fclose(f);
}

}  // namespace dpdforge
