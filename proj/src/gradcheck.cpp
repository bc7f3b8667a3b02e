#include "dpdforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dpdforge/rng.hpp"

namespace dpdforge {

namespace {

std::vector<double> flat_targets(std::span<const IqSample> target) {
    std::vector<double> t(2 * target.size());
    for (std::size_t k = 0; k < target.size(); ++k) {
        t[2 * k] = target[k].i;
        t[2 * k + 1] = target[k].q;
    }
    return t;
}

// builds the frame graph and returns (loss value, optional analytic grads)
double frame_loss(SequenceModel& model, std::span<const IqSample> in,
                  std::span<const double> targets, std::vector<double>* grads) {
    ad::Tape tape;
    const std::vector<ad::NodeId> pnodes = push_params(tape, model.params());
    std::vector<ad::NodeId> inputs(in.size());
    for (std::size_t t = 0; t < in.size(); ++t) {
        const double v[2] = {in[t].i, in[t].q};
        inputs[t] = tape.constant(std::span<const double>(v, 2));
    }
    const std::vector<ad::NodeId> outs = model.build_frame(tape, pnodes, inputs);
    const ad::NodeId loss = ad::frame_mse(tape, outs, targets);
    if (grads != nullptr) {
        tape.backward(loss);
        grads->assign(model.params().size(), 0.0);
        accumulate_param_grads(tape, pnodes, model.params(), *grads);
    }
    return tape.scalar(loss);
}

}  // namespace

double frame_loss_value(const SequenceModel& model, std::span<const IqSample> frame_input,
                        std::span<const IqSample> frame_target) {
    const std::vector<double> targets = flat_targets(frame_target);
    return frame_loss(const_cast<SequenceModel&>(model), frame_input, targets, nullptr);
}

GradCheckReport gradient_check(SequenceModel& model, std::span<const IqSample> frame_input,
                               std::span<const IqSample> frame_target, double tolerance,
                               std::size_t max_scalars, std::uint64_t seed, double step) {
    if (frame_input.size() != frame_target.size() || frame_input.empty())
        throw std::invalid_argument("gradient_check: frame input/target mismatch");
    const std::vector<double> targets = flat_targets(frame_target);

    std::vector<double> analytic;
    frame_loss(model, frame_input, targets, &analytic);

    ParameterSet& params = model.params();
    const std::size_t total = params.size();
    std::vector<std::size_t> picks(total);
    std::iota(picks.begin(), picks.end(), 0);
    if (total > max_scalars) {
        Rng rng(mix_seed(seed, 0x6C));
        for (std::size_t k = 0; k < max_scalars; ++k) {
            const std::size_t j = k + rng.uniform_int(total - k);
            std::swap(picks[k], picks[j]);
        }
        picks.resize(max_scalars);
    }

    GradCheckReport report;
    report.checked = picks.size();
    std::span<double> flat = params.flat();
    for (const std::size_t idx : picks) {
        const double saved = flat[idx];
        flat[idx] = saved + step;
        const double lp = frame_loss(model, frame_input, targets, nullptr);
        flat[idx] = saved - step;
        const double lm = frame_loss(model, frame_input, targets, nullptr);
        flat[idx] = saved;
        const double numeric = (lp - lm) / (2.0 * step);
        const double denom = std::max({std::fabs(analytic[idx]), std::fabs(numeric), 1e-6});
        const double rel = std::fabs(analytic[idx] - numeric) / denom;
        if (rel > report.worst_rel_err) {
            report.worst_rel_err = rel;
            // locate the owning entry for the report
            for (std::size_t e = 0; e < params.num_entries(); ++e) {
                const auto& entry = params.entry(e);
                if (idx >= entry.offset && idx < entry.offset + entry.count()) {
                    report.worst_param = entry.name;
                    report.worst_index = idx - entry.offset;
                    break;
                }
            }
        }
    }
    report.pass = report.worst_rel_err <= tolerance;
    return report;
}

}  // namespace dpdforge
