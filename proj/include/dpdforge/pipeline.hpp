#ifndef DPDFORGE_PIPELINE_HPP
#define DPDFORGE_PIPELINE_HPP

// End-to-end learning pipeline: train the amplifier behavioral model, then
// learn the pre-distorter through the frozen cascaded amplifier model, with
// gold-model selection, deterministic batching, and simulated metrics.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpdforge/dataset.hpp"
#include "dpdforge/framing.hpp"
#include "dpdforge/metrics.hpp"
#include "dpdforge/models.hpp"
#include "dpdforge/optim.hpp"
#include "dpdforge/parallel.hpp"

namespace dpdforge {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TargetGainMode { auto_eq4, fixed };

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;
    int frame_len = 50;
    int stride = 1;
    double initial_lr = 1e-3;
    std::uint64_t seed = 1;
    TargetGainMode gain_mode = TargetGainMode::auto_eq4;
    double fixed_gain = 1.0;
    AdamWConfig adamw;       // lr is taken from initial_lr
    PlateauConfig scheduler;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_nmse_db = std::numeric_limits<double>::quiet_NaN();
    double val_acpr_l_dbc = std::numeric_limits<double>::quiet_NaN();
    double val_acpr_r_dbc = std::numeric_limits<double>::quiet_NaN();
    double val_evm_db = std::numeric_limits<double>::quiet_NaN();
    double lr = 0.0;
};

struct TrainHistory {
    std::string phase;  // "pa" or "dpd"
    std::vector<EpochRecord> epochs;
};

struct GoldCheckpoint {
    nlohmann::json checkpoint;
    double metric = std::numeric_limits<double>::infinity();
    int epoch = 0;
};

struct EvalContext {
    ChannelPlan plan;
    PsdConfig psd;
    const OfdmReference* reference = nullptr;  // full grid of the generated signal
    std::size_t partition_offset = 0;          // absolute offset of the evaluated slice
};

// Mini-batch gradient of the frame loss, averaged over the batch. Per-frame
// gradients are computed on independent tapes (optionally in parallel) and
// reduced in frame order, so the result is independent of the thread count.
// Returns the batch loss.
double pa_batch_gradient(const SequenceModel& model, const FramedDataset& frames,
                         std::span<const std::size_t> batch, std::span<double> grad_out,
                         par::Mode mode = par::mode());

// Same, for the cascade: frames hold (x, G*x); gradients are taken with
// respect to the pre-distorter parameters while the amplifier model's
// parameters stay untouched (its gradients only carry the chain rule).
double cascade_batch_gradient(const SequenceModel& dpd, const SequenceModel& pa,
                              const FramedDataset& frames, std::span<const std::size_t> batch,
                              std::span<double> grad_out, par::Mode mode = par::mode());

std::pair<GoldCheckpoint, TrainHistory> train_pa(const DatasetSplit& split,
                                                 const ModelConfig& model_cfg,
                                                 const TrainConfig& cfg);

std::pair<GoldCheckpoint, TrainHistory> train_dpd(const DatasetSplit& split,
                                                  const GoldCheckpoint& pa_gold,
                                                  const ModelConfig& dpd_cfg,
                                                  const TrainConfig& cfg,
                                                  const EvalContext& ctx);

// u = dpd(x); y = pa(u); metrics of y against gain*x and the reference grid.
// Pass dpd = nullptr for the no-DPD baseline (u = x).
MetricReport sim_eval(const SequenceModel* dpd, const SequenceModel& pa, const IqSequence& x,
                      double gain, const EvalContext& ctx);

IqSequence predistort(const SequenceModel& dpd, const IqSequence& x);

struct SweepRow {
    std::string family;
    std::size_t target_params = 0;
    std::size_t params = 0;
    double sim_acpr_l_dbc = std::numeric_limits<double>::quiet_NaN();
    double sim_acpr_r_dbc = std::numeric_limits<double>::quiet_NaN();
    double sim_evm_db = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
};

// Trains one budget-matched pre-distorter per (family, budget) cell through
// the shared amplifier model and evaluates it on the test partition. Cell
// failures are recorded and the sweep continues.
std::vector<SweepRow> sweep_budgets(const std::vector<std::string>& families,
                                    const std::vector<std::size_t>& budgets, const Dataset& data,
                                    const GoldCheckpoint& pa_gold, const TrainConfig& cfg,
                                    double budget_tolerance = 0.05, int jobs = 1);

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

// Derives the target gain for a split per the configured mode.
double resolve_target_gain(const TrainConfig& cfg, const DatasetSplit& split);

}  // namespace dpdforge

#endif
