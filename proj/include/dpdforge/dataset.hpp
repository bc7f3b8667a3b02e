#ifndef DPDFORGE_DATASET_HPP
#define DPDFORGE_DATASET_HPP

// Dataset directory layout: six partition CSVs (train/val/test x input/
// output), the transmitted constellation grid (reference.csv), and meta.json
// describing the signal plan, amplifier, split and seeds. Everything needed
// to evaluate or retrain lives in the directory.

#include <array>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "dpdforge/framing.hpp"
#include "dpdforge/iq.hpp"
#include "dpdforge/ofdm.hpp"
#include "dpdforge/synth_pa.hpp"

namespace dpdforge {

struct DatagenConfig {
    std::size_t n_samples = 38400;
    std::array<double, 3> ratios = {0.6, 0.2, 0.2};
    OfdmConfig ofdm;                    // num_symbols <= 0: derived from n_samples
    SynthPaConfig pa = default_synth_pa();
    std::optional<double> snr_db;       // measurement noise on the amplifier output
};

struct DatasetMeta {
    double sample_rate_hz = 0.0;
    std::size_t n_samples = 0;
    std::array<double, 3> ratios = {0.6, 0.2, 0.2};
    OfdmConfig ofdm;
    double ofdm_scale = 1.0;
    SynthPaConfig pa;
    std::optional<double> snr_db;
};

struct Dataset {
    DatasetSplit split;
    std::optional<OfdmReference> reference;
    DatasetMeta meta;
};

// Generates stimulus -> amplifier -> split and writes the directory.
Dataset datagen(const DatagenConfig& cfg, const std::filesystem::path& out_dir);

Dataset load_dataset(const std::filesystem::path& dir);

nlohmann::json ofdm_config_to_json(const OfdmConfig& cfg);
OfdmConfig ofdm_config_from_json(const nlohmann::json& j);
nlohmann::json synth_pa_to_json(const SynthPaConfig& cfg);
SynthPaConfig synth_pa_from_json(const nlohmann::json& j);

}  // namespace dpdforge

#endif
