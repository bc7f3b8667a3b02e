#ifndef DPDFORGE_METRICS_HPP
#define DPDFORGE_METRICS_HPP

// Figures of merit: NMSE, Welch PSD, ACPR, EVM, PAPR and the target gain of
// a linearized chain. dB values are floored at -150 dB (linear 1e-15) so
// perfect signals never produce -inf.

#include <filesystem>
#include <span>
#include <string>
#include <utility>

#include "dpdforge/iq.hpp"
#include "dpdforge/ofdm.hpp"
#include "dpdforge/parallel.hpp"

#include <nlohmann/json_fwd.hpp>

namespace dpdforge {

constexpr double kDbFloorLinear = 1e-15;
constexpr double kDbFloor = -150.0;

double to_db_floored(double linear);

struct NmseResult {
    double linear = 0.0;
    double db = kDbFloor;
};

NmseResult nmse(std::span<const IqSample> pred, std::span<const IqSample> ref);

enum class PsdWindow { hann, rect };

struct PsdConfig {
    std::size_t segment_len = 1024;
    std::size_t overlap = 512;
    PsdWindow window = PsdWindow::hann;
};

struct PsdEstimate {
    std::vector<double> freqs_hz;       // strictly increasing, spanning (-fs/2, fs/2]
    std::vector<double> power_density;  // power per Hz, two-sided
    double resolution_bw_hz = 0.0;

    double integrate_band(double lo_hz, double hi_hz) const;
    double total_power() const;
};

PsdEstimate psd(const IqSequence& x, const PsdConfig& cfg = {}, par::Mode mode = par::mode());

void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& est);

struct ChannelPlan {
    double main_center_hz = 0.0;
    double main_bw_hz = 200e6;
    double adjacent_offset_hz = 200e6;
    double adjacent_bw_hz = 200e6;

    void validate(double sample_rate_hz) const;
};

// (left, right) adjacent-to-main power ratios in dBc
std::pair<double, double> acpr(const IqSequence& x, const ChannelPlan& plan,
                               const PsdConfig& cfg = {});

// Demodulates measured/gain against the reference grid and returns the error
// to reference energy ratio in dB. `measured` must start at a symbol
// boundary and cover every symbol in `ref`.
double evm_db(std::span<const IqSample> measured, const OfdmReference& ref, double gain);

// G = mean over n of |y[n]| / |x[n]|
double target_gain(std::span<const IqSample> x, std::span<const IqSample> y);

double papr_db(std::span<const IqSample> x);

struct MetricReport {
    double nmse_db = 0.0;
    double acpr_left_dbc = 0.0;
    double acpr_right_dbc = 0.0;
    double evm_db = 0.0;
    double papr_db = 0.0;
    double gain = 1.0;
};

nlohmann::json metric_report_to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

}  // namespace dpdforge

#endif
