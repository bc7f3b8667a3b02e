#include "dpdforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpdforge/fft.hpp"

namespace dpdforge {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

double to_db_floored(double linear) {
    return 10.0 * std::log10(std::max(linear, kDbFloorLinear));
}

NmseResult nmse(std::span<const IqSample> pred, std::span<const IqSample> ref) {
    if (pred.size() != ref.size() || ref.empty())
        throw std::invalid_argument("nmse: sequences must have equal nonzero length");
    double err = 0.0, energy = 0.0;
    for (std::size_t n = 0; n < ref.size(); ++n) {
        const double di = pred[n].i - ref[n].i;
        const double dq = pred[n].q - ref[n].q;
        err += di * di + dq * dq;
        energy += abs2(ref[n]);
    }
    if (energy <= 0.0) throw std::invalid_argument("nmse: reference has zero energy");
    const double linear = err / energy;
    return {linear, to_db_floored(linear)};
}

double PsdEstimate::integrate_band(double lo_hz, double hi_hz) const {
    // inclusive band edges, with a small tolerance for float grid positions
    const double tol = resolution_bw_hz * 1e-9;
    double p = 0.0;
    for (std::size_t k = 0; k < freqs_hz.size(); ++k)
        if (freqs_hz[k] >= lo_hz - tol && freqs_hz[k] <= hi_hz + tol)
            p += power_density[k] * resolution_bw_hz;
    return p;
}

double PsdEstimate::total_power() const {
    double p = 0.0;
    for (double d : power_density) p += d * resolution_bw_hz;
    return p;
}

PsdEstimate psd(const IqSequence& x, const PsdConfig& cfg, par::Mode mode) {
    const std::size_t n = x.size();
    const std::size_t seg = cfg.segment_len;
    if (seg < 2) throw std::invalid_argument("psd: segment_len must be >= 2");
    if (seg > n) throw std::invalid_argument("psd: segment longer than the signal");
    if (cfg.overlap >= seg) throw std::invalid_argument("psd: overlap must be < segment_len");
    if (x.sample_rate_hz <= 0.0) throw std::invalid_argument("psd: sample rate must be set");

    const std::size_t hop = seg - cfg.overlap;
    const std::size_t num_segments = (n - seg) / hop + 1;
    const double fs = x.sample_rate_hz;

    std::vector<double> window(seg, 1.0);
    if (cfg.window == PsdWindow::hann)
        for (std::size_t t = 0; t < seg; ++t)
            window[t] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(t) / static_cast<double>(seg)));
    double win_power = 0.0;
    for (double w : window) win_power += w * w;

    // per-segment periodograms land in private slots; the average is taken
    // in segment order so serial and parallel modes agree bit for bit
    const Fft fft(seg);
    std::vector<std::vector<double>> slots(num_segments);
    par::for_each_index(num_segments, mode, [&](std::size_t s) {
        std::vector<std::complex<double>> buf(seg);
        const IqSample* base = x.samples.data() + s * hop;
        for (std::size_t t = 0; t < seg; ++t)
            buf[t] = std::complex<double>(base[t].i, base[t].q) * window[t];
        fft.forward(buf);
        std::vector<double>& mag = slots[s];
        mag.resize(seg);
        for (std::size_t k = 0; k < seg; ++k) mag[k] = std::norm(buf[k]);
    });

    std::vector<double> acc(seg, 0.0);
    for (std::size_t s = 0; s < num_segments; ++s)
        for (std::size_t k = 0; k < seg; ++k) acc[k] += slots[s][k];

    // two-sided density, normalized so sum(density)*df equals mean power
    const double norm = 1.0 / (fs * win_power * static_cast<double>(num_segments));
    PsdEstimate est;
    est.resolution_bw_hz = fs / static_cast<double>(seg);
    est.freqs_hz.resize(seg);
    est.power_density.resize(seg);
    // bins reordered to (-fs/2, fs/2]: k = seg/2+1 .. seg-1 map to negative frequencies
    const std::size_t half = seg / 2;
    for (std::size_t out_idx = 0; out_idx < seg; ++out_idx) {
        const long long k_rel = static_cast<long long>(out_idx) - static_cast<long long>(half) + 1;
        const std::size_t k = static_cast<std::size_t>((k_rel + static_cast<long long>(seg)) %
                                                       static_cast<long long>(seg));
        est.freqs_hz[out_idx] = static_cast<double>(k_rel) * est.resolution_bw_hz;
        est.power_density[out_idx] = acc[k] * norm;
    }
    return est;
}

void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& est) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path.string());
    std::fputs("freq_hz,power_db\n", f);
    for (std::size_t k = 0; k < est.freqs_hz.size(); ++k)
        std::fprintf(f, "%.17g,%.17g\n", est.freqs_hz[k], to_db_floored(est.power_density[k]));
    std::fclose(f);
}

void ChannelPlan::validate(double fs) const {
    if (main_bw_hz <= 0.0 || adjacent_bw_hz <= 0.0)
        throw std::invalid_argument("ChannelPlan: bandwidths must be positive");
    const double lo = main_center_hz - adjacent_offset_hz - adjacent_bw_hz / 2.0;
    const double hi = main_center_hz + adjacent_offset_hz + adjacent_bw_hz / 2.0;
    if (lo <= -fs / 2.0 || hi >= fs / 2.0)
        throw std::invalid_argument("ChannelPlan: bands must lie inside (-fs/2, fs/2)");
    if (adjacent_offset_hz - adjacent_bw_hz / 2.0 < main_bw_hz / 2.0 - 1e-9)
        throw std::invalid_argument("ChannelPlan: adjacent bands overlap the main band");
}

std::pair<double, double> acpr(const IqSequence& x, const ChannelPlan& plan, const PsdConfig& cfg) {
    plan.validate(x.sample_rate_hz);
    const PsdEstimate est = psd(x, cfg);
    const double p_main =
        est.integrate_band(plan.main_center_hz - plan.main_bw_hz / 2.0,
                           plan.main_center_hz + plan.main_bw_hz / 2.0);
    if (p_main <= 0.0) throw std::invalid_argument("acpr: zero power in the main band");
    const double half = plan.adjacent_bw_hz / 2.0;
    const double p_left = est.integrate_band(plan.main_center_hz - plan.adjacent_offset_hz - half,
                                             plan.main_center_hz - plan.adjacent_offset_hz + half);
    const double p_right = est.integrate_band(plan.main_center_hz + plan.adjacent_offset_hz - half,
                                              plan.main_center_hz + plan.adjacent_offset_hz + half);
    return {to_db_floored(p_left / p_main), to_db_floored(p_right / p_main)};
}

double evm_db(std::span<const IqSample> measured, const OfdmReference& ref, double gain) {
    if (gain <= 0.0) throw std::invalid_argument("evm: gain must be positive");
    if (ref.num_symbols < 1) throw std::invalid_argument("evm: reference holds no symbols");
    const std::vector<IqSample> demod = demodulate_ofdm(measured, ref.cfg, ref.num_symbols);

    // the modulator applied ref.scale to the waveform; undo it together with
    // the chain gain so a perfectly linear chain hits the floor exactly
    const double inv = 1.0 / (gain * ref.scale);
    double err = 0.0, energy = 0.0;
    for (std::size_t k = 0; k < demod.size(); ++k) {
        const double yi = demod[k].i * inv;
        const double yq = demod[k].q * inv;
        const double di = yi - ref.points[k].i;
        const double dq = yq - ref.points[k].q;
        err += di * di + dq * dq;
        energy += abs2(ref.points[k]);
    }
    if (energy <= 0.0) throw std::invalid_argument("evm: reference grid has zero energy");
    return to_db_floored(err / energy);
}

double target_gain(std::span<const IqSample> x, std::span<const IqSample> y) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("target_gain: sequences must have equal nonzero length");
    double acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double ax = abs_iq(x[n]);
        if (ax < 1e-12)
            throw std::invalid_argument("target_gain: input contains a zero-magnitude sample");
        acc += abs_iq(y[n]) / ax;
    }
    return acc / static_cast<double>(x.size());
}

double papr_db(std::span<const IqSample> x) {
    if (x.empty()) throw std::invalid_argument("papr: empty input");
    double peak = 0.0, mean = 0.0;
    for (const IqSample& s : x) {
        const double p = abs2(s);
        peak = std::max(peak, p);
        mean += p;
    }
    mean /= static_cast<double>(x.size());
    if (mean <= 0.0) throw std::invalid_argument("papr: zero-energy input");
    return 10.0 * std::log10(peak / mean);
}

nlohmann::json metric_report_to_json(const MetricReport& r) {
    return nlohmann::json{{"nmse_db", r.nmse_db},
                          {"acpr_left_dbc", r.acpr_left_dbc},
                          {"acpr_right_dbc", r.acpr_right_dbc},
                          {"evm_db", r.evm_db},
                          {"papr_db", r.papr_db},
                          {"gain", r.gain}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.nmse_db = j.at("nmse_db").get<double>();
    r.acpr_left_dbc = j.at("acpr_left_dbc").get<double>();
    r.acpr_right_dbc = j.at("acpr_right_dbc").get<double>();
    r.evm_db = j.at("evm_db").get<double>();
    r.papr_db = j.at("papr_db").get<double>();
    r.gain = j.at("gain").get<double>();
    return r;
}

}  // namespace dpdforge
