#include "dpdforge/ofdm.hpp"

#include <cmath>
#include <stdexcept>

#include "dpdforge/fft.hpp"
#include "dpdforge/rng.hpp"

namespace dpdforge {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

bool is_square_power_of_4(int q) {
    if (q < 4) return false;
    int v = q;
    while (v % 4 == 0) v /= 4;
    if (v != 1) return false;
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(q))));
    return side * side == q;
}
}  // namespace

int OfdmConfig::fft_size() const {
    const double n = sample_rate_hz / subcarrier_spacing_hz();
    const int fft = static_cast<int>(std::lround(n));
    if (fft < 1 || std::fabs(n - static_cast<double>(fft)) > 1e-6)
        throw std::invalid_argument("OfdmConfig: sample rate is not an integer multiple of the subcarrier spacing");
    return fft;
}

int OfdmConfig::window() const {
    const int c = cp();
    const int w = window_len >= 0 ? window_len : c;
    return w < c ? w : c;
}

int OfdmConfig::data_bin(int channel, int k) const {
    const int slot = channel * subcarriers_per_channel + 1 + k;  // +1 skips the edge guard
    const int k_rel = slot - total_slots() / 2;
    const int fft = fft_size();
    return (k_rel % fft + fft) % fft;
}

void OfdmConfig::validate() const {
    if (num_channels < 1) throw std::invalid_argument("OfdmConfig: num_channels must be >= 1");
    if (channel_bw_hz <= 0 || sample_rate_hz <= 0)
        throw std::invalid_argument("OfdmConfig: bandwidths and sample rate must be positive");
    if (subcarriers_per_channel < 2)
        throw std::invalid_argument("OfdmConfig: subcarriers_per_channel must be >= 2");
    if (!is_square_power_of_4(qam_order))
        throw std::invalid_argument("OfdmConfig: qam_order must be a square power of 4");
    if (static_cast<double>(num_channels) * channel_bw_hz > sample_rate_hz * (1.0 + 1e-12))
        throw std::invalid_argument("OfdmConfig: occupied bandwidth exceeds the sample rate");
    if (num_symbols < 1) throw std::invalid_argument("OfdmConfig: num_symbols must be >= 1");
    if (total_slots() > fft_size())
        throw std::invalid_argument("OfdmConfig: subcarrier grid does not fit the FFT size");
    if (cp() < 0) throw std::invalid_argument("OfdmConfig: cyclic prefix must be >= 0");
}

OfdmReference draw_ofdm_reference(const OfdmConfig& cfg) {
    cfg.validate();
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.qam_order))));
    // unit-average-power square QAM: levels {+-1, +-3, ...} * scale
    const double scale = std::sqrt(3.0 / (2.0 * (static_cast<double>(cfg.qam_order) - 1.0)));

    OfdmReference ref;
    ref.cfg = cfg;
    ref.num_symbols = cfg.num_symbols;
    ref.points.resize(static_cast<std::size_t>(cfg.num_symbols) * cfg.data_bins_per_symbol());

    Rng rng(mix_seed(cfg.seed, 0x0FD17));
    for (IqSample& p : ref.points) {
        const std::uint64_t idx = rng.uniform_int(static_cast<std::uint64_t>(cfg.qam_order));
        const int a = static_cast<int>(idx) % side;
        const int b = static_cast<int>(idx) / side;
        p.i = (2.0 * a - (side - 1)) * scale;
        p.q = (2.0 * b - (side - 1)) * scale;
    }
    return ref;
}

IqSequence modulate_ofdm(OfdmReference& ref) {
    const OfdmConfig& cfg = ref.cfg;
    cfg.validate();
    if (cfg.data_bins_per_symbol() < 1)
        throw std::invalid_argument("modulate_ofdm: no data subcarriers left after guards");

    const int nfft = cfg.fft_size();
    const int cp = cfg.cp();
    const int w = cfg.window();
    const int hop = cfg.symbol_hop();
    const int nsym = ref.num_symbols;
    const Fft fft(static_cast<std::size_t>(nfft));

    std::vector<double> ramp_up(static_cast<std::size_t>(w));
    for (int t = 0; t < w; ++t) {
        const double s = std::sin(kPi * (t + 0.5) / (2.0 * w));
        ramp_up[static_cast<std::size_t>(t)] = s * s;
    }

    IqSequence out;
    out.sample_rate_hz = cfg.sample_rate_hz;
    out.samples.assign(static_cast<std::size_t>(nsym) * hop + w, IqSample{});

    std::vector<std::complex<double>> grid(static_cast<std::size_t>(nfft));
    const int block_len = cp + nfft + w;
    for (int s = 0; s < nsym; ++s) {
        std::fill(grid.begin(), grid.end(), std::complex<double>(0.0, 0.0));
        for (int c = 0; c < cfg.num_channels; ++c)
            for (int k = 0; k < cfg.data_subcarriers_per_channel(); ++k)
                grid[static_cast<std::size_t>(cfg.data_bin(c, k))] = to_complex(ref.at(s, c, k));
        fft.inverse(grid);

        IqSample* base = out.samples.data() + static_cast<std::size_t>(s) * hop;
        for (int t = 0; t < block_len; ++t) {
            // t in [0,cp): cyclic prefix; [cp,cp+nfft): core; tail: cyclic suffix
            const int off = ((t - cp) % nfft + nfft) % nfft;
            const std::complex<double> v = grid[static_cast<std::size_t>(off)];
            double g = 1.0;
            if (t < w) g = ramp_up[static_cast<std::size_t>(t)];
            else if (t >= cp + nfft) g = 1.0 - ramp_up[static_cast<std::size_t>(t - cp - nfft)];
            base[t].i += g * v.real();
            base[t].q += g * v.imag();
        }
    }

    double power = 0.0;
    for (const IqSample& s : out.samples) power += abs2(s);
    power /= static_cast<double>(out.samples.size());
    if (power <= 0.0) throw std::invalid_argument("modulate_ofdm: zero-power grid");
    const double alpha = 1.0 / std::sqrt(power);
    for (IqSample& s : out.samples) {
        s.i *= alpha;
        s.q *= alpha;
    }
    ref.scale = alpha;
    return out;
}

std::pair<IqSequence, OfdmReference> generate_ofdm(const OfdmConfig& cfg) {
    OfdmReference ref = draw_ofdm_reference(cfg);
    IqSequence x = modulate_ofdm(ref);
    return {std::move(x), std::move(ref)};
}

OfdmReference OfdmReference::slice(int first, int count) const {
    if (first < 0 || count < 0 || first + count > num_symbols)
        throw std::invalid_argument("OfdmReference::slice: range out of bounds");
    OfdmReference out;
    out.cfg = cfg;
    out.num_symbols = count;
    out.scale = scale;
    const std::size_t per = static_cast<std::size_t>(cfg.data_bins_per_symbol());
    out.points.assign(points.begin() + static_cast<std::ptrdiff_t>(per * static_cast<std::size_t>(first)),
                      points.begin() + static_cast<std::ptrdiff_t>(per * static_cast<std::size_t>(first + count)));
    return out;
}

std::vector<IqSample> demodulate_ofdm(std::span<const IqSample> measured, const OfdmConfig& cfg,
                                      int num_symbols) {
    const int nfft = cfg.fft_size();
    const int cp = cfg.cp();
    const int hop = cfg.symbol_hop();
    if (measured.size() < static_cast<std::size_t>(num_symbols) * hop)
        throw std::invalid_argument("demodulate_ofdm: sequence shorter than the symbol span");

    const Fft fft(static_cast<std::size_t>(nfft));
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(nfft));
    std::vector<IqSample> out;
    out.reserve(static_cast<std::size_t>(num_symbols) * cfg.data_bins_per_symbol());
    for (int s = 0; s < num_symbols; ++s) {
        const IqSample* base = measured.data() + static_cast<std::size_t>(s) * hop + cp;
        for (int t = 0; t < nfft; ++t) buf[static_cast<std::size_t>(t)] = to_complex(base[t]);
        fft.forward(buf);
        for (int c = 0; c < cfg.num_channels; ++c)
            for (int k = 0; k < cfg.data_subcarriers_per_channel(); ++k)
                out.push_back(to_iq(buf[static_cast<std::size_t>(cfg.data_bin(c, k))]));
    }
    return out;
}

IqSequence add_awgn(const IqSequence& x, double snr_db, std::uint64_t seed) {
    if (x.samples.empty()) throw std::invalid_argument("add_awgn: empty input");
    double power = 0.0;
    for (const IqSample& s : x.samples) power += abs2(s);
    power /= static_cast<double>(x.samples.size());
    const double noise_power = power / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_power / 2.0);

    Rng rng(mix_seed(seed, 0xA36A));
    IqSequence out = x;
    for (IqSample& s : out.samples) {
        s.i += sigma * rng.gaussian();
        s.q += sigma * rng.gaussian();
    }
    return out;
}

SymbolAlignment align_to_symbol_boundaries(std::size_t part_offset, std::size_t part_len,
                                           const OfdmConfig& cfg, int total_symbols) {
    const std::size_t hop = static_cast<std::size_t>(cfg.symbol_hop());
    SymbolAlignment a;
    const std::size_t first = (part_offset + hop - 1) / hop;
    const std::size_t end = (part_offset + part_len) / hop;  // symbols fully inside
    a.first_symbol = static_cast<int>(first);
    if (end > first && first < static_cast<std::size_t>(total_symbols)) {
        const std::size_t last = std::min(end, static_cast<std::size_t>(total_symbols));
        a.num_symbols = static_cast<int>(last - first);
        a.skip = first * hop - part_offset;
    }
    return a;
}

}  // namespace dpdforge
