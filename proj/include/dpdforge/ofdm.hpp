#ifndef DPDFORGE_OFDM_HPP
#define DPDFORGE_OFDM_HPP

// Multi-channel OFDM stimulus generation and the matching demodulator.
// Channels tile the band centered at DC; within each channel the first and
// last subcarrier slots are guards (zero). Symbols carry a cyclic prefix and
// raised-cosine edge windowing confined to the prefix region, so the
// demodulation window of every symbol is untouched by the window ramps and
// the clean round trip is exact.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dpdforge/iq.hpp"

namespace dpdforge {

struct OfdmConfig {
    int num_channels = 10;
    double channel_bw_hz = 20e6;
    int subcarriers_per_channel = 64;
    int qam_order = 64;
    double sample_rate_hz = 800e6;
    int num_symbols = 0;
    int cyclic_prefix_len = -1;  // -1: fft_size()/8
    int window_len = -1;         // -1: cp(), i.e. ramps span the whole prefix
    std::uint64_t seed = 1;

    double subcarrier_spacing_hz() const {
        return channel_bw_hz / static_cast<double>(subcarriers_per_channel);
    }
    int fft_size() const;
    int cp() const { return cyclic_prefix_len >= 0 ? cyclic_prefix_len : fft_size() / 8; }
    int window() const;
    int symbol_hop() const { return fft_size() + cp(); }
    int total_slots() const { return num_channels * subcarriers_per_channel; }
    int data_subcarriers_per_channel() const { return subcarriers_per_channel - 2; }
    int data_bins_per_symbol() const { return num_channels * data_subcarriers_per_channel(); }
    // FFT bin carrying data subcarrier k (0-based, guards excluded) of channel c
    int data_bin(int channel, int k) const;

    void validate() const;
};

struct OfdmReference {
    OfdmConfig cfg;
    int num_symbols = 0;
    std::vector<IqSample> points;  // [symbol][channel][data subcarrier]
    double scale = 1.0;            // amplitude factor applied to the emitted waveform

    const IqSample& at(int sym, int ch, int k) const {
        return points[static_cast<std::size_t>((sym * cfg.num_channels + ch) *
                                               cfg.data_subcarriers_per_channel() + k)];
    }
    IqSample& at(int sym, int ch, int k) {
        return points[static_cast<std::size_t>((sym * cfg.num_channels + ch) *
                                               cfg.data_subcarriers_per_channel() + k)];
    }
    // reference for symbols [first, first+count), preserving cfg and scale
    OfdmReference slice(int first, int count) const;
};

// Draws independent QAM symbols from the seeded generator; the constellation
// is scaled to unit average power.
OfdmReference draw_ofdm_reference(const OfdmConfig& cfg);

// Synthesizes the waveform for an existing grid and stores the power
// normalization factor in ref.scale (waveform average power becomes 1).
IqSequence modulate_ofdm(OfdmReference& ref);

std::pair<IqSequence, OfdmReference> generate_ofdm(const OfdmConfig& cfg);

// Per-symbol DFT of the data bins, in reference point order. `measured` must
// start at a symbol boundary and cover num_symbols whole symbol hops. Output
// values carry whatever amplitude scaling the input carries.
std::vector<IqSample> demodulate_ofdm(std::span<const IqSample> measured, const OfdmConfig& cfg,
                                      int num_symbols);

IqSequence add_awgn(const IqSequence& x, double snr_db, std::uint64_t seed);

// Largest run of whole symbols contained in a partition [offset, offset+len)
// of the generated signal.
struct SymbolAlignment {
    std::size_t skip = 0;  // samples to drop from the partition start
    int first_symbol = 0;
    int num_symbols = 0;
};
SymbolAlignment align_to_symbol_boundaries(std::size_t part_offset, std::size_t part_len,
                                           const OfdmConfig& cfg, int total_symbols);

}  // namespace dpdforge

#endif
