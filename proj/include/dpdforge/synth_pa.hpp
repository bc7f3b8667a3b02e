#ifndef DPDFORGE_SYNTH_PA_HPP
#define DPDFORGE_SYNTH_PA_HPP

// Synthetic power amplifier used as the device under test: an odd-order
// memory polynomial followed by optional soft saturation and optional
// uniform amplitude quantization. Output sample n depends only on input
// samples n-M..n, so the forward pass is data-parallel over samples.

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "dpdforge/iq.hpp"
#include "dpdforge/parallel.hpp"

namespace dpdforge {

struct SynthPaConfig {
    int memory_depth = 3;       // M: taps at delays 0..M
    int nonlinearity_order = 7; // P: odd orders 1,3,..,P
    // coefficient grid, (M+1) rows x ceil(P/2) columns; column j holds order 2j+1
    std::vector<std::complex<double>> coefficients;
    std::optional<double> saturation_level;
    std::optional<int> amplitude_quantization_bits;
    std::uint64_t seed = 1;

    int num_orders() const { return (nonlinearity_order + 1) / 2; }
    const std::complex<double>& coeff(int delay, int order_idx) const {
        return coefficients[static_cast<std::size_t>(delay * num_orders() + order_idx)];
    }
    void validate() const;
};

// The pinned amplifier behind the default dataset: M=3, P=7, unit linear
// gain, seeded coefficient phases with magnitudes decaying by tap and order,
// and soft saturation at 1.2 (inputs are unit-RMS by construction).
SynthPaConfig default_synth_pa();

IqSequence synth_pa_forward(const SynthPaConfig& cfg, const IqSequence& u,
                            par::Mode mode = par::mode());

}  // namespace dpdforge

#endif
