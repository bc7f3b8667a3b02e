#ifndef DPDFORGE_IQ_HPP
#define DPDFORGE_IQ_HPP

// Baseband I/Q signal containers. Samples are stored as paired reals because
// every model in the zoo consumes 2-channel real features, not native
// complex values.

#include <cmath>
#include <complex>
#include <filesystem>
#include <span>
#include <vector>

namespace dpdforge {

struct IqSample {
    double i = 0.0;
    double q = 0.0;
};

inline std::complex<double> to_complex(const IqSample& s) { return {s.i, s.q}; }
inline IqSample to_iq(const std::complex<double>& z) { return {z.real(), z.imag()}; }
inline double abs2(const IqSample& s) { return s.i * s.i + s.q * s.q; }
inline double abs_iq(const IqSample& s) { return std::sqrt(abs2(s)); }

struct IqSequence {
    std::vector<IqSample> samples;
    double sample_rate_hz = 0.0;

    std::size_t size() const { return samples.size(); }
    std::span<const IqSample> view() const { return samples; }
};

// CSV exchange format: header "I,Q", one sample per row, row order = time
// order. Values are written with enough digits to round-trip f64 exactly.
void write_iq_csv(const std::filesystem::path& path, std::span<const IqSample> samples);
std::vector<IqSample> read_iq_csv(const std::filesystem::path& path);

}  // namespace dpdforge

#endif
