#include "dpdforge/framing.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpdforge {

FramedDataset frame_sequence(const IqSequence& x, const IqSequence& y, std::size_t frame_len,
                             std::size_t stride) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("frame_sequence: input/target length mismatch");
    if (frame_len < 1 || frame_len > n)
        throw std::invalid_argument("frame_sequence: frame_len must be in [1, N]");
    if (stride < 1 || stride > frame_len)
        throw std::invalid_argument("frame_sequence: stride must be in [1, frame_len]");

    FramedDataset out;
    out.input = x.samples;
    out.target = y.samples;
    out.frame_len = frame_len;
    out.stride = stride;
    out.num_frames = (n - frame_len) / stride + 1;
    return out;
}

DatasetSplit split_dataset(const IqSequence& x, const IqSequence& y,
                           const std::array<double, 3>& ratios) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("split_dataset: input/output length mismatch");
    if (n < 3) throw std::invalid_argument("split_dataset: need at least 3 samples");
    double sum = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) throw std::invalid_argument("split_dataset: ratios must be positive");
        sum += r;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: ratios must sum to 1");

    const std::size_t n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));
    const std::size_t n_test = n - n_train - n_val;  // remainder goes to test

    auto slice = [&](std::size_t off, std::size_t len) {
        SequencePair p;
        p.input.samples.assign(x.samples.begin() + static_cast<std::ptrdiff_t>(off),
                               x.samples.begin() + static_cast<std::ptrdiff_t>(off + len));
        p.output.samples.assign(y.samples.begin() + static_cast<std::ptrdiff_t>(off),
                                y.samples.begin() + static_cast<std::ptrdiff_t>(off + len));
        p.input.sample_rate_hz = x.sample_rate_hz;
        p.output.sample_rate_hz = y.sample_rate_hz;
        p.offset = off;
        return p;
    };

    DatasetSplit split;
    split.train = slice(0, n_train);
    split.validation = slice(n_train, n_val);
    split.test = slice(n_train + n_val, n_test);
    return split;
}

}  // namespace dpdforge
