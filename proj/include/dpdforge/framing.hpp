#ifndef DPDFORGE_FRAMING_HPP
#define DPDFORGE_FRAMING_HPP

// Frame extraction with overlap and contiguous train/validation/test
// partitioning. Frames are views into shared backing storage; frame k covers
// input indices [k*stride, k*stride + frame_len).

#include <array>
#include <cstddef>
#include <span>

#include "dpdforge/iq.hpp"

namespace dpdforge {

struct FrameView {
    std::span<const IqSample> input;
    std::span<const IqSample> target;
    std::size_t start_index = 0;
};

struct FramedDataset {
    std::vector<IqSample> input;   // copies of the source sequences
    std::vector<IqSample> target;  // (frames alias into these buffers)
    std::size_t frame_len = 0;
    std::size_t stride = 0;
    std::size_t num_frames = 0;

    FrameView frame(std::size_t k) const {
        const std::size_t s = k * stride;
        return {std::span(input).subspan(s, frame_len), std::span(target).subspan(s, frame_len), s};
    }
};

// Trailing samples that do not fill a whole frame are dropped.
// num_frames = floor((N - frame_len) / stride) + 1.
FramedDataset frame_sequence(const IqSequence& x, const IqSequence& y, std::size_t frame_len,
                             std::size_t stride);

struct SequencePair {
    IqSequence input;
    IqSequence output;
    std::size_t offset = 0;  // absolute start index within the source signal
};

struct DatasetSplit {
    SequencePair train;
    SequencePair validation;
    SequencePair test;
};

// Contiguous, ordered partitions: train = floor(r0*N), validation =
// floor(r1*N), remainder samples go to test.
DatasetSplit split_dataset(const IqSequence& x, const IqSequence& y,
                           const std::array<double, 3>& ratios);

}  // namespace dpdforge

#endif
