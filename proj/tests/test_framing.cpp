#include <doctest.h>

#include "dpdforge/framing.hpp"
#include "dpdforge/rng.hpp"

using namespace dpdforge;

namespace {

IqSequence ramp_sequence(std::size_t n, double fs = 1.0) {
    IqSequence s;
    s.sample_rate_hz = fs;
    s.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) s.samples[k] = {static_cast<double>(k), -static_cast<double>(k)};
    return s;
}

}  // namespace

TEST_CASE("frame counts and start indices") {
    const IqSequence x = ramp_sequence(5);
    const FramedDataset f = frame_sequence(x, x, 3, 1);
    CHECK(f.num_frames == 3);
    CHECK(f.frame(0).start_index == 0);
    CHECK(f.frame(1).start_index == 1);
    CHECK(f.frame(2).start_index == 2);

    const IqSequence big = ramp_sequence(38400);
    CHECK(frame_sequence(big, big, 50, 1).num_frames == 38351);

    const IqSequence six = ramp_sequence(6);
    const FramedDataset g = frame_sequence(six, six, 3, 2);
    CHECK(g.num_frames == 2);  // index 5 dropped
    CHECK(g.frame(1).start_index == 2);
    CHECK(g.frame(1).input[2].i == doctest::Approx(4.0));
}

TEST_CASE("frame overlap and round-trip reconstruction") {
    Rng rng(7);
    IqSequence x = ramp_sequence(101);
    IqSequence y = x;
    for (auto& s : y.samples) s.i += rng.uniform();

    for (std::size_t stride : {1UL, 2UL, 5UL, 7UL}) {
        const FramedDataset f = frame_sequence(x, y, 7, stride);
        // consecutive frames share frame_len - stride samples
        for (std::size_t k = 0; k + 1 < f.num_frames; ++k) {
            const FrameView a = f.frame(k);
            const FrameView b = f.frame(k + 1);
            for (std::size_t t = stride; t < 7; ++t) {
                CHECK(a.input[t].i == b.input[t - stride].i);
                CHECK(a.target[t].q == b.target[t - stride].q);
            }
        }
        // strides [0, S) of every frame plus the final tail rebuild the region
        std::vector<IqSample> rebuilt;
        for (std::size_t k = 0; k < f.num_frames; ++k)
            for (std::size_t t = 0; t < stride; ++t) rebuilt.push_back(f.frame(k).input[t]);
        const FrameView last = f.frame(f.num_frames - 1);
        for (std::size_t t = stride; t < 7; ++t) rebuilt.push_back(last.input[t]);
        REQUIRE(rebuilt.size() == last.start_index + 7);
        for (std::size_t k = 0; k < rebuilt.size(); ++k) {
            CHECK(rebuilt[k].i == x.samples[k].i);
            CHECK(rebuilt[k].q == x.samples[k].q);
        }
    }
}

TEST_CASE("stride equal to frame length partitions without overlap") {
    const IqSequence x = ramp_sequence(20);
    const FramedDataset f = frame_sequence(x, x, 4, 4);
    CHECK(f.num_frames == 5);
    for (std::size_t k = 0; k < f.num_frames; ++k)
        CHECK(f.frame(k).start_index == 4 * k);
    // stride 1 gives N - T + 1 frames
    CHECK(frame_sequence(x, x, 4, 1).num_frames == 17);
}

TEST_CASE("framing rejects bad arguments") {
    const IqSequence x = ramp_sequence(10);
    const IqSequence y = ramp_sequence(9);
    CHECK_THROWS_AS(frame_sequence(x, y, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(frame_sequence(x, x, 11, 1), std::invalid_argument);
    CHECK_THROWS_AS(frame_sequence(x, x, 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(frame_sequence(x, x, 3, 4), std::invalid_argument);
}

TEST_CASE("dataset split lengths and remainder policy") {
    const std::array<double, 3> r = {0.6, 0.2, 0.2};
    {
        const IqSequence x = ramp_sequence(38400);
        const DatasetSplit s = split_dataset(x, x, r);
        CHECK(s.train.input.size() == 23040);
        CHECK(s.validation.input.size() == 7680);
        CHECK(s.test.input.size() == 7680);
        CHECK(s.validation.offset == 23040);
        CHECK(s.test.offset == 30720);
    }
    {
        const DatasetSplit s = split_dataset(ramp_sequence(10), ramp_sequence(10), r);
        CHECK(s.train.input.size() == 6);
        CHECK(s.validation.input.size() == 2);
        CHECK(s.test.input.size() == 2);
    }
    {
        const DatasetSplit s = split_dataset(ramp_sequence(11), ramp_sequence(11), r);
        CHECK(s.train.input.size() == 6);
        CHECK(s.validation.input.size() == 2);
        CHECK(s.test.input.size() == 3);  // remainder goes to test
    }
}

TEST_CASE("dataset split preserves order and content") {
    const IqSequence x = ramp_sequence(101);
    const DatasetSplit s = split_dataset(x, x, {0.6, 0.2, 0.2});
    std::vector<IqSample> joined;
    for (const auto* part : {&s.train, &s.validation, &s.test})
        joined.insert(joined.end(), part->input.samples.begin(), part->input.samples.end());
    REQUIRE(joined.size() == 101);
    for (std::size_t k = 0; k < joined.size(); ++k) CHECK(joined[k].i == x.samples[k].i);
}

TEST_CASE("dataset split rejects bad ratios and tiny inputs") {
    const IqSequence x = ramp_sequence(10);
    CHECK_THROWS_AS(split_dataset(x, x, {0.5, 0.2, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(split_dataset(x, x, {0.8, 0.3, -0.1}), std::invalid_argument);
    const IqSequence tiny = ramp_sequence(2);
    CHECK_THROWS_AS(split_dataset(tiny, tiny, {0.6, 0.2, 0.2}), std::invalid_argument);
}
