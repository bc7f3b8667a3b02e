#ifndef DPDFORGE_GRADCHECK_HPP
#define DPDFORGE_GRADCHECK_HPP

// Finite-difference verification of the tape gradients: the frame loss is
// differentiated analytically, then a sample of parameter scalars is
// perturbed by +-step and compared against the central difference.

#include <cstdint>
#include <span>
#include <string>

#include "dpdforge/models.hpp"

namespace dpdforge {

struct GradCheckReport {
    bool pass = false;
    double worst_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;  // scalar index within the named entry
    std::size_t checked = 0;
};

// Checks up to max_scalars parameter scalars (all of them when the model is
// small enough); relative error uses max(|analytic|, |numeric|, 1e-6) as the
// denominator so near-zero gradients compare absolutely.
GradCheckReport gradient_check(SequenceModel& model, std::span<const IqSample> frame_input,
                               std::span<const IqSample> frame_target, double tolerance,
                               std::size_t max_scalars = 50, std::uint64_t seed = 1,
                               double step = 1e-5);

// Frame loss used by the checker: mean over steps and I/Q channels of the
// squared error (the single-frame training objective).
double frame_loss_value(const SequenceModel& model, std::span<const IqSample> frame_input,
                        std::span<const IqSample> frame_target);

}  // namespace dpdforge

#endif
