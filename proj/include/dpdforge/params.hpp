#ifndef DPDFORGE_PARAMS_HPP
#define DPDFORGE_PARAMS_HPP

// Named trainable parameter storage with a flat contiguous layout. Entries
// marked frozen still take part in differentiation (their gradients carry
// the chain through a frozen sub-model) but are skipped by the optimizer.

#include <span>
#include <string>
#include <vector>

#include "dpdforge/tape.hpp"

namespace dpdforge {

class ParameterSet {
public:
    struct Entry {
        std::string name;
        std::size_t offset = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;  // 1 for vectors
        bool frozen = false;

        std::size_t count() const { return rows * cols; }
    };

    std::size_t add(std::string name, std::size_t rows, std::size_t cols, bool frozen = false);

    std::size_t num_entries() const { return entries_.size(); }
    std::size_t size() const { return values_.size(); }  // total scalar count
    const Entry& entry(std::size_t idx) const { return entries_[idx]; }
    std::size_t find(const std::string& name) const;  // throws if missing

    std::span<double> values(std::size_t idx);
    std::span<const double> values(std::size_t idx) const;
    std::span<double> flat() { return values_; }
    std::span<const double> flat() const { return values_; }

    void set_all_frozen(bool frozen);
    // per-scalar frozen mask in flat layout order
    std::vector<char> frozen_mask() const;

private:
    std::vector<Entry> entries_;
    std::vector<double> values_;
};

// Pushes every entry onto the tape as a gradient-requiring leaf; the result
// indexes node ids by entry index.
std::vector<ad::NodeId> push_params(ad::Tape& tape, const ParameterSet& params);

// Adds the tape gradients of previously pushed parameter leaves into a flat
// gradient accumulator (same layout as ParameterSet::flat()).
void accumulate_param_grads(const ad::Tape& tape, const std::vector<ad::NodeId>& nodes,
                            const ParameterSet& params, std::span<double> grad_out);

}  // namespace dpdforge

#endif
