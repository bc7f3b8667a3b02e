#include "dpdforge/params.hpp"

#include <stdexcept>

namespace dpdforge {

std::size_t ParameterSet::add(std::string name, std::size_t rows, std::size_t cols, bool frozen) {
    for (const Entry& e : entries_)
        if (e.name == name) throw std::invalid_argument("ParameterSet: duplicate name " + name);
    Entry e;
    e.name = std::move(name);
    e.offset = values_.size();
    e.rows = rows;
    e.cols = cols;
    e.frozen = frozen;
    entries_.push_back(e);
    values_.resize(values_.size() + rows * cols, 0.0);
    return entries_.size() - 1;
}

std::size_t ParameterSet::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw std::invalid_argument("ParameterSet: unknown name " + name);
}

std::span<double> ParameterSet::values(std::size_t idx) {
    const Entry& e = entries_.at(idx);
    return {values_.data() + e.offset, e.count()};
}

std::span<const double> ParameterSet::values(std::size_t idx) const {
    const Entry& e = entries_.at(idx);
    return {values_.data() + e.offset, e.count()};
}

void ParameterSet::set_all_frozen(bool frozen) {
    for (Entry& e : entries_) e.frozen = frozen;
}

std::vector<char> ParameterSet::frozen_mask() const {
    std::vector<char> mask(values_.size(), 0);
    for (const Entry& e : entries_)
        if (e.frozen)
            for (std::size_t k = 0; k < e.count(); ++k) mask[e.offset + k] = 1;
    return mask;
}

std::vector<ad::NodeId> push_params(ad::Tape& tape, const ParameterSet& params) {
    std::vector<ad::NodeId> nodes(params.num_entries());
    for (std::size_t i = 0; i < params.num_entries(); ++i)
        nodes[i] = tape.leaf(params.values(i), true);
    return nodes;
}

void accumulate_param_grads(const ad::Tape& tape, const std::vector<ad::NodeId>& nodes,
                            const ParameterSet& params, std::span<double> grad_out) {
    if (grad_out.size() != params.size())
        throw std::invalid_argument("accumulate_param_grads: gradient buffer size mismatch");
    for (std::size_t i = 0; i < params.num_entries(); ++i) {
        const auto& e = params.entry(i);
        const std::span<const double> g = tape.grad(nodes[i]);
        for (std::size_t k = 0; k < e.count(); ++k) grad_out[e.offset + k] += g[k];
    }
}

}  // namespace dpdforge
