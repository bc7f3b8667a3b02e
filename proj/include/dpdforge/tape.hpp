#ifndef DPDFORGE_TAPE_HPP
#define DPDFORGE_TAPE_HPP

// Reverse-mode differentiation over small tensor-valued nodes (vectors and
// row-major matrices). A tape records one frame's computation; backward
// walks it in reverse and accumulates exact adjoints. Node values and grads
// live in flat arenas so a cleared tape reuses its storage. A tape instance
// is confined to one thread; disjoint tapes may run concurrently.

#include <cstdint>
#include <span>
#include <vector>

namespace dpdforge::ad {

using NodeId = std::int32_t;
constexpr NodeId kNoNode = -1;

enum class Op : std::uint8_t {
    Leaf,
    MatVec,   // a: matrix (rows x cols), b: vector (cols) -> vector (rows)
    Add,      // elementwise, equal shapes
    Sub,
    Mul,
    Scale,    // a * constant (aux[0])
    Sigmoid,
    Tanh,
    Concat,   // [a ; b]
    Fex,      // (i, q) -> (i, q, |x|, |x|^3, sin t, cos t)
    SqErr,    // sum((a - aux)^2) -> scalar
    GmpLinear // complex dot of coefficient pairs with constant basis pairs -> (re, im)
};

class Tape {
public:
    NodeId leaf(std::span<const double> value, bool requires_grad);
    NodeId constant(std::span<const double> value) { return leaf(value, false); }

    NodeId matvec(NodeId w, NodeId x);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId sigmoid(NodeId a);
    NodeId tanh_(NodeId a);
    NodeId concat(NodeId a, NodeId b);
    NodeId fex(NodeId iq);
    NodeId sq_err(NodeId pred, std::span<const double> target);
    NodeId gmp_linear(NodeId coeffs, std::span<const double> basis);

    std::size_t size(NodeId id) const { return static_cast<std::size_t>(len_[check(id)]); }
    std::span<const double> value(NodeId id) const;
    std::span<double> value_mut(NodeId id);
    double scalar(NodeId id) const { return value(id)[0]; }
    std::span<const double> grad(NodeId id) const;
    bool requires_grad(NodeId id) const { return ng_[check(id)]; }

    // Populates grads with d(seed * loss)/d(node) for every node that a
    // gradient-requiring leaf feeds into. loss must be scalar.
    void backward(NodeId loss, double seed = 1.0);

    void clear();
    std::size_t num_nodes() const { return op_.size(); }

private:
    NodeId push(Op op, NodeId a, NodeId b, std::size_t out_len, bool ng,
                std::int32_t aux = -1);
    std::size_t check(NodeId id) const;
    double* val_ptr(NodeId id) { return buf_.data() + off_[static_cast<std::size_t>(id)]; }
    const double* val_ptr(NodeId id) const { return buf_.data() + off_[static_cast<std::size_t>(id)]; }
    double* grad_ptr(NodeId id) { return gbuf_.data() + off_[static_cast<std::size_t>(id)]; }

    std::vector<Op> op_;
    std::vector<NodeId> a_, b_;
    std::vector<std::int32_t> off_, len_, aux_;
    std::vector<char> ng_;
    std::vector<double> buf_;   // values
    std::vector<double> gbuf_;  // adjoints (allocated by backward)
    std::vector<double> auxbuf_;
};

// Mean over T steps and both I/Q channels of the squared prediction error:
// (1 / (2T)) * sum_t sum_c (pred[t][c] - target[t][c])^2. Averaging one such
// loss per frame over a batch realizes the mini-batch training objective.
NodeId frame_mse(Tape& tape, std::span<const NodeId> step_preds,
                 std::span<const double> targets_flat);

}  // namespace dpdforge::ad

#endif
