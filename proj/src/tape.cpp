#include "dpdforge/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdforge::ad {

std::size_t Tape::check(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= op_.size())
        throw std::invalid_argument("Tape: invalid node id");
    return static_cast<std::size_t>(id);
}

NodeId Tape::push(Op op, NodeId a, NodeId b, std::size_t out_len, bool ng, std::int32_t aux) {
    const NodeId id = static_cast<NodeId>(op_.size());
    op_.push_back(op);
    a_.push_back(a);
    b_.push_back(b);
    off_.push_back(static_cast<std::int32_t>(buf_.size()));
    len_.push_back(static_cast<std::int32_t>(out_len));
    aux_.push_back(aux);
    ng_.push_back(ng ? 1 : 0);
    buf_.resize(buf_.size() + out_len, 0.0);
    return id;
}

NodeId Tape::leaf(std::span<const double> value, bool requires_grad) {
    const NodeId id = push(Op::Leaf, kNoNode, kNoNode, value.size(), requires_grad);
    double* v = val_ptr(id);
    for (std::size_t k = 0; k < value.size(); ++k) v[k] = value[k];
    return id;
}

std::span<const double> Tape::value(NodeId id) const {
    const std::size_t i = check(id);
    return {buf_.data() + off_[i], static_cast<std::size_t>(len_[i])};
}

std::span<double> Tape::value_mut(NodeId id) {
    const std::size_t i = check(id);
    return {buf_.data() + off_[i], static_cast<std::size_t>(len_[i])};
}

std::span<const double> Tape::grad(NodeId id) const {
    const std::size_t i = check(id);
    if (gbuf_.size() != buf_.size()) throw std::logic_error("Tape: backward has not run");
    return {gbuf_.data() + off_[i], static_cast<std::size_t>(len_[i])};
}

NodeId Tape::matvec(NodeId w, NodeId x) {
    const std::size_t cols = size(x);
    const std::size_t wlen = size(w);
    if (cols == 0 || wlen % cols != 0)
        throw std::invalid_argument("matvec: matrix size is not a multiple of the vector size");
    const std::size_t rows = wlen / cols;
    const NodeId id = push(Op::MatVec, w, x, rows, ng_[check(w)] || ng_[check(x)]);
    const double* wm = val_ptr(w);
    const double* xv = val_ptr(x);
    double* out = val_ptr(id);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = wm + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * xv[c];
        out[r] = acc;
    }
    return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const std::size_t n = size(a);
    if (n != size(b)) throw std::invalid_argument("add: shape mismatch");
    const NodeId id = push(Op::Add, a, b, n, ng_[check(a)] || ng_[check(b)]);
    const double* av = val_ptr(a);
    const double* bv = val_ptr(b);
    double* out = val_ptr(id);
    for (std::size_t k = 0; k < n; ++k) out[k] = av[k] + bv[k];
    return id;
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const std::size_t n = size(a);
    if (n != size(b)) throw std::invalid_argument("sub: shape mismatch");
    const NodeId id = push(Op::Sub, a, b, n, ng_[check(a)] || ng_[check(b)]);
    const double* av = val_ptr(a);
    const double* bv = val_ptr(b);
    double* out = val_ptr(id);
    for (std::size_t k = 0; k < n; ++k) out[k] = av[k] - bv[k];
    return id;
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const std::size_t n = size(a);
    if (n != size(b)) throw std::invalid_argument("mul: shape mismatch");
    const NodeId id = push(Op::Mul, a, b, n, ng_[check(a)] || ng_[check(b)]);
    const double* av = val_ptr(a);
    const double* bv = val_ptr(b);
    double* out = val_ptr(id);
    for (std::size_t k = 0; k < n; ++k) out[k] = av[k] * bv[k];
    return id;
}

NodeId Tape::scale(NodeId a, double c) {
    const std::size_t n = size(a);
    const std::int32_t aux = static_cast<std::int32_t>(auxbuf_.size());
    auxbuf_.push_back(c);
    const NodeId id = push(Op::Scale, a, kNoNode, n, ng_[check(a)], aux);
    const double* av = val_ptr(a);
    double* out = val_ptr(id);
    for (std::size_t k = 0; k < n; ++k) out[k] = c * av[k];
    return id;
}

NodeId Tape::sigmoid(NodeId a) {
    const std::size_t n = size(a);
    const NodeId id = push(Op::Sigmoid, a, kNoNode, n, ng_[check(a)]);
    const double* av = val_ptr(a);
    double* out = val_ptr(id);
    for (std::size_t k = 0; k < n; ++k) out[k] = 1.0 / (1.0 + std::exp(-av[k]));
    return id;
}

NodeId Tape::tanh_(NodeId a) {
    const std::size_t n = size(a);
    const NodeId id = push(Op::Tanh, a, kNoNode, n, ng_[check(a)]);
    const double* av = val_ptr(a);
    double* out = val_ptr(id);
    for (std::size_t k = 0; k < n; ++k) out[k] = std::tanh(av[k]);
    return id;
}

NodeId Tape::concat(NodeId a, NodeId b) {
    const std::size_t na = size(a), nb = size(b);
    const NodeId id = push(Op::Concat, a, b, na + nb, ng_[check(a)] || ng_[check(b)]);
    const double* av = val_ptr(a);
    const double* bv = val_ptr(b);
    double* out = val_ptr(id);
    for (std::size_t k = 0; k < na; ++k) out[k] = av[k];
    for (std::size_t k = 0; k < nb; ++k) out[na + k] = bv[k];
    return id;
}

NodeId Tape::fex(NodeId iq) {
    if (size(iq) != 2) throw std::invalid_argument("fex: input must be an (i, q) pair");
    const NodeId id = push(Op::Fex, iq, kNoNode, 6, ng_[check(iq)]);
    const double* v = val_ptr(iq);
    double* out = val_ptr(id);
    const double i = v[0], q = v[1];
    const double amp = std::sqrt(i * i + q * q);
    out[0] = i;
    out[1] = q;
    out[2] = amp;
    out[3] = amp * amp * amp;
    if (amp >= 1e-12) {
        out[4] = q / amp;
        out[5] = i / amp;
    } else {
        out[4] = 0.0;
        out[5] = 0.0;
    }
    return id;
}

NodeId Tape::sq_err(NodeId pred, std::span<const double> target) {
    const std::size_t n = size(pred);
    if (n != target.size()) throw std::invalid_argument("sq_err: target shape mismatch");
    const std::int32_t aux = static_cast<std::int32_t>(auxbuf_.size());
    auxbuf_.insert(auxbuf_.end(), target.begin(), target.end());
    const NodeId id = push(Op::SqErr, pred, kNoNode, 1, ng_[check(pred)], aux);
    const double* pv = val_ptr(pred);
    const double* tv = auxbuf_.data() + aux;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = pv[k] - tv[k];
        acc += d * d;
    }
    *val_ptr(id) = acc;
    return id;
}

NodeId Tape::gmp_linear(NodeId coeffs, std::span<const double> basis) {
    const std::size_t n = size(coeffs);
    if (n != basis.size() || n % 2 != 0)
        throw std::invalid_argument("gmp_linear: coefficient/basis pair mismatch");
    const std::int32_t aux = static_cast<std::int32_t>(auxbuf_.size());
    auxbuf_.insert(auxbuf_.end(), basis.begin(), basis.end());
    const NodeId id = push(Op::GmpLinear, coeffs, kNoNode, 2, ng_[check(coeffs)], aux);
    const double* cv = val_ptr(coeffs);
    const double* bv = auxbuf_.data() + aux;
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; k += 2) {
        re += cv[k] * bv[k] - cv[k + 1] * bv[k + 1];
        im += cv[k] * bv[k + 1] + cv[k + 1] * bv[k];
    }
    double* out = val_ptr(id);
    out[0] = re;
    out[1] = im;
    return id;
}

void Tape::backward(NodeId loss, double seed) {
    const std::size_t root = check(loss);
    if (len_[root] != 1) throw std::invalid_argument("backward: loss must be scalar");
    gbuf_.assign(buf_.size(), 0.0);
    gbuf_[static_cast<std::size_t>(off_[root])] = seed;

    for (std::size_t i = op_.size(); i-- > 0;) {
        if (ng_[i] == 0 || op_[i] == Op::Leaf) continue;
        const NodeId id = static_cast<NodeId>(i);
        const std::size_t n = static_cast<std::size_t>(len_[i]);
        const double* g = gbuf_.data() + off_[i];
        const double* out = val_ptr(id);
        const NodeId a = a_[i];
        const NodeId b = b_[i];
        const bool nga = a != kNoNode && ng_[static_cast<std::size_t>(a)] != 0;
        const bool ngb = b != kNoNode && ng_[static_cast<std::size_t>(b)] != 0;

        switch (op_[i]) {
            case Op::MatVec: {
                const std::size_t cols = size(b);
                const std::size_t rows = n;
                const double* wm = val_ptr(a);
                const double* xv = val_ptr(b);
                if (nga) {
                    double* gw = grad_ptr(a);
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double gr = g[r];
                        double* grow = gw + r * cols;
                        for (std::size_t c = 0; c < cols; ++c) grow[c] += gr * xv[c];
                    }
                }
                if (ngb) {
                    double* gx = grad_ptr(b);
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double gr = g[r];
                        const double* row = wm + r * cols;
                        for (std::size_t c = 0; c < cols; ++c) gx[c] += gr * row[c];
                    }
                }
                break;
            }
            case Op::Add: {
                if (nga) {
                    double* ga = grad_ptr(a);
                    for (std::size_t k = 0; k < n; ++k) ga[k] += g[k];
                }
                if (ngb) {
                    double* gb = grad_ptr(b);
                    for (std::size_t k = 0; k < n; ++k) gb[k] += g[k];
                }
                break;
            }
            case Op::Sub: {
                if (nga) {
                    double* ga = grad_ptr(a);
                    for (std::size_t k = 0; k < n; ++k) ga[k] += g[k];
                }
                if (ngb) {
                    double* gb = grad_ptr(b);
                    for (std::size_t k = 0; k < n; ++k) gb[k] -= g[k];
                }
                break;
            }
            case Op::Mul: {
                const double* av = val_ptr(a);
                const double* bv = val_ptr(b);
                if (nga) {
                    double* ga = grad_ptr(a);
                    for (std::size_t k = 0; k < n; ++k) ga[k] += g[k] * bv[k];
                }
                if (ngb) {
                    double* gb = grad_ptr(b);
                    for (std::size_t k = 0; k < n; ++k) gb[k] += g[k] * av[k];
                }
                break;
            }
            case Op::Scale: {
                if (nga) {
                    const double c = auxbuf_[static_cast<std::size_t>(aux_[i])];
                    double* ga = grad_ptr(a);
                    for (std::size_t k = 0; k < n; ++k) ga[k] += c * g[k];
                }
                break;
            }
            case Op::Sigmoid: {
                if (nga) {
                    double* ga = grad_ptr(a);
                    for (std::size_t k = 0; k < n; ++k) ga[k] += g[k] * out[k] * (1.0 - out[k]);
                }
                break;
            }
            case Op::Tanh: {
                if (nga) {
                    double* ga = grad_ptr(a);
                    for (std::size_t k = 0; k < n; ++k) ga[k] += g[k] * (1.0 - out[k] * out[k]);
                }
                break;
            }
            case Op::Concat: {
                const std::size_t na = size(a);
                if (nga) {
                    double* ga = grad_ptr(a);
                    for (std::size_t k = 0; k < na; ++k) ga[k] += g[k];
                }
                if (ngb) {
                    double* gb = grad_ptr(b);
                    for (std::size_t k = 0; k < n - na; ++k) gb[k] += g[na + k];
                }
                break;
            }
            case Op::Fex: {
                if (!nga) break;
                const double* v = val_ptr(a);
                double* ga = grad_ptr(a);
                const double iv = v[0], qv = v[1];
                const double amp = out[2];
                ga[0] += g[0];
                ga[1] += g[1];
                if (amp >= 1e-12) {
                    const double di = iv / amp, dq = qv / amp;  // d|x|/di, d|x|/dq
                    const double a2 = amp * amp;
                    const double a3 = a2 * amp;
                    // |x|^3 -> 3|x|^2 * d|x|; sin = q/|x|; cos = i/|x|
                    ga[0] += g[2] * di + g[3] * 3.0 * a2 * di + g[4] * (-qv * iv / a3) +
                             g[5] * (qv * qv / a3);
                    ga[1] += g[2] * dq + g[3] * 3.0 * a2 * dq + g[4] * (iv * iv / a3) +
                             g[5] * (-iv * qv / a3);
                }
                break;
            }
            case Op::SqErr: {
                if (!nga) break;
                const std::size_t na = size(a);
                const double* pv = val_ptr(a);
                const double* tv = auxbuf_.data() + aux_[i];
                double* ga = grad_ptr(a);
                const double g0 = g[0];
                for (std::size_t k = 0; k < na; ++k) ga[k] += g0 * 2.0 * (pv[k] - tv[k]);
                break;
            }
            case Op::GmpLinear: {
                if (!nga) break;
                const std::size_t na = size(a);
                const double* bv = auxbuf_.data() + aux_[i];
                double* ga = grad_ptr(a);
                const double gre = g[0], gim = g[1];
                for (std::size_t k = 0; k < na; k += 2) {
                    ga[k] += gre * bv[k] + gim * bv[k + 1];
                    ga[k + 1] += -gre * bv[k + 1] + gim * bv[k];
                }
                break;
            }
            case Op::Leaf:
                break;
        }
    }
}

void Tape::clear() {
    op_.clear();
    a_.clear();
    b_.clear();
    off_.clear();
    len_.clear();
    aux_.clear();
    ng_.clear();
    buf_.clear();
    gbuf_.clear();
    auxbuf_.clear();
}

NodeId frame_mse(Tape& tape, std::span<const NodeId> step_preds,
                 std::span<const double> targets_flat) {
    if (step_preds.empty()) throw std::invalid_argument("frame_mse: no predictions");
    std::size_t total = 0;
    NodeId acc = kNoNode;
    for (std::size_t t = 0; t < step_preds.size(); ++t) {
        const std::size_t n = tape.size(step_preds[t]);
        if (total + n > targets_flat.size())
            throw std::invalid_argument("frame_mse: target shape mismatch");
        const NodeId e = tape.sq_err(step_preds[t], targets_flat.subspan(total, n));
        acc = (acc == kNoNode) ? e : tape.add(acc, e);
        total += n;
    }
    if (total != targets_flat.size())
        throw std::invalid_argument("frame_mse: target shape mismatch");
    return tape.scale(acc, 1.0 / static_cast<double>(total));
}

}  // namespace dpdforge::ad
