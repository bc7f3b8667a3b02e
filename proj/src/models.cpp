#include "dpdforge/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpdforge {

FeatureVector fex(double i, double q) {
    FeatureVector f;
    f.i = i;
    f.q = q;
    f.amp = std::sqrt(i * i + q * q);
    f.amp3 = f.amp * f.amp * f.amp;
    if (f.amp >= 1e-12) {
        f.sin_theta = q / f.amp;
        f.cos_theta = i / f.amp;
    }
    return f;
}

// ---------------------------------------------------------------------------
// GRU cell

GruCell GruCell::create(ParameterSet& p, const std::string& prefix, const GruSpec& spec) {
    if (spec.input_dim < 1 || spec.hidden < 1)
        throw std::invalid_argument("GruCell: dimensions must be positive");
    GruCell c;
    c.spec_ = spec;
    const auto h = static_cast<std::size_t>(spec.hidden);
    const auto in = static_cast<std::size_t>(spec.input_dim);
    c.wz_ = p.add(prefix + ".wz", h, in);
    c.wr_ = p.add(prefix + ".wr", h, in);
    c.wn_ = p.add(prefix + ".wn", h, in);
    c.uz_ = p.add(prefix + ".uz", h, h);
    c.ur_ = p.add(prefix + ".ur", h, h);
    c.un_ = p.add(prefix + ".un", h, h);
    c.biz_ = p.add(prefix + ".biz", h, 1);
    c.bir_ = p.add(prefix + ".bir", h, 1);
    c.bin_ = p.add(prefix + ".bin", h, 1);
    if (spec.dual_bias) {
        c.bhz_ = p.add(prefix + ".bhz", h, 1);
        c.bhr_ = p.add(prefix + ".bhr", h, 1);
        c.bhn_ = p.add(prefix + ".bhn", h, 1);
    }
    return c;
}

void GruCell::init_weights(ParameterSet& p, Rng& rng) const {
    const double k = 1.0 / std::sqrt(static_cast<double>(spec_.hidden));
    std::vector<std::size_t> order = {wz_, wr_, wn_, uz_, ur_, un_, biz_, bir_, bin_};
    if (spec_.dual_bias) {
        order.push_back(bhz_);
        order.push_back(bhr_);
        order.push_back(bhn_);
    }
    for (std::size_t e : order)
        for (double& w : p.values(e)) w = rng.uniform(-k, k);
}

namespace {
inline double dot_row(const double* row, const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += row[k] * x[k];
    return acc;
}
inline double sigmoid_s(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void GruCell::step(const ParameterSet& p, const double* x, double* h, double* scratch) const {
    const auto hd = static_cast<std::size_t>(spec_.hidden);
    const auto in = static_cast<std::size_t>(spec_.input_dim);
    double* z = scratch;
    double* n = scratch + hd;
    const double* wz = p.values(wz_).data();
    const double* wr = p.values(wr_).data();
    const double* wn = p.values(wn_).data();
    const double* uz = p.values(uz_).data();
    const double* ur = p.values(ur_).data();
    const double* un = p.values(un_).data();
    const double* biz = p.values(biz_).data();
    const double* bir = p.values(bir_).data();
    const double* bin = p.values(bin_).data();
    const double* bhz = spec_.dual_bias ? p.values(bhz_).data() : nullptr;
    const double* bhr = spec_.dual_bias ? p.values(bhr_).data() : nullptr;
    const double* bhn = spec_.dual_bias ? p.values(bhn_).data() : nullptr;

    // mirrors the tape graph op for op so both paths agree bit for bit
    for (std::size_t r = 0; r < hd; ++r) {
        double zpre;
        double rpre;
        if (spec_.dual_bias) {
            zpre = (dot_row(wz + r * in, x, in) + biz[r]) + (dot_row(uz + r * hd, h, hd) + bhz[r]);
            rpre = (dot_row(wr + r * in, x, in) + bir[r]) + (dot_row(ur + r * hd, h, hd) + bhr[r]);
        } else {
            zpre = (dot_row(wz + r * in, x, in) + dot_row(uz + r * hd, h, hd)) + biz[r];
            rpre = (dot_row(wr + r * in, x, in) + dot_row(ur + r * hd, h, hd)) + bir[r];
        }
        z[r] = sigmoid_s(zpre);
        const double rg = sigmoid_s(rpre);
        double npre;
        if (spec_.dual_bias) {
            npre = (dot_row(wn + r * in, x, in) + bin[r]) + rg * (dot_row(un + r * hd, h, hd) + bhn[r]);
        } else {
            npre = (dot_row(wn + r * in, x, in) + rg * dot_row(un + r * hd, h, hd)) + bin[r];
        }
        n[r] = std::tanh(npre);
    }
    for (std::size_t r = 0; r < hd; ++r) h[r] = (1.0 - z[r]) * n[r] + z[r] * h[r];
}

ad::NodeId GruCell::step(ad::Tape& t, const std::vector<ad::NodeId>& pn, ad::NodeId x,
                         ad::NodeId h_prev) const {
    auto gate_pre = [&](std::size_t w, std::size_t u, std::size_t bi, std::size_t bh) {
        if (spec_.dual_bias)
            return t.add(t.add(t.matvec(pn[w], x), pn[bi]),
                         t.add(t.matvec(pn[u], h_prev), pn[bh]));
        return t.add(t.add(t.matvec(pn[w], x), t.matvec(pn[u], h_prev)), pn[bi]);
    };
    const ad::NodeId z = t.sigmoid(gate_pre(wz_, uz_, biz_, bhz_));
    const ad::NodeId r = t.sigmoid(gate_pre(wr_, ur_, bir_, bhr_));
    ad::NodeId n;
    if (spec_.dual_bias) {
        n = t.tanh_(t.add(t.add(t.matvec(pn[wn_], x), pn[bin_]),
                          t.mul(r, t.add(t.matvec(pn[un_], h_prev), pn[bhn_]))));
    } else {
        n = t.tanh_(t.add(t.add(t.matvec(pn[wn_], x), t.mul(r, t.matvec(pn[un_], h_prev))),
                          pn[bin_]));
    }
    const std::vector<double> ones(static_cast<std::size_t>(spec_.hidden), 1.0);
    const ad::NodeId one = t.constant(ones);
    return t.add(t.mul(t.sub(one, z), n), t.mul(z, h_prev));
}

// ---------------------------------------------------------------------------
// LSTM cell

LstmCell LstmCell::create(ParameterSet& p, const std::string& prefix, const LstmSpec& spec) {
    if (spec.input_dim < 1 || spec.hidden < 1)
        throw std::invalid_argument("LstmCell: dimensions must be positive");
    LstmCell c;
    c.spec_ = spec;
    const auto h = static_cast<std::size_t>(spec.hidden);
    const auto in = static_cast<std::size_t>(spec.input_dim);
    c.wi_ = p.add(prefix + ".wi", h, in);
    c.wf_ = p.add(prefix + ".wf", h, in);
    c.wg_ = p.add(prefix + ".wg", h, in);
    c.wo_ = p.add(prefix + ".wo", h, in);
    c.ui_ = p.add(prefix + ".ui", h, h);
    c.uf_ = p.add(prefix + ".uf", h, h);
    c.ug_ = p.add(prefix + ".ug", h, h);
    c.uo_ = p.add(prefix + ".uo", h, h);
    c.bii_ = p.add(prefix + ".bii", h, 1);
    c.bif_ = p.add(prefix + ".bif", h, 1);
    c.big_ = p.add(prefix + ".big", h, 1);
    c.bio_ = p.add(prefix + ".bio", h, 1);
    c.bhi_ = p.add(prefix + ".bhi", h, 1);
    c.bhf_ = p.add(prefix + ".bhf", h, 1);
    c.bhg_ = p.add(prefix + ".bhg", h, 1);
    c.bho_ = p.add(prefix + ".bho", h, 1);
    return c;
}

void LstmCell::init_weights(ParameterSet& p, Rng& rng) const {
    const double k = 1.0 / std::sqrt(static_cast<double>(spec_.hidden));
    for (std::size_t e : {wi_, wf_, wg_, wo_, ui_, uf_, ug_, uo_, bii_, bif_, big_, bio_, bhi_,
                          bhf_, bhg_, bho_})
        for (double& w : p.values(e)) w = rng.uniform(-k, k);
    // stable memory at the start of training: forget gate biased open
    for (double& w : p.values(bif_)) w = 1.0;
    for (double& w : p.values(bhf_)) w = 0.0;
}

void LstmCell::step(const ParameterSet& p, const double* x, double* h, double* c,
                    double* scratch) const {
    const auto hd = static_cast<std::size_t>(spec_.hidden);
    const auto in = static_cast<std::size_t>(spec_.input_dim);
    double* hnew = scratch;
    const double* wi = p.values(wi_).data();
    const double* wf = p.values(wf_).data();
    const double* wg = p.values(wg_).data();
    const double* wo = p.values(wo_).data();
    const double* ui = p.values(ui_).data();
    const double* uf = p.values(uf_).data();
    const double* ug = p.values(ug_).data();
    const double* uo = p.values(uo_).data();
    const double* bii = p.values(bii_).data();
    const double* bif = p.values(bif_).data();
    const double* big = p.values(big_).data();
    const double* bio = p.values(bio_).data();
    const double* bhi = p.values(bhi_).data();
    const double* bhf = p.values(bhf_).data();
    const double* bhg = p.values(bhg_).data();
    const double* bho = p.values(bho_).data();

    for (std::size_t r = 0; r < hd; ++r) {
        const double ig = sigmoid_s((dot_row(wi + r * in, x, in) + bii[r]) +
                                    (dot_row(ui + r * hd, h, hd) + bhi[r]));
        const double fg = sigmoid_s((dot_row(wf + r * in, x, in) + bif[r]) +
                                    (dot_row(uf + r * hd, h, hd) + bhf[r]));
        const double gg = std::tanh((dot_row(wg + r * in, x, in) + big[r]) +
                                    (dot_row(ug + r * hd, h, hd) + bhg[r]));
        const double og = sigmoid_s((dot_row(wo + r * in, x, in) + bio[r]) +
                                    (dot_row(uo + r * hd, h, hd) + bho[r]));
        const double cnew = fg * c[r] + ig * gg;
        c[r] = cnew;
        hnew[r] = og * std::tanh(cnew);
    }
    for (std::size_t r = 0; r < hd; ++r) h[r] = hnew[r];
}

std::pair<ad::NodeId, ad::NodeId> LstmCell::step(ad::Tape& t, const std::vector<ad::NodeId>& pn,
                                                 ad::NodeId x, ad::NodeId h_prev,
                                                 ad::NodeId c_prev) const {
    auto gate_pre = [&](std::size_t w, std::size_t u, std::size_t bi, std::size_t bh) {
        return t.add(t.add(t.matvec(pn[w], x), pn[bi]), t.add(t.matvec(pn[u], h_prev), pn[bh]));
    };
    const ad::NodeId ig = t.sigmoid(gate_pre(wi_, ui_, bii_, bhi_));
    const ad::NodeId fg = t.sigmoid(gate_pre(wf_, uf_, bif_, bhf_));
    const ad::NodeId gg = t.tanh_(gate_pre(wg_, ug_, big_, bhg_));
    const ad::NodeId og = t.sigmoid(gate_pre(wo_, uo_, bio_, bho_));
    const ad::NodeId c_new = t.add(t.mul(fg, c_prev), t.mul(ig, gg));
    const ad::NodeId h_new = t.mul(og, t.tanh_(c_new));
    return {h_new, c_new};
}

// ---------------------------------------------------------------------------
// GMP plan

void GmpPlan::validate() const {
    if (memory_depth < 0) throw std::invalid_argument("GmpPlan: memory_depth must be >= 0");
    if (lag_radius < 0) throw std::invalid_argument("GmpPlan: lag_radius must be >= 0");
    if (orders.empty()) throw std::invalid_argument("GmpPlan: order set must not be empty");
    for (std::size_t k = 0; k < orders.size(); ++k) {
        if (orders[k] < 1 || orders[k] % 2 == 0)
            throw std::invalid_argument("GmpPlan: orders must be odd and >= 1");
        if (k > 0 && orders[k] <= orders[k - 1])
            throw std::invalid_argument("GmpPlan: orders must be strictly ascending");
    }
    if (trim < 0) throw std::invalid_argument("GmpPlan: trim must be >= 0");
}

std::vector<GmpTerm> GmpPlan::terms() const {
    validate();
    std::vector<GmpTerm> all;
    for (int p : orders)
        for (int m = 0; m <= memory_depth; ++m)
            for (int l = -lag_radius; l <= lag_radius; ++l) all.push_back({m, p, l});

    if (trim == 0) return all;
    // cross terms in drop order: highest order first, widest lag first
    std::vector<std::size_t> cross;
    for (std::size_t k = 0; k < all.size(); ++k)
        if (all[k].lag != 0) cross.push_back(k);
    std::stable_sort(cross.begin(), cross.end(), [&](std::size_t a, std::size_t b) {
        const GmpTerm& ta = all[a];
        const GmpTerm& tb = all[b];
        if (ta.order != tb.order) return ta.order > tb.order;
        if (std::abs(ta.lag) != std::abs(tb.lag)) return std::abs(ta.lag) > std::abs(tb.lag);
        if (ta.lag != tb.lag) return ta.lag > tb.lag;
        return ta.delay > tb.delay;
    });
    if (static_cast<std::size_t>(trim) > cross.size())
        throw std::invalid_argument("GmpPlan: trim exceeds the cross-term count");
    std::vector<char> drop(all.size(), 0);
    for (int k = 0; k < trim; ++k) drop[cross[static_cast<std::size_t>(k)]] = 1;
    std::vector<GmpTerm> kept;
    kept.reserve(all.size() - static_cast<std::size_t>(trim));
    for (std::size_t k = 0; k < all.size(); ++k)
        if (drop[k] == 0) kept.push_back(all[k]);
    return kept;
}

void gmp_design_row(std::span<const IqSample> x, long n, const std::vector<GmpTerm>& terms,
                    std::complex<double>* out) {
    const long len = static_cast<long>(x.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const GmpTerm& t = terms[k];
        const long i = n - t.delay;
        if (i < 0 || i >= len) {
            out[k] = {0.0, 0.0};
            continue;
        }
        const std::complex<double> xv = to_complex(x[static_cast<std::size_t>(i)]);
        const long j = i - t.lag;
        double env2 = 0.0;
        if (j >= 0 && j < len) env2 = abs2(x[static_cast<std::size_t>(j)]);
        double env_pow = 1.0;  // |x[j]|^(p-1), with |.|^0 = 1 even off the edge
        for (int p = 1; p < t.order; p += 2) env_pow *= env2;
        out[k] = xv * env_pow;
    }
}

// ---------------------------------------------------------------------------
// Neural models

namespace {

class DenseHead {
public:
    static DenseHead create(ParameterSet& p, std::size_t in_dim) {
        DenseHead d;
        d.in_dim_ = in_dim;
        d.w_ = p.add("out.w", 2, in_dim);
        d.b_ = p.add("out.b", 2, 1);
        return d;
    }
    void init_weights(ParameterSet& p, Rng& rng) const {
        const double k = 1.0 / std::sqrt(static_cast<double>(in_dim_));
        for (std::size_t e : {w_, b_})
            for (double& w : p.values(e)) w = rng.uniform(-k, k);
    }
    IqSample apply(const ParameterSet& p, const double* in) const {
        const double* w = p.values(w_).data();
        const double* b = p.values(b_).data();
        IqSample out;
        out.i = dot_row(w, in, in_dim_) + b[0];
        out.q = dot_row(w + in_dim_, in, in_dim_) + b[1];
        return out;
    }
    ad::NodeId apply(ad::Tape& t, const std::vector<ad::NodeId>& pn, ad::NodeId in) const {
        return t.add(t.matvec(pn[w_], in), pn[b_]);
    }

private:
    std::size_t in_dim_ = 0, w_ = 0, b_ = 0;
};

std::vector<double> zeros_vec(int n) { return std::vector<double>(static_cast<std::size_t>(n), 0.0); }

// GRU on raw (i, q) inputs; single bias set per gate.
class GruModel final : public SequenceModel {
public:
    explicit GruModel(const ModelConfig& cfg) : cfg_(cfg) {
        cell_ = GruCell::create(params_, "gru", GruSpec{2, cfg.hidden, false});
        head_ = DenseHead::create(params_, static_cast<std::size_t>(cfg.hidden));
    }
    void init(Rng& rng) {
        cell_.init_weights(params_, rng);
        head_.init_weights(params_, rng);
    }
    const std::string& family() const override {
        static const std::string f = "gru";
        return f;
    }
    nlohmann::json hyperparams() const override { return {{"hidden", cfg_.hidden}}; }
    std::uint64_t seed() const override { return cfg_.seed; }
    ParameterSet& params() override { return params_; }
    const ParameterSet& params() const override { return params_; }

    std::vector<IqSample> forward(std::span<const IqSample> in) const override {
        std::vector<IqSample> out(in.size());
        std::vector<double> h = zeros_vec(cfg_.hidden);
        std::vector<double> scratch(cell_.scratch_size());
        for (std::size_t t = 0; t < in.size(); ++t) {
            const double x[2] = {in[t].i, in[t].q};
            cell_.step(params_, x, h.data(), scratch.data());
            out[t] = head_.apply(params_, h.data());
        }
        return out;
    }

    std::vector<ad::NodeId> build_frame(ad::Tape& tape, const std::vector<ad::NodeId>& pn,
                                        std::span<const ad::NodeId> inputs) const override {
        std::vector<ad::NodeId> outs;
        outs.reserve(inputs.size());
        ad::NodeId h = tape.constant(zeros_vec(cfg_.hidden));
        for (const ad::NodeId x : inputs) {
            h = cell_.step(tape, pn, x, h);
            outs.push_back(head_.apply(tape, pn, h));
        }
        return outs;
    }

private:
    ModelConfig cfg_;
    ParameterSet params_;
    GruCell cell_;
    DenseHead head_;
};

class LstmModel final : public SequenceModel {
public:
    explicit LstmModel(const ModelConfig& cfg) : cfg_(cfg) {
        cell_ = LstmCell::create(params_, "lstm", LstmSpec{2, cfg.hidden});
        head_ = DenseHead::create(params_, static_cast<std::size_t>(cfg.hidden));
    }
    void init(Rng& rng) {
        cell_.init_weights(params_, rng);
        head_.init_weights(params_, rng);
    }
    const std::string& family() const override {
        static const std::string f = "lstm";
        return f;
    }
    nlohmann::json hyperparams() const override { return {{"hidden", cfg_.hidden}}; }
    std::uint64_t seed() const override { return cfg_.seed; }
    ParameterSet& params() override { return params_; }
    const ParameterSet& params() const override { return params_; }

    std::vector<IqSample> forward(std::span<const IqSample> in) const override {
        std::vector<IqSample> out(in.size());
        std::vector<double> h = zeros_vec(cfg_.hidden);
        std::vector<double> c = zeros_vec(cfg_.hidden);
        std::vector<double> scratch(cell_.scratch_size());
        for (std::size_t t = 0; t < in.size(); ++t) {
            const double x[2] = {in[t].i, in[t].q};
            cell_.step(params_, x, h.data(), c.data(), scratch.data());
            out[t] = head_.apply(params_, h.data());
        }
        return out;
    }

    std::vector<ad::NodeId> build_frame(ad::Tape& tape, const std::vector<ad::NodeId>& pn,
                                        std::span<const ad::NodeId> inputs) const override {
        std::vector<ad::NodeId> outs;
        outs.reserve(inputs.size());
        ad::NodeId h = tape.constant(zeros_vec(cfg_.hidden));
        ad::NodeId c = tape.constant(zeros_vec(cfg_.hidden));
        for (const ad::NodeId x : inputs) {
            const auto [hn, cn] = cell_.step(tape, pn, x, h, c);
            h = hn;
            c = cn;
            outs.push_back(head_.apply(tape, pn, h));
        }
        return outs;
    }

private:
    ModelConfig cfg_;
    ParameterSet params_;
    LstmCell cell_;
    DenseHead head_;
};

// GRU fed by the feature extractor (no skip path).
class FgruModel final : public SequenceModel {
public:
    explicit FgruModel(const ModelConfig& cfg) : cfg_(cfg) {
        cell_ = GruCell::create(params_, "gru", GruSpec{6, cfg.hidden, true});
        head_ = DenseHead::create(params_, static_cast<std::size_t>(cfg.hidden));
    }
    void init(Rng& rng) {
        cell_.init_weights(params_, rng);
        head_.init_weights(params_, rng);
    }
    const std::string& family() const override {
        static const std::string f = "fgru";
        return f;
    }
    nlohmann::json hyperparams() const override { return {{"hidden", cfg_.hidden}}; }
    std::uint64_t seed() const override { return cfg_.seed; }
    ParameterSet& params() override { return params_; }
    const ParameterSet& params() const override { return params_; }

    std::vector<IqSample> forward(std::span<const IqSample> in) const override {
        std::vector<IqSample> out(in.size());
        std::vector<double> h = zeros_vec(cfg_.hidden);
        std::vector<double> scratch(cell_.scratch_size());
        for (std::size_t t = 0; t < in.size(); ++t) {
            const FeatureVector f = fex(in[t].i, in[t].q);
            const double x[6] = {f.i, f.q, f.amp, f.amp3, f.sin_theta, f.cos_theta};
            cell_.step(params_, x, h.data(), scratch.data());
            out[t] = head_.apply(params_, h.data());
        }
        return out;
    }

    std::vector<ad::NodeId> build_frame(ad::Tape& tape, const std::vector<ad::NodeId>& pn,
                                        std::span<const ad::NodeId> inputs) const override {
        std::vector<ad::NodeId> outs;
        outs.reserve(inputs.size());
        ad::NodeId h = tape.constant(zeros_vec(cfg_.hidden));
        for (const ad::NodeId x : inputs) {
            const ad::NodeId f = tape.fex(x);
            h = cell_.step(tape, pn, f, h);
            outs.push_back(head_.apply(tape, pn, h));
        }
        return outs;
    }

private:
    ModelConfig cfg_;
    ParameterSet params_;
    GruCell cell_;
    DenseHead head_;
};

// Feature-extractor GRU with a dense skip path: the features are
// concatenated to the GRU state at the input of the output layer.
class DgruModel final : public SequenceModel {
public:
    explicit DgruModel(const ModelConfig& cfg) : cfg_(cfg) {
        cell_ = GruCell::create(params_, "gru", GruSpec{6, cfg.hidden, true});
        head_ = DenseHead::create(params_, static_cast<std::size_t>(cfg.hidden) + 6);
    }
    void init(Rng& rng) {
        cell_.init_weights(params_, rng);
        head_.init_weights(params_, rng);
    }
    const std::string& family() const override {
        static const std::string f = "dgru";
        return f;
    }
    nlohmann::json hyperparams() const override { return {{"hidden", cfg_.hidden}}; }
    std::uint64_t seed() const override { return cfg_.seed; }
    ParameterSet& params() override { return params_; }
    const ParameterSet& params() const override { return params_; }

    std::vector<IqSample> forward(std::span<const IqSample> in) const override {
        const auto hd = static_cast<std::size_t>(cfg_.hidden);
        std::vector<IqSample> out(in.size());
        std::vector<double> h = zeros_vec(cfg_.hidden);
        std::vector<double> scratch(cell_.scratch_size());
        std::vector<double> cat(hd + 6);
        for (std::size_t t = 0; t < in.size(); ++t) {
            const FeatureVector f = fex(in[t].i, in[t].q);
            const double x[6] = {f.i, f.q, f.amp, f.amp3, f.sin_theta, f.cos_theta};
            cell_.step(params_, x, h.data(), scratch.data());
            for (std::size_t k = 0; k < hd; ++k) cat[k] = h[k];
            for (std::size_t k = 0; k < 6; ++k) cat[hd + k] = x[k];
            out[t] = head_.apply(params_, cat.data());
        }
        return out;
    }

    std::vector<ad::NodeId> build_frame(ad::Tape& tape, const std::vector<ad::NodeId>& pn,
                                        std::span<const ad::NodeId> inputs) const override {
        std::vector<ad::NodeId> outs;
        outs.reserve(inputs.size());
        ad::NodeId h = tape.constant(zeros_vec(cfg_.hidden));
        for (const ad::NodeId x : inputs) {
            const ad::NodeId f = tape.fex(x);
            h = cell_.step(tape, pn, f, h);
            outs.push_back(head_.apply(tape, pn, tape.concat(h, f)));
        }
        return outs;
    }

private:
    ModelConfig cfg_;
    ParameterSet params_;
    GruCell cell_;
    DenseHead head_;
};

class GmpModel final : public SequenceModel {
public:
    explicit GmpModel(const ModelConfig& cfg) : cfg_(cfg), terms_(cfg.gmp.terms()) {
        coeffs_ = params_.add("gmp.coeffs", terms_.size(), 2);
    }
    void init(Rng&) {
        // identity start: unit linear tap, everything else zero
        std::span<double> c = params_.values(coeffs_);
        for (std::size_t k = 0; k < terms_.size(); ++k) {
            const GmpTerm& t = terms_[k];
            if (t.delay == 0 && t.order == 1 && t.lag == 0) {
                c[2 * k] = 1.0;
                break;
            }
        }
    }
    const std::string& family() const override {
        static const std::string f = "gmp";
        return f;
    }
    nlohmann::json hyperparams() const override {
        return {{"memory_depth", cfg_.gmp.memory_depth},
                {"orders", cfg_.gmp.orders},
                {"lag_radius", cfg_.gmp.lag_radius},
                {"trim", cfg_.gmp.trim}};
    }
    std::uint64_t seed() const override { return cfg_.seed; }
    ParameterSet& params() override { return params_; }
    const ParameterSet& params() const override { return params_; }
    bool input_differentiable() const override { return false; }

    const std::vector<GmpTerm>& terms() const { return terms_; }
    void set_coefficients(std::span<const std::complex<double>> c) {
        std::span<double> v = params_.values(coeffs_);
        for (std::size_t k = 0; k < terms_.size(); ++k) {
            v[2 * k] = c[k].real();
            v[2 * k + 1] = c[k].imag();
        }
    }

    std::vector<IqSample> forward(std::span<const IqSample> in) const override {
        std::vector<IqSample> out(in.size());
        std::vector<std::complex<double>> basis(terms_.size());
        std::span<const double> c = params_.values(coeffs_);
        for (std::size_t n = 0; n < in.size(); ++n) {
            gmp_design_row(in, static_cast<long>(n), terms_, basis.data());
            double re = 0.0, im = 0.0;
            for (std::size_t k = 0; k < terms_.size(); ++k) {
                const double br = basis[k].real(), bi = basis[k].imag();
                re += c[2 * k] * br - c[2 * k + 1] * bi;
                im += c[2 * k] * bi + c[2 * k + 1] * br;
            }
            out[n] = {re, im};
        }
        return out;
    }

    std::vector<ad::NodeId> build_frame(ad::Tape& tape, const std::vector<ad::NodeId>& pn,
                                        std::span<const ad::NodeId> inputs) const override {
        std::vector<IqSample> frame(inputs.size());
        for (std::size_t t = 0; t < inputs.size(); ++t) {
            if (tape.requires_grad(inputs[t]))
                throw std::invalid_argument(
                    "gmp model: tape inputs must be constants (coefficient gradients only)");
            const std::span<const double> v = tape.value(inputs[t]);
            frame[t] = {v[0], v[1]};
        }
        std::vector<ad::NodeId> outs;
        outs.reserve(inputs.size());
        std::vector<std::complex<double>> basis(terms_.size());
        std::vector<double> flat(2 * terms_.size());
        for (std::size_t t = 0; t < inputs.size(); ++t) {
            gmp_design_row(frame, static_cast<long>(t), terms_, basis.data());
            for (std::size_t k = 0; k < terms_.size(); ++k) {
                flat[2 * k] = basis[k].real();
                flat[2 * k + 1] = basis[k].imag();
            }
            outs.push_back(tape.gmp_linear(pn[coeffs_], flat));
        }
        return outs;
    }

private:
    ModelConfig cfg_;
    ParameterSet params_;
    std::vector<GmpTerm> terms_;
    std::size_t coeffs_ = 0;
};

}  // namespace

std::unique_ptr<SequenceModel> make_model(const ModelConfig& cfg) {
    Rng rng(mix_seed(cfg.seed, 0x30DE1));
    if (cfg.family == "gru") {
        auto m = std::make_unique<GruModel>(cfg);
        m->init(rng);
        return m;
    }
    if (cfg.family == "lstm") {
        auto m = std::make_unique<LstmModel>(cfg);
        m->init(rng);
        return m;
    }
    if (cfg.family == "fgru") {
        auto m = std::make_unique<FgruModel>(cfg);
        m->init(rng);
        return m;
    }
    if (cfg.family == "dgru") {
        auto m = std::make_unique<DgruModel>(cfg);
        m->init(rng);
        return m;
    }
    if (cfg.family == "gmp") {
        auto m = std::make_unique<GmpModel>(cfg);
        m->init(rng);
        return m;
    }
    throw std::invalid_argument("make_model: unknown family " + cfg.family);
}

std::size_t count_params(const SequenceModel& model) { return model.params().size(); }

std::size_t param_count_formula(const std::string& family, int hidden) {
    const std::size_t h = static_cast<std::size_t>(hidden);
    if (family == "gru") return 3 * h * h + 11 * h + 2;
    if (family == "lstm") return 4 * h * h + 18 * h + 2;
    if (family == "fgru") return 3 * h * h + 26 * h + 2;
    if (family == "dgru") return 3 * h * h + 26 * h + 14;
    throw std::invalid_argument("param_count_formula: unknown family " + family);
}

namespace {

ModelConfig search_gmp_budget(std::size_t target, double tolerance, std::uint64_t seed) {
    // term count scales with memory depth; the remainder is trimmed away as
    // cross terms (complex coefficients move the count in steps of two)
    const GmpPlan base;
    const std::size_t per_tap = base.orders.size() * (2 * static_cast<std::size_t>(base.lag_radius) + 1);
    const std::size_t even_target = 2 * (target / 2);
    const std::size_t lo = static_cast<std::size_t>(
        std::ceil(static_cast<double>(target) * (1.0 - tolerance)));
    if (even_target < 2 || even_target < lo)
        throw std::invalid_argument("search_config_for_budget: gmp budget unreachable");
    const std::size_t taps = (even_target / 2 + per_tap - 1) / per_tap;  // ceil
    ModelConfig cfg;
    cfg.family = "gmp";
    cfg.seed = seed;
    cfg.gmp = base;
    cfg.gmp.memory_depth = static_cast<int>(taps) - 1;
    cfg.gmp.trim = static_cast<int>((taps * per_tap - even_target / 2));
    const std::size_t cross =
        taps * base.orders.size() * 2 * static_cast<std::size_t>(base.lag_radius);
    if (static_cast<std::size_t>(cfg.gmp.trim) > cross)
        throw std::invalid_argument("search_config_for_budget: gmp budget unreachable");
    return cfg;
}

}  // namespace

ModelConfig search_config_for_budget(const std::string& family, std::size_t target_params,
                                     double tolerance, std::uint64_t seed) {
    if (target_params < 1) throw std::invalid_argument("search_config_for_budget: bad target");
    if (family == "gmp") return search_gmp_budget(target_params, tolerance, seed);

    const double lo = static_cast<double>(target_params) * (1.0 - tolerance);
    const double hi = static_cast<double>(target_params) * (1.0 + tolerance);
    int best_below = 0, best_above = 0;
    std::size_t count_below = 0, count_above = 0;
    for (int h = 1; h <= 8192; ++h) {
        const std::size_t c = param_count_formula(family, h);
        if (c <= target_params) {
            best_below = h;
            count_below = c;
        } else {
            best_above = h;
            count_above = c;
            break;  // counts grow monotonically in h
        }
    }
    if (best_below > 0 && static_cast<double>(count_below) >= lo) {
        ModelConfig cfg;
        cfg.family = family;
        cfg.hidden = best_below;
        cfg.seed = seed;
        return cfg;
    }
    if (best_above > 0 && static_cast<double>(count_above) <= hi) {
        ModelConfig cfg;
        cfg.family = family;
        cfg.hidden = best_above;
        cfg.seed = seed;
        return cfg;
    }
    throw std::invalid_argument("search_config_for_budget: no config within tolerance of target");
}

nlohmann::json save_checkpoint(const SequenceModel& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["family"] = model.family();
    j["seed"] = model.seed();
    j["hyperparams"] = model.hyperparams();
    nlohmann::json order = nlohmann::json::array();
    nlohmann::json values = nlohmann::json::object();
    const ParameterSet& p = model.params();
    for (std::size_t e = 0; e < p.num_entries(); ++e) {
        const auto& entry = p.entry(e);
        order.push_back(entry.name);
        const std::span<const double> v = p.values(e);
        values[entry.name] = std::vector<double>(v.begin(), v.end());
    }
    j["parameter_order"] = order;
    j["parameters"] = values;
    return j;
}

std::unique_ptr<SequenceModel> load_checkpoint(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("load_checkpoint: unsupported format version");
    ModelConfig cfg;
    cfg.family = j.at("family").get<std::string>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    const nlohmann::json& hp = j.at("hyperparams");
    if (cfg.family == "gmp") {
        cfg.gmp.memory_depth = hp.at("memory_depth").get<int>();
        cfg.gmp.orders = hp.at("orders").get<std::vector<int>>();
        cfg.gmp.lag_radius = hp.at("lag_radius").get<int>();
        cfg.gmp.trim = hp.at("trim").get<int>();
    } else {
        cfg.hidden = hp.at("hidden").get<int>();
    }
    std::unique_ptr<SequenceModel> model = make_model(cfg);

    const nlohmann::json& order = j.at("parameter_order");
    const nlohmann::json& values = j.at("parameters");
    ParameterSet& p = model->params();
    if (order.size() != p.num_entries())
        throw std::runtime_error("load_checkpoint: parameter list does not match the family");
    for (std::size_t e = 0; e < p.num_entries(); ++e) {
        const std::string name = order[e].get<std::string>();
        if (name != p.entry(e).name)
            throw std::runtime_error("load_checkpoint: unexpected parameter " + name);
        const auto vals = values.at(name).get<std::vector<double>>();
        std::span<double> dst = p.values(e);
        if (vals.size() != dst.size())
            throw std::runtime_error("load_checkpoint: size mismatch for " + name);
        for (std::size_t k = 0; k < vals.size(); ++k) dst[k] = vals[k];
    }
    return model;
}

}  // namespace dpdforge
