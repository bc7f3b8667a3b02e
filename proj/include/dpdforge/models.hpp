#ifndef DPDFORGE_MODELS_HPP
#define DPDFORGE_MODELS_HPP

// The model zoo: generalized memory polynomial, GRU and LSTM baselines, the
// feature-extractor GRU variant, and the dense-skip DGRU. Every model maps an
// I/Q sequence to an I/Q sequence, exposes a tape builder for BPTT training,
// and serializes to a JSON checkpoint that round-trips f64 exactly.

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpdforge/iq.hpp"
#include "dpdforge/params.hpp"
#include "dpdforge/rng.hpp"
#include "dpdforge/tape.hpp"

namespace dpdforge {

// Online feature extractor: i, q, |x|, |x|^3, sin(theta), cos(theta).
// Angle features are zeroed below |x| = 1e-12.
struct FeatureVector {
    double i = 0.0, q = 0.0, amp = 0.0, amp3 = 0.0, sin_theta = 0.0, cos_theta = 0.0;
};
FeatureVector fex(double i, double q);

struct GruSpec {
    int input_dim = 2;
    int hidden = 8;
    bool dual_bias = true;  // separate input-side and recurrent-side biases
};

// Gate convention: z and r are sigmoid gates; the candidate state applies the
// reset gate to the recurrent term inside tanh:
//   n = tanh(Wn x + bn_in + r ⊙ (Un h + bn_rec)),  h' = (1-z) ⊙ n + z ⊙ h
class GruCell {
public:
    static GruCell create(ParameterSet& params, const std::string& prefix, const GruSpec& spec);
    void init_weights(ParameterSet& params, Rng& rng) const;
    void step(const ParameterSet& params, const double* x, double* h, double* scratch) const;
    ad::NodeId step(ad::Tape& tape, const std::vector<ad::NodeId>& pnodes, ad::NodeId x,
                    ad::NodeId h_prev) const;
    const GruSpec& spec() const { return spec_; }
    std::size_t scratch_size() const { return 2 * static_cast<std::size_t>(spec_.hidden); }

private:
    GruSpec spec_;
    std::size_t wz_ = 0, wr_ = 0, wn_ = 0, uz_ = 0, ur_ = 0, un_ = 0;
    std::size_t biz_ = 0, bir_ = 0, bin_ = 0, bhz_ = 0, bhr_ = 0, bhn_ = 0;
};

struct LstmSpec {
    int input_dim = 2;
    int hidden = 8;
};

// Standard four-gate LSTM with two bias sets; the forget-gate input bias is
// initialized to +1.
class LstmCell {
public:
    static LstmCell create(ParameterSet& params, const std::string& prefix, const LstmSpec& spec);
    void init_weights(ParameterSet& params, Rng& rng) const;
    void step(const ParameterSet& params, const double* x, double* h, double* c,
              double* scratch) const;
    // returns (h', c') node ids
    std::pair<ad::NodeId, ad::NodeId> step(ad::Tape& tape, const std::vector<ad::NodeId>& pnodes,
                                           ad::NodeId x, ad::NodeId h_prev, ad::NodeId c_prev) const;
    const LstmSpec& spec() const { return spec_; }
    std::size_t scratch_size() const { return 2 * static_cast<std::size_t>(spec_.hidden); }

private:
    LstmSpec spec_;
    std::size_t wi_ = 0, wf_ = 0, wg_ = 0, wo_ = 0, ui_ = 0, uf_ = 0, ug_ = 0, uo_ = 0;
    std::size_t bii_ = 0, bif_ = 0, big_ = 0, bio_ = 0, bhi_ = 0, bhf_ = 0, bhg_ = 0, bho_ = 0;
};

struct GmpTerm {
    int delay = 0;  // m
    int order = 1;  // odd p
    int lag = 0;    // l, envelope taken at delay m + l
};

struct GmpPlan {
    int memory_depth = 4;
    std::vector<int> orders = {1, 3, 5, 7};
    int lag_radius = 1;
    int trim = 0;  // cross terms dropped, highest order first

    // Canonical enumeration (order ascending, delay ascending, lag ascending)
    // minus the trimmed cross terms.
    std::vector<GmpTerm> terms() const;
    std::size_t term_count() const { return terms().size(); }
    void validate() const;
};

// basis[k] = x[n - m_k] * |x[n - m_k - l_k]|^(p_k - 1), zero-padded past the
// edges of x; n indexes into x.
void gmp_design_row(std::span<const IqSample> x, long n, const std::vector<GmpTerm>& terms,
                    std::complex<double>* out);

struct ModelConfig {
    std::string family = "dgru";  // gmp | gru | lstm | fgru | dgru
    int hidden = 9;
    GmpPlan gmp;
    std::uint64_t seed = 1;
};

class SequenceModel {
public:
    virtual ~SequenceModel() = default;
    virtual const std::string& family() const = 0;
    virtual nlohmann::json hyperparams() const = 0;
    virtual std::uint64_t seed() const = 0;
    virtual ParameterSet& params() = 0;
    virtual const ParameterSet& params() const = 0;

    // Full-sequence inference with zero initial state.
    virtual std::vector<IqSample> forward(std::span<const IqSample> in) const = 0;

    // Builds one frame of the training graph. step_inputs[t] must be 2-wide
    // nodes; returns one 2-wide output node per step.
    virtual std::vector<ad::NodeId> build_frame(ad::Tape& tape,
                                                const std::vector<ad::NodeId>& pnodes,
                                                std::span<const ad::NodeId> step_inputs) const = 0;

    // False for models whose tape path treats inputs as constants (GMP).
    virtual bool input_differentiable() const { return true; }
};

std::unique_ptr<SequenceModel> make_model(const ModelConfig& cfg);

std::size_t count_params(const SequenceModel& model);
// Closed-form count for a neural family at a given hidden size.
std::size_t param_count_formula(const std::string& family, int hidden);

// Returns a config whose parameter count lies within tolerance*target,
// preferring the closest one that does not exceed the target. Throws when no
// config qualifies.
ModelConfig search_config_for_budget(const std::string& family, std::size_t target_params,
                                     double tolerance, std::uint64_t seed = 1);

nlohmann::json save_checkpoint(const SequenceModel& model);
std::unique_ptr<SequenceModel> load_checkpoint(const nlohmann::json& j);

// Complex ridge least squares on the GMP basis. The ridge weight is
// ridge_rel times the largest squared column norm of the design matrix;
// ridge_rel = 0 demands full column rank and throws otherwise.
std::unique_ptr<SequenceModel> gmp_fit(std::span<const IqSample> x, std::span<const IqSample> y,
                                       const GmpPlan& plan, double ridge_rel = 1e-9);

}  // namespace dpdforge

#endif
