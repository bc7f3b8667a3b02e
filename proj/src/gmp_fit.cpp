// Complex ridge least squares for the memory-polynomial basis. Eigen runs
// single-threaded here so fits are reproducible bit for bit.
#define EIGEN_DONT_PARALLELIZE

#include <Eigen/Dense>
#include <stdexcept>

#include "dpdforge/models.hpp"
#include "dpdforge/parallel.hpp"

namespace dpdforge {

std::unique_ptr<SequenceModel> gmp_fit(std::span<const IqSample> x, std::span<const IqSample> y,
                                       const GmpPlan& plan, double ridge_rel) {
    if (x.size() != y.size()) throw std::invalid_argument("gmp_fit: sequence length mismatch");
    if (ridge_rel < 0.0) throw std::invalid_argument("gmp_fit: ridge weight must be >= 0");
    const std::vector<GmpTerm> terms = plan.terms();
    const std::size_t k = terms.size();
    const std::size_t n = x.size();
    if (n < k) throw std::invalid_argument("gmp_fit: fewer samples than basis terms");

    Eigen::MatrixXcd a(n, k);
    par::for_each_index(n, [&](std::size_t row) {
        std::vector<std::complex<double>> basis(k);
        gmp_design_row(x, static_cast<long>(row), terms, basis.data());
        for (std::size_t c = 0; c < k; ++c) a(static_cast<Eigen::Index>(row),
                                              static_cast<Eigen::Index>(c)) = basis[c];
    });
    Eigen::VectorXcd b(n);
    for (std::size_t row = 0; row < n; ++row)
        b(static_cast<Eigen::Index>(row)) = to_complex(y[row]);

    Eigen::VectorXcd coeffs;
    if (ridge_rel == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
        if (qr.rank() < static_cast<Eigen::Index>(k))
            throw std::runtime_error("gmp_fit: rank-deficient basis with zero ridge");
        coeffs = qr.solve(b);
    } else {
        // ridge scaled by the largest squared column norm, solved via the
        // augmented system [A; sqrt(lambda) I]
        double max_col = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            max_col = std::max(max_col, a.col(static_cast<Eigen::Index>(c)).squaredNorm());
        const double lambda = ridge_rel * max_col;
        Eigen::MatrixXcd aug(n + k, k);
        aug.topRows(static_cast<Eigen::Index>(n)) = a;
        aug.bottomRows(static_cast<Eigen::Index>(k)) =
            std::sqrt(lambda) * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(k),
                                                           static_cast<Eigen::Index>(k));
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n + k));
        rhs.topRows(static_cast<Eigen::Index>(n)) = b;
        coeffs = aug.householderQr().solve(rhs);
    }

    ModelConfig cfg;
    cfg.family = "gmp";
    cfg.gmp = plan;
    std::unique_ptr<SequenceModel> model = make_model(cfg);
    // write the solution straight into the parameter storage
    std::span<double> v = model->params().values(model->params().find("gmp.coeffs"));
    for (std::size_t c = 0; c < k; ++c) {
        v[2 * c] = coeffs(static_cast<Eigen::Index>(c)).real();
        v[2 * c + 1] = coeffs(static_cast<Eigen::Index>(c)).imag();
    }
    return model;
}

}  // namespace dpdforge
