#include "dpdforge/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace dpdforge {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}
}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("Fft: size must be positive");
    if (is_pow2(n_)) return;

    m_ = next_pow2(2 * n_ - 1);
    chirp_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
        // angle = -pi * k^2 / n, with k^2 reduced mod 2n to keep precision
        const std::size_t k2 = (k * k) % (2 * n_);
        const double a = -kPi * static_cast<double>(k2) / static_cast<double>(n_);
        chirp_[k] = {std::cos(a), std::sin(a)};
    }
    // wrapped kernel v[m] = conj(chirp[|m|]) for m in (-n, n)
    chirp_fft_.assign(m_, {0.0, 0.0});
    for (std::size_t k = 0; k < n_; ++k) {
        const std::complex<double> v = std::conj(chirp_[k]);
        chirp_fft_[k] = v;
        if (k != 0) chirp_fft_[m_ - k] = v;
    }
    pow2_transform(chirp_fft_.data(), m_, false);
}

void Fft::pow2_transform(std::complex<double>* data, std::size_t n, bool invert) const {
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; (j & bit) != 0; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (invert ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

void Fft::bluestein_forward(std::complex<double>* data) const {
    std::vector<std::complex<double>> a(m_, {0.0, 0.0});
    for (std::size_t k = 0; k < n_; ++k) a[k] = data[k] * chirp_[k];
    pow2_transform(a.data(), m_, false);
    for (std::size_t k = 0; k < m_; ++k) a[k] *= chirp_fft_[k];
    pow2_transform(a.data(), m_, true);
    const double inv_m = 1.0 / static_cast<double>(m_);
    for (std::size_t k = 0; k < n_; ++k) data[k] = a[k] * inv_m * chirp_[k];
}

void Fft::forward(std::complex<double>* data) const {
    if (m_ == 0) {
        pow2_transform(data, n_, false);
    } else {
        bluestein_forward(data);
    }
}

void Fft::inverse(std::complex<double>* data) const {
    if (m_ == 0) {
        pow2_transform(data, n_, true);
        const double inv_n = 1.0 / static_cast<double>(n_);
        for (std::size_t k = 0; k < n_; ++k) data[k] *= inv_n;
        return;
    }
    // IDFT(X) = conj(DFT(conj(X))) / N
    for (std::size_t k = 0; k < n_; ++k) data[k] = std::conj(data[k]);
    bluestein_forward(data);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < n_; ++k) data[k] = std::conj(data[k]) * inv_n;
}

}  // namespace dpdforge
