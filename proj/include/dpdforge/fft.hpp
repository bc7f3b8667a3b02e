#ifndef DPDFORGE_FFT_HPP
#define DPDFORGE_FFT_HPP

// Complex FFT for arbitrary lengths: iterative radix-2 for powers of two,
// Bluestein's chirp-z transform otherwise. A plan is immutable after
// construction and safe to share across threads.

#include <complex>
#include <cstddef>
#include <vector>

namespace dpdforge {

class Fft {
public:
    explicit Fft(std::size_t n);

    std::size_t size() const { return n_; }

    // X[k] = sum_n x[n] * exp(-j 2 pi k n / N)
    void forward(std::complex<double>* data) const;
    // x[n] = (1/N) * sum_k X[k] * exp(+j 2 pi k n / N)
    void inverse(std::complex<double>* data) const;

    void forward(std::vector<std::complex<double>>& v) const { forward(v.data()); }
    void inverse(std::vector<std::complex<double>>& v) const { inverse(v.data()); }

private:
    void pow2_transform(std::complex<double>* data, std::size_t n, bool invert) const;
    void bluestein_forward(std::complex<double>* data) const;

    std::size_t n_;
    std::size_t m_ = 0;  // pow2 working size for Bluestein (0 when n_ is pow2)
    std::vector<std::complex<double>> chirp_;      // exp(-j pi k^2 / n), k in [0, n)
    std::vector<std::complex<double>> chirp_fft_;  // FFT of the wrapped conjugate chirp
};

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace dpdforge

#endif
