#ifndef DPDFORGE_PARALLEL_HPP
#define DPDFORGE_PARALLEL_HPP

// Execution-mode switch for the data-parallel kernels. Every parallel kernel
// in this project has a serial twin that performs the identical arithmetic in
// the identical order, so results are bit-equal across modes and thread
// counts; reductions always combine partial results in a fixed index order.

#include <cstddef>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpdforge::par {

enum class Mode { serial, openmp };

inline Mode& mode_ref() {
    static Mode m = [] {
#ifdef _OPENMP
        const char* v = std::getenv("DPD_FORGE_DETERMINISTIC");
        if (v != nullptr && v[0] == '1') return Mode::serial;
        return Mode::openmp;
#else
        return Mode::serial;
#endif
    }();
    return m;
}

inline Mode mode() { return mode_ref(); }
inline void set_mode(Mode m) { mode_ref() = m; }

// Runs body(i) for i in [0, n). The OpenMP path requires body to be safe to
// run concurrently for distinct i (disjoint output slots, no shared state).
template <typename Body>
void for_each_index(std::size_t n, Mode m, const Body& body) {
#ifdef _OPENMP
    if (m == Mode::openmp) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
    }
#else
    (void)m;
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

template <typename Body>
void for_each_index(std::size_t n, const Body& body) {
    for_each_index(n, mode(), body);
}

}  // namespace dpdforge::par

#endif
