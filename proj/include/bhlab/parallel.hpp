#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bhlab::par {

constexpr std::size_t kBlockSize = 4096;

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Parallel loop over [0, n). Iterations must be independent; results are
/// then identical for any thread count.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        body(static_cast<std::size_t>(i));
}

/// Deterministic parallel sum of f(i) over [0, n). The range is split into
/// fixed-size blocks; each block accumulates serially in index order and the
/// block partials are merged in block order, so the result does not depend
/// on the number of workers.
template <typename F>
double det_sum(std::size_t n, F&& value_at) {
    const std::size_t num_blocks = (n + kBlockSize - 1) / kBlockSize;
    std::vector<double> partial(num_blocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(num_blocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
        const std::size_t hi = std::min(lo + kBlockSize, n);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += value_at(i);
        partial[static_cast<std::size_t>(b)] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

/// Deterministic parallel accumulation of dim-sized contributions.
/// `accumulate(i, acc)` must add record i's contribution into acc[0..dim).
template <typename G>
void det_vec_sum(std::size_t n, std::size_t dim, G&& accumulate, double* out) {
    const std::size_t num_blocks = (n + kBlockSize - 1) / kBlockSize;
    std::vector<double> partial(num_blocks * dim, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(num_blocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
        const std::size_t hi = std::min(lo + kBlockSize, n);
        double* acc = partial.data() + static_cast<std::size_t>(b) * dim;
        for (std::size_t i = lo; i < hi; ++i) accumulate(i, acc);
    }
    for (std::size_t k = 0; k < dim; ++k) out[k] = 0.0;
    for (std::size_t b = 0; b < num_blocks; ++b) {
        const double* acc = partial.data() + b * dim;
        for (std::size_t k = 0; k < dim; ++k) out[k] += acc[k];
    }
}

}  // namespace bhlab::par
