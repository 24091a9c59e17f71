#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bhlab/types.hpp"

namespace bhlab {

// Scalar kernels. All accumulation is double regardless of storage precision.
// These are the single source of truth for distance values: every search
// path (flat scan, inverted lists, graph traversal, oracles) evaluates the
// same arithmetic, so ties and exact-equality checks are well defined.

namespace detail {

inline double squared_l2(const float* a, const float* b, std::size_t d) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t main = d - d % 4;
    std::size_t k = 0;
    for (; k < main; k += 4) {
        const double d0 = static_cast<double>(a[k]) - b[k];
        const double d1 = static_cast<double>(a[k + 1]) - b[k + 1];
        const double d2 = static_cast<double>(a[k + 2]) - b[k + 2];
        const double d3 = static_cast<double>(a[k + 3]) - b[k + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; k < d; ++k) {
        const double dd = static_cast<double>(a[k]) - b[k];
        s0 += dd * dd;
    }
    return (s0 + s1) + (s2 + s3);
}

inline double dot(const float* a, const float* b, std::size_t d) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t main = d - d % 4;
    std::size_t k = 0;
    for (; k < main; k += 4) {
        s0 += static_cast<double>(a[k]) * b[k];
        s1 += static_cast<double>(a[k + 1]) * b[k + 1];
        s2 += static_cast<double>(a[k + 2]) * b[k + 2];
        s3 += static_cast<double>(a[k + 3]) * b[k + 3];
    }
    for (; k < d; ++k) s0 += static_cast<double>(a[k]) * b[k];
    return (s0 + s1) + (s2 + s3);
}

inline double norm(const float* a, std::size_t d) { return std::sqrt(dot(a, a, d)); }

inline double l2_dist(const float* a, const float* b, std::size_t d) {
    return std::sqrt(squared_l2(a, b, d));
}

/// Cosine distance with both norms precomputed via detail::norm.
inline double cosine_dist_prenorm(const float* a, const float* b, std::size_t d,
                                  double norm_a, double norm_b) {
    return 1.0 - dot(a, b, d) / (norm_a * norm_b);
}

inline double cosine_dist(const float* a, const float* b, std::size_t d) {
    return cosine_dist_prenorm(a, b, d, norm(a, d), norm(b, d));
}

inline double metric_dist(const float* a, const float* b, std::size_t d, DistanceMetric m) {
    return m == DistanceMetric::Euclidean ? l2_dist(a, b, d) : cosine_dist(a, b, d);
}

}  // namespace detail

/// Metric distance between two vectors.
/// Throws on dimension mismatch, and on zero vectors under Cosine.
double distance(std::span<const float> a, std::span<const float> b, DistanceMetric metric);

/// Component-wise arithmetic mean of a nonempty, uniform-dimension set,
/// accumulated in double. Packed row-major input.
std::vector<float> centroid(const float* data, std::size_t n, std::size_t dim);
std::vector<float> centroid(const std::vector<std::vector<float>>& vectors);
std::vector<float> corpus_centroid(const Corpus& corpus);

/// Unit-norm copy of v. Throws on the zero vector.
std::vector<float> l2_normalize(std::span<const float> v);

/// Mean Euclidean norm over all records (used for the norm-relative
/// perturbation scale default).
double mean_norm(const Corpus& corpus);

}  // namespace bhlab
