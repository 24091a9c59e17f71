#include "bhlab/kernels.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "bhlab/geometry.hpp"
#include "bhlab/parallel.hpp"

namespace bhlab::kernels {

namespace {

inline double row_distance(const float* base, std::size_t dim, const double* base_norms,
                           const float* query, double query_norm, DistanceMetric metric,
                           std::size_t i) {
    const float* row = base + i * dim;
    if (metric == DistanceMetric::Euclidean) return detail::l2_dist(row, query, dim);
    return detail::cosine_dist_prenorm(row, query, dim, base_norms[i], query_norm);
}

inline double nearest_other(const float* base, std::size_t n, std::size_t dim,
                            const double* base_norms, DistanceMetric metric, std::size_t i) {
    const float* row = base + i * dim;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d =
            metric == DistanceMetric::Euclidean
                ? detail::l2_dist(row, base + j * dim, dim)
                : detail::cosine_dist_prenorm(row, base + j * dim, dim, base_norms[i],
                                              base_norms[j]);
        if (d < best) best = d;
    }
    return best;
}

}  // namespace

void row_norms(const float* base, std::size_t n, std::size_t dim, double* norms) {
    par::parallel_for(n, [&](std::size_t i) { norms[i] = detail::norm(base + i * dim, dim); });
}

void row_norms_serial(const float* base, std::size_t n, std::size_t dim, double* norms) {
    for (std::size_t i = 0; i < n; ++i) norms[i] = detail::norm(base + i * dim, dim);
}

void metric_distances(const float* base, std::size_t n, std::size_t dim,
                      const double* base_norms, const float* query, double query_norm,
                      DistanceMetric metric, double* out) {
    par::parallel_for(n, [&](std::size_t i) {
        out[i] = row_distance(base, dim, base_norms, query, query_norm, metric, i);
    });
}

void metric_distances_serial(const float* base, std::size_t n, std::size_t dim,
                             const double* base_norms, const float* query, double query_norm,
                             DistanceMetric metric, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = row_distance(base, dim, base_norms, query, query_norm, metric, i);
}

void nearest_other_distances(const float* base, std::size_t n, std::size_t dim,
                             const double* base_norms, DistanceMetric metric, double* out) {
    if (n < 2) throw std::invalid_argument("nearest_other_distances: need at least 2 rows");
    par::parallel_for(
        n, [&](std::size_t i) { out[i] = nearest_other(base, n, dim, base_norms, metric, i); });
}

void nearest_other_distances_serial(const float* base, std::size_t n, std::size_t dim,
                                    const double* base_norms, DistanceMetric metric,
                                    double* out) {
    if (n < 2) throw std::invalid_argument("nearest_other_distances: need at least 2 rows");
    for (std::size_t i = 0; i < n; ++i)
        out[i] = nearest_other(base, n, dim, base_norms, metric, i);
}

std::vector<Hit> top_k_hits(const double* distances, const RecordId* ids, std::size_t n,
                            std::size_t k) {
    k = std::min(k, n);
    std::vector<Hit> hits(n);
    for (std::size_t i = 0; i < n; ++i) hits[i] = Hit{ids[i], distances[i]};
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(),
                      hit_less);
    hits.resize(k);
    return hits;
}

}  // namespace bhlab::kernels
