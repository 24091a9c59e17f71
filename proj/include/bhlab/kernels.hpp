#pragma once

#include <cstddef>
#include <vector>

#include "bhlab/types.hpp"

namespace bhlab {

/// One ranked search hit.
struct Hit {
    RecordId id = 0;
    double distance = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Ranked (distance, id) order: the total order used by every search path.
inline bool hit_less(const Hit& a, const Hit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

namespace kernels {

// Data-parallel kernels over packed row-major matrices. Each kernel has a
// serial reference twin (suffix _serial) computing identical values; the
// unit tests assert bitwise agreement and the bench target compares their
// throughput. Per-row results are independent, so the parallel versions are
// deterministic for any thread count.

/// norms[i] = Euclidean norm of row i.
void row_norms(const float* base, std::size_t n, std::size_t dim, double* norms);
void row_norms_serial(const float* base, std::size_t n, std::size_t dim, double* norms);

/// out[i] = metric distance from row i to `query`.
/// For Cosine, `base_norms` must hold row_norms(base) and `query_norm` the
/// query's norm; both are ignored under Euclidean (pass nullptr / 0).
void metric_distances(const float* base, std::size_t n, std::size_t dim,
                      const double* base_norms, const float* query, double query_norm,
                      DistanceMetric metric, double* out);
void metric_distances_serial(const float* base, std::size_t n, std::size_t dim,
                             const double* base_norms, const float* query, double query_norm,
                             DistanceMetric metric, double* out);

/// out[i] = min over j != i of the metric distance between rows i and j.
/// Requires n >= 2. For Cosine, base_norms as above.
void nearest_other_distances(const float* base, std::size_t n, std::size_t dim,
                             const double* base_norms, DistanceMetric metric, double* out);
void nearest_other_distances_serial(const float* base, std::size_t n, std::size_t dim,
                                    const double* base_norms, DistanceMetric metric,
                                    double* out);

/// Smallest-k hits from a distance array in (distance, id) order.
std::vector<Hit> top_k_hits(const double* distances, const RecordId* ids, std::size_t n,
                            std::size_t k);

}  // namespace kernels
}  // namespace bhlab
