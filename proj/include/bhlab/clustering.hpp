#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bhlab/types.hpp"

namespace bhlab {

/// A k-means partition. Centroids are arithmetic means of the ORIGINAL
/// vectors of each cluster, even when clustering ran on normalized copies
/// (Cosine corpora).
struct Clustering {
    std::size_t num_clusters = 0;
    std::vector<std::uint32_t> assignments;    // per record, in [0, num_clusters)
    std::vector<std::vector<float>> centroids; // raw-space means
    std::vector<std::size_t> sizes;
    std::vector<double> objective_history;     // working-space SSE per Lloyd iteration
    std::size_t iterations = 0;
};

/// Lloyd's k-means with k-means++ initialization, deterministic per seed.
/// Clustering always runs in Euclidean space; Cosine corpora are clustered
/// on L2-normalized copies. Empty clusters are repaired by re-seeding from
/// the farthest point of the largest cluster. Stops when the max centroid
/// shift drops below tol or after max_iters.
Clustering kmeans(const Corpus& corpus, std::size_t num_clusters, std::uint64_t seed,
                  std::size_t max_iters = 100, double tol = 1e-4);

/// Index of the nearest centroid under the given metric; ties break to the
/// lowest index.
std::size_t assign_to_nearest_centroid(std::span<const float> v, const Clustering& clustering,
                                       DistanceMetric metric);

/// {"L":, "sizes":, "centroids":, "assignments"?} (assignments optional).
std::string clustering_to_json(const Clustering& clustering, bool include_assignments);

}  // namespace bhlab
