#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bhlab/clustering.hpp"
#include "bhlab/types.hpp"

namespace bhlab {

/// Poisoning configuration. The perturbation scale defaults to
/// 1e-3 x (mean Euclidean norm of the corpus) when unset, keeping the
/// injected points inside the vacant centroid region across datasets.
struct AttackConfig {
    enum class Mode { Global, ClusterWise };
    Mode mode = Mode::ClusterWise;
    std::size_t num_clusters = 100;          // L, cluster-wise only
    double alpha = 0.01;                     // poisoning rate in (0, 1)
    std::optional<double> sigma;             // perturbation scale, >= 0
    std::uint64_t seed = 0;
    std::string payload_template = "injected payload {cluster}";

    void validate() const;
};

struct AttackResult {
    Corpus corpus;               // V' = V union V_poison
    std::size_t injected = 0;    // |V_poison|
    double sigma_used = 0.0;
    bool zero_injection = false; // floor(alpha * N) == 0
};

/// Injects floor(alpha*N) records at the global centroid plus Gaussian
/// noise of scale sigma. Benign records are untouched; injected records get
/// ids above the benign maximum and Injected provenance.
AttackResult global_centroid_attack(const Corpus& corpus, const AttackConfig& config);

/// Partitions the corpus into L clusters and injects
/// floor(M * |C_j| / N) records at each cluster centroid. Rounding loss is
/// kept (no budget redistribution).
AttackResult cluster_wise_attack(const Corpus& corpus, const AttackConfig& config);

double default_sigma(const Corpus& corpus);

/// Minimum distance from the global centroid to any corpus vector: the
/// radius of the empirically empty region around the centroid.
double black_hole_radius(const Corpus& corpus, DistanceMetric metric);

/// Per-cluster radii: min distance from each cluster centroid to the
/// vectors assigned to it.
std::vector<double> black_hole_radius_per_cluster(const Corpus& corpus,
                                                  const Clustering& clustering,
                                                  DistanceMetric metric);

}  // namespace bhlab
