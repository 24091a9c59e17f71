#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "bhlab/index.hpp"
#include "bhlab/types.hpp"

namespace bhlab {

/// Per-query attack statistics: number of injected records in the top-K
/// list, and the rank of the earliest one (0 when none).
struct PerQueryStats {
    std::size_t malicious_count = 0;
    std::size_t first_poisoned_rank = 0;
};

struct MetricsReport {
    std::size_t k = 0;
    double mo_at_k = 0.0;                // mean malicious_count / K
    double asr = 0.0;                    // fraction of queries with a hit
    std::optional<double> mean_fpr;      // over affected queries; absent when asr == 0
    std::vector<PerQueryStats> per_query;
};

/// Mean over queries of |ANN top-K ids  intersect  ground-truth top-K ids| / K.
/// Ground truth is expected to come from the brute-force oracle on the
/// clean database.
double recall_at_k(const std::vector<SearchResult>& ann,
                   const std::vector<SearchResult>& truth, std::size_t k);

/// MO@K / ASR / mean-FPR over result lists, with min-of-empty := 0 for the
/// first poisoned rank.
MetricsReport attack_metrics(const std::vector<SearchResult>& results,
                             const std::unordered_set<RecordId>& poison_ids, std::size_t k);

enum class CentroidScope { Global, ClusterWise };

struct ScopeSpec {
    CentroidScope scope = CentroidScope::Global;
    std::size_t num_clusters = 100;  // ClusterWise only
    std::uint64_t seed = 0;          // k-means seed for ClusterWise
};

struct CdfPoint {
    double distance = 0.0;
    double fraction = 0.0;
};

/// Empirical CDF of distance-to-centroid, sampled at num_points quantiles.
/// Global: distances to the global centroid; ClusterWise: each record's
/// distance to its own cluster centroid, pooled.
std::vector<CdfPoint> distance_to_centroid_cdf(const Corpus& corpus, DistanceMetric metric,
                                               const ScopeSpec& scope, std::size_t num_points);

enum class Population { Corpus, Query };

struct HubnessEntry {
    std::size_t dim = 0;
    std::size_t corpus_size = 0;
    DistanceMetric metric = DistanceMetric::Euclidean;
    CentroidScope scope = CentroidScope::Global;
    Population population = Population::Corpus;
    double probability = 0.0;
    std::size_t samples = 0;
};

/// Fraction of points for which the relevant centroid is strictly closer
/// than every (other) stored vector. Corpus population compares each x_i
/// against min over j != i; Query population compares each query against
/// min over all stored vectors; queries may be null for Corpus population.
/// Under ClusterWise scope the centroid is that of the point's own cluster
/// (corpus) or the query's nearest cluster centroid (query).
HubnessEntry hubness_probability(const Corpus& corpus, const QuerySet* queries,
                                 DistanceMetric metric, const ScopeSpec& scope,
                                 Population population);

struct HubnessGridConfig {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> sizes;
    std::vector<DistanceMetric> metrics;
    std::vector<CentroidScope> scopes;
    std::vector<Population> populations;
    double lambda1 = 1.0;            // power-law spectrum family per dim
    double gamma = 0.0;
    float mean_value = 1.0f;
    std::size_t num_queries = 200;
    std::size_t cluster_target = 100;  // ~vectors per cluster for ClusterWise cells
    std::uint64_t seed = 0;
};

/// Sweeps hubness_probability over (dim x size x metric x scope x
/// population) cells on freshly sampled synthetic corpora. ClusterWise
/// cells use L = max(1, round(n / cluster_target)) clusters.
std::vector<HubnessEntry> hubness_grid(const HubnessGridConfig& config);

const char* to_string(CentroidScope s);
const char* to_string(Population p);

}  // namespace bhlab
