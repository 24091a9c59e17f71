#include "bhlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bhlab/clustering.hpp"
#include "bhlab/geometry.hpp"
#include "bhlab/kernels.hpp"
#include "bhlab/parallel.hpp"
#include "bhlab/rng.hpp"
#include "bhlab/synthgen.hpp"

namespace bhlab {

double recall_at_k(const std::vector<SearchResult>& ann,
                   const std::vector<SearchResult>& truth, std::size_t k) {
    if (ann.size() != truth.size())
        throw std::invalid_argument("recall_at_k: result list length mismatch");
    if (ann.empty()) throw std::invalid_argument("recall_at_k: no queries");
    double total = 0.0;
    for (std::size_t q = 0; q < ann.size(); ++q) {
        std::unordered_set<RecordId> truth_ids;
        for (const auto& h : truth[q].hits) truth_ids.insert(h.id);
        std::size_t overlap = 0;
        for (const auto& h : ann[q].hits) overlap += truth_ids.count(h.id);
        total += static_cast<double>(overlap) / static_cast<double>(k);
    }
    return total / static_cast<double>(ann.size());
}

MetricsReport attack_metrics(const std::vector<SearchResult>& results,
                             const std::unordered_set<RecordId>& poison_ids, std::size_t k) {
    MetricsReport report;
    report.k = k;
    if (results.empty()) throw std::invalid_argument("attack_metrics: no queries");

    double mo_sum = 0.0;
    std::size_t affected = 0;
    double fpr_sum = 0.0;
    report.per_query.reserve(results.size());
    for (const auto& r : results) {
        if (r.hits.size() > k)
            throw std::invalid_argument("attack_metrics: result longer than K");
        PerQueryStats stats;
        for (std::size_t t = 0; t < r.hits.size(); ++t) {
            if (poison_ids.count(r.hits[t].id)) {
                ++stats.malicious_count;
                if (stats.first_poisoned_rank == 0) stats.first_poisoned_rank = t + 1;
            }
        }
        mo_sum += static_cast<double>(stats.malicious_count) / static_cast<double>(k);
        if (stats.first_poisoned_rank > 0) {
            ++affected;
            fpr_sum += static_cast<double>(stats.first_poisoned_rank);
        }
        report.per_query.push_back(stats);
    }
    report.mo_at_k = mo_sum / static_cast<double>(results.size());
    report.asr = static_cast<double>(affected) / static_cast<double>(results.size());
    if (affected > 0) report.mean_fpr = fpr_sum / static_cast<double>(affected);
    return report;
}

namespace {

std::vector<double> centroid_distances(const Corpus& corpus, DistanceMetric metric,
                                       const ScopeSpec& scope) {
    std::vector<double> dists(corpus.size());
    if (scope.scope == CentroidScope::Global) {
        const std::vector<float> center = corpus_centroid(corpus);
        par::parallel_for(corpus.size(), [&](std::size_t i) {
            dists[i] = distance(corpus.records[i].vector, center, metric);
        });
    } else {
        const Clustering clusters =
            kmeans(corpus, scope.num_clusters, scope.seed);
        par::parallel_for(corpus.size(), [&](std::size_t i) {
            dists[i] = distance(corpus.records[i].vector,
                                clusters.centroids[clusters.assignments[i]], metric);
        });
    }
    return dists;
}

}  // namespace

std::vector<CdfPoint> distance_to_centroid_cdf(const Corpus& corpus, DistanceMetric metric,
                                               const ScopeSpec& scope, std::size_t num_points) {
    if (corpus.empty()) throw std::invalid_argument("distance_to_centroid_cdf: empty corpus");
    if (num_points < 1)
        throw std::invalid_argument("distance_to_centroid_cdf: num_points must be >= 1");

    std::vector<double> dists = centroid_distances(corpus, metric, scope);
    std::sort(dists.begin(), dists.end());

    // Quantile sample anchored at both ends: the first point is the minimum
    // distance (exactly where the CDF leaves zero) and the last is the
    // maximum (fraction 1).
    const std::size_t n = dists.size();
    std::vector<CdfPoint> cdf;
    cdf.reserve(num_points);
    if (num_points == 1) {
        cdf.push_back(CdfPoint{dists.back(), 1.0});
        return cdf;
    }
    for (std::size_t p = 0; p < num_points; ++p) {
        const std::size_t idx = p * (n - 1) / (num_points - 1);
        cdf.push_back(CdfPoint{dists[idx], static_cast<double>(idx + 1) / static_cast<double>(n)});
    }
    return cdf;
}

HubnessEntry hubness_probability(const Corpus& corpus, const QuerySet* queries,
                                 DistanceMetric metric, const ScopeSpec& scope,
                                 Population population) {
    if (corpus.size() < 2)
        throw std::invalid_argument("hubness_probability: need at least 2 records");
    if (population == Population::Query && (queries == nullptr || queries->empty()))
        throw std::invalid_argument("hubness_probability: query population needs queries");
    if (population == Population::Query && queries->dim != corpus.dim)
        throw std::invalid_argument("hubness_probability: query dimension mismatch");

    const std::size_t n = corpus.size();
    const std::size_t d = corpus.dim;
    const std::vector<float> base = corpus.packed();
    std::vector<double> base_norms;
    if (metric == DistanceMetric::Cosine) {
        base_norms.resize(n);
        kernels::row_norms(base.data(), n, d, base_norms.data());
    }

    // Distance from each probe point to its scope centroid.
    std::optional<Clustering> clusters;
    std::vector<float> global_center;
    if (scope.scope == CentroidScope::ClusterWise)
        clusters = kmeans(corpus, scope.num_clusters, scope.seed);
    else
        global_center = corpus_centroid(corpus);

    HubnessEntry entry;
    entry.dim = d;
    entry.corpus_size = n;
    entry.metric = metric;
    entry.scope = scope.scope;
    entry.population = population;

    std::size_t hubs = 0;
    if (population == Population::Corpus) {
        std::vector<double> nearest(n);
        kernels::nearest_other_distances(base.data(), n, d,
                                         base_norms.empty() ? nullptr : base_norms.data(),
                                         metric, nearest.data());
        std::vector<std::uint8_t> is_hub(n, 0);
        par::parallel_for(n, [&](std::size_t i) {
            const auto& center = clusters ? clusters->centroids[clusters->assignments[i]]
                                          : global_center;
            const double to_center = distance(corpus.records[i].vector, center, metric);
            is_hub[i] = to_center < nearest[i] ? 1 : 0;  // ties are non-hub events
        });
        for (std::size_t i = 0; i < n; ++i) hubs += is_hub[i];
        entry.samples = n;
    } else {
        const std::size_t m = queries->size();
        std::vector<std::uint8_t> is_hub(m, 0);
        std::vector<double> dists(n);
        for (std::size_t qi = 0; qi < m; ++qi) {
            const auto& q = queries->queries[qi];
            const double qn =
                metric == DistanceMetric::Cosine ? detail::norm(q.data(), d) : 0.0;
            kernels::metric_distances(base.data(), n, d,
                                      base_norms.empty() ? nullptr : base_norms.data(),
                                      q.data(), qn, metric, dists.data());
            double nearest = dists[0];
            for (std::size_t i = 1; i < n; ++i) nearest = std::min(nearest, dists[i]);
            const auto& center =
                clusters ? clusters->centroids[assign_to_nearest_centroid(q, *clusters, metric)]
                         : global_center;
            const double to_center = distance(q, center, metric);
            is_hub[qi] = to_center < nearest ? 1 : 0;
        }
        for (std::size_t qi = 0; qi < m; ++qi) hubs += is_hub[qi];
        entry.samples = m;
    }
    entry.probability = static_cast<double>(hubs) / static_cast<double>(entry.samples);
    return entry;
}

std::vector<HubnessEntry> hubness_grid(const HubnessGridConfig& config) {
    if (config.dims.empty() || config.sizes.empty() || config.metrics.empty() ||
        config.scopes.empty() || config.populations.empty())
        throw std::invalid_argument("hubness_grid: empty sweep axis");

    std::vector<HubnessEntry> entries;
    for (std::size_t di = 0; di < config.dims.size(); ++di) {
        const std::size_t dim = config.dims[di];
        const SpectrumSpec spec =
            SpectrumSpec::power_law(dim, config.lambda1, config.gamma, config.mean_value);
        for (std::size_t si = 0; si < config.sizes.size(); ++si) {
            const std::size_t n = config.sizes[si];
            const Corpus corpus = sample_gaussian_corpus(
                spec, n, derive_seed(config.seed, di, si + 1), Basis::Axis);
            const QuerySet queries = sample_gaussian_queries(
                spec, config.num_queries, derive_seed(config.seed, di, (si + 1) * 7919),
                Basis::Axis);
            for (DistanceMetric metric : config.metrics) {
                for (CentroidScope scope : config.scopes) {
                    ScopeSpec ss;
                    ss.scope = scope;
                    ss.num_clusters = std::max<std::size_t>(
                        1, (n + config.cluster_target / 2) / config.cluster_target);
                    ss.seed = derive_seed(config.seed, 0x4C, di * 131 + si);
                    for (Population pop : config.populations)
                        entries.push_back(
                            hubness_probability(corpus, &queries, metric, ss, pop));
                }
            }
        }
    }
    return entries;
}

const char* to_string(CentroidScope s) {
    return s == CentroidScope::Global ? "global" : "cluster_wise";
}

const char* to_string(Population p) { return p == Population::Corpus ? "corpus" : "query"; }

}  // namespace bhlab
