#include "bhlab/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "bhlab/geometry.hpp"
#include "bhlab/parallel.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

namespace {

std::string instantiate_payload(const std::string& templ, const std::string& cluster_label) {
    std::string out = templ;
    const std::string placeholder = "{cluster}";
    std::size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
        out.replace(pos, placeholder.size(), cluster_label);
        pos += cluster_label.size();
    }
    return out;
}

void require_all_benign(const Corpus& corpus, const char* where) {
    for (const auto& r : corpus.records)
        if (r.provenance != Provenance::Benign)
            throw std::invalid_argument(std::string(where) + ": corpus already poisoned");
}

/// One poison draw: target centroid plus N(0, sigma^2 I). The noise stream
/// is keyed by (seed, centroid index, draw index) so per-cluster injection
/// is order-independent, and Global reproduces ClusterWise with L=1.
std::vector<float> poison_vector(const std::vector<float>& center, double sigma,
                                 std::uint64_t seed, std::uint64_t centroid_index,
                                 std::uint64_t draw_index) {
    std::vector<float> v(center.size());
    std::mt19937_64 rng(derive_seed(seed, centroid_index, draw_index + 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < center.size(); ++k)
        v[k] = static_cast<float>(static_cast<double>(center[k]) + sigma * normal(rng));
    return v;
}

}  // namespace

void AttackConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("attack: alpha must be in (0, 1)");
    if (sigma && *sigma < 0.0) throw std::invalid_argument("attack: sigma must be >= 0");
    if (mode == Mode::ClusterWise && num_clusters < 1)
        throw std::invalid_argument("attack: L must be >= 1");
}

double default_sigma(const Corpus& corpus) { return 1e-3 * mean_norm(corpus); }

AttackResult global_centroid_attack(const Corpus& corpus, const AttackConfig& config) {
    config.validate();
    if (config.mode != AttackConfig::Mode::Global)
        throw std::invalid_argument("global_centroid_attack: config mode mismatch");
    require_all_benign(corpus, "global_centroid_attack");

    const std::size_t n = corpus.size();
    const std::size_t budget = static_cast<std::size_t>(
        std::floor(config.alpha * static_cast<double>(n)));

    AttackResult result;
    result.corpus = corpus;
    result.sigma_used = config.sigma.value_or(default_sigma(corpus));
    if (budget == 0) {
        result.zero_injection = true;
        return result;
    }

    const std::vector<float> center = corpus_centroid(corpus);
    const std::string payload = instantiate_payload(config.payload_template, "global");
    RecordId next_id = corpus.max_id() + 1;
    result.corpus.records.reserve(n + budget);
    for (std::size_t j = 0; j < budget; ++j)
        result.corpus.records.push_back(
            Record{next_id++, poison_vector(center, result.sigma_used, config.seed, 0, j),
                   payload, Provenance::Injected});
    result.injected = budget;
    return result;
}

AttackResult cluster_wise_attack(const Corpus& corpus, const AttackConfig& config) {
    config.validate();
    if (config.mode != AttackConfig::Mode::ClusterWise)
        throw std::invalid_argument("cluster_wise_attack: config mode mismatch");
    require_all_benign(corpus, "cluster_wise_attack");
    if (config.num_clusters > corpus.size())
        throw std::invalid_argument("cluster_wise_attack: L exceeds corpus size");

    const std::size_t n = corpus.size();
    const std::size_t budget = static_cast<std::size_t>(
        std::floor(config.alpha * static_cast<double>(n)));

    AttackResult result;
    result.corpus = corpus;
    result.sigma_used = config.sigma.value_or(default_sigma(corpus));
    if (budget == 0) {
        result.zero_injection = true;
        return result;
    }

    const Clustering clusters = kmeans(corpus, config.num_clusters, config.seed);
    RecordId next_id = corpus.max_id() + 1;
    for (std::size_t j = 0; j < clusters.num_clusters; ++j) {
        const std::size_t share = static_cast<std::size_t>(std::floor(
            static_cast<double>(budget) * static_cast<double>(clusters.sizes[j]) /
            static_cast<double>(n)));
        const std::string payload =
            instantiate_payload(config.payload_template, std::to_string(j));
        for (std::size_t i = 0; i < share; ++i)
            result.corpus.records.push_back(
                Record{next_id++,
                       poison_vector(clusters.centroids[j], result.sigma_used, config.seed, j, i),
                       payload, Provenance::Injected});
        result.injected += share;
    }
    result.zero_injection = result.injected == 0;
    return result;
}

double black_hole_radius(const Corpus& corpus, DistanceMetric metric) {
    if (corpus.empty()) throw std::invalid_argument("black_hole_radius: empty corpus");
    const std::vector<float> center = corpus_centroid(corpus);
    std::vector<double> dists(corpus.size());
    par::parallel_for(corpus.size(), [&](std::size_t i) {
        dists[i] = distance(corpus.records[i].vector, center, metric);
    });
    return *std::min_element(dists.begin(), dists.end());
}

std::vector<double> black_hole_radius_per_cluster(const Corpus& corpus,
                                                  const Clustering& clustering,
                                                  DistanceMetric metric) {
    if (corpus.size() != clustering.assignments.size())
        throw std::invalid_argument("black_hole_radius_per_cluster: clustering/corpus mismatch");
    std::vector<double> radius(clustering.num_clusters,
                               std::numeric_limits<double>::infinity());
    std::vector<double> dists(corpus.size());
    par::parallel_for(corpus.size(), [&](std::size_t i) {
        dists[i] = distance(corpus.records[i].vector,
                            clustering.centroids[clustering.assignments[i]], metric);
    });
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto& r = radius[clustering.assignments[i]];
        r = std::min(r, dists[i]);
    }
    return radius;
}

}  // namespace bhlab
