#include "bhlab/clustering.hpp"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "bhlab/geometry.hpp"
#include "bhlab/synthgen.hpp"

using namespace bhlab;

namespace {

Corpus two_blobs(std::size_t per_blob, double separation, std::uint64_t seed,
                 DistanceMetric metric = DistanceMetric::Euclidean) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.0f, 0.1f);
    Corpus corpus;
    corpus.dim = 2;
    corpus.metric = metric;
    for (std::size_t i = 0; i < 2 * per_blob; ++i) {
        const float cx = i < per_blob ? static_cast<float>(-separation)
                                      : static_cast<float>(separation);
        corpus.records.push_back(
            {i, {cx + noise(rng), noise(rng)}, std::nullopt, Provenance::Benign});
    }
    return corpus;
}

}  // namespace

TEST(Kmeans, SingleClusterEqualsCorpusCentroid) {
    const Corpus corpus = two_blobs(50, 10.0, 1);
    const Clustering clusters = kmeans(corpus, 1, 42);
    ASSERT_EQ(clusters.num_clusters, 1u);
    EXPECT_EQ(clusters.sizes[0], corpus.size());
    const auto expected = corpus_centroid(corpus);
    EXPECT_EQ(clusters.centroids[0], expected);
}

TEST(Kmeans, TwoBlobsPureLabels) {
    const Corpus corpus = two_blobs(200, 10.0, 2);
    const Clustering clusters = kmeans(corpus, 2, 7);
    // Label-purity oracle: sign of the first coordinate.
    std::set<std::uint32_t> left_labels, right_labels;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus.records[i].vector[0] < 0.0f)
            left_labels.insert(clusters.assignments[i]);
        else
            right_labels.insert(clusters.assignments[i]);
    }
    EXPECT_EQ(left_labels.size(), 1u);
    EXPECT_EQ(right_labels.size(), 1u);
    EXPECT_NE(*left_labels.begin(), *right_labels.begin());
}

TEST(Kmeans, EveryPointItsOwnCluster) {
    const Corpus corpus = two_blobs(8, 5.0, 3);  // 16 distinct points
    const Clustering clusters = kmeans(corpus, corpus.size(), 9);
    std::set<std::uint32_t> used(clusters.assignments.begin(), clusters.assignments.end());
    EXPECT_EQ(used.size(), corpus.size());  // bijection
    for (std::size_t s : clusters.sizes) EXPECT_EQ(s, 1u);
}

TEST(Kmeans, MonotoneObjective) {
    const auto spec = SpectrumSpec::power_law(8, 1.0, 0.3);
    const Corpus corpus = sample_gaussian_corpus(spec, 2000, 4, Basis::Axis);
    const Clustering clusters = kmeans(corpus, 10, 5);
    for (std::size_t i = 1; i < clusters.objective_history.size(); ++i)
        EXPECT_LE(clusters.objective_history[i],
                  clusters.objective_history[i - 1] * (1.0 + 1e-12) + 1e-9);
}

TEST(Kmeans, Deterministic) {
    const auto spec = SpectrumSpec::isotropic(6, 1.0);
    const Corpus corpus = sample_gaussian_corpus(spec, 500, 6, Basis::Axis);
    const Clustering a = kmeans(corpus, 7, 13);
    const Clustering b = kmeans(corpus, 7, 13);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.centroids, b.centroids);
}

TEST(Kmeans, CentroidConsistencyInvariant) {
    const auto spec = SpectrumSpec::isotropic(4, 2.0);
    for (auto metric : {DistanceMetric::Euclidean, DistanceMetric::Cosine}) {
        Corpus corpus = sample_gaussian_corpus(spec, 800, 8, Basis::Axis, metric);
        for (auto& r : corpus.records) r.vector[0] += 3.0f;  // keep away from zero for cosine
        const Clustering clusters = kmeans(corpus, 5, 3);
        EXPECT_EQ(std::accumulate(clusters.sizes.begin(), clusters.sizes.end(), std::size_t{0}),
                  corpus.size());
        std::vector<std::vector<double>> sums(clusters.num_clusters,
                                              std::vector<double>(corpus.dim, 0.0));
        for (std::size_t i = 0; i < corpus.size(); ++i)
            for (std::size_t k = 0; k < corpus.dim; ++k)
                sums[clusters.assignments[i]][k] += corpus.records[i].vector[k];
        for (std::size_t j = 0; j < clusters.num_clusters; ++j) {
            ASSERT_GT(clusters.sizes[j], 0u);  // no empty cluster
            for (std::size_t k = 0; k < corpus.dim; ++k)
                EXPECT_NEAR(clusters.centroids[j][k],
                            sums[j][k] / static_cast<double>(clusters.sizes[j]), 1e-6);
        }
    }
}

TEST(Kmeans, RangeChecks) {
    const Corpus corpus = two_blobs(5, 1.0, 10);
    EXPECT_THROW(kmeans(corpus, 0, 1), std::invalid_argument);
    EXPECT_THROW(kmeans(corpus, corpus.size() + 1, 1), std::invalid_argument);
    EXPECT_THROW(kmeans(corpus, 2, 1, 0), std::invalid_argument);
    EXPECT_THROW(kmeans(corpus, 2, 1, 10, -1.0), std::invalid_argument);
}

TEST(AssignNearest, ExactCentroidAndTieBreak) {
    Clustering clusters;
    clusters.num_clusters = 2;
    clusters.centroids = {{0.0f, 0.0f}, {2.0f, 0.0f}};
    clusters.sizes = {1, 1};
    const std::vector<float> at_second{2.0f, 0.0f};
    EXPECT_EQ(assign_to_nearest_centroid(at_second, clusters, DistanceMetric::Euclidean), 1u);
    const std::vector<float> midpoint{1.0f, 0.0f};
    EXPECT_EQ(assign_to_nearest_centroid(midpoint, clusters, DistanceMetric::Euclidean), 0u);
}

TEST(AssignNearest, MatchesLinearScan) {
    const auto spec = SpectrumSpec::isotropic(8, 1.0, 1.0f);
    const Corpus corpus = sample_gaussian_corpus(spec, 400, 21, Basis::Axis);
    const Clustering clusters = kmeans(corpus, 12, 22);
    const QuerySet probes = sample_gaussian_queries(spec, 50, 23, Basis::Axis);
    for (auto metric : {DistanceMetric::Euclidean, DistanceMetric::Cosine}) {
        for (const auto& q : probes.queries) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < clusters.num_clusters; ++j) {
                const double d = distance(q, clusters.centroids[j], metric);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            EXPECT_EQ(assign_to_nearest_centroid(q, clusters, metric), best);
        }
    }
}

TEST(AssignNearest, DimensionMismatchThrows) {
    Clustering clusters;
    clusters.num_clusters = 1;
    clusters.centroids = {{0.0f, 0.0f}};
    clusters.sizes = {1};
    const std::vector<float> q{1.0f, 2.0f, 3.0f};
    EXPECT_THROW(assign_to_nearest_centroid(q, clusters, DistanceMetric::Euclidean),
                 std::invalid_argument);
}

TEST(ClusteringJson, ShapeAndOptionalAssignments) {
    const Corpus corpus = two_blobs(20, 4.0, 30);
    const Clustering clusters = kmeans(corpus, 2, 31);
    const std::string without = clustering_to_json(clusters, false);
    EXPECT_EQ(without.find("assignments"), std::string::npos);
    const std::string with = clustering_to_json(clusters, true);
    EXPECT_NE(with.find("assignments"), std::string::npos);
    EXPECT_NE(with.find("\"L\":2"), std::string::npos);
}
