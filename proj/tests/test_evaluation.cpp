#include "bhlab/evaluation.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bhlab/attack.hpp"
#include "bhlab/synthgen.hpp"

using namespace bhlab;

namespace {

SearchResult result_with_ids(std::initializer_list<RecordId> ids) {
    SearchResult r;
    double d = 0.0;
    for (RecordId id : ids) r.hits.push_back({id, d += 0.25});
    return r;
}

}  // namespace

TEST(RecallAtK, IdenticalAndDisjoint) {
    const std::vector<SearchResult> a{result_with_ids({1, 2, 3})};
    const std::vector<SearchResult> b{result_with_ids({4, 5, 6})};
    EXPECT_DOUBLE_EQ(recall_at_k(a, a, 3), 1.0);
    EXPECT_DOUBLE_EQ(recall_at_k(a, b, 3), 0.0);
}

TEST(RecallAtK, PartialOverlap) {
    const std::vector<SearchResult> ann{result_with_ids({1, 2, 3, 4, 5, 6, 7, 8, 9, 10})};
    const std::vector<SearchResult> truth{result_with_ids({1, 2, 3, 4, 5, 90, 91, 92, 93, 94})};
    EXPECT_DOUBLE_EQ(recall_at_k(ann, truth, 10), 0.5);
}

TEST(RecallAtK, LengthMismatchThrows) {
    const std::vector<SearchResult> a{result_with_ids({1})};
    const std::vector<SearchResult> b;
    EXPECT_THROW(recall_at_k(a, b, 1), std::invalid_argument);
}

TEST(AttackMetrics, CleanDatabase) {
    const std::vector<SearchResult> results{result_with_ids({1, 2, 3}),
                                            result_with_ids({4, 5, 6})};
    const MetricsReport report = attack_metrics(results, {}, 3);
    EXPECT_DOUBLE_EQ(report.mo_at_k, 0.0);
    EXPECT_DOUBLE_EQ(report.asr, 0.0);
    EXPECT_FALSE(report.mean_fpr.has_value());
}

TEST(AttackMetrics, EveryTopHitPoisoned) {
    const std::vector<SearchResult> results{result_with_ids({100, 2, 3}),
                                            result_with_ids({101, 5, 6})};
    const MetricsReport report = attack_metrics(results, {100, 101}, 3);
    EXPECT_DOUBLE_EQ(report.asr, 1.0);
    ASSERT_TRUE(report.mean_fpr.has_value());
    EXPECT_DOUBLE_EQ(*report.mean_fpr, 1.0);
}

TEST(AttackMetrics, HandEnumeratedExample) {
    // Query A: poisons at ranks 2 and 5 of 10; query B: none.
    SearchResult a = result_with_ids({1, 100, 3, 4, 101, 6, 7, 8, 9, 10});
    SearchResult b = result_with_ids({11, 12, 13, 14, 15, 16, 17, 18, 19, 20});
    const MetricsReport report = attack_metrics({a, b}, {100, 101}, 10);
    EXPECT_DOUBLE_EQ(report.mo_at_k, 0.10);
    EXPECT_DOUBLE_EQ(report.asr, 0.5);
    ASSERT_TRUE(report.mean_fpr.has_value());
    EXPECT_DOUBLE_EQ(*report.mean_fpr, 2.0);
}

TEST(AttackMetrics, RandomizedHandEnumerationOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 1 + rng() % 10;
        const std::size_t num_queries = 1 + rng() % 8;
        std::unordered_set<RecordId> poison;
        for (int p = 0; p < 5; ++p) poison.insert(rng() % 40);
        std::vector<SearchResult> results;
        for (std::size_t q = 0; q < num_queries; ++q) {
            SearchResult r;
            double d = 0.0;
            const std::size_t len = k == 1 ? 1 : 1 + rng() % k;
            std::unordered_set<RecordId> used;
            while (r.hits.size() < len) {
                const RecordId id = rng() % 40;
                if (used.insert(id).second) r.hits.push_back({id, d += 0.125});
            }
            results.push_back(std::move(r));
        }
        // Independent enumeration.
        double mo = 0.0, fpr_sum = 0.0;
        std::size_t hit_queries = 0;
        for (const auto& r : results) {
            std::size_t count = 0, first = 0;
            for (std::size_t t = 0; t < r.hits.size(); ++t)
                if (poison.count(r.hits[t].id)) {
                    ++count;
                    if (first == 0) first = t + 1;
                }
            mo += static_cast<double>(count) / static_cast<double>(k);
            if (first > 0) {
                ++hit_queries;
                fpr_sum += static_cast<double>(first);
            }
        }
        mo /= static_cast<double>(num_queries);

        const MetricsReport report = attack_metrics(results, poison, k);
        EXPECT_DOUBLE_EQ(report.mo_at_k, mo);
        EXPECT_DOUBLE_EQ(report.asr,
                         static_cast<double>(hit_queries) / static_cast<double>(num_queries));
        if (hit_queries == 0) {
            EXPECT_FALSE(report.mean_fpr.has_value());
        } else {
            ASSERT_TRUE(report.mean_fpr.has_value());
            EXPECT_DOUBLE_EQ(*report.mean_fpr, fpr_sum / static_cast<double>(hit_queries));
            EXPECT_GE(*report.mean_fpr, 1.0);
            EXPECT_LE(*report.mean_fpr, static_cast<double>(k));
        }
        EXPECT_GE(report.mo_at_k, 0.0);
        EXPECT_LE(report.mo_at_k, 1.0);
    }
}

TEST(AttackMetrics, AllIdsPoisonedIdentity) {
    // With every id poisoned, MO@K equals the mean filled-slot fraction and
    // ASR is 1 whenever each query returns at least one hit.
    std::mt19937_64 rng(77);
    std::vector<SearchResult> results;
    std::unordered_set<RecordId> all_ids;
    double filled = 0.0;
    const std::size_t k = 8;
    for (int q = 0; q < 20; ++q) {
        SearchResult r;
        double d = 0.0;
        const std::size_t len = 1 + rng() % k;
        for (std::size_t t = 0; t < len; ++t) {
            const RecordId id = static_cast<RecordId>(q * 100 + t);
            all_ids.insert(id);
            r.hits.push_back({id, d += 0.5});
        }
        filled += static_cast<double>(len) / static_cast<double>(k);
        results.push_back(std::move(r));
    }
    const MetricsReport report = attack_metrics(results, all_ids, k);
    EXPECT_DOUBLE_EQ(report.mo_at_k, filled / 20.0);
    EXPECT_DOUBLE_EQ(report.asr, 1.0);
    ASSERT_TRUE(report.mean_fpr.has_value());
    EXPECT_DOUBLE_EQ(*report.mean_fpr, 1.0);
}

TEST(Cdf, AllRecordsIdentical) {
    Corpus corpus;
    corpus.dim = 2;
    for (RecordId i = 0; i < 5; ++i)
        corpus.records.push_back({i, {1.0f, 2.0f}, std::nullopt, Provenance::Benign});
    const auto cdf =
        distance_to_centroid_cdf(corpus, DistanceMetric::Euclidean, ScopeSpec{}, 10);
    for (const auto& p : cdf) EXPECT_DOUBLE_EQ(p.distance, 0.0);
    EXPECT_DOUBLE_EQ(cdf.back().fraction, 1.0);
}

TEST(Cdf, UnitSquareStepsAtHalfDiagonal) {
    Corpus corpus;
    corpus.dim = 2;
    corpus.records.push_back({0, {0.0f, 0.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back({1, {1.0f, 0.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back({2, {0.0f, 1.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back({3, {1.0f, 1.0f}, std::nullopt, Provenance::Benign});
    const auto cdf =
        distance_to_centroid_cdf(corpus, DistanceMetric::Euclidean, ScopeSpec{}, 4);
    for (const auto& p : cdf) EXPECT_NEAR(p.distance, std::sqrt(2.0) / 2.0, 1e-7);
    EXPECT_DOUBLE_EQ(cdf.back().fraction, 1.0);
}

TEST(Cdf, NonDecreasingAndConsistentWithRadius) {
    const auto spec = SpectrumSpec::power_law(64, 1.0, 0.2);
    const Corpus corpus = sample_gaussian_corpus(spec, 4000, 6, Basis::Axis);
    for (auto metric : {DistanceMetric::Euclidean, DistanceMetric::Cosine}) {
        const auto cdf = distance_to_centroid_cdf(corpus, metric, ScopeSpec{}, 100);
        for (std::size_t i = 1; i < cdf.size(); ++i) {
            EXPECT_LE(cdf[i - 1].distance, cdf[i].distance);
            EXPECT_LE(cdf[i - 1].fraction, cdf[i].fraction);
        }
        EXPECT_DOUBLE_EQ(cdf.back().fraction, 1.0);
        // The CDF leaves zero exactly at the vacant radius.
        const double radius = black_hole_radius(corpus, metric);
        EXPECT_DOUBLE_EQ(cdf.front().distance, radius);
        for (const auto& p : cdf) EXPECT_GE(p.distance, radius);
    }
}

TEST(Cdf, ClusterWiseUsesOwnCentroid) {
    const auto spec = SpectrumSpec::isotropic(16, 1.0);
    const Corpus corpus = sample_gaussian_corpus(spec, 2000, 7, Basis::Axis);
    ScopeSpec scope;
    scope.scope = CentroidScope::ClusterWise;
    scope.num_clusters = 20;
    scope.seed = 3;
    const auto pooled =
        distance_to_centroid_cdf(corpus, DistanceMetric::Euclidean, scope, 50);
    const auto global =
        distance_to_centroid_cdf(corpus, DistanceMetric::Euclidean, ScopeSpec{}, 50);
    // Own-cluster centroids are closer than the global one on average.
    EXPECT_LT(pooled[25].distance, global[25].distance);
}

TEST(Hubness, TwoRecordMidpoint) {
    Corpus corpus;
    corpus.dim = 2;
    corpus.records.push_back({0, {0.0f, 0.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back({1, {4.0f, 0.0f}, std::nullopt, Provenance::Benign});
    const auto entry = hubness_probability(corpus, nullptr, DistanceMetric::Euclidean,
                                           ScopeSpec{}, Population::Corpus);
    EXPECT_DOUBLE_EQ(entry.probability, 1.0);
    EXPECT_EQ(entry.samples, 2u);
}

TEST(Hubness, TriangleSimplexAllHub) {
    // Unit-edge equilateral triangle: centroid distance 1/sqrt(3) < 1.
    Corpus corpus;
    corpus.dim = 2;
    corpus.records.push_back({0, {0.0f, 0.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back({1, {1.0f, 0.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back(
        {2, {0.5f, static_cast<float>(std::sqrt(3.0) / 2.0)}, std::nullopt, Provenance::Benign});
    const auto entry = hubness_probability(corpus, nullptr, DistanceMetric::Euclidean,
                                           ScopeSpec{}, Population::Corpus);
    EXPECT_DOUBLE_EQ(entry.probability, 1.0);
}

TEST(Hubness, TiesCountAsNonHub) {
    // Centroid coincides with a stored point: strict inequality fails for
    // the coincident record's neighbors at equal distance.
    Corpus corpus;
    corpus.dim = 1;
    corpus.records.push_back({0, {-1.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back({1, {0.0f}, std::nullopt, Provenance::Benign});
    corpus.records.push_back({2, {1.0f}, std::nullopt, Provenance::Benign});
    const auto entry = hubness_probability(corpus, nullptr, DistanceMetric::Euclidean,
                                           ScopeSpec{}, Population::Corpus);
    // Point 0: centroid at 0 is distance 1, nearest other (point 1) is 1 ->
    // tie, non-hub. Same for point 2. Point 1 sits on the centroid: 0 < 1
    // never holds strictly... distance 0 < 1 holds.
    EXPECT_DOUBLE_EQ(entry.probability, 1.0 / 3.0);
}

TEST(Hubness, QueryPopulationNeedsQueries) {
    const auto spec = SpectrumSpec::isotropic(8, 1.0);
    const Corpus corpus = sample_gaussian_corpus(spec, 100, 8, Basis::Axis);
    EXPECT_THROW(hubness_probability(corpus, nullptr, DistanceMetric::Euclidean, ScopeSpec{},
                                     Population::Query),
                 std::invalid_argument);
}

TEST(Hubness, HighDimensionalCorpusAndQueriesAgree) {
    const auto spec = SpectrumSpec::isotropic(128, 1.0);
    const Corpus corpus = sample_gaussian_corpus(spec, 1000, 9, Basis::Axis);
    const QuerySet queries = sample_gaussian_queries(spec, 300, 10, Basis::Axis);
    const auto corpus_entry = hubness_probability(corpus, nullptr, DistanceMetric::Euclidean,
                                                  ScopeSpec{}, Population::Corpus);
    const auto query_entry = hubness_probability(corpus, &queries, DistanceMetric::Euclidean,
                                                 ScopeSpec{}, Population::Query);
    EXPECT_GE(corpus_entry.probability, 0.95);
    EXPECT_GE(query_entry.probability, 0.95);
    EXPECT_NEAR(corpus_entry.probability, query_entry.probability, 0.05);
}

TEST(Hubness, ClusterWiseAtLeastGlobalSoft) {
    const auto spec = SpectrumSpec::power_law(96, 1.0, 0.4);
    const Corpus corpus = sample_gaussian_corpus(spec, 3000, 11, Basis::Axis);
    ScopeSpec cluster_scope;
    cluster_scope.scope = CentroidScope::ClusterWise;
    cluster_scope.num_clusters = 30;
    cluster_scope.seed = 4;
    const auto global = hubness_probability(corpus, nullptr, DistanceMetric::Euclidean,
                                            ScopeSpec{}, Population::Corpus);
    const auto clustered = hubness_probability(corpus, nullptr, DistanceMetric::Euclidean,
                                               cluster_scope, Population::Corpus);
    // Empirical trend, asserted softly with slack; flag rather than fail.
    if (clustered.probability + 0.02 < global.probability)
        GTEST_SKIP() << "cluster-wise hubness below global by more than slack: "
                     << clustered.probability << " vs " << global.probability;
    SUCCEED();
}

TEST(HubnessGrid, SingleCellMatchesDirectCall) {
    HubnessGridConfig cfg;
    cfg.dims = {32};
    cfg.sizes = {500};
    cfg.metrics = {DistanceMetric::Euclidean};
    cfg.scopes = {CentroidScope::Global};
    cfg.populations = {Population::Corpus};
    cfg.seed = 12;
    const auto entries = hubness_grid(cfg);
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].dim, 32u);
    EXPECT_EQ(entries[0].corpus_size, 500u);
    EXPECT_GE(entries[0].probability, 0.0);
    EXPECT_LE(entries[0].probability, 1.0);
}

TEST(HubnessGrid, TwoByTwoEmitsFourEntries) {
    HubnessGridConfig cfg;
    cfg.dims = {16, 32};
    cfg.sizes = {200, 400};
    cfg.metrics = {DistanceMetric::Euclidean};
    cfg.scopes = {CentroidScope::Global};
    cfg.populations = {Population::Corpus};
    cfg.seed = 13;
    EXPECT_EQ(hubness_grid(cfg).size(), 4u);
}

TEST(HubnessGrid, GlobalProbabilityDecaysWithSize) {
    HubnessGridConfig cfg;
    cfg.dims = {64};
    cfg.sizes = {100, 1000, 5000};
    cfg.metrics = {DistanceMetric::Euclidean};
    cfg.scopes = {CentroidScope::Global};
    cfg.populations = {Population::Corpus};
    cfg.seed = 14;
    const auto entries = hubness_grid(cfg);
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_GE(entries[0].probability + 0.05, entries[1].probability);
    EXPECT_GE(entries[1].probability + 0.05, entries[2].probability);
}

TEST(HubnessGrid, EmptyAxisThrows) {
    HubnessGridConfig cfg;
    EXPECT_THROW(hubness_grid(cfg), std::invalid_argument);
}
