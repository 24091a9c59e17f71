// The OpenMP kernels must agree bitwise with their serial reference
// implementations, and the top-k selection must honor the (distance, id)
// total order.

#include "bhlab/kernels.hpp"

#include <random>

#include <gtest/gtest.h>

#include "bhlab/geometry.hpp"

using namespace bhlab;

namespace {

std::vector<float> random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<float> data(n * dim);
    for (auto& x : data) x = normal(rng);
    return data;
}

}  // namespace

TEST(Kernels, RowNormsMatchesSerial) {
    const std::size_t n = 5000, dim = 37;
    const auto base = random_matrix(n, dim, 1);
    std::vector<double> par(n), ser(n);
    kernels::row_norms(base.data(), n, dim, par.data());
    kernels::row_norms_serial(base.data(), n, dim, ser.data());
    EXPECT_EQ(par, ser);
}

TEST(Kernels, MetricDistancesMatchesSerial) {
    const std::size_t n = 4097, dim = 24;  // crosses a block boundary
    const auto base = random_matrix(n, dim, 2);
    const auto query = random_matrix(1, dim, 3);
    std::vector<double> norms(n);
    kernels::row_norms_serial(base.data(), n, dim, norms.data());
    const double qn = detail::norm(query.data(), dim);

    for (auto metric : {DistanceMetric::Euclidean, DistanceMetric::Cosine}) {
        std::vector<double> par(n), ser(n);
        kernels::metric_distances(base.data(), n, dim, norms.data(), query.data(), qn, metric,
                                  par.data());
        kernels::metric_distances_serial(base.data(), n, dim, norms.data(), query.data(), qn,
                                         metric, ser.data());
        EXPECT_EQ(par, ser);
    }
}

TEST(Kernels, MetricDistancesMatchesScalarDistance) {
    const std::size_t n = 64, dim = 19;
    const auto base = random_matrix(n, dim, 4);
    const auto query = random_matrix(1, dim, 5);
    std::vector<double> norms(n);
    kernels::row_norms_serial(base.data(), n, dim, norms.data());
    const double qn = detail::norm(query.data(), dim);

    for (auto metric : {DistanceMetric::Euclidean, DistanceMetric::Cosine}) {
        std::vector<double> dists(n);
        kernels::metric_distances(base.data(), n, dim, norms.data(), query.data(), qn, metric,
                                  dists.data());
        for (std::size_t i = 0; i < n; ++i) {
            const std::span<const float> row(base.data() + i * dim, dim);
            const std::span<const float> q(query.data(), dim);
            EXPECT_DOUBLE_EQ(dists[i], distance(row, q, metric));
        }
    }
}

TEST(Kernels, NearestOtherMatchesSerial) {
    const std::size_t n = 600, dim = 16;
    const auto base = random_matrix(n, dim, 6);
    std::vector<double> norms(n);
    kernels::row_norms_serial(base.data(), n, dim, norms.data());
    for (auto metric : {DistanceMetric::Euclidean, DistanceMetric::Cosine}) {
        std::vector<double> par(n), ser(n);
        kernels::nearest_other_distances(base.data(), n, dim, norms.data(), metric, par.data());
        kernels::nearest_other_distances_serial(base.data(), n, dim, norms.data(), metric,
                                                ser.data());
        EXPECT_EQ(par, ser);
    }
}

TEST(Kernels, NearestOtherBruteForceCheck) {
    const std::size_t n = 80, dim = 8;
    const auto base = random_matrix(n, dim, 7);
    std::vector<double> out(n);
    kernels::nearest_other_distances(base.data(), n, dim, nullptr, DistanceMetric::Euclidean,
                                     out.data());
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const std::span<const float> a(base.data() + i * dim, dim);
            const std::span<const float> b(base.data() + j * dim, dim);
            best = std::min(best, distance(a, b, DistanceMetric::Euclidean));
        }
        EXPECT_DOUBLE_EQ(out[i], best);
    }
}

TEST(Kernels, TopKOrderAndTieBreak) {
    const std::vector<double> dists{0.5, 0.25, 0.5, 0.1, 0.25};
    const std::vector<RecordId> ids{10, 7, 3, 99, 2};
    const auto hits = kernels::top_k_hits(dists.data(), ids.data(), dists.size(), 4);
    ASSERT_EQ(hits.size(), 4u);
    EXPECT_EQ(hits[0].id, 99u);  // 0.1
    EXPECT_EQ(hits[1].id, 2u);   // 0.25, lower id first
    EXPECT_EQ(hits[2].id, 7u);   // 0.25
    EXPECT_EQ(hits[3].id, 3u);   // 0.5, lower id first
}

TEST(Kernels, TopKClampsToN) {
    const std::vector<double> dists{1.0, 2.0};
    const std::vector<RecordId> ids{0, 1};
    EXPECT_EQ(kernels::top_k_hits(dists.data(), ids.data(), 2, 10).size(), 2u);
}

TEST(Kernels, NearestOtherRejectsSingleRow) {
    const auto base = random_matrix(1, 4, 8);
    std::vector<double> out(1);
    EXPECT_THROW(kernels::nearest_other_distances(base.data(), 1, 4, nullptr,
                                                  DistanceMetric::Euclidean, out.data()),
                 std::invalid_argument);
}
