#include "bhlab/clustering.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "bhlab/geometry.hpp"
#include "bhlab/parallel.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

namespace {

/// Working matrix for Lloyd iterations: raw copies under Euclidean,
/// L2-normalized copies under Cosine.
std::vector<float> working_matrix(const Corpus& corpus) {
    std::vector<float> data = corpus.packed();
    if (corpus.metric == DistanceMetric::Cosine) {
        const std::size_t d = corpus.dim;
        par::parallel_for(corpus.size(), [&](std::size_t i) {
            float* row = data.data() + i * d;
            const double n = detail::norm(row, d);
            if (n == 0.0)
                throw std::invalid_argument("kmeans: zero vector under cosine metric");
            for (std::size_t k = 0; k < d; ++k)
                row[k] = static_cast<float>(static_cast<double>(row[k]) / n);
        });
    }
    return data;
}

std::vector<std::vector<float>> plusplus_init(const float* data, std::size_t n, std::size_t d,
                                              std::size_t L, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, 0x6B6D7070ULL));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<float>> centers;
    centers.reserve(L);

    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    const std::size_t c0 = first(rng);
    centers.emplace_back(data + c0 * d, data + (c0 + 1) * d);

    std::vector<double> best_sq(n);
    par::parallel_for(n, [&](std::size_t i) {
        best_sq[i] = detail::squared_l2(data + i * d, centers[0].data(), d);
    });

    std::vector<char> chosen(n, 0);
    chosen[c0] = 1;
    while (centers.size() < L) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += best_sq[i];
        std::size_t pick = n;
        if (total > 0.0) {
            const double r = unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += best_sq[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = n - 1;
        } else {
            // All mass at chosen points (duplicates); take the first unchosen.
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            if (pick == n) pick = 0;
        }
        chosen[pick] = 1;
        centers.emplace_back(data + pick * d, data + (pick + 1) * d);
        const float* c = centers.back().data();
        par::parallel_for(n, [&](std::size_t i) {
            const double sq = detail::squared_l2(data + i * d, c, d);
            if (sq < best_sq[i]) best_sq[i] = sq;
        });
    }
    return centers;
}

}  // namespace

Clustering kmeans(const Corpus& corpus, std::size_t num_clusters, std::uint64_t seed,
                  std::size_t max_iters, double tol) {
    const std::size_t n = corpus.size();
    const std::size_t d = corpus.dim;
    if (num_clusters < 1 || num_clusters > n)
        throw std::invalid_argument("kmeans: L out of range [1, " + std::to_string(n) + "]");
    if (max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be >= 1");
    if (tol < 0.0) throw std::invalid_argument("kmeans: tol must be >= 0");

    const std::vector<float> data = working_matrix(corpus);
    std::vector<std::vector<float>> centers = plusplus_init(data.data(), n, d, num_clusters, seed);

    Clustering result;
    result.num_clusters = num_clusters;
    result.assignments.assign(n, 0);
    result.sizes.assign(num_clusters, 0);

    std::vector<double> point_sq(n);
    std::vector<double> sums(num_clusters * d);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        result.iterations = iter + 1;

        // Assignment: independent per record, ties to the lowest index.
        par::parallel_for(n, [&](std::size_t i) {
            const float* row = data.data() + i * d;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_j = 0;
            for (std::size_t j = 0; j < num_clusters; ++j) {
                const double sq = detail::squared_l2(row, centers[j].data(), d);
                if (sq < best) {
                    best = sq;
                    best_j = static_cast<std::uint32_t>(j);
                }
            }
            result.assignments[i] = best_j;
            point_sq[i] = best;
        });

        const double objective = par::det_sum(n, [&](std::size_t i) { return point_sq[i]; });
        assert(result.objective_history.empty() ||
               objective <= result.objective_history.back() * (1.0 + 1e-12) + 1e-12);
        result.objective_history.push_back(objective);

        std::fill(result.sizes.begin(), result.sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i) ++result.sizes[result.assignments[i]];

        // Repair empty clusters from the farthest point of the largest one.
        for (std::size_t e = 0; e < num_clusters; ++e) {
            while (result.sizes[e] == 0) {
                std::size_t g = 0;
                for (std::size_t j = 1; j < num_clusters; ++j)
                    if (result.sizes[j] > result.sizes[g]) g = j;
                std::size_t far = n;
                double far_sq = -1.0;
                for (std::size_t i = 0; i < n; ++i)
                    if (result.assignments[i] == g && point_sq[i] > far_sq) {
                        far_sq = point_sq[i];
                        far = i;
                    }
                result.assignments[far] = static_cast<std::uint32_t>(e);
                --result.sizes[g];
                ++result.sizes[e];
                point_sq[far] = 0.0;
            }
        }

        // Update: fixed-order accumulation keeps the result independent of
        // the worker count.
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double* acc = sums.data() + result.assignments[i] * d;
            const float* row = data.data() + i * d;
            for (std::size_t k = 0; k < d; ++k) acc[k] += row[k];
        }
        double max_shift_sq = 0.0;
        for (std::size_t j = 0; j < num_clusters; ++j) {
            double shift_sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double c = sums[j * d + k] / static_cast<double>(result.sizes[j]);
                const double delta = c - static_cast<double>(centers[j][k]);
                shift_sq += delta * delta;
                centers[j][k] = static_cast<float>(c);
            }
            max_shift_sq = std::max(max_shift_sq, shift_sq);
        }
        if (std::sqrt(max_shift_sq) < tol) break;
    }

    // Reported centroids are raw-space means of the final assignment.
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* acc = sums.data() + result.assignments[i] * d;
        const auto& row = corpus.records[i].vector;
        for (std::size_t k = 0; k < d; ++k) acc[k] += row[k];
    }
    result.centroids.assign(num_clusters, std::vector<float>(d));
    for (std::size_t j = 0; j < num_clusters; ++j)
        for (std::size_t k = 0; k < d; ++k)
            result.centroids[j][k] =
                static_cast<float>(sums[j * d + k] / static_cast<double>(result.sizes[j]));
    return result;
}

std::size_t assign_to_nearest_centroid(std::span<const float> v, const Clustering& clustering,
                                       DistanceMetric metric) {
    if (clustering.centroids.empty())
        throw std::invalid_argument("assign_to_nearest_centroid: empty clustering");
    if (v.size() != clustering.centroids.front().size())
        throw std::invalid_argument("assign_to_nearest_centroid: dimension mismatch");
    std::size_t best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < clustering.centroids.size(); ++j) {
        const double dist = distance(v, clustering.centroids[j], metric);
        if (dist < best) {
            best = dist;
            best_j = j;
        }
    }
    return best_j;
}

std::string clustering_to_json(const Clustering& clustering, bool include_assignments) {
    nlohmann::json obj;
    obj["L"] = clustering.num_clusters;
    obj["sizes"] = clustering.sizes;
    obj["centroids"] = clustering.centroids;
    if (include_assignments) obj["assignments"] = clustering.assignments;
    return obj.dump();
}

}  // namespace bhlab
