#include "bhlab/geometry.hpp"

#include <stdexcept>

#include "bhlab/parallel.hpp"

namespace bhlab {

double distance(std::span<const float> a, std::span<const float> b, DistanceMetric metric) {
    if (a.size() != b.size())
        throw std::invalid_argument("distance: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw std::invalid_argument("distance: empty vectors");
    if (metric == DistanceMetric::Euclidean) return detail::l2_dist(a.data(), b.data(), a.size());

    const double na = detail::norm(a.data(), a.size());
    const double nb = detail::norm(b.data(), b.size());
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("distance: cosine undefined for zero vector");
    return detail::cosine_dist_prenorm(a.data(), b.data(), a.size(), na, nb);
}

std::vector<float> centroid(const float* data, std::size_t n, std::size_t dim) {
    if (n == 0) throw std::invalid_argument("centroid: empty collection");
    if (dim == 0) throw std::invalid_argument("centroid: zero dimension");
    // Serial in-order accumulation: every centroid path in the project sums
    // this way, so means computed by different modules agree bitwise.
    std::vector<double> acc(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = data + i * dim;
        for (std::size_t k = 0; k < dim; ++k) acc[k] += row[k];
    }
    std::vector<float> out(dim);
    for (std::size_t k = 0; k < dim; ++k)
        out[k] = static_cast<float>(acc[k] / static_cast<double>(n));
    return out;
}

std::vector<float> centroid(const std::vector<std::vector<float>>& vectors) {
    if (vectors.empty()) throw std::invalid_argument("centroid: empty collection");
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != dim) throw std::invalid_argument("centroid: mixed dimensions");
    std::vector<double> acc(dim, 0.0);
    for (const auto& v : vectors)
        for (std::size_t k = 0; k < dim; ++k) acc[k] += v[k];
    std::vector<float> out(dim);
    for (std::size_t k = 0; k < dim; ++k)
        out[k] = static_cast<float>(acc[k] / static_cast<double>(vectors.size()));
    return out;
}

std::vector<float> corpus_centroid(const Corpus& corpus) {
    if (corpus.empty()) throw std::invalid_argument("corpus_centroid: empty corpus");
    const std::size_t dim = corpus.dim;
    std::vector<double> acc(dim, 0.0);
    for (const auto& r : corpus.records)
        for (std::size_t k = 0; k < dim; ++k) acc[k] += r.vector[k];
    std::vector<float> out(dim);
    for (std::size_t k = 0; k < dim; ++k)
        out[k] = static_cast<float>(acc[k] / static_cast<double>(corpus.size()));
    return out;
}

std::vector<float> l2_normalize(std::span<const float> v) {
    const double n = detail::norm(v.data(), v.size());
    if (n == 0.0) throw std::invalid_argument("l2_normalize: zero vector");
    std::vector<float> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        out[k] = static_cast<float>(static_cast<double>(v[k]) / n);
    return out;
}

double mean_norm(const Corpus& corpus) {
    if (corpus.empty()) throw std::invalid_argument("mean_norm: empty corpus");
    const double total = par::det_sum(corpus.size(), [&](std::size_t i) {
        return detail::norm(corpus.records[i].vector.data(), corpus.dim);
    });
    return total / static_cast<double>(corpus.size());
}

const char* to_string(DistanceMetric m) {
    return m == DistanceMetric::Euclidean ? "euclidean" : "cosine";
}

DistanceMetric metric_from_string(const std::string& s) {
    if (s == "euclidean" || s == "l2") return DistanceMetric::Euclidean;
    if (s == "cosine") return DistanceMetric::Cosine;
    throw std::invalid_argument("unknown distance metric: " + s);
}

const char* to_string(Provenance p) {
    return p == Provenance::Benign ? "benign" : "injected";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "benign") return Provenance::Benign;
    if (s == "injected") return Provenance::Injected;
    throw std::invalid_argument("unknown provenance: " + s);
}

}  // namespace bhlab
