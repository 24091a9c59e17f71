#define EIGEN_DONT_PARALLELIZE

#include "bhlab/synthgen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "bhlab/parallel.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

namespace {

constexpr std::size_t kMaterializeDimLimit = 2048;
constexpr std::uint64_t kRotationStream = 0x526F7461ULL;

Eigen::MatrixXd random_rotation(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, kRotationStream));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the sign convention so the rotation is unique for the seed.
    for (Eigen::Index c = 0; c < q.cols(); ++c)
        if (r(c, c) < 0) q.col(c) = -q.col(c);
    return q;
}

std::vector<float> draw_record(const SpectrumSpec& spec, const Eigen::MatrixXd* rotation,
                               const std::vector<double>& sigma, std::uint64_t seed,
                               std::uint64_t index) {
    const std::size_t d = spec.dim;
    std::mt19937_64 rng(derive_seed(seed, index));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(d);
    for (std::size_t k = 0; k < d; ++k) z[k] = sigma[k] * normal(rng);

    std::vector<float> out(d);
    if (rotation == nullptr) {
        for (std::size_t k = 0; k < d; ++k)
            out[k] = static_cast<float>(static_cast<double>(spec.mean[k]) + z[k]);
    } else {
        for (std::size_t r = 0; r < d; ++r) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                acc += (*rotation)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) * z[k];
            out[r] = static_cast<float>(static_cast<double>(spec.mean[r]) + acc);
        }
    }
    return out;
}

/// Largest eigenvalue of the implicit sample covariance operator
/// v -> (1/(n-1)) * sum_i y_i (y_i . v), where y_i are the centered rows.
double power_iteration_l_op(const std::vector<double>& centered, std::size_t n, std::size_t d,
                            double rel_tol, std::size_t max_iters) {
    std::mt19937_64 rng(0x101U);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(d);
    for (auto& x : v) x = normal(rng);

    double lambda = 0.0;
    std::vector<double> w(d);
    std::vector<double> proj(n);
    for (std::size_t it = 0; it < max_iters; ++it) {
        par::parallel_for(n, [&](std::size_t i) {
            const double* y = centered.data() + i * d;
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += y[k] * v[k];
            proj[i] = acc;
        });
        par::det_vec_sum(
            n, d,
            [&](std::size_t i, double* acc) {
                const double* y = centered.data() + i * d;
                for (std::size_t k = 0; k < d; ++k) acc[k] += proj[i] * y[k];
            },
            w.data());
        double norm_w = 0.0, rayleigh = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            w[k] /= static_cast<double>(n - 1);
            norm_w += w[k] * w[k];
            rayleigh += w[k] * v[k];
        }
        norm_w = std::sqrt(norm_w);
        if (norm_w == 0.0) return 0.0;
        for (std::size_t k = 0; k < d; ++k) v[k] = w[k] / norm_w;
        if (std::abs(rayleigh - lambda) <= rel_tol * std::abs(rayleigh)) return rayleigh;
        lambda = rayleigh;
    }
    return lambda;
}

}  // namespace

void SpectrumSpec::validate() const {
    if (dim == 0) throw std::invalid_argument("spectrum: dim must be positive");
    if (eigenvalues.size() != dim)
        throw std::invalid_argument("spectrum: eigenvalue count != dim");
    if (mean.size() != dim) throw std::invalid_argument("spectrum: mean length != dim");
    double prev = std::numeric_limits<double>::infinity();
    bool any_positive = false;
    for (double l : eigenvalues) {
        if (!(l >= 0.0)) throw std::invalid_argument("spectrum: negative eigenvalue");
        if (l > prev) throw std::invalid_argument("spectrum: eigenvalues must be non-increasing");
        if (l > 0.0) any_positive = true;
        prev = l;
    }
    if (!any_positive) throw std::invalid_argument("spectrum: all eigenvalues zero");
}

SpectrumSpec SpectrumSpec::power_law(std::size_t dim, double lambda1, double gamma,
                                     float mean_value) {
    SpectrumSpec s;
    s.dim = dim;
    s.eigenvalues.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        s.eigenvalues[i] = lambda1 * std::pow(static_cast<double>(i + 1), -gamma);
    s.mean.assign(dim, mean_value);
    s.validate();
    return s;
}

SpectrumSpec SpectrumSpec::isotropic(std::size_t dim, double lambda, float mean_value) {
    SpectrumSpec s;
    s.dim = dim;
    s.eigenvalues.assign(dim, lambda);
    s.mean.assign(dim, mean_value);
    s.validate();
    return s;
}

Corpus sample_gaussian_corpus(const SpectrumSpec& spec, std::size_t n, std::uint64_t seed,
                              Basis basis, DistanceMetric metric) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample_gaussian_corpus: n must be >= 1");

    std::vector<double> sigma(spec.dim);
    for (std::size_t k = 0; k < spec.dim; ++k) sigma[k] = std::sqrt(spec.eigenvalues[k]);

    Eigen::MatrixXd rotation;
    const Eigen::MatrixXd* rot = nullptr;
    if (basis == Basis::RandomRotation) {
        rotation = random_rotation(spec.dim, seed);
        rot = &rotation;
    }

    Corpus corpus;
    corpus.dim = spec.dim;
    corpus.metric = metric;
    corpus.records.resize(n);
    par::parallel_for(n, [&](std::size_t i) {
        corpus.records[i] =
            Record{static_cast<RecordId>(i), draw_record(spec, rot, sigma, seed, i),
                   std::nullopt, Provenance::Benign};
    });
    return corpus;
}

QuerySet sample_gaussian_queries(const SpectrumSpec& spec, std::size_t n, std::uint64_t seed,
                                 Basis basis) {
    const Corpus c = sample_gaussian_corpus(spec, n, seed, basis);
    QuerySet qs;
    qs.dim = c.dim;
    qs.queries.reserve(n);
    for (const auto& r : c.records) qs.queries.push_back(r.vector);
    return qs;
}

CovarianceStats estimate_covariance_stats(const Corpus& corpus) {
    const std::size_t n = corpus.size();
    const std::size_t d = corpus.dim;
    if (n < 2) throw std::invalid_argument("estimate_covariance_stats: need at least 2 records");

    std::vector<double> mean(d);
    par::det_vec_sum(
        n, d,
        [&](std::size_t i, double* acc) {
            const auto& v = corpus.records[i].vector;
            for (std::size_t k = 0; k < d; ++k) acc[k] += v[k];
        },
        mean.data());
    for (auto& m : mean) m /= static_cast<double>(n);

    CovarianceStats stats;
    stats.n = n;
    stats.dim = d;

    if (d <= kMaterializeDimLimit) {
        Eigen::MatrixXd y(n, d);
        par::parallel_for(n, [&](std::size_t i) {
            const auto& v = corpus.records[i].vector;
            for (std::size_t k = 0; k < d; ++k)
                y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    static_cast<double>(v[k]) - mean[k];
        });
        const Eigen::MatrixXd cov = (y.transpose() * y) / static_cast<double>(n - 1);
        stats.m1 = cov.trace();
        stats.m2 = cov.squaredNorm();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
        stats.l_op = solver.eigenvalues().maxCoeff();
    } else {
        std::vector<double> centered(n * d);
        par::parallel_for(n, [&](std::size_t i) {
            const auto& v = corpus.records[i].vector;
            for (std::size_t k = 0; k < d; ++k)
                centered[i * d + k] = static_cast<double>(v[k]) - mean[k];
        });
        std::vector<double> var(d);
        par::det_vec_sum(
            n, d,
            [&](std::size_t i, double* acc) {
                const double* y = centered.data() + i * d;
                for (std::size_t k = 0; k < d; ++k) acc[k] += y[k] * y[k];
            },
            var.data());
        double m1 = 0.0;
        for (double v : var) m1 += v;
        stats.m1 = m1 / static_cast<double>(n - 1);
        // tr(S^2) = ||Y^T Y||_F^2 / (n-1)^2 = sum_ij (y_i . y_j)^2 / (n-1)^2.
        const double gram_sq = par::det_sum(n, [&](std::size_t i) {
            const double* yi = centered.data() + i * d;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double* yj = centered.data() + j * d;
                double dot = 0.0;
                for (std::size_t k = 0; k < d; ++k) dot += yi[k] * yj[k];
                acc += dot * dot;
            }
            return acc;
        });
        stats.m2 = gram_sq / (static_cast<double>(n - 1) * static_cast<double>(n - 1));
        stats.l_op = power_iteration_l_op(centered, n, d, 1e-6, 10000);
    }

    stats.d_eff = stats.m1 * stats.m1 / stats.m2;
    stats.eff_rank = stats.m1 / stats.l_op;
    return stats;
}

CovarianceStats analytic_stats(const SpectrumSpec& spec) {
    spec.validate();
    CovarianceStats stats;
    stats.dim = spec.dim;
    stats.n = 0;
    for (double l : spec.eigenvalues) {
        stats.m1 += l;
        stats.m2 += l * l;
    }
    stats.l_op = spec.eigenvalues.front();
    stats.d_eff = stats.m1 * stats.m1 / stats.m2;
    stats.eff_rank = stats.m1 / stats.l_op;
    return stats;
}

SpectrumSpec spectrum_from_json_text(const std::string& text) {
    const auto obj = nlohmann::json::parse(text);
    const std::size_t dim = obj.at("dim").get<std::size_t>();
    SpectrumSpec spec;
    if (obj.contains("eigenvalues")) {
        spec.dim = dim;
        spec.eigenvalues = obj["eigenvalues"].get<std::vector<double>>();
        spec.mean.assign(dim, 0.0f);
    } else if (obj.contains("power_law")) {
        const auto& pl = obj["power_law"];
        spec = SpectrumSpec::power_law(dim, pl.at("lambda1").get<double>(),
                                       pl.at("gamma").get<double>());
    } else {
        throw std::invalid_argument("spectrum json: need 'eigenvalues' or 'power_law'");
    }
    if (obj.contains("mean")) {
        if (obj["mean"].is_number())
            spec.mean.assign(dim, obj["mean"].get<float>());
        else
            spec.mean = obj["mean"].get<std::vector<float>>();
    }
    spec.validate();
    return spec;
}

}  // namespace bhlab
