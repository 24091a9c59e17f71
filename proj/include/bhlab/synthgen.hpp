#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bhlab/types.hpp"

namespace bhlab {

/// Eigen-spectrum description of an anisotropic Gaussian: covariance
/// eigenvalues (non-increasing) plus a mean vector.
struct SpectrumSpec {
    std::size_t dim = 0;
    std::vector<double> eigenvalues;  // length dim, non-increasing, >= 0
    std::vector<float> mean;          // length dim

    void validate() const;

    /// lambda_i = lambda1 * i^(-gamma), i = 1..dim.
    static SpectrumSpec power_law(std::size_t dim, double lambda1, double gamma,
                                  float mean_value = 0.0f);
    static SpectrumSpec isotropic(std::size_t dim, double lambda, float mean_value = 0.0f);
};

enum class Basis { Axis, RandomRotation };

/// Trace statistics of a covariance matrix: total variance m1 = tr(S),
/// spread m2 = tr(S^2), operator norm l_op, and the derived effective
/// dimension m1^2/m2 and effective rank m1/l_op.
struct CovarianceStats {
    double m1 = 0.0;
    double m2 = 0.0;
    double l_op = 0.0;
    double d_eff = 0.0;
    double eff_rank = 0.0;
    std::size_t n = 0;  // sample count used; 0 when analytic
    std::size_t dim = 0;
};

/// Draws n i.i.d. samples from N(mean, Sigma). With Basis::Axis, Sigma is
/// diagonal with the given eigenvalues; with RandomRotation, Sigma = R L R^T
/// for a seeded random orthogonal R. Each record's draw is derived from
/// (seed, record index), so generation is bitwise deterministic and
/// order-independent.
Corpus sample_gaussian_corpus(const SpectrumSpec& spec, std::size_t n, std::uint64_t seed,
                              Basis basis, DistanceMetric metric = DistanceMetric::Euclidean);

/// Same sampler for query vectors. Pass a seed distinct from the corpus
/// seed or the queries coincide with stored records.
QuerySet sample_gaussian_queries(const SpectrumSpec& spec, std::size_t n, std::uint64_t seed,
                                 Basis basis);

/// Unbiased sample covariance statistics. For dim <= 2048 the covariance is
/// materialized and l_op comes from a dense symmetric eigen-solve; above
/// that the statistics are computed from centered Gram identities and power
/// iteration without forming the d x d matrix.
CovarianceStats estimate_covariance_stats(const Corpus& corpus);

/// Exact statistics implied by a spectrum (m1 = sum lambda, m2 = sum
/// lambda^2, l_op = lambda_max); basis-independent.
CovarianceStats analytic_stats(const SpectrumSpec& spec);

/// Parses {"dim": d, "eigenvalues": [...] | "power_law": {"lambda1":, "gamma":},
///         "mean": [...] | number}.
SpectrumSpec spectrum_from_json_text(const std::string& text);

}  // namespace bhlab
