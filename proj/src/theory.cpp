#include "bhlab/theory.hpp"

#include <cmath>
#include <stdexcept>

#include "bhlab/evaluation.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

TheoremCheck check_condition(const CovarianceStats& stats, std::size_t n, double delta,
                             std::optional<std::pair<double, double>> t_override) {
    if (n < 2) throw std::invalid_argument("check_condition: n must be >= 2");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("check_condition: delta must be in (0, 1)");
    if (!(stats.m1 > 0.0 && stats.m2 > 0.0 && stats.l_op > 0.0))
        throw std::invalid_argument("check_condition: invalid covariance statistics");

    TheoremCheck check;
    check.n = n;
    check.delta = delta;
    if (t_override) {
        check.t1 = t_override->first;
        check.t2 = t_override->second;
        check.t_overridden = true;
    } else {
        check.t1 = std::log(2.0 / delta);
        check.t2 = std::log(2.0 * static_cast<double>(n - 1) / delta);
    }

    check.lhs = 2.0 * (stats.m1 - 2.0 * std::sqrt(stats.m2 * check.t2));
    check.rhs = (1.0 - 1.0 / static_cast<double>(n)) *
                (stats.m1 + 2.0 * std::sqrt(stats.m2 * check.t1) + 2.0 * stats.l_op * check.t1);
    check.holds = check.lhs > check.rhs;

    check.d_eff = stats.d_eff;
    check.eff_rank = stats.eff_rank;
    check.heuristic_d_eff_ok =
        stats.d_eff >= std::log(static_cast<double>(n) / delta);
    check.heuristic_rank_ok = stats.eff_rank >= std::log(1.0 / delta);
    return check;
}

double monte_carlo_verify(const SpectrumSpec& spec, std::size_t n, double delta,
                          std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("monte_carlo_verify: trials must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("monte_carlo_verify: delta must be in (0, 1)");
    double total = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Corpus corpus =
            sample_gaussian_corpus(spec, n, derive_seed(seed, t + 1), Basis::Axis);
        const HubnessEntry entry = hubness_probability(
            corpus, nullptr, DistanceMetric::Euclidean, ScopeSpec{}, Population::Corpus);
        total += entry.probability;
    }
    return total / static_cast<double>(trials);
}

}  // namespace bhlab
