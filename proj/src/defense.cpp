#include "bhlab/defense.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "bhlab/clustering.hpp"
#include "bhlab/geometry.hpp"
#include "bhlab/parallel.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

namespace {

constexpr double kStdFloor = 1e-8;
constexpr double kTcprEps = 1e-12;

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
    std::uint64_t h = splitmix64(corpus.size() * 0x9E3779B97F4A7C15ULL + corpus.dim);
    for (const auto& r : corpus.records) h = splitmix64(h ^ r.id);
    return h;
}

Corpus transform_corpus(const Corpus& corpus, const TransformModel& model) {
    Corpus out = corpus;
    for (auto& r : out.records)
        r.vector = model.kind == TransformModel::Kind::Cl2 ? apply_cl2(model, r.vector)
                                                           : apply_zscore(model, r.vector);
    return out;
}

double median_of_positive(std::vector<std::size_t> positive) {
    std::sort(positive.begin(), positive.end());
    const std::size_t m = positive.size();
    if (m % 2 == 1) return static_cast<double>(positive[m / 2]);
    return (static_cast<double>(positive[m / 2 - 1]) + static_cast<double>(positive[m / 2])) / 2.0;
}

}  // namespace

TransformModel fit_cl2(const Corpus& corpus) {
    if (corpus.empty()) throw std::invalid_argument("fit_cl2: empty corpus");
    TransformModel model;
    model.kind = TransformModel::Kind::Cl2;
    model.mean = corpus_centroid(corpus);
    model.fitted_on = corpus.size();
    model.fingerprint = corpus_fingerprint(corpus);
    return model;
}

std::vector<float> apply_cl2(const TransformModel& model, std::span<const float> v) {
    if (model.kind != TransformModel::Kind::Cl2)
        throw std::invalid_argument("apply_cl2: model kind mismatch");
    if (v.size() != model.mean.size())
        throw std::invalid_argument("apply_cl2: dimension mismatch");
    std::vector<float> centered(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        centered[k] = static_cast<float>(static_cast<double>(v[k]) - model.mean[k]);
    return l2_normalize(centered);  // throws when v equals the fitted mean
}

TransformModel fit_zscore(const Corpus& corpus) {
    if (corpus.size() < 2) throw std::invalid_argument("fit_zscore: need at least 2 records");
    const std::size_t d = corpus.dim;
    TransformModel model;
    model.kind = TransformModel::Kind::ZScore;
    model.mean = corpus_centroid(corpus);
    std::vector<double> var(d, 0.0);
    for (const auto& r : corpus.records)
        for (std::size_t k = 0; k < d; ++k) {
            const double delta = static_cast<double>(r.vector[k]) - model.mean[k];
            var[k] += delta * delta;
        }
    model.stds.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double sd = std::sqrt(var[k] / static_cast<double>(corpus.size() - 1));
        model.stds[k] = static_cast<float>(std::max(sd, kStdFloor));
    }
    model.fitted_on = corpus.size();
    model.fingerprint = corpus_fingerprint(corpus);
    return model;
}

std::vector<float> apply_zscore(const TransformModel& model, std::span<const float> v) {
    if (model.kind != TransformModel::Kind::ZScore)
        throw std::invalid_argument("apply_zscore: model kind mismatch");
    if (v.size() != model.mean.size())
        throw std::invalid_argument("apply_zscore: dimension mismatch");
    std::vector<float> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        out[k] = static_cast<float>((static_cast<double>(v[k]) - model.mean[k]) /
                                    static_cast<double>(model.stds[k]));
    return out;
}

TcprResult apply_tcpr(std::span<const float> query, const IndexHandle& index,
                      std::size_t kappa) {
    if (kappa < 1) throw std::invalid_argument("apply_tcpr: kappa must be >= 1");
    if (query.size() != index.dim())
        throw std::invalid_argument("apply_tcpr: dimension mismatch");

    const SearchResult neighbors = index.search(query, kappa);
    // Centroid of the retrieved neighbors' stored vectors.
    const std::size_t d = index.dim();
    std::vector<double> mu(d, 0.0);
    std::unordered_set<RecordId> wanted;
    for (const auto& h : neighbors.hits) wanted.insert(h.id);
    std::size_t found = 0;
    for (const auto& r : index.corpus().records) {
        if (!wanted.count(r.id)) continue;
        for (std::size_t k = 0; k < d; ++k) mu[k] += r.vector[k];
        ++found;
    }
    for (auto& x : mu) x /= static_cast<double>(found);

    double mu_norm_sq = 0.0;
    for (double x : mu) mu_norm_sq += x * x;
    const double mu_norm = std::sqrt(mu_norm_sq);

    TcprResult result;
    result.query.assign(query.begin(), query.end());
    if (mu_norm < kTcprEps) return result;  // vanishing direction: keep q

    double proj = 0.0;
    for (std::size_t k = 0; k < d; ++k) proj += static_cast<double>(query[k]) * (mu[k] / mu_norm);
    double out_norm_sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double c = static_cast<double>(query[k]) - proj * (mu[k] / mu_norm);
        result.query[k] = static_cast<float>(c);
        out_norm_sq += c * c;
    }
    if (std::sqrt(out_norm_sq) < kTcprEps) {
        result.query.assign(query.begin(), query.end());
        result.degenerate = true;
    }
    return result;
}

DetectionResult detect_and_filter(const Corpus& corpus, std::size_t num_clusters,
                                  std::size_t k, std::uint64_t seed) {
    if (corpus.size() < num_clusters)
        throw std::invalid_argument("detect_and_filter: corpus smaller than cluster count");
    if (k < 1) throw std::invalid_argument("detect_and_filter: k must be >= 1");

    const Clustering clusters = kmeans(corpus, num_clusters, derive_seed(seed, 0xDEC1ULL));

    // Cluster-stratified probe set: max(1, ceil(0.01 |C_l|)) per cluster.
    std::vector<std::vector<std::size_t>> members(num_clusters);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        members[clusters.assignments[i]].push_back(i);
    std::vector<std::size_t> probes;
    for (std::size_t c = 0; c < num_clusters; ++c) {
        auto& m = members[c];
        const std::size_t want = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::ceil(0.01 * static_cast<double>(m.size()))));
        std::mt19937_64 rng(derive_seed(seed, 0x50524FULL, c + 1));
        for (std::size_t i = 0; i < want; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, m.size() - 1);
            std::swap(m[i], m[pick(rng)]);
            probes.push_back(m[i]);
        }
    }

    // Exact top-k pass over the full corpus for every probe; self-matches
    // count toward the hit totals.
    const std::size_t n = corpus.size();
    const std::size_t d = corpus.dim;
    const std::vector<float> base = corpus.packed();
    std::vector<double> base_norms;
    if (corpus.metric == DistanceMetric::Cosine) {
        base_norms.resize(n);
        kernels::row_norms(base.data(), n, d, base_norms.data());
    }
    const std::vector<RecordId> ids = corpus.ids();

    std::vector<std::vector<Hit>> probe_hits(probes.size());
    par::parallel_for(probes.size(), [&](std::size_t p) {
        const float* q = base.data() + probes[p] * d;
        const double qn =
            corpus.metric == DistanceMetric::Cosine ? base_norms[probes[p]] : 0.0;
        std::vector<double> dists(n);
        kernels::metric_distances_serial(base.data(), n, d,
                                         base_norms.empty() ? nullptr : base_norms.data(), q,
                                         qn, corpus.metric, dists.data());
        probe_hits[p] = kernels::top_k_hits(dists.data(), ids.data(), n, k);
    });

    std::unordered_map<RecordId, std::size_t> hit_counts;
    for (const auto& hits : probe_hits)
        for (const auto& h : hits) ++hit_counts[h.id];

    DetectionResult result;
    for (std::size_t p : probes) result.outcome.probe_ids.push_back(corpus.records[p].id);
    result.outcome.hit_counts = hit_counts;

    std::vector<std::size_t> positive;
    for (const auto& [id, count] : hit_counts)
        if (count > 0) positive.push_back(count);
    if (positive.empty()) {
        result.outcome.degenerate = true;
        result.filtered = corpus;
        return result;
    }
    result.outcome.median_positive = median_of_positive(std::move(positive));
    result.outcome.threshold = 2.0 * result.outcome.median_positive;

    std::unordered_set<RecordId> removed;
    for (const auto& [id, count] : hit_counts)
        if (static_cast<double>(count) > result.outcome.threshold) removed.insert(id);

    result.filtered.dim = corpus.dim;
    result.filtered.metric = corpus.metric;
    result.filtered.records.reserve(corpus.size() - removed.size());
    for (const auto& r : corpus.records) {
        if (removed.count(r.id))
            result.outcome.removed_ids.push_back(r.id);
        else
            result.filtered.records.push_back(r);
    }
    return result;
}

DefenseEvaluation evaluate_defense(const DefenseSpec& spec, const Corpus& clean,
                                   const Corpus& poisoned, const QuerySet& queries,
                                   std::size_t k, const IndexParams& index_params,
                                   std::uint64_t index_seed) {
    if (clean.dim != poisoned.dim || queries.dim != clean.dim)
        throw std::invalid_argument("evaluate_defense: dimension mismatch");
    if (queries.empty()) throw std::invalid_argument("evaluate_defense: no queries");

    std::unordered_set<RecordId> poison_ids;
    for (const auto& r : poisoned.records)
        if (r.provenance == Provenance::Injected) poison_ids.insert(r.id);

    // Original-space ground truth on the clean corpus.
    std::vector<SearchResult> clean_truth(queries.size());
    par::parallel_for(queries.size(), [&](std::size_t q) {
        clean_truth[q] = brute_force_oracle(clean, queries.queries[q], k, clean.metric);
    });

    auto run_queries = [&](const IndexHandle& index,
                           const std::vector<std::vector<float>>& qs) {
        std::vector<SearchResult> results(qs.size());
        par::parallel_for(qs.size(),
                          [&](std::size_t q) { results[q] = index.search(qs[q], k); });
        return results;
    };

    DefenseEvaluation eval;
    switch (spec.kind) {
        case DefenseSpec::Kind::Identity: {
            const IndexHandle poisoned_index = build_index(poisoned, index_params, index_seed);
            eval.attack_report =
                attack_metrics(run_queries(poisoned_index, queries.queries), poison_ids, k);
            const IndexHandle clean_index = build_index(clean, index_params, index_seed);
            eval.utility_recall =
                recall_at_k(run_queries(clean_index, queries.queries), clean_truth, k);
            break;
        }
        case DefenseSpec::Kind::Cl2:
        case DefenseSpec::Kind::ZScore: {
            const bool cl2 = spec.kind == DefenseSpec::Kind::Cl2;
            // Attack side: fit on the stored (poisoned) corpus, the only
            // corpus a defender sees.
            const TransformModel attack_model = cl2 ? fit_cl2(poisoned) : fit_zscore(poisoned);
            const Corpus defended_poisoned = transform_corpus(poisoned, attack_model);
            std::vector<std::vector<float>> tq(queries.size());
            for (std::size_t q = 0; q < queries.size(); ++q)
                tq[q] = cl2 ? apply_cl2(attack_model, queries.queries[q])
                            : apply_zscore(attack_model, queries.queries[q]);
            const IndexHandle defended_index =
                build_index(defended_poisoned, index_params, index_seed);
            eval.attack_report = attack_metrics(run_queries(defended_index, tq), poison_ids, k);

            // Utility side: same procedure on the clean corpus, scored
            // against original-space ground truth.
            const TransformModel clean_model = cl2 ? fit_cl2(clean) : fit_zscore(clean);
            const Corpus defended_clean = transform_corpus(clean, clean_model);
            std::vector<std::vector<float>> cq(queries.size());
            for (std::size_t q = 0; q < queries.size(); ++q)
                cq[q] = cl2 ? apply_cl2(clean_model, queries.queries[q])
                            : apply_zscore(clean_model, queries.queries[q]);
            const IndexHandle clean_index = build_index(defended_clean, index_params, index_seed);
            eval.utility_recall = recall_at_k(run_queries(clean_index, cq), clean_truth, k);
            break;
        }
        case DefenseSpec::Kind::Tcpr: {
            const IndexHandle poisoned_index = build_index(poisoned, index_params, index_seed);
            std::vector<std::vector<float>> tq(queries.size());
            for (std::size_t q = 0; q < queries.size(); ++q) {
                TcprResult r = apply_tcpr(queries.queries[q], poisoned_index, spec.kappa);
                tq[q] = std::move(r.query);
            }
            eval.attack_report = attack_metrics(run_queries(poisoned_index, tq), poison_ids, k);

            const IndexHandle clean_index = build_index(clean, index_params, index_seed);
            std::vector<std::vector<float>> cq(queries.size());
            for (std::size_t q = 0; q < queries.size(); ++q) {
                TcprResult r = apply_tcpr(queries.queries[q], clean_index, spec.kappa);
                cq[q] = std::move(r.query);
            }
            eval.utility_recall =
                recall_at_k(run_queries(clean_index, cq), clean_truth, k);
            break;
        }
        case DefenseSpec::Kind::Detection: {
            const DetectionResult det =
                detect_and_filter(poisoned, spec.detect_clusters, spec.detect_k, spec.seed);
            for (RecordId id : det.outcome.removed_ids) {
                if (poison_ids.count(id))
                    ++eval.removed_injected;
                else
                    ++eval.removed_benign;
            }
            eval.detection = det.outcome;
            const IndexHandle filtered_index =
                build_index(det.filtered, index_params, index_seed);
            eval.attack_report =
                attack_metrics(run_queries(filtered_index, queries.queries), poison_ids, k);

            const DetectionResult clean_det =
                detect_and_filter(clean, spec.detect_clusters, spec.detect_k, spec.seed);
            const IndexHandle clean_index =
                build_index(clean_det.filtered, index_params, index_seed);
            eval.utility_recall =
                recall_at_k(run_queries(clean_index, queries.queries), clean_truth, k);
            break;
        }
    }
    return eval;
}

const char* to_string(DefenseSpec::Kind k) {
    switch (k) {
        case DefenseSpec::Kind::Identity: return "identity";
        case DefenseSpec::Kind::Cl2: return "cl2";
        case DefenseSpec::Kind::ZScore: return "zscore";
        case DefenseSpec::Kind::Tcpr: return "tcpr";
        case DefenseSpec::Kind::Detection: return "detection";
    }
    return "?";
}

DefenseSpec::Kind defense_kind_from_string(const std::string& s) {
    if (s == "identity" || s == "none") return DefenseSpec::Kind::Identity;
    if (s == "cl2") return DefenseSpec::Kind::Cl2;
    if (s == "zscore" || s == "zn") return DefenseSpec::Kind::ZScore;
    if (s == "tcpr") return DefenseSpec::Kind::Tcpr;
    if (s == "detection" || s == "detect") return DefenseSpec::Kind::Detection;
    throw std::invalid_argument("unknown defense kind: " + s);
}

}  // namespace bhlab
