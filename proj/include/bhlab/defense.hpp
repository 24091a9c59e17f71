#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bhlab/evaluation.hpp"
#include "bhlab/index.hpp"
#include "bhlab/types.hpp"

namespace bhlab {

/// Fitted vector-space transform. The same model must be applied to both
/// stored vectors and queries.
struct TransformModel {
    enum class Kind { Cl2, ZScore };
    Kind kind = Kind::Cl2;
    std::vector<float> mean;        // Cl2 + ZScore
    std::vector<float> stds;        // ZScore only, epsilon-floored
    std::size_t fitted_on = 0;      // corpus size at fit time
    std::uint64_t fingerprint = 0;  // cheap corpus identity check
};

/// Centered L2 normalization: v -> normalize(v - mean).
TransformModel fit_cl2(const Corpus& corpus);
std::vector<float> apply_cl2(const TransformModel& model, std::span<const float> v);

/// Per-dimension z-scoring: v_k -> (v_k - mean_k) / max(std_k, 1e-8).
TransformModel fit_zscore(const Corpus& corpus);
std::vector<float> apply_zscore(const TransformModel& model, std::span<const float> v);

struct TcprResult {
    std::vector<float> query;
    bool degenerate = false;  // projection annihilated the query
};

/// Query-side projection removal: retrieve the query's top-kappa
/// neighbors, estimate their centroid direction, and strip the query's
/// component along it. Degenerate outcomes (parallel query, vanishing
/// centroid) are flagged; callers fall back to the untransformed query.
TcprResult apply_tcpr(std::span<const float> query, const IndexHandle& index,
                      std::size_t kappa);

struct DetectionOutcome {
    std::vector<RecordId> removed_ids;
    std::unordered_map<RecordId, std::size_t> hit_counts;
    double median_positive = 0.0;  // median over strictly positive hit counts
    double threshold = 0.0;        // 2 * median
    std::vector<RecordId> probe_ids;
    bool degenerate = false;  // no positive hit counts at all
};

struct DetectionResult {
    DetectionOutcome outcome;
    Corpus filtered;
};

/// Probe-based hub detector: cluster the stored corpus, draw
/// max(1, ceil(0.01 |C_l|)) probes per cluster, count how often each record
/// lands in a probe's exact top-k (probe self-matches count), and remove
/// records whose hit count exceeds twice the median positive count.
DetectionResult detect_and_filter(const Corpus& corpus, std::size_t num_clusters,
                                  std::size_t k, std::uint64_t seed);

struct DefenseSpec {
    enum class Kind { Identity, Cl2, ZScore, Tcpr, Detection };
    Kind kind = Kind::Identity;
    std::size_t kappa = 10;        // Tcpr
    std::size_t detect_clusters = 100;
    std::size_t detect_k = 10;
    std::uint64_t seed = 0;
};

struct DefenseEvaluation {
    MetricsReport attack_report;   // MO@K etc. on the defended poisoned corpus
    double utility_recall = 0.0;   // defended clean retrieval vs original-space clean top-K
    std::size_t removed_injected = 0;          // Detection only
    std::size_t removed_benign = 0;            // Detection only
    std::optional<DetectionOutcome> detection; // Detection only: poisoned-side outcome
};

/// Paired measurement: (a) attack metrics with the defense active on the
/// poisoned corpus, and (b) the utility cost, as clean-corpus R@K of
/// defended retrieval against original-space ground truth. CL2/ZScore
/// rebuild the index over transformed vectors; Tcpr transforms only the
/// query against the unmodified index; Detection filters the corpus before
/// indexing.
DefenseEvaluation evaluate_defense(const DefenseSpec& spec, const Corpus& clean,
                                   const Corpus& poisoned, const QuerySet& queries,
                                   std::size_t k, const IndexParams& index_params,
                                   std::uint64_t index_seed);

const char* to_string(DefenseSpec::Kind k);
DefenseSpec::Kind defense_kind_from_string(const std::string& s);

}  // namespace bhlab
