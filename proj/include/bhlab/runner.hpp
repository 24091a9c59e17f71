#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhlab/attack.hpp"
#include "bhlab/corpus.hpp"
#include "bhlab/defense.hpp"
#include "bhlab/evaluation.hpp"
#include "bhlab/index.hpp"
#include "bhlab/synthgen.hpp"
#include "bhlab/theory.hpp"
#include "bhlab/types.hpp"

namespace bhlab {

/// Corpus source: exactly one of file path or synthetic spec.
struct CorpusSource {
    std::optional<std::filesystem::path> path;
    std::optional<FileFormat> format;
    std::optional<SpectrumSpec> spectrum;
    std::size_t n = 0;                     // synthetic size
    std::uint64_t seed = 0;                // synthetic seed
    Basis basis = Basis::Axis;
    std::optional<std::pair<std::size_t, std::uint64_t>> subsample_n_seed;
};

struct QuerySource {
    std::optional<std::filesystem::path> path;
    std::optional<FileFormat> format;
    std::size_t n = 0;          // synthetic count (uses the corpus spectrum)
    std::uint64_t seed = 0;
    bool from_corpus = false;   // sample stored records as queries
};

struct ExperimentConfig {
    DistanceMetric metric = DistanceMetric::Cosine;
    CorpusSource corpus;
    QuerySource queries;
    IndexParams index = FlatParams{};
    std::optional<double> tune_target;   // replaces fixed index params when set
    IndexKind tune_kind = IndexKind::IvfFlat;
    std::vector<std::size_t> tune_schedule;  // optional custom schedule
    std::vector<std::size_t> k_list = {10};
    AttackConfig attack;
    std::optional<DefenseSpec> defense;
    std::optional<double> theorem_delta;  // synthetic corpora only
    std::uint64_t index_seed = 1;
    std::filesystem::path output_dir;

    static ExperimentConfig from_json(const nlohmann::json& obj);
    nlohmann::json to_json() const;
    void validate() const;
};

/// Full numeric record of one pipeline run. `report` carries every metric;
/// `timings_ms` is kept separate so reports stay byte-comparable across
/// runs.
struct RunReport {
    nlohmann::json config_echo;
    nlohmann::json report;       // clean baseline, attack, defense, theorem blocks
    nlohmann::json timings_ms;
    std::vector<std::filesystem::path> artifacts;

    nlohmann::json full_json() const;
};

/// load/generate corpus -> tune/build index -> clean baseline -> attack ->
/// rebuild -> attack metrics -> optional defense -> report + CSVs.
/// Stage failures surface as runtime errors naming the stage.
RunReport run_attack_experiment(const ExperimentConfig& config);

enum class SweepAxis { Alpha, TopK, Clusters, Metric };
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepCell {
    std::string axis_value;
    bool failed = false;
    std::string error;
    nlohmann::json report;
};

/// One pipeline run per axis value; long-format CSV rows in deterministic
/// order. Failed cells are recorded and the sweep continues.
std::vector<SweepCell> run_sweep(const ExperimentConfig& base, SweepAxis axis,
                                 const std::vector<nlohmann::json>& values,
                                 const std::filesystem::path& csv_path);

struct TheorySuiteConfig {
    std::vector<SpectrumSpec> spectra;
    std::vector<std::size_t> sizes;
    double delta = 0.1;
    std::size_t trials = 3;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir;
    // Optional regression against externally supplied covariance constants.
    std::optional<nlohmann::json> published;
};

/// check_condition + monte_carlo_verify per (spectrum, size) cell; writes a
/// long CSV plus one TheoremCheck JSON per cell.
nlohmann::json run_theory_suite(const TheorySuiteConfig& config);

/// Writes text atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string format_double(double v);

nlohmann::json metrics_to_json(const MetricsReport& report);
nlohmann::json theorem_to_json(const TheoremCheck& check);

}  // namespace bhlab
