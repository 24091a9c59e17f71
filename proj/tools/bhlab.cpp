// bhlab: config-driven experiment runner for centroid-poisoning studies on
// vector search indexes. Subcommands: attack, sweep, theory, defend,
// hubness, cdf. Exit codes: 0 ok, 2 config error, 3 pipeline error,
// 4 trend assertion failure (--check).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bhlab/runner.hpp"

using nlohmann::json;
using namespace bhlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;
constexpr int kExitCheck = 4;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path);
    try {
        json obj;
        in >> obj;
        return obj;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

/// Relative output dirs resolve under $BHLAB_OUTPUT_ROOT when set.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
    if (dir.empty() || dir.is_absolute()) return dir;
    const char* root = std::getenv("BHLAB_OUTPUT_ROOT");
    if (root == nullptr || *root == '\0') return dir;
    return std::filesystem::path(root) / dir;
}

ExperimentConfig experiment_from_file(const std::string& path, const std::string& output_dir,
                                      const std::string& metric_override) {
    json obj = load_json_file(path);
    if (!output_dir.empty()) obj["output_dir"] = output_dir;
    if (!metric_override.empty()) obj["metric"] = metric_override;
    ExperimentConfig cfg = ExperimentConfig::from_json(obj);
    cfg.output_dir = resolve_output_dir(cfg.output_dir);
    return cfg;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return kExitPipeline;
    }
}

ScopeSpec scope_from_json(const json& obj) {
    ScopeSpec scope;
    if (obj.contains("kind") && obj["kind"].get<std::string>() == "cluster_wise")
        scope.scope = CentroidScope::ClusterWise;
    if (obj.contains("L")) scope.num_clusters = obj["L"].get<std::size_t>();
    if (obj.contains("seed")) scope.seed = obj["seed"].get<std::uint64_t>();
    return scope;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"black-hole poisoning laboratory for vector similarity search"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::string metric_override;
    std::string axis;
    std::string values_csv;
    bool emit_config = false;
    bool check = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--output-dir", output_dir, "override output directory");
        sub->add_flag("--emit-config", emit_config, "print the resolved config and exit");
    };

    CLI::App* cmd_attack = app.add_subcommand("attack", "single attack pipeline run");
    add_common(cmd_attack);
    cmd_attack->add_option("--metric", metric_override, "override distance metric");

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "sensitivity sweep over one axis");
    add_common(cmd_sweep);
    cmd_sweep->add_option("--axis", axis, "alpha | k | clusters | metric");
    cmd_sweep->add_option("--values", values_csv, "comma-separated axis values");
    cmd_sweep->add_flag("--check", check, "assert the published trend for the axis");

    CLI::App* cmd_theory = app.add_subcommand("theory", "condition checks + Monte-Carlo");
    add_common(cmd_theory);

    CLI::App* cmd_defend = app.add_subcommand("defend", "compare defenses on one attack");
    add_common(cmd_defend);

    CLI::App* cmd_hubness = app.add_subcommand("hubness", "hubness probability grid");
    add_common(cmd_hubness);

    CLI::App* cmd_cdf = app.add_subcommand("cdf", "distance-to-centroid CDF dump");
    add_common(cmd_cdf);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(cmd_attack)) {
        return guarded([&] {
            ExperimentConfig cfg =
                experiment_from_file(config_path, output_dir, metric_override);
            if (emit_config) {
                std::cout << cfg.to_json().dump(2) << "\n";
                return 0;
            }
            const RunReport run = run_attack_experiment(cfg);
            std::cout << run.full_json().dump(2) << "\n";
            return 0;
        });
    }

    if (app.got_subcommand(cmd_sweep)) {
        return guarded([&] {
            json obj = load_json_file(config_path);
            const std::string axis_name =
                !axis.empty() ? axis : obj.at("axis").get<std::string>();
            const SweepAxis sweep_axis = sweep_axis_from_string(axis_name);
            std::vector<json> values;
            if (!values_csv.empty()) {
                std::stringstream ss(values_csv);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    if (sweep_axis == SweepAxis::Metric)
                        values.push_back(tok);
                    else if (sweep_axis == SweepAxis::Alpha)
                        values.push_back(std::stod(tok));
                    else
                        values.push_back(static_cast<std::size_t>(std::stoull(tok)));
                }
            } else {
                values = obj.at("values").get<std::vector<json>>();
            }
            obj.erase("axis");
            obj.erase("values");
            if (!output_dir.empty()) obj["output_dir"] = output_dir;
            ExperimentConfig base = ExperimentConfig::from_json(obj);
            base.output_dir = resolve_output_dir(base.output_dir);
            if (emit_config) {
                std::cout << base.to_json().dump(2) << "\n";
                return 0;
            }
            const auto csv_path = base.output_dir.empty()
                                      ? std::filesystem::path()
                                      : base.output_dir / ("sweep_" + axis_name + ".csv");
            const auto cells = run_sweep(base, sweep_axis, values, csv_path);

            auto mo_of = [&](const SweepCell& cell) {
                const auto& block = cell.report.at("post_attack");
                return block.begin().value().at("mo_at_k").get<double>();
            };
            for (const auto& cell : cells) {
                if (cell.failed) {
                    std::cout << "cell " << cell.axis_value << ": FAILED " << cell.error << "\n";
                    continue;
                }
                std::cout << "cell " << cell.axis_value << ": MO@K " << mo_of(cell) << "\n";
            }
            if (check) {
                constexpr double kSlack = 0.02;
                bool ok = true;
                for (const auto& cell : cells) ok = ok && !cell.failed;
                if (ok && sweep_axis == SweepAxis::Alpha) {
                    for (std::size_t i = 1; i < cells.size(); ++i)
                        ok = ok && mo_of(cells[i]) >= mo_of(cells[i - 1]) - kSlack;
                } else if (ok && sweep_axis == SweepAxis::Metric) {
                    double euclid = -1.0, cosine = -1.0;
                    for (const auto& cell : cells) {
                        if (cell.axis_value == "euclidean") euclid = mo_of(cell);
                        if (cell.axis_value == "cosine") cosine = mo_of(cell);
                    }
                    ok = euclid >= 0 && cosine >= 0 && euclid >= cosine - kSlack;
                } else if (ok && sweep_axis == SweepAxis::Clusters) {
                    ok = mo_of(cells.back()) >= mo_of(cells.front()) - kSlack;
                }
                if (!ok) {
                    std::cerr << "trend assertion failed for axis " << axis_name << "\n";
                    return kExitCheck;
                }
            }
            return 0;
        });
    }

    if (app.got_subcommand(cmd_theory)) {
        return guarded([&] {
            const json obj = load_json_file(config_path);
            TheorySuiteConfig cfg;
            for (const auto& s : obj.at("spectra"))
                cfg.spectra.push_back(spectrum_from_json_text(s.dump()));
            cfg.sizes = obj.at("sizes").get<std::vector<std::size_t>>();
            if (obj.contains("delta")) cfg.delta = obj["delta"].get<double>();
            if (obj.contains("trials")) cfg.trials = obj["trials"].get<std::size_t>();
            if (obj.contains("seed")) cfg.seed = obj["seed"].get<std::uint64_t>();
            if (obj.contains("published")) cfg.published = obj["published"];
            cfg.output_dir = resolve_output_dir(
                !output_dir.empty()
                    ? std::filesystem::path(output_dir)
                    : std::filesystem::path(obj.value("output_dir", std::string())));
            if (emit_config) {
                std::cout << obj.dump(2) << "\n";
                return 0;
            }
            std::cout << run_theory_suite(cfg).dump(2) << "\n";
            return 0;
        });
    }

    if (app.got_subcommand(cmd_defend)) {
        return guarded([&] {
            json obj = load_json_file(config_path);
            const json defense_list = obj.at("defenses");
            obj.erase("defenses");
            if (!output_dir.empty()) obj["output_dir"] = output_dir;
            ExperimentConfig base = ExperimentConfig::from_json(obj);
            base.output_dir = resolve_output_dir(base.output_dir);
            base.defense.reset();
            if (emit_config) {
                std::cout << base.to_json().dump(2) << "\n";
                return 0;
            }

            // One attack run, then each defense evaluated on the same
            // poisoned corpus.
            ExperimentConfig undefended = base;
            undefended.output_dir.clear();
            const RunReport attack_run = run_attack_experiment(undefended);

            Corpus clean;
            if (base.corpus.path) {
                clean = load_corpus(*base.corpus.path, *base.corpus.format, base.metric);
                if (base.corpus.subsample_n_seed)
                    clean = subsample(clean, base.corpus.subsample_n_seed->first,
                                      base.corpus.subsample_n_seed->second);
            } else {
                clean = sample_gaussian_corpus(*base.corpus.spectrum, base.corpus.n,
                                               base.corpus.seed, base.corpus.basis, base.metric);
            }
            QuerySet queries;
            if (base.queries.path) {
                queries = load_queries(*base.queries.path, *base.queries.format);
            } else if (base.queries.from_corpus) {
                const Corpus sampled = subsample(clean, base.queries.n, base.queries.seed);
                queries.dim = sampled.dim;
                for (const auto& r : sampled.records) queries.queries.push_back(r.vector);
            } else {
                queries = sample_gaussian_queries(*base.corpus.spectrum, base.queries.n,
                                                  base.queries.seed, base.corpus.basis);
            }
            const AttackResult attacked =
                base.attack.mode == AttackConfig::Mode::Global
                    ? global_centroid_attack(clean, base.attack)
                    : cluster_wise_attack(clean, base.attack);

            json out;
            out["undefended"] = attack_run.report.at("post_attack");
            std::ostringstream csv;
            csv << "defense,k,mo_at_k,asr,utility_recall\n";
            const std::size_t k = base.k_list.front();
            for (const auto& d : defense_list) {
                DefenseSpec spec;
                spec.kind = defense_kind_from_string(d.at("kind").get<std::string>());
                if (d.contains("kappa")) spec.kappa = d["kappa"].get<std::size_t>();
                if (d.contains("L")) spec.detect_clusters = d["L"].get<std::size_t>();
                if (d.contains("k")) spec.detect_k = d["k"].get<std::size_t>();
                if (d.contains("seed")) spec.seed = d["seed"].get<std::uint64_t>();
                const DefenseEvaluation eval =
                    evaluate_defense(spec, clean, attacked.corpus, queries, k, base.index,
                                     base.index_seed);
                json entry;
                entry["attack"] = metrics_to_json(eval.attack_report);
                entry["utility_recall"] = eval.utility_recall;
                if (spec.kind == DefenseSpec::Kind::Detection && eval.detection) {
                    entry["removed_injected"] = eval.removed_injected;
                    entry["removed_benign"] = eval.removed_benign;
                    entry["removed_count"] = eval.detection->removed_ids.size();
                    entry["median_positive_hits"] = eval.detection->median_positive;
                    entry["threshold"] = eval.detection->threshold;
                    entry["probes"] = eval.detection->probe_ids.size();
                    if (!base.output_dir.empty()) {
                        std::ostringstream ids_csv;
                        ids_csv << "removed_id,hit_count\n";
                        for (RecordId id : eval.detection->removed_ids)
                            ids_csv << id << ',' << eval.detection->hit_counts.at(id) << "\n";
                        write_file_atomic(base.output_dir / "removed_ids.csv", ids_csv.str());
                    }
                }
                out[to_string(spec.kind)] = entry;
                csv << to_string(spec.kind) << ',' << k << ','
                    << format_double(eval.attack_report.mo_at_k) << ','
                    << format_double(eval.attack_report.asr) << ','
                    << format_double(eval.utility_recall) << "\n";
            }
            if (!base.output_dir.empty()) {
                write_file_atomic(base.output_dir / "defenses.json", out.dump(2) + "\n");
                write_file_atomic(base.output_dir / "defenses.csv", csv.str());
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        });
    }

    if (app.got_subcommand(cmd_hubness)) {
        return guarded([&] {
            const json obj = load_json_file(config_path);
            HubnessGridConfig cfg;
            cfg.dims = obj.at("dims").get<std::vector<std::size_t>>();
            cfg.sizes = obj.at("sizes").get<std::vector<std::size_t>>();
            for (const auto& m : obj.at("metrics"))
                cfg.metrics.push_back(metric_from_string(m.get<std::string>()));
            for (const auto& s : obj.at("scopes"))
                cfg.scopes.push_back(s.get<std::string>() == "cluster_wise"
                                         ? CentroidScope::ClusterWise
                                         : CentroidScope::Global);
            for (const auto& p : obj.at("populations"))
                cfg.populations.push_back(p.get<std::string>() == "query" ? Population::Query
                                                                          : Population::Corpus);
            if (obj.contains("lambda1")) cfg.lambda1 = obj["lambda1"].get<double>();
            if (obj.contains("gamma")) cfg.gamma = obj["gamma"].get<double>();
            if (obj.contains("mean")) cfg.mean_value = obj["mean"].get<float>();
            if (obj.contains("queries")) cfg.num_queries = obj["queries"].get<std::size_t>();
            if (obj.contains("cluster_target"))
                cfg.cluster_target = obj["cluster_target"].get<std::size_t>();
            if (obj.contains("seed")) cfg.seed = obj["seed"].get<std::uint64_t>();
            if (emit_config) {
                std::cout << obj.dump(2) << "\n";
                return 0;
            }
            const auto entries = hubness_grid(cfg);
            std::ostringstream csv;
            csv << "dim,n,metric,scope,population,probability,samples\n";
            for (const auto& e : entries)
                csv << e.dim << ',' << e.corpus_size << ',' << to_string(e.metric) << ','
                    << to_string(e.scope) << ',' << to_string(e.population) << ','
                    << format_double(e.probability) << ',' << e.samples << "\n";
            const auto dir = resolve_output_dir(
                !output_dir.empty()
                    ? std::filesystem::path(output_dir)
                    : std::filesystem::path(obj.value("output_dir", std::string())));
            if (!dir.empty()) write_file_atomic(dir / "hubness_grid.csv", csv.str());
            std::cout << csv.str();
            return 0;
        });
    }

    if (app.got_subcommand(cmd_cdf)) {
        return guarded([&] {
            const json obj = load_json_file(config_path);
            Corpus corpus;
            const json& c = obj.at("corpus");
            const DistanceMetric metric =
                metric_from_string(obj.value("metric", std::string("euclidean")));
            if (c.contains("path")) {
                const FileFormat fmt =
                    c.contains("format")
                        ? format_from_string(c["format"].get<std::string>())
                        : format_from_path(c["path"].get<std::string>());
                corpus = load_corpus(c["path"].get<std::string>(), fmt, metric);
            } else {
                const json& s = c.at("synthetic");
                corpus = sample_gaussian_corpus(
                    spectrum_from_json_text(s.at("spectrum").dump()),
                    s.at("n").get<std::size_t>(), s.at("seed").get<std::uint64_t>(),
                    s.value("basis", std::string("axis")) == "rotation" ? Basis::RandomRotation
                                                                        : Basis::Axis,
                    metric);
            }
            const ScopeSpec scope =
                obj.contains("scope") ? scope_from_json(obj["scope"]) : ScopeSpec{};
            const std::size_t num_points = obj.value("num_points", std::size_t{200});
            if (emit_config) {
                std::cout << obj.dump(2) << "\n";
                return 0;
            }
            const auto cdf = distance_to_centroid_cdf(corpus, metric, scope, num_points);
            std::ostringstream csv;
            csv << "distance,fraction\n";
            for (const auto& p : cdf)
                csv << format_double(p.distance) << ',' << format_double(p.fraction) << "\n";
            const auto dir = resolve_output_dir(
                !output_dir.empty()
                    ? std::filesystem::path(output_dir)
                    : std::filesystem::path(obj.value("output_dir", std::string())));
            if (!dir.empty()) write_file_atomic(dir / "cdf.csv", csv.str());
            std::cout << csv.str();
            return 0;
        });
    }

    return 0;
}
