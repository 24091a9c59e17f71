#include "bhlab/runner.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "bhlab/parallel.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

[[noreturn]] void stage_error(const std::string& stage, const std::exception& e) {
    throw std::runtime_error("stage '" + stage + "' failed: " + e.what());
}

SpectrumSpec spectrum_from_json_obj(const json& obj) {
    return spectrum_from_json_text(obj.dump());
}

json spectrum_to_json(const SpectrumSpec& spec) {
    json obj;
    obj["dim"] = spec.dim;
    obj["eigenvalues"] = spec.eigenvalues;
    obj["mean"] = spec.mean;
    return obj;
}

std::vector<SearchResult> batch_search(const IndexHandle& index,
                                       const std::vector<std::vector<float>>& queries,
                                       std::size_t k) {
    std::vector<SearchResult> results(queries.size());
    par::parallel_for(queries.size(), [&](std::size_t q) {
        results[q] = index.search(queries[q], k);
        results[q].query_id = q;
    });
    return results;
}

std::vector<SearchResult> batch_oracle(const Corpus& corpus,
                                       const std::vector<std::vector<float>>& queries,
                                       std::size_t k) {
    std::vector<SearchResult> results(queries.size());
    par::parallel_for(queries.size(), [&](std::size_t q) {
        results[q] = brute_force_oracle(corpus, queries[q], k, corpus.metric);
        results[q].query_id = q;
    });
    return results;
}

void emit_numeric_rows(const std::string& prefix, const json& node, std::ostringstream& csv) {
    for (const auto& [key, value] : node.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object())
            emit_numeric_rows(path, value, csv);
        else if (value.is_number())
            csv << path << ',' << format_double(value.get<double>()) << "\n";
        else if (value.is_boolean())
            csv << path << ',' << (value.get<bool>() ? 1 : 0) << "\n";
    }
}

/// Long-format dump of every numeric report field.
std::string report_to_csv(const json& report) {
    std::ostringstream csv;
    csv << "metric,value\n";
    emit_numeric_rows("", report, csv);
    return csv.str();
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, static_cast<std::size_t>(p - buf));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

json metrics_to_json(const MetricsReport& report) {
    json obj;
    obj["k"] = report.k;
    obj["mo_at_k"] = report.mo_at_k;
    obj["asr"] = report.asr;
    if (report.mean_fpr)
        obj["mean_fpr"] = *report.mean_fpr;
    else
        obj["mean_fpr"] = nullptr;
    obj["queries"] = report.per_query.size();
    return obj;
}

json theorem_to_json(const TheoremCheck& check) {
    json obj;
    obj["n"] = check.n;
    obj["delta"] = check.delta;
    obj["t1"] = check.t1;
    obj["t2"] = check.t2;
    obj["t_overridden"] = check.t_overridden;
    obj["lhs"] = check.lhs;
    obj["rhs"] = check.rhs;
    obj["holds"] = check.holds;
    obj["d_eff"] = check.d_eff;
    obj["eff_rank"] = check.eff_rank;
    obj["heuristic_d_eff_ok"] = check.heuristic_d_eff_ok;
    obj["heuristic_rank_ok"] = check.heuristic_rank_ok;
    if (check.t_overridden)
        obj["note"] = "t values supplied externally; they do not follow from delta";
    return obj;
}

// ---------------------------------------------------------------------------
// Config parsing

ExperimentConfig ExperimentConfig::from_json(const json& obj) {
    ExperimentConfig cfg;
    if (obj.contains("metric")) cfg.metric = metric_from_string(obj["metric"].get<std::string>());

    const json& c = obj.at("corpus");
    if (c.contains("path")) {
        cfg.corpus.path = std::filesystem::path(c["path"].get<std::string>());
        cfg.corpus.format = c.contains("format")
                                ? format_from_string(c["format"].get<std::string>())
                                : format_from_path(*cfg.corpus.path);
        if (c.contains("subsample"))
            cfg.corpus.subsample_n_seed = {c["subsample"].at("n").get<std::size_t>(),
                                           c["subsample"].at("seed").get<std::uint64_t>()};
    } else if (c.contains("synthetic")) {
        const json& s = c["synthetic"];
        cfg.corpus.spectrum = spectrum_from_json_obj(s.at("spectrum"));
        cfg.corpus.n = s.at("n").get<std::size_t>();
        cfg.corpus.seed = s.at("seed").get<std::uint64_t>();
        if (s.contains("basis"))
            cfg.corpus.basis = s["basis"].get<std::string>() == "rotation"
                                   ? Basis::RandomRotation
                                   : Basis::Axis;
    } else {
        throw std::invalid_argument("config: corpus needs 'path' or 'synthetic'");
    }

    const json& q = obj.at("queries");
    if (q.contains("path")) {
        cfg.queries.path = std::filesystem::path(q["path"].get<std::string>());
        cfg.queries.format = q.contains("format")
                                 ? format_from_string(q["format"].get<std::string>())
                                 : format_from_path(*cfg.queries.path);
    } else if (q.contains("synthetic")) {
        cfg.queries.n = q["synthetic"].at("n").get<std::size_t>();
        cfg.queries.seed = q["synthetic"].at("seed").get<std::uint64_t>();
    } else if (q.contains("from_corpus")) {
        cfg.queries.from_corpus = true;
        cfg.queries.n = q["from_corpus"].at("n").get<std::size_t>();
        cfg.queries.seed = q["from_corpus"].at("seed").get<std::uint64_t>();
    } else {
        throw std::invalid_argument("config: queries needs 'path', 'synthetic' or 'from_corpus'");
    }

    if (obj.contains("index")) {
        const json& ix = obj["index"];
        const IndexKind kind = index_kind_from_string(ix.at("kind").get<std::string>());
        if (ix.contains("tune_target")) {
            cfg.tune_target = ix["tune_target"].get<double>();
            cfg.tune_kind = kind;
            if (ix.contains("schedule"))
                cfg.tune_schedule = ix["schedule"].get<std::vector<std::size_t>>();
        } else if (kind == IndexKind::Flat) {
            cfg.index = FlatParams{};
        } else if (kind == IndexKind::IvfFlat) {
            IvfFlatParams p;
            if (ix.contains("nlist")) p.nlist = ix["nlist"].get<std::size_t>();
            if (ix.contains("nprobe")) p.nprobe = ix["nprobe"].get<std::size_t>();
            cfg.index = p;
        } else {
            HnswParams p;
            if (ix.contains("m")) p.m = ix["m"].get<std::size_t>();
            if (ix.contains("ef_construction"))
                p.ef_construction = ix["ef_construction"].get<std::size_t>();
            if (ix.contains("ef_search")) p.ef_search = ix["ef_search"].get<std::size_t>();
            cfg.index = p;
        }
    }

    if (obj.contains("k_list")) cfg.k_list = obj["k_list"].get<std::vector<std::size_t>>();

    if (obj.contains("attack")) {
        const json& a = obj["attack"];
        if (a.contains("mode"))
            cfg.attack.mode = a["mode"].get<std::string>() == "global"
                                  ? AttackConfig::Mode::Global
                                  : AttackConfig::Mode::ClusterWise;
        if (a.contains("L")) cfg.attack.num_clusters = a["L"].get<std::size_t>();
        if (a.contains("alpha")) cfg.attack.alpha = a["alpha"].get<double>();
        if (a.contains("sigma") && !a["sigma"].is_null())
            cfg.attack.sigma = a["sigma"].get<double>();
        if (a.contains("seed")) cfg.attack.seed = a["seed"].get<std::uint64_t>();
        if (a.contains("payload")) cfg.attack.payload_template = a["payload"].get<std::string>();
    }

    if (obj.contains("defense") && !obj["defense"].is_null()) {
        const json& d = obj["defense"];
        DefenseSpec spec;
        spec.kind = defense_kind_from_string(d.at("kind").get<std::string>());
        if (d.contains("kappa")) spec.kappa = d["kappa"].get<std::size_t>();
        if (d.contains("L")) spec.detect_clusters = d["L"].get<std::size_t>();
        if (d.contains("k")) spec.detect_k = d["k"].get<std::size_t>();
        if (d.contains("seed")) spec.seed = d["seed"].get<std::uint64_t>();
        cfg.defense = spec;
    }

    if (obj.contains("theorem") && !obj["theorem"].is_null())
        cfg.theorem_delta = obj["theorem"].at("delta").get<double>();

    if (obj.contains("index_seed")) cfg.index_seed = obj["index_seed"].get<std::uint64_t>();
    if (obj.contains("output_dir"))
        cfg.output_dir = std::filesystem::path(obj["output_dir"].get<std::string>());
    cfg.validate();
    return cfg;
}

json ExperimentConfig::to_json() const {
    json obj;
    obj["metric"] = to_string(metric);
    json c;
    if (corpus.path) {
        c["path"] = corpus.path->string();
        c["format"] = to_string(*corpus.format);
        if (corpus.subsample_n_seed)
            c["subsample"] = {{"n", corpus.subsample_n_seed->first},
                              {"seed", corpus.subsample_n_seed->second}};
    } else {
        c["synthetic"] = {{"spectrum", spectrum_to_json(*corpus.spectrum)},
                          {"n", corpus.n},
                          {"seed", corpus.seed},
                          {"basis", corpus.basis == Basis::Axis ? "axis" : "rotation"}};
    }
    obj["corpus"] = c;

    json q;
    if (queries.path) {
        q["path"] = queries.path->string();
        q["format"] = to_string(*queries.format);
    } else if (queries.from_corpus) {
        q["from_corpus"] = {{"n", queries.n}, {"seed", queries.seed}};
    } else {
        q["synthetic"] = {{"n", queries.n}, {"seed", queries.seed}};
    }
    obj["queries"] = q;

    json ix;
    if (tune_target) {
        ix["kind"] = to_string(tune_kind);
        ix["tune_target"] = *tune_target;
        if (!tune_schedule.empty()) ix["schedule"] = tune_schedule;
    } else if (const auto* ivf = std::get_if<IvfFlatParams>(&index)) {
        ix["kind"] = "ivf_flat";
        ix["nlist"] = ivf->nlist;
        ix["nprobe"] = ivf->nprobe;
    } else if (const auto* hnsw = std::get_if<HnswParams>(&index)) {
        ix["kind"] = "hnsw";
        ix["m"] = hnsw->m;
        ix["ef_construction"] = hnsw->ef_construction;
        ix["ef_search"] = hnsw->ef_search;
    } else {
        ix["kind"] = "flat";
    }
    obj["index"] = ix;
    obj["k_list"] = k_list;

    json a;
    a["mode"] = attack.mode == AttackConfig::Mode::Global ? "global" : "cluster_wise";
    a["L"] = attack.num_clusters;
    a["alpha"] = attack.alpha;
    a["sigma"] = attack.sigma ? json(*attack.sigma) : json(nullptr);
    a["seed"] = attack.seed;
    a["payload"] = attack.payload_template;
    obj["attack"] = a;

    if (defense) {
        json d;
        d["kind"] = to_string(defense->kind);
        d["kappa"] = defense->kappa;
        d["L"] = defense->detect_clusters;
        d["k"] = defense->detect_k;
        d["seed"] = defense->seed;
        obj["defense"] = d;
    }
    if (theorem_delta) obj["theorem"] = {{"delta", *theorem_delta}};
    obj["index_seed"] = index_seed;
    obj["output_dir"] = output_dir.string();
    return obj;
}

void ExperimentConfig::validate() const {
    if (k_list.empty()) throw std::invalid_argument("config: k_list must be nonempty");
    for (std::size_t k : k_list)
        if (k < 1) throw std::invalid_argument("config: K values must be >= 1");
    if (corpus.path && corpus.spectrum)
        throw std::invalid_argument("config: corpus must have exactly one source");
    if (!corpus.path && !corpus.spectrum)
        throw std::invalid_argument("config: corpus must have exactly one source");
    if (!corpus.path && corpus.n == 0)
        throw std::invalid_argument("config: synthetic corpus needs n >= 1");
    if (theorem_delta && !corpus.spectrum)
        throw std::invalid_argument("config: theorem check requires a synthetic corpus");
    if (!corpus.path && !queries.path && !queries.from_corpus && queries.n == 0)
        throw std::invalid_argument("config: synthetic queries need n >= 1");
    attack.validate();
}

// ---------------------------------------------------------------------------
// Pipeline

RunReport run_attack_experiment(const ExperimentConfig& config) {
    config.validate();
    RunReport run;
    run.config_echo = config.to_json();
    json& report = run.report;

    Corpus corpus;
    QuerySet queries;
    auto t0 = Clock::now();
    try {
        if (config.corpus.path) {
            corpus = load_corpus(*config.corpus.path, *config.corpus.format, config.metric);
            if (config.corpus.subsample_n_seed)
                corpus = subsample(corpus, config.corpus.subsample_n_seed->first,
                                   config.corpus.subsample_n_seed->second);
        } else {
            corpus = sample_gaussian_corpus(*config.corpus.spectrum, config.corpus.n,
                                            config.corpus.seed, config.corpus.basis,
                                            config.metric);
        }
        if (config.queries.path) {
            queries = load_queries(*config.queries.path, *config.queries.format);
        } else if (config.queries.from_corpus) {
            const Corpus sampled = subsample(corpus, config.queries.n, config.queries.seed);
            queries.dim = sampled.dim;
            for (const auto& r : sampled.records) queries.queries.push_back(r.vector);
        } else {
            queries = sample_gaussian_queries(*config.corpus.spectrum, config.queries.n,
                                              config.queries.seed, config.corpus.basis);
        }
        if (queries.dim != corpus.dim)
            throw std::invalid_argument("query dimension does not match corpus");
    } catch (const std::exception& e) {
        stage_error("corpus", e);
    }
    report["corpus"] = {{"n", corpus.size()}, {"dim", corpus.dim},
                        {"queries", queries.size()}};
    run.timings_ms["corpus"] = ms_since(t0);

    // Resolve index parameters, optionally by recall tuning.
    t0 = Clock::now();
    IndexParams index_params = config.index;
    try {
        if (config.tune_target) {
            const std::size_t tune_k = config.k_list.front();
            const TuneResult tuned =
                tune_to_recall(corpus, config.tune_kind, queries, tune_k, *config.tune_target,
                               config.index_seed, config.tune_schedule);
            index_params = tuned.params;
            report["tuning"] = {{"target", *config.tune_target},
                                {"achieved_recall", tuned.achieved_recall}};
        }
    } catch (const std::exception& e) {
        stage_error("tune", e);
    }
    run.timings_ms["tune"] = ms_since(t0);

    // Clean baseline.
    t0 = Clock::now();
    std::vector<std::vector<SearchResult>> clean_truth_per_k;
    try {
        const IndexHandle clean_index = build_index(corpus, index_params, config.index_seed);
        json clean_block;
        for (std::size_t k : config.k_list) {
            const auto truth = batch_oracle(corpus, queries.queries, k);
            const auto got = batch_search(clean_index, queries.queries, k);
            clean_block["r_at_" + std::to_string(k)] = recall_at_k(got, truth, k);
            clean_truth_per_k.push_back(truth);
        }
        report["clean"] = clean_block;
    } catch (const std::exception& e) {
        stage_error("clean_baseline", e);
    }
    run.timings_ms["clean_baseline"] = ms_since(t0);

    // Attack.
    t0 = Clock::now();
    AttackResult attacked;
    try {
        attacked = config.attack.mode == AttackConfig::Mode::Global
                       ? global_centroid_attack(corpus, config.attack)
                       : cluster_wise_attack(corpus, config.attack);
    } catch (const std::exception& e) {
        stage_error("attack", e);
    }
    report["attack"] = {{"mode", config.attack.mode == AttackConfig::Mode::Global
                                     ? "global"
                                     : "cluster_wise"},
                        {"injected", attacked.injected},
                        {"sigma_used", attacked.sigma_used},
                        {"zero_injection", attacked.zero_injection}};
    run.timings_ms["attack"] = ms_since(t0);

    // Post-attack metrics on the rebuilt index.
    t0 = Clock::now();
    try {
        const IndexHandle poisoned_index =
            build_index(attacked.corpus, index_params, config.index_seed);
        std::unordered_set<RecordId> poison_ids;
        for (const auto& r : attacked.corpus.records)
            if (r.provenance == Provenance::Injected) poison_ids.insert(r.id);

        json post_block;
        for (std::size_t i = 0; i < config.k_list.size(); ++i) {
            const std::size_t k = config.k_list[i];
            const auto got = batch_search(poisoned_index, queries.queries, k);
            const MetricsReport metrics = attack_metrics(got, poison_ids, k);
            json entry = metrics_to_json(metrics);
            entry["r_at_k_vs_clean_truth"] = recall_at_k(got, clean_truth_per_k[i], k);
            post_block["k_" + std::to_string(k)] = entry;
        }
        report["post_attack"] = post_block;
    } catch (const std::exception& e) {
        stage_error("attack_metrics", e);
    }
    run.timings_ms["attack_metrics"] = ms_since(t0);

    // Optional defense evaluation.
    if (config.defense) {
        t0 = Clock::now();
        try {
            json defense_block;
            defense_block["kind"] = to_string(config.defense->kind);
            for (std::size_t k : config.k_list) {
                const DefenseEvaluation eval =
                    evaluate_defense(*config.defense, corpus, attacked.corpus, queries, k,
                                     index_params, config.index_seed);
                json entry;
                entry["attack"] = metrics_to_json(eval.attack_report);
                entry["utility_recall"] = eval.utility_recall;
                if (config.defense->kind == DefenseSpec::Kind::Detection) {
                    entry["removed_injected"] = eval.removed_injected;
                    entry["removed_benign"] = eval.removed_benign;
                }
                defense_block["k_" + std::to_string(k)] = entry;
            }
            report["defense"] = defense_block;
        } catch (const std::exception& e) {
            stage_error("defense", e);
        }
        run.timings_ms["defense"] = ms_since(t0);
    }

    // Optional theorem check on synthetic spectra.
    if (config.theorem_delta) {
        t0 = Clock::now();
        try {
            const CovarianceStats analytic = analytic_stats(*config.corpus.spectrum);
            const CovarianceStats estimated = estimate_covariance_stats(corpus);
            json block;
            block["analytic"] = theorem_to_json(
                check_condition(analytic, corpus.size(), *config.theorem_delta));
            block["estimated"] = theorem_to_json(
                check_condition(estimated, corpus.size(), *config.theorem_delta));
            block["estimated_stats"] = {{"m1", estimated.m1},
                                        {"m2", estimated.m2},
                                        {"l_op", estimated.l_op},
                                        {"d_eff", estimated.d_eff},
                                        {"eff_rank", estimated.eff_rank}};
            report["theorem"] = block;
        } catch (const std::exception& e) {
            stage_error("theorem", e);
        }
        run.timings_ms["theorem"] = ms_since(t0);
    }

    // Persist artifacts when an output directory is configured.
    if (!config.output_dir.empty()) {
        const auto dir = config.output_dir;
        std::filesystem::create_directories(dir);
        write_file_atomic(dir / "report.json", run.full_json().dump(2) + "\n");
        run.artifacts.push_back(dir / "report.json");
        write_file_atomic(dir / "metrics.csv", report_to_csv(report));
        run.artifacts.push_back(dir / "metrics.csv");
    }
    return run;
}

nlohmann::json RunReport::full_json() const {
    json obj;
    obj["config"] = config_echo;
    obj["report"] = report;
    obj["timings_ms"] = timings_ms;
    return obj;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "alpha") return SweepAxis::Alpha;
    if (s == "k" || s == "topk" || s == "top_k") return SweepAxis::TopK;
    if (s == "clusters" || s == "L") return SweepAxis::Clusters;
    if (s == "metric") return SweepAxis::Metric;
    throw std::invalid_argument("unknown sweep axis: " + s);
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, SweepAxis axis,
                                 const std::vector<json>& values,
                                 const std::filesystem::path& csv_path) {
    if (values.empty()) throw std::invalid_argument("run_sweep: no axis values");

    std::vector<SweepCell> cells;
    for (const json& value : values) {
        ExperimentConfig cfg = base;
        cfg.output_dir.clear();  // cells do not write their own artifacts
        SweepCell cell;
        cell.axis_value = value.is_string() ? value.get<std::string>() : value.dump();
        try {
            switch (axis) {
                case SweepAxis::Alpha: cfg.attack.alpha = value.get<double>(); break;
                case SweepAxis::TopK: cfg.k_list = {value.get<std::size_t>()}; break;
                case SweepAxis::Clusters:
                    cfg.attack.mode = AttackConfig::Mode::ClusterWise;
                    cfg.attack.num_clusters = value.get<std::size_t>();
                    break;
                case SweepAxis::Metric:
                    cfg.metric = metric_from_string(value.get<std::string>());
                    break;
            }
            cell.report = run_attack_experiment(cfg).report;
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
        cells.push_back(std::move(cell));
    }

    std::ostringstream csv;
    csv << "axis_value,k,mo_at_k,asr,mean_fpr,r_at_k_vs_clean_truth,error\n";
    for (const auto& cell : cells) {
        if (cell.failed) {
            csv << cell.axis_value << ",,,,,," << '"' << cell.error << '"' << "\n";
            continue;
        }
        for (const auto& [key, entry] : cell.report.at("post_attack").items()) {
            csv << cell.axis_value << ',' << entry.at("k").get<std::size_t>() << ','
                << format_double(entry.at("mo_at_k").get<double>()) << ','
                << format_double(entry.at("asr").get<double>()) << ','
                << (entry.at("mean_fpr").is_null()
                        ? std::string()
                        : format_double(entry.at("mean_fpr").get<double>()))
                << ',' << format_double(entry.at("r_at_k_vs_clean_truth").get<double>())
                << ",\n";
        }
    }
    if (!csv_path.empty()) write_file_atomic(csv_path, csv.str());
    return cells;
}

// ---------------------------------------------------------------------------
// Theory suite

nlohmann::json run_theory_suite(const TheorySuiteConfig& config) {
    if (config.spectra.empty() || config.sizes.empty())
        throw std::invalid_argument("run_theory_suite: empty sweep");

    json out;
    out["cells"] = json::array();
    std::ostringstream csv;
    csv << "spectrum,dim,n,delta,t1,t2,lhs,rhs,holds,d_eff,eff_rank,measured_fraction\n";

    for (std::size_t si = 0; si < config.spectra.size(); ++si) {
        const SpectrumSpec& spec = config.spectra[si];
        const CovarianceStats stats = analytic_stats(spec);
        for (std::size_t n : config.sizes) {
            const TheoremCheck check = check_condition(stats, n, config.delta);
            const double fraction = monte_carlo_verify(spec, n, config.delta, config.trials,
                                                       derive_seed(config.seed, si, n));
            json cell = theorem_to_json(check);
            cell["spectrum_index"] = si;
            cell["dim"] = spec.dim;
            cell["measured_fraction"] = fraction;
            out["cells"].push_back(cell);
            csv << si << ',' << spec.dim << ',' << n << ',' << format_double(config.delta)
                << ',' << format_double(check.t1) << ',' << format_double(check.t2) << ','
                << format_double(check.lhs) << ',' << format_double(check.rhs) << ','
                << (check.holds ? 1 : 0) << ',' << format_double(check.d_eff) << ','
                << format_double(check.eff_rank) << ',' << format_double(fraction) << "\n";
        }
    }

    if (config.published) {
        const json& p = *config.published;
        CovarianceStats stats;
        stats.m1 = p.at("m1").get<double>();
        stats.m2 = p.at("m2").get<double>();
        stats.l_op = p.at("l_op").get<double>();
        stats.d_eff = stats.m1 * stats.m1 / stats.m2;
        stats.eff_rank = stats.m1 / stats.l_op;
        std::optional<std::pair<double, double>> t_override;
        if (p.contains("t1") && p.contains("t2"))
            t_override = {{p["t1"].get<double>(), p["t2"].get<double>()}};
        out["published_check"] = theorem_to_json(check_condition(
            stats, p.at("n").get<std::size_t>(), p.at("delta").get<double>(), t_override));
    }

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        write_file_atomic(config.output_dir / "theory.csv", csv.str());
        write_file_atomic(config.output_dir / "theory.json", out.dump(2) + "\n");
    }
    return out;
}

}  // namespace bhlab
