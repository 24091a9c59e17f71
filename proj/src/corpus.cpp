#include "bhlab/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace bhlab {

namespace {

using nlohmann::json;

void check_finite(const std::vector<float>& v, const std::string& where) {
    for (float x : v)
        if (!std::isfinite(x)) throw std::runtime_error(where + ": non-finite component");
}

void check_dim(std::size_t got, std::size_t expected, const std::string& where) {
    if (expected != 0 && got != expected)
        throw std::runtime_error(where + ": inconsistent dimension " + std::to_string(got) +
                                 " (expected " + std::to_string(expected) + ")");
}

Corpus load_vecbinary(const std::filesystem::path& path, DistanceMetric metric) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Corpus corpus;
    corpus.metric = metric;
    RecordId next_id = 0;
    while (true) {
        std::uint32_t d = 0;
        in.read(reinterpret_cast<char*>(&d), sizeof(d));
        if (in.gcount() == 0) break;
        if (in.gcount() != sizeof(d) || d == 0)
            throw std::runtime_error(path.string() + ": truncated or zero dimension prefix at record " +
                                     std::to_string(next_id));
        std::vector<float> v(d);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(d * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(d * sizeof(float)))
            throw std::runtime_error(path.string() + ": truncated vector at record " +
                                     std::to_string(next_id));
        check_dim(d, corpus.dim, path.string());
        check_finite(v, path.string() + " record " + std::to_string(next_id));
        corpus.dim = d;
        corpus.records.push_back(Record{next_id++, std::move(v), std::nullopt, Provenance::Benign});
    }
    if (corpus.records.empty()) throw std::runtime_error(path.string() + ": empty file");
    return corpus;
}

void save_vecbinary(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : corpus.records) {
        const std::uint32_t d = static_cast<std::uint32_t>(r.vector.size());
        out.write(reinterpret_cast<const char*>(&d), sizeof(d));
        out.write(reinterpret_cast<const char*>(r.vector.data()),
                  static_cast<std::streamsize>(d * sizeof(float)));
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

Corpus load_jsonl(const std::filesystem::path& path, DistanceMetric metric) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Corpus corpus;
    corpus.metric = metric;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        Record rec;
        try {
            rec.id = obj.at("id").get<RecordId>();
            rec.vector = obj.at("vector").get<std::vector<float>>();
            if (obj.contains("content") && !obj["content"].is_null())
                rec.content = obj["content"].get<std::string>();
            rec.provenance = obj.contains("provenance")
                                 ? provenance_from_string(obj["provenance"].get<std::string>())
                                 : Provenance::Benign;
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (rec.vector.empty())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": empty vector");
        check_dim(rec.vector.size(), corpus.dim, path.string() + ":" + std::to_string(line_no));
        check_finite(rec.vector, path.string() + ":" + std::to_string(line_no));
        corpus.dim = rec.vector.size();
        corpus.records.push_back(std::move(rec));
    }
    if (corpus.records.empty()) throw std::runtime_error(path.string() + ": empty file");
    return corpus;
}

void save_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : corpus.records) {
        json obj;
        obj["id"] = r.id;
        obj["vector"] = r.vector;
        obj["content"] = r.content ? json(*r.content) : json(nullptr);
        obj["provenance"] = to_string(r.provenance);
        out << obj.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

Corpus load_csv(const std::filesystem::path& path, DistanceMetric metric) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Corpus corpus;
    corpus.metric = metric;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 2)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected id plus at least one component");
        Record rec;
        {
            const auto& c = cells[0];
            auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), rec.id);
            if (ec != std::errc() || p != c.data() + c.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": bad id '" + c + "'");
        }
        rec.vector.reserve(cells.size() - 1);
        for (std::size_t i = 1; i < cells.size(); ++i) {
            try {
                std::size_t pos = 0;
                const float v = std::stof(cells[i], &pos);
                if (pos != cells[i].size()) throw std::invalid_argument(cells[i]);
                rec.vector.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": non-numeric cell '" + cells[i] + "'");
            }
        }
        check_dim(rec.vector.size(), corpus.dim, path.string() + ":" + std::to_string(line_no));
        check_finite(rec.vector, path.string() + ":" + std::to_string(line_no));
        corpus.dim = rec.vector.size();
        corpus.records.push_back(std::move(rec));
    }
    if (corpus.records.empty()) throw std::runtime_error(path.string() + ": empty file");
    return corpus;
}

void save_csv(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[64];
    for (const auto& r : corpus.records) {
        out << r.id;
        for (float v : r.vector) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
            (void)ec;
            out << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

void check_unique_ids(const Corpus& corpus, const std::string& where) {
    std::vector<RecordId> ids = corpus.ids();
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw std::runtime_error(where + ": duplicate record id");
}

}  // namespace

const char* to_string(FileFormat f) {
    switch (f) {
        case FileFormat::VecBinary: return "vecbin";
        case FileFormat::Jsonl: return "jsonl";
        case FileFormat::Csv: return "csv";
    }
    return "?";
}

FileFormat format_from_string(const std::string& s) {
    if (s == "vecbin" || s == "fvecs") return FileFormat::VecBinary;
    if (s == "jsonl") return FileFormat::Jsonl;
    if (s == "csv") return FileFormat::Csv;
    throw std::invalid_argument("unknown file format: " + s);
}

FileFormat format_from_path(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".fvecs" || ext == ".vecbin" || ext == ".bin") return FileFormat::VecBinary;
    if (ext == ".jsonl") return FileFormat::Jsonl;
    if (ext == ".csv") return FileFormat::Csv;
    throw std::invalid_argument("cannot infer format from extension '" + ext + "'");
}

Corpus load_corpus(const std::filesystem::path& path, FileFormat format, DistanceMetric metric) {
    Corpus corpus;
    switch (format) {
        case FileFormat::VecBinary: corpus = load_vecbinary(path, metric); break;
        case FileFormat::Jsonl: corpus = load_jsonl(path, metric); break;
        case FileFormat::Csv: corpus = load_csv(path, metric); break;
    }
    check_unique_ids(corpus, path.string());
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, FileFormat format) {
    switch (format) {
        case FileFormat::VecBinary: save_vecbinary(corpus, path); break;
        case FileFormat::Jsonl: save_jsonl(corpus, path); break;
        case FileFormat::Csv: save_csv(corpus, path); break;
    }
}

Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > corpus.size())
        throw std::invalid_argument("subsample: n out of range [1, " +
                                    std::to_string(corpus.size()) + "]");
    std::vector<std::size_t> idx(corpus.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first n slots are a uniform subset.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    Corpus out;
    out.dim = corpus.dim;
    out.metric = corpus.metric;
    out.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.records.push_back(corpus.records[idx[i]]);
    return out;
}

QuerySet load_queries(const std::filesystem::path& path, FileFormat format) {
    const Corpus c = load_corpus(path, format);
    QuerySet qs;
    qs.dim = c.dim;
    qs.queries.reserve(c.size());
    for (const auto& r : c.records) qs.queries.push_back(r.vector);
    return qs;
}

}  // namespace bhlab
