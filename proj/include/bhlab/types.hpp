#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bhlab {

using RecordId = std::uint64_t;

enum class DistanceMetric { Euclidean, Cosine };

enum class Provenance { Benign, Injected };

/// One stored database entry: embedding plus optional text payload.
struct Record {
    RecordId id = 0;
    std::vector<float> vector;
    std::optional<std::string> content;
    Provenance provenance = Provenance::Benign;
};

/// An immutable-by-convention embedding collection. Every mutation in the
/// pipeline (attack, defense filtering) constructs a new Corpus.
struct Corpus {
    std::vector<Record> records;
    std::size_t dim = 0;
    DistanceMetric metric = DistanceMetric::Euclidean;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    std::size_t benign_count() const {
        std::size_t n = 0;
        for (const auto& r : records)
            if (r.provenance == Provenance::Benign) ++n;
        return n;
    }
    std::size_t injected_count() const { return records.size() - benign_count(); }

    /// Row-major copy of all vectors, for kernel consumption.
    std::vector<float> packed() const {
        std::vector<float> out(records.size() * dim);
        for (std::size_t i = 0; i < records.size(); ++i)
            std::copy(records[i].vector.begin(), records[i].vector.end(),
                      out.begin() + static_cast<std::ptrdiff_t>(i * dim));
        return out;
    }

    std::vector<RecordId> ids() const {
        std::vector<RecordId> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.id);
        return out;
    }

    RecordId max_id() const {
        RecordId m = 0;
        for (const auto& r : records) m = std::max(m, r.id);
        return m;
    }
};

/// Evaluation queries. Ids are positional (index in `queries`).
struct QuerySet {
    std::vector<std::vector<float>> queries;
    std::size_t dim = 0;

    std::size_t size() const { return queries.size(); }
    bool empty() const { return queries.empty(); }
};

const char* to_string(DistanceMetric m);
DistanceMetric metric_from_string(const std::string& s);

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

}  // namespace bhlab
