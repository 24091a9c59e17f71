#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bhlab/kernels.hpp"
#include "bhlab/types.hpp"

namespace bhlab {

enum class IndexKind { Flat, IvfFlat, Hnsw };

struct FlatParams {
    friend bool operator==(const FlatParams&, const FlatParams&) = default;
};

/// nlist == 0 selects ceil(sqrt(n)) at build time.
struct IvfFlatParams {
    std::size_t nlist = 0;
    std::size_t nprobe = 1;
    friend bool operator==(const IvfFlatParams&, const IvfFlatParams&) = default;
};

struct HnswParams {
    std::size_t m = 16;
    std::size_t ef_construction = 200;
    std::size_t ef_search = 64;
    friend bool operator==(const HnswParams&, const HnswParams&) = default;
};

using IndexParams = std::variant<FlatParams, IvfFlatParams, HnswParams>;

IndexKind kind_of(const IndexParams& params);
const char* to_string(IndexKind kind);
IndexKind index_kind_from_string(const std::string& s);

/// Ranked top-K answer for one query. Hits are in (distance, id) order and
/// record ids are distinct.
struct SearchResult {
    std::optional<RecordId> query_id;
    std::vector<Hit> hits;
};

/// A built index over a corpus snapshot. Immutable after build; concurrent
/// searches are safe. The corpus must outlive the handle.
class IndexHandle {
public:
    IndexHandle();
    ~IndexHandle();
    IndexHandle(IndexHandle&&) noexcept;
    IndexHandle& operator=(IndexHandle&&) noexcept;

    SearchResult search(std::span<const float> query, std::size_t k) const;

    /// Adjusts the search-time knob (nprobe for IVF-Flat, ef_search for
    /// HNSW) without touching the built structure. Throws for Flat.
    void set_search_param(std::size_t value);

    const IndexParams& params() const;
    DistanceMetric metric() const;
    std::size_t size() const;
    std::size_t dim() const;
    std::uint64_t build_seed() const;
    const Corpus& corpus() const;

private:
    friend IndexHandle build_index(const Corpus& corpus, const IndexParams& params,
                                   std::uint64_t seed);
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Builds an index. Structure is deterministic per (corpus order, params,
/// seed). Flat needs no auxiliary state; IVF-Flat trains its coarse
/// quantizer with this repo's k-means; HNSW inserts in corpus order.
IndexHandle build_index(const Corpus& corpus, const IndexParams& params, std::uint64_t seed);

SearchResult search(const IndexHandle& index, std::span<const float> query, std::size_t k);

/// Exact top-K by plain scan + partial sort, implemented independently of
/// the index machinery so it can serve as ground truth for the Flat path.
SearchResult brute_force_oracle(const Corpus& corpus, std::span<const float> query,
                                std::size_t k, DistanceMetric metric);

struct TuneResult {
    IndexParams params;
    double achieved_recall = 0.0;
    std::vector<std::pair<std::size_t, double>> schedule_recalls;  // (value, recall)
};

/// Walks a fixed ascending schedule (nprobe for IVF-Flat, ef_search for
/// HNSW) and returns the cheapest setting whose measured R@K against the
/// brute-force oracle reaches `target`. Throws, naming the best achieved
/// recall, when the target is unreachable within the schedule.
TuneResult tune_to_recall(const Corpus& corpus, IndexKind kind, const QuerySet& queries,
                          std::size_t k, double target, std::uint64_t seed,
                          const std::vector<std::size_t>& schedule = {});

}  // namespace bhlab
