#include "bhlab/index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "bhlab/clustering.hpp"
#include "bhlab/geometry.hpp"
#include "bhlab/parallel.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

namespace {

constexpr std::uint64_t kIvfTrainStream = 0x495646ULL;

struct HnswGraph {
    std::size_t max_degree0 = 0;
    std::size_t max_degree = 0;
    double level_factor = 0.0;
    int max_level = -1;
    std::uint32_t entry = 0;
    std::vector<int> levels;
    // adjacency[level][node] -> neighbor positions; upper levels only
    // populated for nodes that reach them.
    std::vector<std::vector<std::vector<std::uint32_t>>> adjacency;
};

struct Candidate {
    double distance;
    std::uint32_t node;
};

inline bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.node < b.node;
}

struct NearestFirst {
    bool operator()(const Candidate& a, const Candidate& b) const {
        return candidate_less(b, a);
    }
};
struct FarthestFirst {
    bool operator()(const Candidate& a, const Candidate& b) const {
        return candidate_less(a, b);
    }
};

}  // namespace

struct IndexHandle::Impl {
    IndexParams params;
    DistanceMetric metric = DistanceMetric::Euclidean;
    std::uint64_t seed = 0;
    const Corpus* corpus = nullptr;
    std::size_t n = 0;
    std::size_t dim = 0;

    std::vector<float> data;       // packed raw vectors
    std::vector<RecordId> ids;     // by position
    std::vector<double> norms;     // row norms (cosine only)

    // IVF-Flat state
    std::vector<float> coarse_centroids;
    std::vector<double> coarse_norms;
    std::vector<std::vector<std::uint32_t>> lists;

    // HNSW state
    HnswGraph graph;

    double dist_to(std::size_t pos, const float* query, double query_norm) const {
        const float* row = data.data() + pos * dim;
        if (metric == DistanceMetric::Euclidean) return detail::l2_dist(row, query, dim);
        return detail::cosine_dist_prenorm(row, query, dim, norms[pos], query_norm);
    }

    double query_norm_for(const float* query) const {
        if (metric == DistanceMetric::Euclidean) return 0.0;
        const double qn = detail::norm(query, dim);
        if (qn == 0.0)
            throw std::invalid_argument("search: cosine undefined for zero query vector");
        return qn;
    }

    SearchResult search_flat(const float* query, std::size_t k) const;
    SearchResult search_ivf(const float* query, std::size_t k) const;
    SearchResult search_hnsw(const float* query, std::size_t k) const;

    void build_ivf();
    void build_hnsw();
    std::vector<Candidate> hnsw_search_layer(const float* query, double query_norm,
                                             std::uint32_t entry, std::size_t ef,
                                             int level) const;
};

// ---------------------------------------------------------------------------
// Flat

SearchResult IndexHandle::Impl::search_flat(const float* query, std::size_t k) const {
    const double qn = query_norm_for(query);
    std::vector<double> dists(n);
    kernels::metric_distances(data.data(), n, dim, norms.empty() ? nullptr : norms.data(),
                              query, qn, metric, dists.data());
    SearchResult result;
    result.hits = kernels::top_k_hits(dists.data(), ids.data(), n, k);
    return result;
}

// ---------------------------------------------------------------------------
// IVF-Flat

void IndexHandle::Impl::build_ivf() {
    auto& p = std::get<IvfFlatParams>(params);
    if (p.nlist == 0)
        p.nlist = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(n))));
    if (p.nlist > n)
        throw std::invalid_argument("ivf-flat: nlist exceeds corpus size");
    if (p.nprobe < 1 || p.nprobe > p.nlist)
        throw std::invalid_argument("ivf-flat: require 1 <= nprobe <= nlist");

    // Coarse quantizer: short k-means run, enough for routing.
    const Clustering coarse =
        kmeans(*corpus, p.nlist, derive_seed(seed, kIvfTrainStream), 25, 1e-3);
    coarse_centroids.resize(p.nlist * dim);
    for (std::size_t j = 0; j < p.nlist; ++j)
        std::copy(coarse.centroids[j].begin(), coarse.centroids[j].end(),
                  coarse_centroids.begin() + static_cast<std::ptrdiff_t>(j * dim));
    if (metric == DistanceMetric::Cosine) {
        coarse_norms.resize(p.nlist);
        kernels::row_norms(coarse_centroids.data(), p.nlist, dim, coarse_norms.data());
    }
    lists.assign(p.nlist, {});
    for (std::size_t i = 0; i < n; ++i)
        lists[coarse.assignments[i]].push_back(static_cast<std::uint32_t>(i));
}

SearchResult IndexHandle::Impl::search_ivf(const float* query, std::size_t k) const {
    const auto& p = std::get<IvfFlatParams>(params);
    const double qn = query_norm_for(query);

    std::vector<Candidate> coarse(p.nlist);
    for (std::size_t j = 0; j < p.nlist; ++j) {
        const float* c = coarse_centroids.data() + j * dim;
        double d;
        if (metric == DistanceMetric::Euclidean) {
            d = detail::l2_dist(c, query, dim);
        } else {
            // A zero-norm centroid cannot be ranked under cosine; probe last.
            d = coarse_norms[j] == 0.0
                    ? std::numeric_limits<double>::infinity()
                    : detail::cosine_dist_prenorm(c, query, dim, coarse_norms[j], qn);
        }
        coarse[j] = Candidate{d, static_cast<std::uint32_t>(j)};
    }
    std::partial_sort(coarse.begin(), coarse.begin() + static_cast<std::ptrdiff_t>(p.nprobe),
                      coarse.end(), candidate_less);

    std::vector<std::uint32_t> positions;
    for (std::size_t j = 0; j < p.nprobe; ++j) {
        const auto& list = lists[coarse[j].node];
        positions.insert(positions.end(), list.begin(), list.end());
    }

    std::vector<double> dists(positions.size());
    std::vector<RecordId> cand_ids(positions.size());
    par::parallel_for(positions.size(), [&](std::size_t c) {
        dists[c] = dist_to(positions[c], query, qn);
        cand_ids[c] = ids[positions[c]];
    });
    SearchResult result;
    result.hits = kernels::top_k_hits(dists.data(), cand_ids.data(), positions.size(), k);
    return result;
}

// ---------------------------------------------------------------------------
// HNSW

void IndexHandle::Impl::build_hnsw() {
    const auto& p = std::get<HnswParams>(params);
    if (p.m < 2) throw std::invalid_argument("hnsw: m must be >= 2");
    if (p.ef_construction < p.m)
        throw std::invalid_argument("hnsw: ef_construction must be >= m");
    if (p.ef_search < 1) throw std::invalid_argument("hnsw: ef_search must be >= 1");

    graph.max_degree = p.m;
    graph.max_degree0 = 2 * p.m;
    graph.level_factor = 1.0 / std::log(static_cast<double>(p.m));
    graph.levels.assign(n, 0);

    std::mt19937_64 rng(derive_seed(seed, 0x484E5357ULL));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int top = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double u = unit(rng);
        if (u <= 0.0) u = std::numeric_limits<double>::min();
        const int level = static_cast<int>(-std::log(u) * graph.level_factor);
        graph.levels[i] = level;
        top = std::max(top, level);
    }
    graph.adjacency.assign(static_cast<std::size_t>(top) + 1,
                           std::vector<std::vector<std::uint32_t>>(n));

    auto dist_between = [&](std::uint32_t a, std::uint32_t b) {
        const float* ra = data.data() + static_cast<std::size_t>(a) * dim;
        const float* rb = data.data() + static_cast<std::size_t>(b) * dim;
        if (metric == DistanceMetric::Euclidean) return detail::l2_dist(ra, rb, dim);
        return detail::cosine_dist_prenorm(ra, rb, dim, norms[a], norms[b]);
    };

    auto prune_neighbors = [&](std::uint32_t node, int level) {
        auto& nb = graph.adjacency[static_cast<std::size_t>(level)][node];
        const std::size_t cap = level == 0 ? graph.max_degree0 : graph.max_degree;
        if (nb.size() <= cap) return;
        std::vector<Candidate> cands;
        cands.reserve(nb.size());
        for (std::uint32_t other : nb) cands.push_back({dist_between(node, other), other});
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(cap),
                          cands.end(), candidate_less);
        nb.clear();
        for (std::size_t c = 0; c < cap; ++c) nb.push_back(cands[c].node);
    };

    graph.max_level = -1;
    for (std::uint32_t i = 0; i < n; ++i) {
        const int node_level = graph.levels[i];
        const float* q = data.data() + static_cast<std::size_t>(i) * dim;
        const double qn = metric == DistanceMetric::Cosine ? norms[i] : 0.0;

        if (graph.max_level < 0) {
            graph.entry = i;
            graph.max_level = node_level;
            continue;
        }

        std::uint32_t ep = graph.entry;
        for (int level = graph.max_level; level > node_level; --level) {
            bool improved = true;
            double best = dist_between(ep, i);
            while (improved) {
                improved = false;
                for (std::uint32_t nb : graph.adjacency[static_cast<std::size_t>(level)][ep]) {
                    const double d = dist_between(nb, i);
                    if (d < best || (d == best && nb < ep)) {
                        best = d;
                        ep = nb;
                        improved = true;
                    }
                }
            }
        }

        for (int level = std::min(node_level, graph.max_level); level >= 0; --level) {
            auto found =
                hnsw_search_layer(q, qn, ep, std::get<HnswParams>(params).ef_construction,
                                  level);
            // Simple nearest-m selection.
            const std::size_t want = std::min(graph.max_degree, found.size());
            auto& nb = graph.adjacency[static_cast<std::size_t>(level)][i];
            for (std::size_t c = 0; c < want; ++c) {
                const std::uint32_t other = found[c].node;
                nb.push_back(other);
                graph.adjacency[static_cast<std::size_t>(level)][other].push_back(i);
                prune_neighbors(other, level);
            }
            if (!found.empty()) ep = found.front().node;
        }

        if (node_level > graph.max_level) {
            graph.max_level = node_level;
            graph.entry = i;
        }
    }
}

std::vector<Candidate> IndexHandle::Impl::hnsw_search_layer(const float* query,
                                                            double query_norm,
                                                            std::uint32_t entry, std::size_t ef,
                                                            int level) const {
    std::priority_queue<Candidate, std::vector<Candidate>, NearestFirst> frontier;
    std::priority_queue<Candidate, std::vector<Candidate>, FarthestFirst> nearest;
    std::vector<std::uint8_t> visited(n, 0);

    const Candidate start{dist_to(entry, query, query_norm), entry};
    frontier.push(start);
    nearest.push(start);
    visited[entry] = 1;

    while (!frontier.empty()) {
        const Candidate current = frontier.top();
        frontier.pop();
        if (nearest.size() >= ef && candidate_less(nearest.top(), current)) break;
        for (std::uint32_t nb : graph.adjacency[static_cast<std::size_t>(level)][current.node]) {
            if (visited[nb]) continue;
            visited[nb] = 1;
            const Candidate cand{dist_to(nb, query, query_norm), nb};
            if (nearest.size() < ef || candidate_less(cand, nearest.top())) {
                frontier.push(cand);
                nearest.push(cand);
                if (nearest.size() > ef) nearest.pop();
            }
        }
    }

    std::vector<Candidate> out;
    out.reserve(nearest.size());
    while (!nearest.empty()) {
        out.push_back(nearest.top());
        nearest.pop();
    }
    std::sort(out.begin(), out.end(), candidate_less);
    return out;
}

SearchResult IndexHandle::Impl::search_hnsw(const float* query, std::size_t k) const {
    const auto& p = std::get<HnswParams>(params);
    const double qn = query_norm_for(query);

    std::uint32_t ep = graph.entry;
    for (int level = graph.max_level; level >= 1; --level) {
        bool improved = true;
        double best = dist_to(ep, query, qn);
        while (improved) {
            improved = false;
            for (std::uint32_t nb : graph.adjacency[static_cast<std::size_t>(level)][ep]) {
                const double d = dist_to(nb, query, qn);
                if (d < best || (d == best && nb < ep)) {
                    best = d;
                    ep = nb;
                    improved = true;
                }
            }
        }
    }

    const std::size_t ef = std::max(p.ef_search, k);
    auto found = hnsw_search_layer(query, qn, ep, ef, 0);

    std::vector<Hit> hits;
    hits.reserve(found.size());
    for (const auto& c : found) hits.push_back(Hit{ids[c.node], c.distance});
    std::sort(hits.begin(), hits.end(), hit_less);
    hits.resize(std::min(k, hits.size()));

    SearchResult result;
    result.hits = std::move(hits);
    return result;
}

// ---------------------------------------------------------------------------
// Handle plumbing

IndexHandle::IndexHandle() = default;
IndexHandle::~IndexHandle() = default;
IndexHandle::IndexHandle(IndexHandle&&) noexcept = default;
IndexHandle& IndexHandle::operator=(IndexHandle&&) noexcept = default;

const IndexParams& IndexHandle::params() const { return impl_->params; }

void IndexHandle::set_search_param(std::size_t value) {
    if (auto* ivf = std::get_if<IvfFlatParams>(&impl_->params)) {
        if (value < 1 || value > ivf->nlist)
            throw std::invalid_argument("set_search_param: nprobe out of [1, nlist]");
        ivf->nprobe = value;
        return;
    }
    if (auto* hnsw = std::get_if<HnswParams>(&impl_->params)) {
        if (value < 1) throw std::invalid_argument("set_search_param: ef_search must be >= 1");
        hnsw->ef_search = value;
        return;
    }
    throw std::invalid_argument("set_search_param: flat index has no search-time parameter");
}
DistanceMetric IndexHandle::metric() const { return impl_->metric; }
std::size_t IndexHandle::size() const { return impl_->n; }
std::size_t IndexHandle::dim() const { return impl_->dim; }
std::uint64_t IndexHandle::build_seed() const { return impl_->seed; }
const Corpus& IndexHandle::corpus() const { return *impl_->corpus; }


SearchResult IndexHandle::search(std::span<const float> query, std::size_t k) const {
    if (query.size() != impl_->dim)
        throw std::invalid_argument("search: query dimension mismatch");
    if (k < 1) throw std::invalid_argument("search: k must be >= 1");
    switch (kind_of(impl_->params)) {
        case IndexKind::Flat: return impl_->search_flat(query.data(), k);
        case IndexKind::IvfFlat: return impl_->search_ivf(query.data(), k);
        case IndexKind::Hnsw: return impl_->search_hnsw(query.data(), k);
    }
    throw std::logic_error("search: unknown index kind");
}

IndexHandle build_index(const Corpus& corpus, const IndexParams& params, std::uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("build_index: empty corpus");
    IndexHandle handle;
    handle.impl_ = std::make_unique<IndexHandle::Impl>();
    auto& impl = *handle.impl_;
    impl.params = params;
    impl.metric = corpus.metric;
    impl.seed = seed;
    impl.corpus = &corpus;
    impl.n = corpus.size();
    impl.dim = corpus.dim;
    impl.data = corpus.packed();
    impl.ids = corpus.ids();
    if (impl.metric == DistanceMetric::Cosine) {
        impl.norms.resize(impl.n);
        kernels::row_norms(impl.data.data(), impl.n, impl.dim, impl.norms.data());
        for (double nn : impl.norms)
            if (nn == 0.0)
                throw std::invalid_argument(
                    "build_index: cosine corpus contains a zero vector");
    }
    switch (kind_of(params)) {
        case IndexKind::Flat: break;
        case IndexKind::IvfFlat: impl.build_ivf(); break;
        case IndexKind::Hnsw: impl.build_hnsw(); break;
    }
    return handle;
}

SearchResult search(const IndexHandle& index, std::span<const float> query, std::size_t k) {
    return index.search(query, k);
}

SearchResult brute_force_oracle(const Corpus& corpus, std::span<const float> query,
                                std::size_t k, DistanceMetric metric) {
    if (corpus.empty()) throw std::invalid_argument("brute_force_oracle: empty corpus");
    if (k < 1) throw std::invalid_argument("brute_force_oracle: k must be >= 1");
    std::vector<Hit> hits;
    hits.reserve(corpus.size());
    for (const auto& r : corpus.records)
        hits.push_back(Hit{r.id, distance(query, r.vector, metric)});
    const std::size_t take = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take),
                      hits.end(), hit_less);
    hits.resize(take);
    SearchResult result;
    result.hits = std::move(hits);
    return result;
}

// ---------------------------------------------------------------------------
// Recall tuning

namespace {

std::vector<std::unordered_set<RecordId>> oracle_id_sets(const Corpus& corpus,
                                                         const QuerySet& queries,
                                                         std::size_t k) {
    std::vector<std::unordered_set<RecordId>> truth(queries.size());
    par::parallel_for(queries.size(), [&](std::size_t q) {
        const auto result = brute_force_oracle(corpus, queries.queries[q], k, corpus.metric);
        for (const auto& h : result.hits) truth[q].insert(h.id);
    });
    return truth;
}

double measured_recall(const IndexHandle& index,
                       const std::vector<std::unordered_set<RecordId>>& truth,
                       const QuerySet& queries, std::size_t k) {
    std::vector<double> per_query(queries.size());
    par::parallel_for(queries.size(), [&](std::size_t q) {
        const auto got = index.search(queries.queries[q], k);
        std::size_t overlap = 0;
        for (const auto& h : got.hits) overlap += truth[q].count(h.id);
        per_query[q] = static_cast<double>(overlap) / static_cast<double>(k);
    });
    double total = 0.0;
    for (double r : per_query) total += r;
    return total / static_cast<double>(queries.size());
}

std::vector<std::size_t> default_schedule(IndexKind kind, std::size_t limit) {
    std::vector<std::size_t> values;
    const std::size_t start = kind == IndexKind::IvfFlat ? 1 : 8;
    for (std::size_t v = start; v < limit; v *= 2) values.push_back(v);
    values.push_back(limit);
    return values;
}

}  // namespace

TuneResult tune_to_recall(const Corpus& corpus, IndexKind kind, const QuerySet& queries,
                          std::size_t k, double target, std::uint64_t seed,
                          const std::vector<std::size_t>& schedule) {
    if (queries.empty()) throw std::invalid_argument("tune_to_recall: empty query set");
    if (!(target > 0.0 && target <= 1.0))
        throw std::invalid_argument("tune_to_recall: target must be in (0, 1]");

    TuneResult result;
    if (kind == IndexKind::Flat) {
        result.params = FlatParams{};
        result.achieved_recall = 1.0;
        return result;
    }

    const auto truth = oracle_id_sets(corpus, queries, k);

    const bool is_ivf = kind == IndexKind::IvfFlat;
    IndexParams build_params;
    std::size_t limit;
    if (is_ivf) {
        IvfFlatParams p;
        p.nlist = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(corpus.size()))));
        p.nprobe = 1;
        limit = p.nlist;
        build_params = p;
    } else {
        build_params = HnswParams{};
        limit = corpus.size();
    }
    IndexHandle index = build_index(corpus, build_params, seed);

    const auto values = schedule.empty() ? default_schedule(kind, limit) : schedule;
    double best = 0.0;
    for (std::size_t v : values) {
        if (v < 1 || (is_ivf && v > limit)) continue;
        index.set_search_param(v);
        const double recall = measured_recall(index, truth, queries, k);
        result.schedule_recalls.emplace_back(v, recall);
        best = std::max(best, recall);
        if (recall >= target) {
            result.params = index.params();
            result.achieved_recall = recall;
            return result;
        }
    }
    throw std::runtime_error("tune_to_recall: target " + std::to_string(target) +
                             " unreachable; best achieved recall " + std::to_string(best));
}

IndexKind kind_of(const IndexParams& params) {
    if (std::holds_alternative<FlatParams>(params)) return IndexKind::Flat;
    if (std::holds_alternative<IvfFlatParams>(params)) return IndexKind::IvfFlat;
    return IndexKind::Hnsw;
}

const char* to_string(IndexKind kind) {
    switch (kind) {
        case IndexKind::Flat: return "flat";
        case IndexKind::IvfFlat: return "ivf_flat";
        case IndexKind::Hnsw: return "hnsw";
    }
    return "?";
}

IndexKind index_kind_from_string(const std::string& s) {
    if (s == "flat") return IndexKind::Flat;
    if (s == "ivf_flat" || s == "ivf-flat" || s == "ivf") return IndexKind::IvfFlat;
    if (s == "hnsw") return IndexKind::Hnsw;
    throw std::invalid_argument("unknown index kind: " + s);
}

}  // namespace bhlab
