#include "bhlab/corpus.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

using namespace bhlab;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        dir_ = fs::temp_directory_path() /
               ("bhlab_corpus_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter_++));
        fs::create_directories(dir_);
    }
    ~TempDir() { fs::remove_all(dir_); }
    fs::path operator/(const std::string& name) const { return dir_ / name; }

private:
    fs::path dir_;
    static inline int counter_ = 0;
};

Corpus make_corpus(std::size_t n, std::size_t dim, std::uint64_t seed,
                   bool with_payloads = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    Corpus corpus;
    corpus.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        Record r;
        r.id = i;
        r.vector.resize(dim);
        for (auto& x : r.vector) x = normal(rng);
        if (with_payloads && i % 2 == 0) r.content = "payload " + std::to_string(i);
        if (with_payloads && i % 5 == 0) r.provenance = Provenance::Injected;
        corpus.records.push_back(std::move(r));
    }
    return corpus;
}

bool vectors_equal(const Corpus& a, const Corpus& b) {
    if (a.size() != b.size() || a.dim != b.dim) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.records[i].vector != b.records[i].vector) return false;
    return true;
}

}  // namespace

TEST(CorpusIo, JsonlSmallRoundTrip) {
    TempDir tmp;
    const auto path = tmp / "small.jsonl";
    {
        std::ofstream out(path);
        out << R"({"id":0,"vector":[1.0,2.0,3.0,4.0],"content":"a","provenance":"benign"})" << "\n";
        out << R"({"id":1,"vector":[5.0,6.0,7.0,8.0],"content":null,"provenance":"benign"})" << "\n";
        out << R"({"id":2,"vector":[9.0,1.0,2.0,3.0],"content":"c","provenance":"injected"})" << "\n";
    }
    const Corpus corpus = load_corpus(path, FileFormat::Jsonl);
    EXPECT_EQ(corpus.size(), 3u);
    EXPECT_EQ(corpus.dim, 4u);
    EXPECT_EQ(corpus.records[0].content, "a");
    EXPECT_FALSE(corpus.records[1].content.has_value());
    EXPECT_EQ(corpus.records[2].provenance, Provenance::Injected);
}

TEST(CorpusIo, VecBinaryBitExactRoundTrip) {
    TempDir tmp;
    const Corpus corpus = make_corpus(100, 13, 1);
    const auto path = tmp / "v.fvecs";
    save_corpus(corpus, path, FileFormat::VecBinary);
    const Corpus again = load_corpus(path, FileFormat::VecBinary);
    EXPECT_TRUE(vectors_equal(corpus, again));
    for (std::size_t i = 0; i < again.size(); ++i) {
        EXPECT_EQ(again.records[i].id, i);
        EXPECT_EQ(again.records[i].provenance, Provenance::Benign);
    }
}

TEST(CorpusIo, JsonlPreservesFullRecords) {
    TempDir tmp;
    const Corpus corpus = make_corpus(60, 7, 2, /*with_payloads=*/true);
    const auto path = tmp / "full.jsonl";
    save_corpus(corpus, path, FileFormat::Jsonl);
    const Corpus again = load_corpus(path, FileFormat::Jsonl);
    ASSERT_EQ(again.size(), corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        EXPECT_EQ(again.records[i].id, corpus.records[i].id);
        EXPECT_EQ(again.records[i].vector, corpus.records[i].vector);
        EXPECT_EQ(again.records[i].content, corpus.records[i].content);
        EXPECT_EQ(again.records[i].provenance, corpus.records[i].provenance);
    }
}

TEST(CorpusIo, CsvRoundTripAndErrors) {
    TempDir tmp;
    const Corpus corpus = make_corpus(40, 5, 3);
    const auto path = tmp / "c.csv";
    save_corpus(corpus, path, FileFormat::Csv);
    const Corpus again = load_corpus(path, FileFormat::Csv);
    EXPECT_TRUE(vectors_equal(corpus, again));

    const auto bad = tmp / "bad.csv";
    {
        std::ofstream out(bad);
        out << "0,1.5,2.5\n";
        out << "1,oops,2.5\n";
    }
    try {
        load_corpus(bad, FileFormat::Csv);
        FAIL() << "expected parse error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos)
            << "error should name line 2: " << e.what();
    }
}

TEST(CorpusIo, PropertyRoundTripAllFormats) {
    TempDir tmp;
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<std::size_t> n_dist(1, 50), d_dist(1, 24);
    for (int trial = 0; trial < 10; ++trial) {
        const Corpus corpus =
            make_corpus(n_dist(rng), d_dist(rng), rng(), /*with_payloads=*/trial % 2 == 0);
        for (auto format : {FileFormat::VecBinary, FileFormat::Jsonl, FileFormat::Csv}) {
            const auto path = tmp / ("t" + std::to_string(trial) + std::string(to_string(format)));
            save_corpus(corpus, path, format);
            const Corpus again = load_corpus(path, format);
            EXPECT_TRUE(vectors_equal(corpus, again));
            EXPECT_EQ(again.size(), corpus.size());  // no silent truncation
            if (format == FileFormat::Jsonl) {
                EXPECT_EQ(again.benign_count(), corpus.benign_count());
                EXPECT_EQ(again.injected_count(), corpus.injected_count());
            }
        }
    }
}

TEST(CorpusIo, ProvenancePartition) {
    const Corpus corpus = make_corpus(50, 4, 5, /*with_payloads=*/true);
    EXPECT_EQ(corpus.benign_count() + corpus.injected_count(), corpus.size());
}

TEST(CorpusIo, TenThousandRecordRoundTripNoDrift) {
    TempDir tmp;
    const Corpus corpus = make_corpus(10000, 16, 6);
    const auto path = tmp / "big.fvecs";
    save_corpus(corpus, path, FileFormat::VecBinary);
    // Byte-level oracle: saving the reloaded corpus reproduces the file.
    const Corpus again = load_corpus(path, FileFormat::VecBinary);
    const auto path2 = tmp / "big2.fvecs";
    save_corpus(again, path2, FileFormat::VecBinary);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    EXPECT_EQ(b1, b2);
    EXPECT_EQ(b1.size(), 10000u * (4 + 16 * 4));
}

TEST(CorpusIo, InconsistentDimensionThrows) {
    TempDir tmp;
    const auto path = tmp / "mixed.jsonl";
    {
        std::ofstream out(path);
        out << R"({"id":0,"vector":[1.0,2.0]})" << "\n";
        out << R"({"id":1,"vector":[1.0,2.0,3.0]})" << "\n";
    }
    EXPECT_THROW(load_corpus(path, FileFormat::Jsonl), std::runtime_error);
}

TEST(CorpusIo, EmptyFileThrows) {
    TempDir tmp;
    const auto path = tmp / "empty.jsonl";
    std::ofstream(path).close();
    EXPECT_THROW(load_corpus(path, FileFormat::Jsonl), std::runtime_error);
}

TEST(CorpusIo, DuplicateIdsThrow) {
    TempDir tmp;
    const auto path = tmp / "dup.jsonl";
    {
        std::ofstream out(path);
        out << R"({"id":7,"vector":[1.0]})" << "\n";
        out << R"({"id":7,"vector":[2.0]})" << "\n";
    }
    EXPECT_THROW(load_corpus(path, FileFormat::Jsonl), std::runtime_error);
}

TEST(Subsample, FullSizeIsPermutation) {
    const Corpus corpus = make_corpus(30, 3, 7);
    const Corpus sub = subsample(corpus, 30, 99);
    std::multiset<RecordId> a, b;
    for (const auto& r : corpus.records) a.insert(r.id);
    for (const auto& r : sub.records) b.insert(r.id);
    EXPECT_EQ(a, b);
}

TEST(Subsample, Deterministic) {
    const Corpus corpus = make_corpus(500, 4, 8);
    const Corpus s1 = subsample(corpus, 100, 5);
    const Corpus s2 = subsample(corpus, 100, 5);
    ASSERT_EQ(s1.size(), s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_EQ(s1.records[i].id, s2.records[i].id);
}

TEST(Subsample, DifferentSeedsDiffer) {
    const Corpus corpus = make_corpus(10000, 4, 9);
    const Corpus s1 = subsample(corpus, 100, 1);
    const Corpus s2 = subsample(corpus, 100, 2);
    std::set<RecordId> ids1, ids2;
    for (const auto& r : s1.records) ids1.insert(r.id);
    for (const auto& r : s2.records) ids2.insert(r.id);
    std::size_t overlap = 0;
    for (RecordId id : ids1) overlap += ids2.count(id);
    EXPECT_LT(overlap, 100u);
}

TEST(Subsample, OutOfRangeThrows) {
    const Corpus corpus = make_corpus(10, 2, 10);
    EXPECT_THROW(subsample(corpus, 0, 1), std::invalid_argument);
    EXPECT_THROW(subsample(corpus, 11, 1), std::invalid_argument);
}
