#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bhlab/types.hpp"

namespace bhlab {

enum class FileFormat { VecBinary, Jsonl, Csv };

const char* to_string(FileFormat f);
FileFormat format_from_string(const std::string& s);
FileFormat format_from_path(const std::filesystem::path& p);

/// Loads a corpus. Dimension is inferred from the first record and enforced.
/// VecBinary and Csv carry no provenance/payload, so all records load as
/// Benign; Jsonl restores full records. Throws with the offending line or
/// record on malformed input.
Corpus load_corpus(const std::filesystem::path& path, FileFormat format,
                   DistanceMetric metric = DistanceMetric::Euclidean);

/// Writes a corpus such that load_corpus reproduces it exactly for the
/// fields the format can express (VecBinary is bit-exact on vectors, Jsonl
/// preserves ids/content/provenance as well).
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, FileFormat format);

/// Uniform random subset of n records without replacement; deterministic
/// per seed. Record ids are preserved.
Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Loads a query set from any corpus format (ids/provenance discarded).
QuerySet load_queries(const std::filesystem::path& path, FileFormat format);

}  // namespace bhlab
