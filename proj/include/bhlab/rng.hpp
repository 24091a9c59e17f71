#pragma once

#include <cstdint>

namespace bhlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stream derivation for order-independent parallel draws: every consumer
/// seeds its own engine from (base seed, stream index[, sub index]).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t sub = 0) {
    std::uint64_t s = splitmix64(base);
    s = splitmix64(s ^ (stream + 0x632BE59BD9B4E019ULL));
    if (sub != 0) s = splitmix64(s ^ (sub * 0xD6E8FEB86659FD93ULL));
    return s;
}

}  // namespace bhlab
