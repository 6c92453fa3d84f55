#pragma once

#include <cstdint>
#include <random>

namespace dyson_ldp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the independent stream used by replica `replica` under master seed `seed`.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t replica) {
    return splitmix64(splitmix64(seed) ^ splitmix64(replica + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t replica) {
    std::seed_seq seq{static_cast<std::uint32_t>(derive_stream(seed, replica)),
                      static_cast<std::uint32_t>(derive_stream(seed, replica) >> 32)};
    return Engine(seq);
}

}  // namespace dyson_ldp
