#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace denfuse {

using Rng = std::mt19937_64;

/// Stream tags keep the purposes of derived seeds apart.
enum class Stream : std::uint64_t {
    truth = 1,
    scans = 2,
    network = 3,
    init = 4,
    layout = 5,
};

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Hierarchical seed: derive(master, {run, step, sensor}) gives a stream that
/// is unaffected by how many siblings exist at any level.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                                  std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(parent);
    for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream stream,
                                                  std::initializer_list<std::uint64_t> path = {}) noexcept {
    std::uint64_t s = derive_seed(parent, {static_cast<std::uint64_t>(stream)});
    for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

}  // namespace denfuse
