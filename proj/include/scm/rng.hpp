#pragma once

#include <cmath>
#include <cstdint>

namespace scm {

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, unit, index). Draws are independent of evaluation order,
// so enlarging a panel or running replications on many threads reproduces
// the same numbers, and replication r of a study can use seed ^ r without
// touching the draws of any other replication.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t unit, std::uint64_t index) {
    std::uint64_t h = mix64(seed ^ (stream * 0xd6e8feb86659fd93ULL));
    h = mix64(h ^ (unit * 0xa0761d6478bd642fULL));
    return mix64(h ^ index);
}

// Uniform on (0, 1); never returns 0 or 1.
inline double uniform(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t unit, std::uint64_t index) {
    std::uint64_t bits = key(seed, stream, unit, index);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two counter values.
inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t unit, std::uint64_t index) {
    double u1 = uniform(seed, stream, unit, 2 * index);
    double u2 = uniform(seed, stream, unit, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

// Integer in [0, n).
inline std::uint64_t below(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t unit, std::uint64_t index, std::uint64_t n) {
    return key(seed, stream, unit, index) % n;
}

// Stream ids used across the toolkit; fixed so outputs are reproducible
// across versions of the calling code.
enum Stream : std::uint64_t {
    kEta = 1,
    kArInit = 2,
    kInnovation = 3,
    kNu = 4,
    kAssign = 5,
    kFactorBasis = 6,
    kBootstrap = 7,
    kTestData = 8,
};

}  // namespace rng
}  // namespace scm
