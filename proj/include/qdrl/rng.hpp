#pragma once

#include <cstdint>
#include <random>

namespace qdrl {

using RngEngine = std::mt19937_64;

/// splitmix64 finalizer, used to turn structured stream coordinates into
/// well-mixed 64-bit seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Purpose tags keep independent random streams from colliding. Every source
/// of randomness in a run is keyed by (master seed, generation, index,
/// purpose), so results do not depend on scheduling or worker count.
enum class Stream : std::uint64_t {
    init_genotype = 1,
    init_eval,
    learner_init,
    selection,
    training,
    variation,
    evaluation,
    actor_injection,
    actor_evaluation,
    reevaluation,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, Stream purpose) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ (a + 0x1000000001ull));
    h = splitmix64(h ^ (b + 0x2000000002ull));
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    return h;
}

inline RngEngine make_engine(std::uint64_t master, std::uint64_t a, std::uint64_t b, Stream purpose) {
    return RngEngine(derive_seed(master, a, b, purpose));
}

}  // namespace qdrl
