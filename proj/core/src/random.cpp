#include "kexp/random.hpp"

#include <cmath>

namespace kexp {

double Rng::exponential() {
    // 1 - u lies in (0, 1], so the log is finite.
    return -std::log(1.0 - uniform());
}

std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace kexp
