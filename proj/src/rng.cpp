#include "hybridsizer/rng.hpp"

#include <cmath>

namespace hsz {

double Rng::normal() {
    // Box-Muller, discarding the second variate
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform(); // log(0) guard
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t s = mix(master ^ 0x5851f42d4c957f2dULL);
    s = mix(s ^ (a + 0x9e3779b97f4a7c15ULL));
    s = mix(s ^ (b + 0xc2b2ae3d27d4eb4fULL));
    s = mix(s ^ (c + 0x165667b19e3779f9ULL));
    return s;
}

} // namespace hsz
