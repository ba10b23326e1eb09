#include "utabc/random.hpp"

namespace utabc {

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> indices) {
    std::uint64_t h = mix64(base);
    for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
    return h;
}

Vector standard_normal_vector(Eigen::Index dim, RandomEngine& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = normal(rng);
    return z;
}

}  // namespace utabc
