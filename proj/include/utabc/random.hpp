#pragma once

#include "utabc/linalg.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace utabc {

using RandomEngine = std::mt19937_64;

/// Mixes a base seed with stream indices into an independent 64-bit seed.
/// Used to give every proposal, round and repeat its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> indices);

inline RandomEngine make_engine(std::uint64_t base, std::initializer_list<std::uint64_t> indices) {
    return RandomEngine(derive_seed(base, indices));
}

Vector standard_normal_vector(Eigen::Index dim, RandomEngine& rng);

}  // namespace utabc
