#pragma once

#include <cstdint>
#include <random>

#include "qlab/linalg.hpp"

namespace qlab {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream for draw `index` under `master_seed`.
Rng derive_rng(std::uint64_t master_seed, std::uint64_t index);

Vector gaussian_vector(Index n, Rng& rng);
Matrix gaussian_matrix(Index rows, Index cols, Rng& rng);

// Uniform point on the unit sphere in R^n.
Vector sphere_vector(Index n, Rng& rng);

}  // namespace qlab
