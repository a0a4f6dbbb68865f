#pragma once

#include "stmimo/tensor.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace stmimo {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derive an independent stream seed from a base seed and a path of indices
/// (e.g. {trial, snr_index, purpose}). Pure function of its inputs.
Seed derive_seed(Seed base, std::initializer_list<std::uint64_t> path) noexcept;

/// Circular complex Gaussian CN(0, variance).
cplx complex_gaussian(Rng& rng, double variance = 1.0);

CMatrix complex_gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double variance = 1.0);

}  // namespace stmimo
