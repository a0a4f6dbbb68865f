/**
 * @file decomposition.hpp
 * @brief CP/PARAFAC fitting by alternating least squares, with and without a
 *        fixed elementwise mask.
 *
 * One ALS sweep updates A, B then C, each by an exact linear least-squares
 * solve on the matching unfolding, then rescales A and B to unit-norm
 * columns (scale folded into C). The relative residual recorded after every
 * sweep is therefore non-increasing.
 *
 * The masked fit minimizes || Y - CP(A,B,C) * D ||_F. When every entry of D
 * has unit modulus this equals || Y * conj(D) - CP(A,B,C) ||_F, so the default
 * solver demodulates once and runs the standard sweep. The weighted solver
 * handles any nonzero mask with one weighted least-squares problem per row
 * of the updated factor.
 */
#pragma once

#include "stmimo/radar.hpp"
#include "stmimo/random.hpp"
#include "stmimo/tensor.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace stmimo {

enum class AlsInit { random, svd };

enum class MaskedSolver {
    automatic,   // demodulate for unit-modulus masks, weighted otherwise
    demodulate,  // requires a unit-modulus mask
    weighted,
};

struct AlsOptions {
    std::size_t max_iters = 500;
    double rel_tol = 1e-8;
    std::size_t restarts = 3;
    AlsInit init = AlsInit::random;
    Seed seed = 0;

    void validate() const;
};

struct FactorInit {
    CMatrix a, b, c;
};

struct FactorSet {
    CMatrix a, b, c;
    double fit = 0.0;  // ||Y - model||_F / ||Y||_F, 0 for an all-zero Y
    std::size_t iters_used = 0;
    std::vector<double> residual_history;
    bool converged = false;
    bool swamp = false;          // some factor has condition number above 1e8
    bool identifiable = true;    // rank bound satisfied for the fitted dims
    std::size_t restart = 0;     // index of the restart that won
    std::vector<std::size_t> zero_columns;  // columns normalize_factors left alone

    std::size_t rank() const { return static_cast<std::size_t>(a.cols()); }
};

/// min(d1,K) + min(d2,K) + min(d3,K) >= 2K + 2.
bool satisfies_rank_bound(const Dims3& dims, std::size_t k);

/// Initial factors for restart `restart` of a fit of `t` (the tensor the
/// sweep will see, i.e. already demodulated for the masked path).
FactorInit initial_factors(const Tensor3& t, std::size_t k, const AlsOptions& opts, std::size_t restart);

/// Standard ALS; best of opts.restarts restarts. Throws std::invalid_argument
/// when k exceeds every pairwise product of the dims.
FactorSet als_standard(const Tensor3& t, std::size_t k, const AlsOptions& opts);

/// Single standard ALS run from a given initialization.
FactorSet als_standard_from(const Tensor3& t, const FactorInit& init, const AlsOptions& opts);

FactorSet als_masked(const Tensor3& t, const MaskTensor& mask, std::size_t k, const AlsOptions& opts,
                     MaskedSolver solver = MaskedSolver::automatic);

FactorSet als_masked_from(const Tensor3& t, const MaskTensor& mask, const FactorInit& init, const AlsOptions& opts,
                          MaskedSolver solver = MaskedSolver::automatic);

/// Unit-norm A and B columns whose first nonzero entry is real positive;
/// the compensating complex scale moves into C. Zero columns are left
/// untouched and listed in zero_columns.
FactorSet normalize_factors(FactorSet f);

bool is_unit_modulus(const Tensor3& t, double tol = 1e-12);

}  // namespace stmimo
