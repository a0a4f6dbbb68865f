/**
 * @file estimator.hpp
 * @brief Joint DOD/DOA estimators for slow-time MIMO radar.
 *
 *  - estimate_proposed: subarray-augmented tensors fitted by masked ALS over
 *    all Q pulses, then shift invariance on the stacked factor;
 *  - baseline_parafac_small: standard ALS on the M x N x (Q/M) decimated
 *    tensor, shift invariance within each factor;
 *  - baseline_esprit: LS-ESPRIT on the MN x (Q/M) matricized decimated data
 *    with pairing by joint diagonalization.
 *
 * A shift-invariance eigenvalue lambda maps to sin(angle) = -arg(lambda)/pi.
 */
#pragma once

#include "stmimo/decomposition.hpp"
#include "stmimo/radar.hpp"
#include "stmimo/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace stmimo {

struct AnglePair {
    double dod = 0.0;  // radians
    double doa = 0.0;
};

struct EstimationResult {
    std::string method;
    std::vector<AnglePair> pairs;  // ascending by dod
    CVector gamma_tx;              // raw shift eigenvalues (estimates of diag Gamma_A)
    CVector gamma_rx;              // (diag Gamma_B)
    std::vector<double> fits;      // one per decomposition run
    std::vector<std::size_t> iters;
    bool not_converged = false;    // max_iters hit with fit > 0.5
    bool clamped = false;          // some |arg(lambda)/pi| exceeded 1
    bool pairing_ambiguous = false;
    bool identifiable = true;
    double pairing_correlation = 1.0;  // weakest matched C-column correlation
};

struct AugmentedTensor {
    Tensor3 data;
    MaskTensor mask;
};

/// Transmit subarrays (without last / without first element) stacked along mode 1:
/// 2(M-1) x N x Q, with the mask generator stacked as [W1; W2].
AugmentedTensor build_transmit_augmented(const Tensor3& y, const MaskTensor& mask);

/// Receive subarrays stacked along mode 2: M x 2(N-1) x Q, same generator W.
AugmentedTensor build_receive_augmented(const Tensor3& y, const MaskTensor& mask);

struct StackedAngles {
    std::vector<double> angles;        // per eigenvalue, radians
    CVector eigenvalues;
    std::vector<std::size_t> column;   // factor column associated with each eigenvalue
    bool clamped = false;
};

/// Shift-invariance angles from a 2P x K stacked factor [F1; F2] with
/// F2 = F1 Gamma: eigenvalues of pinv(F1) F2, each tied back to a factor column.
StackedAngles shift_invariance_angles(const CMatrix& stacked);

/// Sorted ascending angles of shift_invariance_angles. Throws when P < K.
std::vector<double> angles_from_stacked_factor(const CMatrix& stacked);

/// Map an eigenvalue to an angle; sets `clamped` if the sine left [-1, 1].
double angle_from_eigenvalue(cplx lambda, bool& clamped);

struct PairingResult {
    std::vector<std::size_t> rx_for_tx;  // rx column matched to each tx column
    double weakest_correlation = 1.0;
    bool ambiguous = false;
};

/// Greedy largest-first matching of C-factor columns by |normalized correlation|.
PairingResult pair_angles(const CMatrix& c_tx, const CMatrix& c_rx);

struct UniquenessReport {
    bool holds = false;              // min(M,K)+min(N,K)+min(Q,K) >= 2K+2
    std::size_t max_k = 0;           // largest K satisfying the inequality
    bool generic_holds = false;      // K <= min{MN, MQ, NQ}
    std::size_t generic_max_k = 0;   // min{MN, MQ, NQ}
};

UniquenessReport uniqueness_check(std::size_t m, std::size_t n, std::size_t q, std::size_t k);

EstimationResult estimate_proposed(const Tensor3& y, const MaskTensor& mask, std::size_t k,
                                   const AlsOptions& opts);

EstimationResult baseline_parafac_small(const Tensor3& y_small, std::size_t k, const AlsOptions& opts);

EstimationResult baseline_esprit(const Tensor3& y_small, std::size_t k);

}  // namespace stmimo
