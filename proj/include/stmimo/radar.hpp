/**
 * @file radar.hpp
 * @brief Slow-time MIMO radar geometry, DDMA phase modulation and trial randomness.
 *
 * Angles are radians. Doppler is normalized to the pulse repetition
 * frequency (nu = f_k / f_a, cycles per pulse). The slow-time phase of every
 * pulse-to-pulse modulation is referenced to the pulse repetition interval
 * 1/f_a, so W(m,q) = exp(j 2 pi f_m q / f_a) with q = 1..Q.
 */
#pragma once

#include "stmimo/random.hpp"
#include "stmimo/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stmimo {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct RadarConfig {
    std::size_t tx_elements = 8;    // M
    std::size_t rx_elements = 10;   // N
    std::size_t pulses = 80;        // Q per CPI
    std::size_t snapshots = 400;    // L, fast-time chirp samples
    double prf = 50e3;              // f_a [Hz]
    double pulse_duration = 10e-6;  // T [s]
    double bandwidth = 40e6;        // B [Hz]

    /// Throws std::invalid_argument on the first violated invariant.
    void validate() const;

    std::size_t decimated_pulses() const { return pulses / tx_elements; }
    /// Doppler band assigned to each transmitter, Delta f = f_a / M.
    double doppler_band() const { return prf / static_cast<double>(tx_elements); }

    /// Snapshot count implied by sampling the chirp at its bandwidth (L = round(B*T)).
    static std::size_t snapshots_for(double bandwidth, double pulse_duration);

    /// M=8, N=10, Q=80, B=40 MHz, T=10 us, f_a=50 kHz.
    static RadarConfig paper();
    /// Reduced M=4, N=4, Q=32 array for fast runs.
    static RadarConfig desk();
};

struct Target {
    double dod = 0.0;      // phi [rad]
    double doa = 0.0;      // theta [rad]
    double doppler = 0.0;  // nu = f_k / f_a
    cplx rcs{1.0, 0.0};    // sigma_k^2, fixed for the CPI
    std::size_t range_cell = 0;  // fast-time delay in samples
};

struct TargetScene {
    std::vector<Target> targets;

    std::size_t size() const { return targets.size(); }
    std::vector<double> dods() const;
    std::vector<double> doas() const;
};

/// What is fixed and what is drawn when sampling a scene.
struct SceneSpec {
    std::size_t count = 2;
    std::vector<double> dod;      // radians; empty = draw uniformly in dod_bounds
    std::vector<double> doa;
    std::vector<double> doppler;  // normalized; empty = draw uniformly in doppler_bounds
    std::vector<std::size_t> range_cells;
    std::pair<double, double> dod_bounds{-deg2rad(60.0), deg2rad(60.0)};
    std::pair<double, double> doa_bounds{-deg2rad(60.0), deg2rad(60.0)};
    std::pair<double, double> doppler_bounds{-0.05, 0.05};

    /// K=2, phi = [-30, 25] deg, theta = [-15, 20] deg, nu = [0.02, -0.05].
    static SceneSpec paper_rmse();
    /// K=2, phi = [20, 21] deg, theta = [15, 16] deg, nu = [0.02, -0.05].
    static SceneSpec paper_resolution();
};

/// Draw a scene: fixed parameters are copied, missing ones drawn uniformly,
/// rcs drawn CN(0,1) (Swerling I). Deterministic in the seed.
TargetScene sample_scene(const SceneSpec& spec, Seed seed);

/// Redraw only the Swerling-I coefficients of an existing scene.
TargetScene redraw_rcs(TargetScene scene, Seed seed);

/// Non-fatal problems with a scene under a config (e.g. Doppler beyond the
/// unambiguous band 1/(2M)); empty when the scene is clean.
std::vector<std::string> scene_warnings(const TargetScene& scene, const RadarConfig& cfg);

/// Element i (0-based) = exp(-j i pi sin(angle)).
CVector steering_vector(double angle, std::size_t count);

/// Columns are steering vectors of the given angles.
CMatrix steering_matrix(const std::vector<double>& angles, std::size_t count);

/// f_m = (f_a/2)(-1 + (2m-1)/M), m = 1..M.
RVector ddma_frequencies(std::size_t tx_count, double prf);

/// M x Q phase modulation matrix, W(m,q) = exp(j 2 pi f_m q / f_a), q = 1..Q.
CMatrix ddma_matrix(const RadarConfig& cfg);

/// Fixed elementwise modulation tensor D with D(i,n,q) = generator(i,q).
struct MaskTensor {
    Tensor3 tensor;
    CMatrix generator;

    const Dims3& dims() const { return tensor.dims(); }
};

/// Replicate the rows of `generator` across `rx_count` receive elements.
MaskTensor mask_from_generator(const CMatrix& generator, std::size_t rx_count);

/// D = I_M x1 I_M x2 1_{NxM} x3 W^T, dims M x N x Q.
MaskTensor build_mask(const RadarConfig& cfg);

/// Per-element noise variance for a target SNR against the mean element
/// power of `signal` (unit reference power when the signal is all zeros).
double noise_variance_for(const Tensor3& signal, double snr_db);

/// Add i.i.d. CN(0, sigma_n^2) noise; `snr_db` = +inf returns the input unchanged.
Tensor3 add_noise(const Tensor3& t, double snr_db, Seed seed);

}  // namespace stmimo
