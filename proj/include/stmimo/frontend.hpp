/**
 * @file frontend.hpp
 * @brief Fast-time/slow-time processing chain of a DDMA slow-time MIMO radar,
 *        and the direct tensor synthesis used by the Monte Carlo experiments.
 *
 * Chain: synthesize_fast_time -> matched_filter -> range_doppler_map (for
 * inspection) and demodulate_decimate -> interpolate_restore.
 *
 * The chirp is sampled at its bandwidth (one complex sample per 1/B). The
 * Doppler lowpass is an ideal FFT-bin mask over the CPI: each transmitter
 * keeps the Q/M bins centred on its own DDMA line, so the M passbands tile
 * the slow-time spectrum. Interpolation is FFT zero padding.
 */
#pragma once

#include "stmimo/radar.hpp"
#include "stmimo/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stmimo {

/// Raw or matched-filtered fast-time data, indexed (receive element, pulse, sample).
struct PulseCube {
    Tensor3 data;

    std::size_t rx() const { return data.dims()[0]; }
    std::size_t pulses() const { return data.dims()[1]; }
    std::size_t samples() const { return data.dims()[2]; }
};

/// Slow-time FFT of a matched-filtered cube for one receive element:
/// row = Doppler bin (natural FFT order), column = range cell.
using RangeDopplerMap = CMatrix;

/// Unit-amplitude baseband LFM chirp of cfg.snapshots samples spanning the full band.
CVector lfm_chirp(const RadarConfig& cfg);

/// Received fast-time data of one CPI. The receive window per pulse is
/// L + max(range_cell) samples. `snr_db` = +inf disables noise; otherwise the
/// noise reference is the mean element power of the noiseless cube.
PulseCube synthesize_fast_time(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed);

/// Correlate every snapshot with the chirp. Output sample d is
/// sum_l x[d + l] conj(u[l]) (zero beyond the window), same length as input.
PulseCube matched_filter(const PulseCube& cube, const RadarConfig& cfg);

/// One map per receive element.
std::vector<RangeDopplerMap> range_doppler_map(const PulseCube& filtered);

/// Signed Doppler frequency [Hz] of natural-order FFT bin `bin` for Q pulses.
double doppler_bin_frequency(std::size_t bin, std::size_t pulses, double prf);

/// Circular local maxima of |map(:, range_cell)| within `threshold_db` of the
/// slice maximum, as ascending bin indices.
std::vector<std::size_t> dominant_doppler_peaks(const RangeDopplerMap& map, std::size_t range_cell,
                                                double threshold_db = 20.0);

/// Range cell holding the largest matched-filter energy summed over (n, q).
std::size_t strongest_range_cell(const PulseCube& filtered);

struct DecimatedChannels {
    Tensor3 data;  // M x N x (Q/M)
    std::size_t range_gate = 0;
};

/// Demodulate each transmitter's DDMA line to baseband, lowpass to its
/// Q/M-bin band and keep every M-th pulse (q = M, 2M, ..., Q). The range gate
/// defaults to strongest_range_cell.
DecimatedChannels demodulate_decimate(const PulseCube& filtered, const RadarConfig& cfg,
                                      std::optional<std::size_t> range_gate = std::nullopt);

/// Lowpass + decimate an already demodulated M x N x Q tensor (fiberwise).
Tensor3 lowpass_decimate(const Tensor3& demodulated, const RadarConfig& cfg);

/// Upsample each (m, n) fiber by M via spectral zero padding, then
/// remodulate fiber m by W(m, q). Output is M x N x Q.
Tensor3 interpolate_restore(const Tensor3& small, const RadarConfig& cfg);

/// Everything the full chain produces for one CPI.
struct ChainOutput {
    PulseCube filtered;
    DecimatedChannels decimated;
    Tensor3 restored;
    std::vector<std::string> warnings;
};

ChainOutput run_frontend_chain(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed,
                               std::optional<std::size_t> range_gate = std::nullopt);

/// C(q,k) = rcs_k * exp(j 2 pi nu_k step q), q = 1..count.
CMatrix doppler_factor(const TargetScene& scene, std::size_t count, double step = 1.0);

/// Y = (CP(A, B, C) * D) + noise, M x N x Q. Noise reference is the mean
/// element power of the noiseless tensor; snr_db = +inf disables noise.
Tensor3 direct_synthesis(const TargetScene& scene, const RadarConfig& cfg, const MaskTensor& mask, double snr_db,
                         Seed seed);
Tensor3 direct_synthesis(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed);

/// Decimated-rate tensor CP(A, B, Cbar) + noise, M x N x (Q/M), with
/// Cbar(qbar,k) = rcs_k exp(j 2 pi M nu_k qbar); same SNR convention.
Tensor3 direct_synthesis_small(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed);

/// CSV of |map|, one row per Doppler bin (ascending frequency, i.e.
/// fft-shifted), one column per range cell. Throws std::runtime_error on I/O failure.
void write_range_doppler_csv(const RangeDopplerMap& map, const std::string& path);

}  // namespace stmimo
