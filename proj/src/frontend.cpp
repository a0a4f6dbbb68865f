#include "stmimo/frontend.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace stmimo {

namespace {

using Spectrum = std::vector<cplx>;

Spectrum fft(const Spectrum& in) {
    Eigen::FFT<double> engine;
    Spectrum out;
    engine.fwd(out, in);
    return out;
}

// Inverse transform including the 1/n factor.
Spectrum ifft(const Spectrum& in) {
    Eigen::FFT<double> engine;
    Spectrum out;
    engine.inv(out, in);
    return out;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// exp(j 2 pi turns) with the integer part of `turns` dropped first.
cplx unit_phasor(double turns) { return std::polar(1.0, 2.0 * kPi * (turns - std::round(turns))); }

// Natural-order FFT bin -> signed bin in [-floor(n/2), n - floor(n/2)).
long signed_bin(std::size_t bin, std::size_t n) {
    const auto b = static_cast<long>(bin);
    const auto half = static_cast<long>(n / 2);
    return b >= static_cast<long>(n) - half ? b - static_cast<long>(n) : b;
}

// Keep the `band` bins around DC of a length-Q demodulated series and return
// samples q = M, 2M, ..., Q (1-based).
std::vector<cplx> lowpass_decimate_series(const Spectrum& series, std::size_t decim) {
    const std::size_t q_count = series.size();
    const std::size_t band = q_count / decim;
    const long lo = -static_cast<long>(band / 2);
    const long hi = lo + static_cast<long>(band);

    Spectrum spec = fft(series);
    for (std::size_t b = 0; b < q_count; ++b) {
        const long s = signed_bin(b, q_count);
        if (s < lo || s >= hi) spec[b] = 0.0;
    }
    const Spectrum filtered = ifft(spec);

    std::vector<cplx> out(band);
    for (std::size_t qb = 1; qb <= band; ++qb) out[qb - 1] = filtered[qb * decim - 1];
    return out;
}

}  // namespace

CVector lfm_chirp(const RadarConfig& cfg) {
    const auto len = static_cast<Eigen::Index>(cfg.snapshots);
    const double l = static_cast<double>(len);
    CVector u(len);
    for (Eigen::Index i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) - l / 2.0;
        u(i) = unit_phasor(t * t / (2.0 * l));
    }
    return u;
}

PulseCube synthesize_fast_time(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed) {
    cfg.validate();
    const std::size_t n_rx = cfg.rx_elements;
    const std::size_t n_q = cfg.pulses;
    const std::size_t n_l = cfg.snapshots;
    std::size_t max_delay = 0;
    for (const auto& t : scene.targets) max_delay = std::max(max_delay, t.range_cell);
    const std::size_t window = n_l + max_delay;

    const CVector u = lfm_chirp(cfg);
    const RVector f = ddma_frequencies(cfg.tx_elements, cfg.prf);

    PulseCube cube{Tensor3(n_rx, n_q, window)};
    for (const auto& tgt : scene.targets) {
        const CVector alpha = steering_vector(tgt.dod, cfg.tx_elements);
        const CVector beta = steering_vector(tgt.doa, n_rx);
        for (std::size_t q = 1; q <= n_q; ++q) {
            // sum over transmitters of alpha_m exp(j 2 pi (f_m + f_k) q T)
            cplx tx_sum{0.0, 0.0};
            for (Eigen::Index m = 0; m < alpha.size(); ++m) {
                tx_sum += alpha(m) * unit_phasor((f(m) / cfg.prf + tgt.doppler) * static_cast<double>(q));
            }
            for (std::size_t n = 0; n < n_rx; ++n) {
                const cplx eta = tgt.rcs * beta(static_cast<Eigen::Index>(n)) * tx_sum;
                for (std::size_t l = 0; l < n_l; ++l) {
                    cube.data(n, q - 1, l + tgt.range_cell) += eta * u(static_cast<Eigen::Index>(l));
                }
            }
        }
    }
    cube.data = add_noise(cube.data, snr_db, seed);
    return cube;
}

PulseCube matched_filter(const PulseCube& cube, const RadarConfig& cfg) {
    const CVector u = lfm_chirp(cfg);
    const std::size_t window = cube.samples();
    const std::size_t len = static_cast<std::size_t>(u.size());
    const std::size_t nfft = next_pow2(window + len - 1);

    Spectrum ref(nfft, cplx{0.0, 0.0});
    for (std::size_t l = 0; l < len; ++l) ref[l] = u(static_cast<Eigen::Index>(l));
    const Spectrum ref_spec = fft(ref);

    PulseCube out{Tensor3(cube.data.dims())};
    Spectrum buf(nfft);
    for (std::size_t q = 0; q < cube.pulses(); ++q) {
        for (std::size_t n = 0; n < cube.rx(); ++n) {
            std::fill(buf.begin(), buf.end(), cplx{0.0, 0.0});
            for (std::size_t l = 0; l < window; ++l) buf[l] = cube.data(n, q, l);
            Spectrum spec = fft(buf);
            for (std::size_t b = 0; b < nfft; ++b) spec[b] *= std::conj(ref_spec[b]);
            const Spectrum corr = ifft(spec);
            for (std::size_t d = 0; d < window; ++d) out.data(n, q, d) = corr[d];
        }
    }
    return out;
}

std::vector<RangeDopplerMap> range_doppler_map(const PulseCube& filtered) {
    const std::size_t n_q = filtered.pulses();
    const std::size_t cells = filtered.samples();
    std::vector<RangeDopplerMap> maps;
    maps.reserve(filtered.rx());
    Spectrum series(n_q);
    for (std::size_t n = 0; n < filtered.rx(); ++n) {
        RangeDopplerMap map(static_cast<Eigen::Index>(n_q), static_cast<Eigen::Index>(cells));
        for (std::size_t c = 0; c < cells; ++c) {
            for (std::size_t q = 0; q < n_q; ++q) series[q] = filtered.data(n, q, c);
            const Spectrum spec = fft(series);
            for (std::size_t b = 0; b < n_q; ++b) {
                map(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) = spec[b];
            }
        }
        maps.push_back(std::move(map));
    }
    return maps;
}

double doppler_bin_frequency(std::size_t bin, std::size_t pulses, double prf) {
    return static_cast<double>(signed_bin(bin, pulses)) * prf / static_cast<double>(pulses);
}

std::vector<std::size_t> dominant_doppler_peaks(const RangeDopplerMap& map, std::size_t range_cell,
                                                double threshold_db) {
    if (static_cast<Eigen::Index>(range_cell) >= map.cols()) {
        throw std::out_of_range("dominant_doppler_peaks: range cell outside the map");
    }
    const Eigen::VectorXd mag = map.col(static_cast<Eigen::Index>(range_cell)).cwiseAbs();
    const Eigen::Index n = mag.size();
    const double floor = mag.maxCoeff() * std::pow(10.0, -threshold_db / 20.0);
    std::vector<std::size_t> peaks;
    if (n == 1) {
        if (mag(0) > 0.0) peaks.push_back(0);
        return peaks;
    }
    for (Eigen::Index b = 0; b < n; ++b) {
        const double prev = mag((b + n - 1) % n);
        const double next = mag((b + 1) % n);
        if (mag(b) >= floor && mag(b) > 0.0 && mag(b) >= prev && mag(b) > next) {
            peaks.push_back(static_cast<std::size_t>(b));
        }
    }
    return peaks;
}

std::size_t strongest_range_cell(const PulseCube& filtered) {
    std::size_t best = 0;
    double best_energy = -1.0;
    for (std::size_t c = 0; c < filtered.samples(); ++c) {
        double e = 0.0;
        for (std::size_t q = 0; q < filtered.pulses(); ++q)
            for (std::size_t n = 0; n < filtered.rx(); ++n) e += std::norm(filtered.data(n, q, c));
        if (e > best_energy) {
            best_energy = e;
            best = c;
        }
    }
    return best;
}

DecimatedChannels demodulate_decimate(const PulseCube& filtered, const RadarConfig& cfg,
                                      std::optional<std::size_t> range_gate) {
    cfg.validate();
    if (filtered.pulses() != cfg.pulses || filtered.rx() != cfg.rx_elements) {
        throw std::invalid_argument("demodulate_decimate: cube dims do not match the radar config");
    }
    const std::size_t gate = range_gate.value_or(strongest_range_cell(filtered));
    if (gate >= filtered.samples()) throw std::out_of_range("demodulate_decimate: range gate outside the window");

    const std::size_t n_m = cfg.tx_elements;
    const std::size_t n_q = cfg.pulses;
    const RVector f = ddma_frequencies(n_m, cfg.prf);

    DecimatedChannels out{Tensor3(n_m, cfg.rx_elements, cfg.decimated_pulses()), gate};
    Spectrum series(n_q);
    for (std::size_t n = 0; n < cfg.rx_elements; ++n) {
        for (std::size_t m = 0; m < n_m; ++m) {
            const double cyc = f(static_cast<Eigen::Index>(m)) / cfg.prf;
            for (std::size_t q = 1; q <= n_q; ++q) {
                series[q - 1] = filtered.data(n, q - 1, gate) * unit_phasor(-cyc * static_cast<double>(q));
            }
            const auto dec = lowpass_decimate_series(series, n_m);
            for (std::size_t qb = 0; qb < dec.size(); ++qb) out.data(m, n, qb) = dec[qb];
        }
    }
    return out;
}

Tensor3 lowpass_decimate(const Tensor3& demodulated, const RadarConfig& cfg) {
    cfg.validate();
    const auto [n_m, n_n, n_q] = demodulated.dims();
    if (n_q != cfg.pulses || n_q % cfg.tx_elements != 0) {
        throw std::invalid_argument("lowpass_decimate: third dimension must equal Q");
    }
    Tensor3 out(n_m, n_n, cfg.decimated_pulses());
    Spectrum series(n_q);
    for (std::size_t n = 0; n < n_n; ++n)
        for (std::size_t m = 0; m < n_m; ++m) {
            for (std::size_t q = 0; q < n_q; ++q) series[q] = demodulated(m, n, q);
            const auto dec = lowpass_decimate_series(series, cfg.tx_elements);
            for (std::size_t qb = 0; qb < dec.size(); ++qb) out(m, n, qb) = dec[qb];
        }
    return out;
}

Tensor3 interpolate_restore(const Tensor3& small, const RadarConfig& cfg) {
    cfg.validate();
    const auto [n_m, n_n, band] = small.dims();
    if (n_m != cfg.tx_elements || band != cfg.decimated_pulses()) {
        throw std::invalid_argument("interpolate_restore: tensor must be M x N x (Q/M)");
    }
    const std::size_t n_q = cfg.pulses;
    const double up = static_cast<double>(cfg.tx_elements);
    const CMatrix w = ddma_matrix(cfg);

    Tensor3 out(n_m, n_n, n_q);
    Spectrum fiber(band);
    Spectrum padded(n_q);
    for (std::size_t n = 0; n < n_n; ++n)
        for (std::size_t m = 0; m < n_m; ++m) {
            for (std::size_t qb = 0; qb < band; ++qb) fiber[qb] = small(m, n, qb);
            const Spectrum spec = fft(fiber);
            std::fill(padded.begin(), padded.end(), cplx{0.0, 0.0});
            for (std::size_t b = 0; b < band; ++b) {
                const long s = signed_bin(b, band);
                const std::size_t dst = s < 0 ? static_cast<std::size_t>(static_cast<long>(n_q) + s)
                                              : static_cast<std::size_t>(s);
                padded[dst] = spec[b];
            }
            const Spectrum fine = ifft(padded);
            // fine[M j] reproduces decimated sample j, which was taken at pulse (j + 1) M
            for (std::size_t q = 0; q < n_q; ++q) {
                const std::size_t src = (q + n_q + 1 - cfg.tx_elements) % n_q;
                out(m, n, q) = up * fine[src] * w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q));
            }
        }
    return out;
}

ChainOutput run_frontend_chain(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed,
                               std::optional<std::size_t> range_gate) {
    ChainOutput out;
    out.warnings = scene_warnings(scene, cfg);
    const PulseCube raw = synthesize_fast_time(scene, cfg, snr_db, seed);
    out.filtered = matched_filter(raw, cfg);
    out.decimated = demodulate_decimate(out.filtered, cfg, range_gate);
    out.restored = interpolate_restore(out.decimated.data, cfg);
    return out;
}

CMatrix doppler_factor(const TargetScene& scene, std::size_t count, double step) {
    CMatrix c(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(scene.size()));
    for (std::size_t k = 0; k < scene.size(); ++k) {
        const auto& t = scene.targets[k];
        for (std::size_t q = 1; q <= count; ++q) {
            c(static_cast<Eigen::Index>(q - 1), static_cast<Eigen::Index>(k)) =
                t.rcs * unit_phasor(t.doppler * step * static_cast<double>(q));
        }
    }
    return c;
}

Tensor3 direct_synthesis(const TargetScene& scene, const RadarConfig& cfg, const MaskTensor& mask, double snr_db,
                         Seed seed) {
    cfg.validate();
    const CMatrix a = steering_matrix(scene.dods(), cfg.tx_elements);
    const CMatrix b = steering_matrix(scene.doas(), cfg.rx_elements);
    const CMatrix c = doppler_factor(scene, cfg.pulses);
    const Tensor3 clean = hadamard(cp_construct(a, b, c), mask.tensor);
    return add_noise(clean, snr_db, seed);
}

Tensor3 direct_synthesis(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed) {
    return direct_synthesis(scene, cfg, build_mask(cfg), snr_db, seed);
}

Tensor3 direct_synthesis_small(const TargetScene& scene, const RadarConfig& cfg, double snr_db, Seed seed) {
    cfg.validate();
    const CMatrix a = steering_matrix(scene.dods(), cfg.tx_elements);
    const CMatrix b = steering_matrix(scene.doas(), cfg.rx_elements);
    const CMatrix c = doppler_factor(scene, cfg.decimated_pulses(), static_cast<double>(cfg.tx_elements));
    return add_noise(cp_construct(a, b, c), snr_db, seed);
}

void write_range_doppler_csv(const RangeDopplerMap& map, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open range-Doppler CSV for writing: " + path);
    const Eigen::Index rows = map.rows();
    char buf[32];
    for (Eigen::Index r = 0; r < rows; ++r) {
        // fftshift: ascending Doppler
        const Eigen::Index src = (r + rows - rows / 2) % rows;
        for (Eigen::Index c = 0; c < map.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", std::abs(map(src, c)));
            if (c) os << ',';
            os << buf;
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("failed writing range-Doppler CSV: " + path);
}

}  // namespace stmimo
