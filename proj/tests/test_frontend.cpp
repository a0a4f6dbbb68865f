#include "stmimo/frontend.hpp"

#include "stmimo/estimator.hpp"

#include "test_util.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace stmimo;

namespace {

const cplx J{0.0, 1.0};
const double kInf = std::numeric_limits<double>::infinity();

TargetScene one_target(double dod_deg, double doa_deg, double nu, cplx rcs = {1.0, 0.0}, std::size_t cell = 0) {
    TargetScene s;
    s.targets.push_back({deg2rad(dod_deg), deg2rad(doa_deg), nu, rcs, cell});
    return s;
}

// Three transmitters, 150 pulses at 30 kHz, 1.6 us chirp sampled at 40 MHz (L = 64):
// DDMA lines at -10, 0, +10 kHz and a 2 kHz target all fall on FFT bins.
RadarConfig bin_aligned_config() {
    RadarConfig c;
    c.tx_elements = 3;
    c.rx_elements = 4;
    c.pulses = 150;
    c.prf = 30e3;
    c.pulse_duration = 1.6e-6;
    c.bandwidth = 40e6;
    c.snapshots = RadarConfig::snapshots_for(c.bandwidth, c.pulse_duration);
    return c;
}

RadarConfig with_snapshots(RadarConfig c, std::size_t l) {
    c.snapshots = l;
    return c;
}

// Naive time-domain correlation, same convention as matched_filter.
std::vector<cplx> direct_correlation(const std::vector<cplx>& x, const CVector& u) {
    std::vector<cplx> out(x.size(), 0.0);
    for (std::size_t d = 0; d < x.size(); ++d)
        for (Eigen::Index l = 0; l < u.size() && d + static_cast<std::size_t>(l) < x.size(); ++l)
            out[d] += x[d + static_cast<std::size_t>(l)] * std::conj(u(l));
    return out;
}

// min over complex s of |x - s y| / |s y|, for scale-free comparisons.
double scaled_rel_err(const Tensor3& x, const Tensor3& y) {
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += std::conj(y.raw()[i]) * x.raw()[i];
        den += std::norm(y.raw()[i]);
    }
    const cplx s = num / den;
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err += std::norm(x.raw()[i] - s * y.raw()[i]);
    return std::sqrt(err / (std::norm(s) * den));
}

// Cube holding only transmitter `m_only`'s echo of a single target.
PulseCube single_transmitter_cube(const RadarConfig& cfg, const Target& tgt, std::size_t m_only) {
    const CVector u = lfm_chirp(cfg);
    const RVector f = ddma_frequencies(cfg.tx_elements, cfg.prf);
    const CVector alpha = steering_vector(tgt.dod, cfg.tx_elements);
    const CVector beta = steering_vector(tgt.doa, cfg.rx_elements);
    PulseCube cube{Tensor3(cfg.rx_elements, cfg.pulses, cfg.snapshots)};
    for (std::size_t q = 1; q <= cfg.pulses; ++q) {
        const double turns = (f(static_cast<Eigen::Index>(m_only)) / cfg.prf + tgt.doppler) * static_cast<double>(q);
        const cplx tone = std::polar(1.0, 2.0 * kPi * (turns - std::round(turns)));
        for (std::size_t n = 0; n < cfg.rx_elements; ++n)
            for (std::size_t l = 0; l < cfg.snapshots; ++l)
                cube.data(n, q - 1, l) = tgt.rcs * alpha(static_cast<Eigen::Index>(m_only)) *
                                         beta(static_cast<Eigen::Index>(n)) * tone * u(static_cast<Eigen::Index>(l));
    }
    return cube;
}

double channel_power(const Tensor3& t, std::size_t m) {
    double p = 0.0;
    for (std::size_t n = 0; n < t.dim(2); ++n)
        for (std::size_t q = 0; q < t.dim(3); ++q) p += std::norm(t(m, n, q));
    return p;
}

}  // namespace

TEST(Chirp, UnitModulusFullLength) {
    const RadarConfig c = RadarConfig::paper();
    const CVector u = lfm_chirp(c);
    ASSERT_EQ(u.size(), 400);
    EXPECT_LT((u.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
    // instantaneous frequency sweeps the full band: phase increments span about one cycle per sample
    const double first = std::arg(u(1) * std::conj(u(0)));
    const double last = std::arg(u(399) * std::conj(u(398)));
    EXPECT_LT(first, -0.9 * kPi);
    EXPECT_GT(last, 0.9 * kPi);
}

TEST(FastTime, SingleTransmitterSingleTarget) {
    RadarConfig c = RadarConfig::desk();
    c.tx_elements = 1;
    c.rx_elements = 1;
    c.pulses = 8;
    c.snapshots = 16;
    const cplx rcs(0.7, -0.4);
    const double nu = 0.03;
    const PulseCube cube = synthesize_fast_time(one_target(10.0, -5.0, nu, rcs), c, kInf, 0);
    const CVector u = lfm_chirp(c);
    ASSERT_EQ(cube.data.dims(), (Dims3{1, 8, 16}));
    for (std::size_t q = 1; q <= 8; ++q) {
        const cplx tone = rcs * std::exp(J * 2.0 * kPi * nu * static_cast<double>(q));
        for (std::size_t l = 0; l < 16; ++l)
            EXPECT_LT(std::abs(cube.data(0, q - 1, l) - tone * u(static_cast<Eigen::Index>(l))), 1e-12);
    }
}

TEST(FastTime, ZeroRcsGivesZeroCube) {
    const PulseCube cube = synthesize_fast_time(one_target(10.0, 5.0, 0.01, 0.0), RadarConfig::desk(), kInf, 0);
    EXPECT_EQ(frob_norm(cube.data), 0.0);
}

TEST(FastTime, DelayedWindowLength) {
    const RadarConfig c = with_snapshots(RadarConfig::desk(), 32);
    const PulseCube cube = synthesize_fast_time(one_target(0, 0, 0, 1.0, 7), c, kInf, 0);
    EXPECT_EQ(cube.samples(), 39u);
    EXPECT_EQ(cube.data(0, 0, 6), cplx(0.0, 0.0));
    EXPECT_NE(cube.data(0, 0, 7), cplx(0.0, 0.0));
}

TEST(MatchedFilter, ChirpAutocorrelationPeak) {
    RadarConfig c = RadarConfig::desk();
    c.rx_elements = 1;
    c.pulses = 4;
    c.tx_elements = 1;
    c.snapshots = 64;
    const CVector u = lfm_chirp(c);
    PulseCube cube{Tensor3(1, 4, 64)};
    for (std::size_t q = 0; q < 4; ++q)
        for (std::size_t l = 0; l < 64; ++l) cube.data(0, q, l) = u(static_cast<Eigen::Index>(l));
    const PulseCube out = matched_filter(cube, c);
    EXPECT_NEAR(std::abs(out.data(0, 0, 0) - cplx(64.0, 0.0)), 0.0, 1e-9);
    for (std::size_t d = 1; d < 64; ++d) EXPECT_LT(std::abs(out.data(0, 0, d)), 64.0);

    const PulseCube zero = matched_filter(PulseCube{Tensor3(1, 4, 64)}, c);
    EXPECT_LT(frob_norm(zero.data), 1e-12);
}

TEST(MatchedFilter, MatchesDirectCorrelation) {
    RadarConfig c = with_snapshots(RadarConfig::desk(), 40);
    Rng rng(41);
    PulseCube cube{stmimo::testing::random_tensor(rng, 2, 4, 57)};
    c.rx_elements = 2;
    c.pulses = 4;
    c.tx_elements = 1;
    const PulseCube out = matched_filter(cube, c);
    const CVector u = lfm_chirp(c);
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t q = 0; q < 4; ++q) {
            std::vector<cplx> x(57);
            for (std::size_t l = 0; l < 57; ++l) x[l] = cube.data(n, q, l);
            const auto ref = direct_correlation(x, u);
            for (std::size_t d = 0; d < 57; ++d) EXPECT_LT(std::abs(out.data(n, q, d) - ref[d]), 1e-9);
        }
}

TEST(MatchedFilter, TwoTargetsTwoGates) {
    RadarConfig c = with_snapshots(RadarConfig::desk(), 128);
    c.tx_elements = 1;
    c.pulses = 8;
    TargetScene s;
    s.targets.push_back({0.1, 0.2, 0.0, {1.0, 0.0}, 5});
    s.targets.push_back({-0.3, 0.4, 0.0, {0.0, 1.0}, 60});
    const PulseCube f = matched_filter(synthesize_fast_time(s, c, kInf, 0), c);
    std::vector<double> energy(f.samples(), 0.0);
    for (std::size_t d = 0; d < f.samples(); ++d)
        for (std::size_t n = 0; n < f.rx(); ++n)
            for (std::size_t q = 0; q < f.pulses(); ++q) energy[d] += std::norm(f.data(n, q, d));
    const double top = std::max(energy[5], energy[60]);
    EXPECT_NEAR(energy[5] / top, 1.0, 0.05);
    EXPECT_NEAR(energy[60] / top, 1.0, 0.05);
    for (std::size_t d = 0; d < energy.size(); ++d) {
        if (d == 5 || d == 60) continue;
        EXPECT_LT(energy[d], 0.2 * top) << "cell " << d;
    }
}

TEST(MatchedFilter, PeakAtConfiguredGate) {
    const RadarConfig c = RadarConfig::desk();
    TargetScene s = sample_scene(SceneSpec::paper_rmse(), 3);
    for (auto& t : s.targets) t.range_cell = 17;
    const PulseCube f = matched_filter(synthesize_fast_time(s, c, 10.0, 5), c);
    EXPECT_EQ(strongest_range_cell(f), 17u);
}

TEST(RangeDoppler, ThreeTransmittersThreePeaks) {
    const RadarConfig c = bin_aligned_config();
    const TargetScene s = one_target(10.0, -20.0, 2e3 / 30e3, {0.8, 0.6}, 9);
    const PulseCube f = matched_filter(synthesize_fast_time(s, c, kInf, 0), c);
    const auto maps = range_doppler_map(f);
    ASSERT_EQ(maps.size(), 4u);
    EXPECT_EQ(maps[0].rows(), 150);
    const auto peaks = dominant_doppler_peaks(maps[0], 9);
    ASSERT_EQ(peaks.size(), 3u);
    // f_m + f_k for f_m = -10, 0, 10 kHz and f_k = 2 kHz
    std::vector<double> freqs;
    for (auto b : peaks) freqs.push_back(doppler_bin_frequency(b, 150, 30e3));
    std::sort(freqs.begin(), freqs.end());
    EXPECT_NEAR(freqs[0], -8e3, 1e-6);
    EXPECT_NEAR(freqs[1], 2e3, 1e-6);
    EXPECT_NEAR(freqs[2], 12e3, 1e-6);
    EXPECT_EQ(peaks[1] - peaks[0] == 50 || peaks[2] - peaks[1] == 50, true);
}

TEST(RangeDoppler, SingleTransmitterSinglePeak) {
    RadarConfig c = bin_aligned_config();
    c.tx_elements = 1;
    const PulseCube f = matched_filter(synthesize_fast_time(one_target(0, 0, 3.0 / 150.0), c, kInf, 0), c);
    const auto peaks = dominant_doppler_peaks(range_doppler_map(f)[0], 0);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0], 3u);
    EXPECT_THROW(dominant_doppler_peaks(range_doppler_map(f)[0], 10'000), std::out_of_range);
}

TEST(Demodulate, SingleTargetMatchesDecimatedModel) {
    // Doppler on an FFT bin of the CPI; off-bin Dopplers leak through the ideal mask (see next test)
    for (const RadarConfig& c : {RadarConfig::desk(), RadarConfig::paper(), bin_aligned_config()}) {
        const double nu = 1.0 / static_cast<double>(c.pulses);
        const TargetScene s = one_target(-12.0, 33.0, nu, {0.3, -1.1}, 4);
        const ChainOutput out = run_frontend_chain(s, c, kInf, 0);
        EXPECT_EQ(out.decimated.range_gate, 4u);
        const Tensor3 model = direct_synthesis_small(s, c, kInf, 0);
        EXPECT_LT(scaled_rel_err(out.decimated.data, model), 0.02) << c.tx_elements;
    }
}

TEST(Demodulate, OffBinDopplerLeakageShrinksWithPulses) {
    const TargetScene s = one_target(-12.0, 33.0, 0.02, {0.3, -1.1});
    const double desk = scaled_rel_err(run_frontend_chain(s, RadarConfig::desk(), kInf, 0).decimated.data,
                                       direct_synthesis_small(s, RadarConfig::desk(), kInf, 0));
    const double paper = scaled_rel_err(run_frontend_chain(s, RadarConfig::paper(), kInf, 0).decimated.data,
                                        direct_synthesis_small(s, RadarConfig::paper(), kInf, 0));
    EXPECT_GT(desk, 0.02);
    EXPECT_LT(paper, desk);
}

TEST(Demodulate, ZeroInputAndZeroDoppler) {
    const RadarConfig c = RadarConfig::desk();
    const PulseCube zero{Tensor3(c.rx_elements, c.pulses, c.snapshots)};
    EXPECT_EQ(frob_norm(demodulate_decimate(zero, c, 0).data), 0.0);

    const PulseCube f = matched_filter(synthesize_fast_time(one_target(20, 10, 0.0), c, kInf, 0), c);
    const Tensor3 d = demodulate_decimate(f, c).data;
    for (std::size_t m = 0; m < 4; ++m)
        for (std::size_t n = 0; n < 4; ++n)
            for (std::size_t q = 1; q < d.dim(3); ++q) EXPECT_LT(std::abs(d(m, n, q) - d(m, n, 0)), 1e-9 * std::abs(d(m, n, 0)));
}

TEST(Demodulate, CrossTermsBelowFortyDb) {
    const RadarConfig c = bin_aligned_config();
    const Target tgt{deg2rad(15.0), deg2rad(-25.0), 2e3 / 30e3, {1.0, 0.0}, 0};
    for (std::size_t src = 0; src < c.tx_elements; ++src) {
        const PulseCube f = matched_filter(single_transmitter_cube(c, tgt, src), c);
        const Tensor3 d = demodulate_decimate(f, c, 0).data;
        const double kept = channel_power(d, src);
        for (std::size_t m = 0; m < c.tx_elements; ++m) {
            if (m == src) continue;
            const double leak_db = 10.0 * std::log10(std::max(channel_power(d, m), 1e-300) / kept);
            EXPECT_LE(leak_db, -40.0) << "source " << src << " into channel " << m;
        }
    }
}

TEST(Demodulate, GateOutsideWindowThrows) {
    const RadarConfig c = RadarConfig::desk();
    const PulseCube zero{Tensor3(c.rx_elements, c.pulses, c.snapshots)};
    EXPECT_THROW(demodulate_decimate(zero, c, c.snapshots), std::out_of_range);
}

TEST(Interpolate, ConstantFiberStaysConstant) {
    const RadarConfig c = RadarConfig::desk();
    const Tensor3 small(4, 4, 8, cplx{2.0, -1.0});
    const Tensor3 out = interpolate_restore(small, c);
    ASSERT_EQ(out.dims(), (Dims3{4, 4, 32}));
    const Tensor3 base = hadamard(out, conj(build_mask(c).tensor));
    for (const auto& v : base.raw()) EXPECT_LT(std::abs(v - base.raw()[0]), 1e-12);
    EXPECT_THROW(interpolate_restore(Tensor3(4, 4, 7), c), std::invalid_argument);
}

TEST(Interpolate, PassesThroughDecimatedSamples) {
    // decimated sample j came from pulse (j + 1) M and must land there again, remodulated
    const RadarConfig c = RadarConfig::desk();
    Rng rng(42);
    const Tensor3 small = stmimo::testing::random_tensor(rng, 4, 4, 8);
    const Tensor3 out = interpolate_restore(small, c);
    const CMatrix w = ddma_matrix(c);
    for (std::size_t m = 0; m < 4; ++m)
        for (std::size_t n = 0; n < 4; ++n)
            for (std::size_t j = 0; j < 8; ++j) {
                const std::size_t q = (j + 1) * 4 - 1;
                const cplx expected = small(m, n, j) * w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q));
                EXPECT_LT(std::abs(out(m, n, q) - expected), 1e-12);
            }
}

TEST(Interpolate, RestoresInBandTone) {
    // a tone inside the decimated band comes back as the same tone at the full rate
    const RadarConfig c = RadarConfig::desk();
    const TargetScene s = one_target(5.0, -8.0, 2.0 / 32.0, {0.5, 0.5});
    const Tensor3 restored = interpolate_restore(direct_synthesis_small(s, c, kInf, 0), c);
    const Tensor3 direct = direct_synthesis(s, c, kInf, 0);
    EXPECT_LT(frob_norm(restored - direct), 1e-12 * frob_norm(direct));
}

TEST(Direct, SingleTargetZeroDoppler) {
    const RadarConfig c = RadarConfig::desk();
    const cplx rcs(0.4, 0.9);
    const TargetScene s = one_target(30.0, -40.0, 0.0, rcs);
    const Tensor3 y = direct_synthesis(s, c, kInf, 0);
    const CVector a = steering_vector(deg2rad(30.0), 4), b = steering_vector(deg2rad(-40.0), 4);
    const CMatrix w = ddma_matrix(c);
    for (std::size_t m = 0; m < 4; ++m)
        for (std::size_t n = 0; n < 4; ++n)
            for (std::size_t q = 0; q < 32; ++q) {
                const auto mi = static_cast<Eigen::Index>(m);
                const cplx expected = rcs * a(mi) * b(static_cast<Eigen::Index>(n)) * w(mi, static_cast<Eigen::Index>(q));
                EXPECT_LT(std::abs(y(m, n, q) - expected), 1e-12);
            }
}

TEST(Direct, MaskCancellationAndUnfolding) {
    const RadarConfig c = RadarConfig::desk();
    const TargetScene s = sample_scene(SceneSpec::paper_rmse(), 11);
    const MaskTensor mask = build_mask(c);
    const Tensor3 y = direct_synthesis(s, c, mask, kInf, 0);
    const CMatrix a = steering_matrix(s.dods(), 4), b = steering_matrix(s.doas(), 4);
    const CMatrix cf = doppler_factor(s, 32);
    const Tensor3 cp = cp_construct(a, b, cf);
    EXPECT_LT(frob_norm(hadamard(y, conj(mask.tensor)) - cp), 1e-13 * frob_norm(cp));
    const CMatrix d = khatri_rao(CMatrix::Identity(4, 4), CMatrix::Ones(4, 4)) * mask.generator;
    const CMatrix rhs = (khatri_rao(a, b) * cf.transpose()).cwiseProduct(d);
    EXPECT_LT((unfold(y, 3) - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(Direct, DemodulatedNoiseKeepsPower) {
    const RadarConfig c = RadarConfig::paper();
    const TargetScene s = sample_scene(SceneSpec::paper_rmse(), 12);
    const MaskTensor mask = build_mask(c);
    const Tensor3 clean = direct_synthesis(s, c, mask, kInf, 0);
    const Tensor3 noisy = direct_synthesis(s, c, mask, 0.0, 77);
    const Tensor3 z = noisy - clean;
    const Tensor3 zd = hadamard(z, conj(mask.tensor));
    EXPECT_NEAR(frob_norm(zd) / frob_norm(z), 1.0, 1e-12);
    // demodulated noise stays circular: real and imaginary parts carry equal power
    double re = 0.0, im = 0.0;
    for (const auto& v : zd.raw()) {
        re += v.real() * v.real();
        im += v.imag() * v.imag();
    }
    EXPECT_NEAR(re / im, 1.0, 0.1);
}

TEST(Chain, SubspaceAgreesWithDirectSynthesis) {
    const RadarConfig c = RadarConfig::paper();
    const TargetScene s = sample_scene(SceneSpec::paper_rmse(), 13);
    const Tensor3 chain = run_frontend_chain(s, c, kInf, 0).restored;
    const Tensor3 direct = direct_synthesis(s, c, kInf, 0);
    // principal angles between the rank-2 column spaces of the mode-3 unfoldings (demodulated)
    const MaskTensor mask = build_mask(c);
    auto basis = [&](const Tensor3& t) {
        Eigen::JacobiSVD<CMatrix> svd(unfold(hadamard(t, conj(mask.tensor)), 3), Eigen::ComputeThinU);
        return CMatrix(svd.matrixU().leftCols(2));
    };
    Eigen::JacobiSVD<CMatrix> cross(basis(chain).adjoint() * basis(direct));
    const double smallest = std::min(cross.singularValues().minCoeff(), 1.0);
    EXPECT_LT(rad2deg(std::acos(smallest)), 1.0);
}

TEST(Chain, AnglesAgreeWithDirectSynthesis) {
    const RadarConfig c = RadarConfig::paper();
    const TargetScene s = sample_scene(SceneSpec::paper_rmse(), 14);
    const MaskTensor mask = build_mask(c);
    AlsOptions opts;
    const auto a = estimate_proposed(run_frontend_chain(s, c, kInf, 0).restored, mask, 2, opts).pairs;
    const auto b = estimate_proposed(direct_synthesis(s, c, mask, kInf, 0), mask, 2, opts).pairs;
    ASSERT_EQ(a.size(), 2u);
    ASSERT_EQ(b.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_LT(std::abs(rad2deg(a[k].dod - b[k].dod)), 0.1);
        EXPECT_LT(std::abs(rad2deg(a[k].doa - b[k].doa)), 0.1);
    }
}

TEST(Chain, AmbiguousDopplerWarns) {
    const RadarConfig c = RadarConfig::desk();
    const ChainOutput out = run_frontend_chain(one_target(0, 0, 0.2), c, kInf, 0);
    EXPECT_EQ(out.warnings.size(), 1u);
}

TEST(RangeDopplerCsv, WritesShiftedMagnitudes) {
    CMatrix map = CMatrix::Zero(4, 2);
    map(0, 0) = cplx(3, 4);   // DC bin
    map(2, 1) = cplx(0, -2);  // Nyquist bin
    const auto path = (std::filesystem::temp_directory_path() / "stmimo_rd_test.csv").string();
    write_range_doppler_csv(map, path);
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "0,2");  // most negative frequency first
    EXPECT_EQ(lines[2], "5,0");
    std::filesystem::remove(path);
    try {
        write_range_doppler_csv(map, "/nonexistent-dir/x.csv");
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
    }
}
