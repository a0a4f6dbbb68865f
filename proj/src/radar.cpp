#include "stmimo/radar.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stmimo {

namespace {

constexpr std::uint64_t kGeometryStream = 1;
constexpr std::uint64_t kRcsStream = 2;

}  // namespace

void RadarConfig::validate() const {
    if (tx_elements < 1 || rx_elements < 1 || pulses < 1 || snapshots < 1) {
        throw std::invalid_argument("radar config: M, N, Q and L must all be >= 1");
    }
    if (pulses % tx_elements != 0) {
        throw std::invalid_argument("radar config: Q (" + std::to_string(pulses) +
                                    ") must be a multiple of M (" + std::to_string(tx_elements) + ")");
    }
    if (!(prf > 0.0) || !std::isfinite(prf)) throw std::invalid_argument("radar config: prf must be > 0");
    if (!(pulse_duration > 0.0) || !std::isfinite(pulse_duration)) {
        throw std::invalid_argument("radar config: pulse duration must be > 0");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw std::invalid_argument("radar config: bandwidth must be > 0");
    }
}

std::size_t RadarConfig::snapshots_for(double bandwidth, double pulse_duration) {
    const double l = std::round(bandwidth * pulse_duration);
    return l < 1.0 ? 1 : static_cast<std::size_t>(l);
}

RadarConfig RadarConfig::paper() {
    RadarConfig c;
    c.tx_elements = 8;
    c.rx_elements = 10;
    c.pulses = 80;
    c.prf = 50e3;
    c.pulse_duration = 10e-6;
    c.bandwidth = 40e6;
    c.snapshots = snapshots_for(c.bandwidth, c.pulse_duration);
    return c;
}

RadarConfig RadarConfig::desk() {
    RadarConfig c = paper();
    c.tx_elements = 4;
    c.rx_elements = 4;
    c.pulses = 32;
    return c;
}

std::vector<double> TargetScene::dods() const {
    std::vector<double> out;
    out.reserve(targets.size());
    for (const auto& t : targets) out.push_back(t.dod);
    return out;
}

std::vector<double> TargetScene::doas() const {
    std::vector<double> out;
    out.reserve(targets.size());
    for (const auto& t : targets) out.push_back(t.doa);
    return out;
}

SceneSpec SceneSpec::paper_rmse() {
    SceneSpec s;
    s.count = 2;
    s.dod = {deg2rad(-30.0), deg2rad(25.0)};
    s.doa = {deg2rad(-15.0), deg2rad(20.0)};
    s.doppler = {0.02, -0.05};
    return s;
}

SceneSpec SceneSpec::paper_resolution() {
    SceneSpec s;
    s.count = 2;
    s.dod = {deg2rad(20.0), deg2rad(21.0)};
    s.doa = {deg2rad(15.0), deg2rad(16.0)};
    s.doppler = {0.02, -0.05};
    return s;
}

TargetScene sample_scene(const SceneSpec& spec, Seed seed) {
    if (spec.count < 1) throw std::invalid_argument("sample_scene: target count must be >= 1");
    auto check_len = [&](const auto& v, const char* name) {
        if (!v.empty() && v.size() != spec.count) {
            throw std::invalid_argument(std::string("sample_scene: ") + name + " list has " +
                                        std::to_string(v.size()) + " entries, expected " +
                                        std::to_string(spec.count));
        }
    };
    check_len(spec.dod, "dod");
    check_len(spec.doa, "doa");
    check_len(spec.doppler, "doppler");
    check_len(spec.range_cells, "range_cell");

    Rng geom(derive_seed(seed, {kGeometryStream}));
    auto uniform = [&geom](std::pair<double, double> b) {
        return std::uniform_real_distribution<double>(b.first, b.second)(geom);
    };

    TargetScene scene;
    scene.targets.resize(spec.count);
    for (std::size_t k = 0; k < spec.count; ++k) {
        Target& t = scene.targets[k];
        t.dod = spec.dod.empty() ? uniform(spec.dod_bounds) : spec.dod[k];
        t.doa = spec.doa.empty() ? uniform(spec.doa_bounds) : spec.doa[k];
        t.doppler = spec.doppler.empty() ? uniform(spec.doppler_bounds) : spec.doppler[k];
        t.range_cell = spec.range_cells.empty() ? 0 : spec.range_cells[k];
        if (!(std::abs(t.dod) < kPi / 2) || !(std::abs(t.doa) < kPi / 2)) {
            throw std::invalid_argument("sample_scene: angles must lie strictly inside (-90, 90) degrees");
        }
    }
    return redraw_rcs(std::move(scene), seed);
}

TargetScene redraw_rcs(TargetScene scene, Seed seed) {
    Rng rng(derive_seed(seed, {kRcsStream}));
    for (auto& t : scene.targets) t.rcs = complex_gaussian(rng, 1.0);
    return scene;
}

std::vector<std::string> scene_warnings(const TargetScene& scene, const RadarConfig& cfg) {
    std::vector<std::string> out;
    const double limit = 1.0 / (2.0 * static_cast<double>(cfg.tx_elements));
    for (std::size_t k = 0; k < scene.size(); ++k) {
        const auto& t = scene.targets[k];
        if (!(std::abs(t.doppler) < limit)) {
            std::ostringstream os;
            os << "target " << k + 1 << ": normalized Doppler " << t.doppler
               << " is outside the unambiguous DDMA band |nu| < 1/(2M) = " << limit;
            out.push_back(os.str());
        }
        if (!(std::abs(t.dod) < kPi / 2) || !(std::abs(t.doa) < kPi / 2)) {
            std::ostringstream os;
            os << "target " << k + 1 << ": angle outside (-90, 90) degrees";
            out.push_back(os.str());
        }
    }
    return out;
}

CVector steering_vector(double angle, std::size_t count) {
    CVector v(static_cast<Eigen::Index>(count));
    const double phase = -kPi * std::sin(angle);
    for (std::size_t i = 0; i < count; ++i) {
        v(static_cast<Eigen::Index>(i)) = std::polar(1.0, phase * static_cast<double>(i));
    }
    return v;
}

CMatrix steering_matrix(const std::vector<double>& angles, std::size_t count) {
    CMatrix m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(angles.size()));
    for (std::size_t k = 0; k < angles.size(); ++k) {
        m.col(static_cast<Eigen::Index>(k)) = steering_vector(angles[k], count);
    }
    return m;
}

RVector ddma_frequencies(std::size_t tx_count, double prf) {
    if (tx_count < 1) throw std::invalid_argument("ddma_frequencies: need at least one transmitter");
    RVector f(static_cast<Eigen::Index>(tx_count));
    const double mm = static_cast<double>(tx_count);
    for (std::size_t m = 1; m <= tx_count; ++m) {
        f(static_cast<Eigen::Index>(m - 1)) = 0.5 * prf * (-1.0 + (2.0 * static_cast<double>(m) - 1.0) / mm);
    }
    return f;
}

CMatrix ddma_matrix(const RadarConfig& cfg) {
    cfg.validate();
    const RVector f = ddma_frequencies(cfg.tx_elements, cfg.prf);
    CMatrix w(static_cast<Eigen::Index>(cfg.tx_elements), static_cast<Eigen::Index>(cfg.pulses));
    for (Eigen::Index m = 0; m < w.rows(); ++m) {
        // cycles per pulse, reduced before scaling by q to keep the phase argument small
        const double cyc = f(m) / cfg.prf;
        for (Eigen::Index q = 0; q < w.cols(); ++q) {
            const double turns = cyc * static_cast<double>(q + 1);
            w(m, q) = std::polar(1.0, 2.0 * kPi * (turns - std::round(turns)));
        }
    }
    return w;
}

MaskTensor mask_from_generator(const CMatrix& generator, std::size_t rx_count) {
    MaskTensor mask;
    mask.generator = generator;
    mask.tensor = Tensor3(static_cast<std::size_t>(generator.rows()), rx_count,
                          static_cast<std::size_t>(generator.cols()));
    for (Eigen::Index q = 0; q < generator.cols(); ++q)
        for (std::size_t n = 0; n < rx_count; ++n)
            for (Eigen::Index m = 0; m < generator.rows(); ++m)
                mask.tensor(static_cast<std::size_t>(m), n, static_cast<std::size_t>(q)) = generator(m, q);
    return mask;
}

MaskTensor build_mask(const RadarConfig& cfg) { return mask_from_generator(ddma_matrix(cfg), cfg.rx_elements); }

double noise_variance_for(const Tensor3& signal, double snr_db) {
    double power = 0.0;
    if (!signal.empty()) {
        for (const auto& v : signal.raw()) power += std::norm(v);
        power /= static_cast<double>(signal.size());
    }
    if (power == 0.0) power = 1.0;
    return power / std::pow(10.0, snr_db / 10.0);
}

Tensor3 add_noise(const Tensor3& t, double snr_db, Seed seed) {
    if (std::isinf(snr_db) && snr_db > 0) return t;
    const double variance = noise_variance_for(t, snr_db);
    Rng rng(seed);
    Tensor3 out = t;
    for (auto& v : out.raw()) v += complex_gaussian(rng, variance);
    return out;
}

}  // namespace stmimo
