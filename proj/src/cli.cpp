#include "stmimo/cli.hpp"

#include "stmimo/config.hpp"
#include "stmimo/experiments.hpp"
#include "stmimo/frontend.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

namespace stmimo {

namespace {

struct CommonArgs {
    std::string config;
    bool desk = false;
    std::optional<Seed> seed;
    std::string snr;
    bool noiseless = false;
};

void add_common(CLI::App* app, CommonArgs& a) {
    app->add_option("--config", a.config, "Config file (key = value lines)");
    app->add_flag("--desk", a.desk, "Reduced array preset (M=4, N=4, Q=32, 50 trials)");
    app->add_option("--seed", a.seed, "Base seed (u64)");
    app->add_option("--snr", a.snr, "SNR in dB; comma list for benchmark (use --snr=-10,0 for negatives)");
    app->add_flag("--noiseless", a.noiseless, "Disable noise");
}

ExperimentConfig resolve(const CommonArgs& a, std::optional<ExperimentKind> kind) {
    ExperimentConfig cfg;
    if (!a.config.empty()) {
        cfg = load_config(a.config);
        if (kind && *kind != cfg.kind) {
            const ExperimentConfig fresh = ExperimentConfig::paper(*kind);
            cfg.kind = *kind;
            cfg.scene = fresh.scene;
        }
        if (a.desk) {
            cfg.radar = RadarConfig::desk();
            cfg.trials = 50;
        }
    } else {
        const ExperimentKind k = kind.value_or(ExperimentKind::rmse);
        cfg = a.desk ? ExperimentConfig::desk(k) : ExperimentConfig::paper(k);
    }
    if (a.seed) cfg.seed = *a.seed;
    if (!a.snr.empty()) {
        cfg.snr_db = parse_number_list(a.snr);
        if (cfg.snr_db.empty()) throw ConfigError("--snr: empty list");
    }
    if (a.noiseless) cfg.noiseless = true;
    return cfg;
}

// Single-scene commands: noiseless unless one SNR value is given.
double single_snr(const CommonArgs& a, const ExperimentConfig& cfg) {
    if (cfg.noiseless || a.snr.empty()) return std::numeric_limits<double>::infinity();
    if (cfg.snr_db.size() != 1) throw ConfigError("--snr: simulate/estimate take a single value");
    return cfg.snr_db.front();
}

TargetScene scene_of(const ExperimentConfig& cfg) { return sample_scene(cfg.scene, derive_seed(cfg.seed, {1, 0})); }

void warn_scene(const TargetScene& scene, const RadarConfig& radar) {
    for (const auto& w : scene_warnings(scene, radar)) std::cerr << "warning: " << w << "\n";
}

void dump_tensor(const Tensor3& t, std::ostream& out) {
    const auto [d1, d2, d3] = t.dims();
    out << "# dims " << d1 << " " << d2 << " " << d3 << "\n# m,n,q,re,im (1-based)\n";
    char buf[128];
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j)
            for (std::size_t k = 0; k < d3; ++k) {
                const cplx v = t(i, j, k);
                std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g\n", i + 1, j + 1, k + 1, v.real(), v.imag());
                out << buf;
            }
}

int run_simulate(const CommonArgs& a, bool chain, const std::string& out, const std::string& rd_csv) {
    const ExperimentConfig cfg = resolve(a, std::nullopt);
    cfg.radar.validate();
    const TargetScene scene = scene_of(cfg);
    warn_scene(scene, cfg.radar);
    const double snr = single_snr(a, cfg);
    const Seed noise = derive_seed(cfg.seed, {2, 0, 0});

    Tensor3 y;
    if (chain || !rd_csv.empty()) {
        const ChainOutput c = run_frontend_chain(scene, cfg.radar, snr, noise);
        for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
        if (!rd_csv.empty()) write_range_doppler_csv(range_doppler_map(c.filtered).front(), rd_csv);
        if (chain) y = c.restored;
    }
    if (!chain) y = direct_synthesis(scene, cfg.radar, snr, noise);

    if (out.empty() || out == "-") {
        dump_tensor(y, std::cout);
    } else {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
        dump_tensor(y, f);
        if (!f) throw std::runtime_error("write failed for '" + out + "'");
    }
    return 0;
}

int run_estimate(const CommonArgs& a, const std::string& method_name, bool chain) {
    const ExperimentConfig cfg = resolve(a, std::nullopt);
    const Method method = parse_method(method_name);
    cfg.radar.validate();
    cfg.als.validate();
    const TargetScene scene = scene_of(cfg);
    warn_scene(scene, cfg.radar);
    const double snr = single_snr(a, cfg);
    const MaskTensor mask = build_mask(cfg.radar);

    Tensor3 y_full, y_small;
    if (chain) {
        const ChainOutput c = run_frontend_chain(scene, cfg.radar, snr, derive_seed(cfg.seed, {2, 0, 0}));
        for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
        y_full = c.restored;
        y_small = c.decimated.data;
    } else {
        y_full = direct_synthesis(scene, cfg.radar, mask, snr, derive_seed(cfg.seed, {2, 0, 0}));
        y_small = cfg.small_source == SmallTensorSource::decimated
                      ? lowpass_decimate(hadamard(y_full, conj(mask.tensor)), cfg.radar)
                      : direct_synthesis_small(scene, cfg.radar, snr, derive_seed(cfg.seed, {3, 0, 0}));
    }
    AlsOptions als = cfg.als;
    als.seed = derive_seed(cfg.seed, {4, 0, 0});
    const EstimationResult r = run_method(method, y_full, y_small, mask, scene.size(), als);

    if (!r.identifiable) std::cerr << "warning: target count exceeds the uniqueness bound\n";
    if (r.not_converged) std::cerr << "warning: ALS did not converge\n";
    if (r.clamped) std::cerr << "warning: an angle estimate was clamped to +-90 deg\n";
    if (r.pairing_ambiguous) std::cerr << "warning: DOD/DOA pairing is ambiguous\n";
    std::cout << "dod_deg,doa_deg\n";
    char buf[96];
    for (const auto& p : r.pairs) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", rad2deg(p.dod), rad2deg(p.doa));
        std::cout << buf;
    }
    return 0;
}

int run_benchmark(const CommonArgs& a, const std::string& experiment, std::optional<std::size_t> trials,
                  const std::string& methods, const std::string& out, std::optional<std::size_t> threads) {
    std::optional<ExperimentKind> kind;
    if (experiment == "rmse") kind = ExperimentKind::rmse;
    else if (experiment == "resolution") kind = ExperimentKind::resolution;
    else if (!experiment.empty()) throw ConfigError("--experiment must be rmse or resolution");

    ExperimentConfig cfg = resolve(a, kind);
    if (trials) cfg.trials = *trials;
    if (!methods.empty()) cfg.methods = parse_method_list(methods);
    if (!out.empty()) cfg.output = out;
    if (threads) cfg.threads = *threads;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const TargetScene scene = scene_of(cfg);
    warn_scene(scene, cfg.radar);

    const ResultTable table = run_experiment(cfg);
    if (cfg.output.empty() || cfg.output == "-") {
        std::cout << format_csv(table);
    } else {
        emit_csv(table, cfg.output, &cfg);
    }
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Slow-time MIMO radar DOD/DOA estimation toolkit", "stmimo_cli"};
    app.require_subcommand(1);

    CommonArgs sim_args, est_args, bench_args;
    bool sim_chain = false, est_chain = false;
    std::string sim_out, rd_csv, est_method = "proposed";
    std::string bench_experiment, bench_methods, bench_out;
    std::optional<std::size_t> bench_trials, bench_threads;

    auto* sim = app.add_subcommand("simulate", "Dump one scene's M x N x Q tensor (m,n,q,re,im rows)");
    add_common(sim, sim_args);
    sim->add_flag("--chain", sim_chain, "Produce the tensor through the fast-time processing chain");
    sim->add_option("--out", sim_out, "Tensor dump path (default stdout)");
    sim->add_option("--rd-csv", rd_csv, "Range-Doppler magnitude CSV of receive element 1");

    auto* est = app.add_subcommand("estimate", "Estimate the (DOD, DOA) pairs of one scene, in degrees");
    add_common(est, est_args);
    est->add_option("--method", est_method, "proposed, parafac_small or esprit");
    est->add_flag("--chain", est_chain, "Feed the estimator from the fast-time processing chain");

    auto* bench = app.add_subcommand("benchmark", "Monte Carlo RMSE or resolution sweep to CSV");
    add_common(bench, bench_args);
    bench->add_option("--experiment", bench_experiment, "rmse or resolution (default: config, else rmse)");
    bench->add_option("--trials", bench_trials, "Monte Carlo trials per SNR point");
    bench->add_option("--method", bench_methods, "Comma list of methods");
    bench->add_option("--out", bench_out, "CSV path (default stdout); metadata goes to <path>.meta");
    bench->add_option("--threads", bench_threads, "Worker threads (STMIMO_THREADS caps it)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (sim->parsed()) return run_simulate(sim_args, sim_chain, sim_out, rd_csv);
        if (est->parsed()) return run_estimate(est_args, est_method, est_chain);
        return run_benchmark(bench_args, bench_experiment, bench_trials, bench_methods, bench_out, bench_threads);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace stmimo
