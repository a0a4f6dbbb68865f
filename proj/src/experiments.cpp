#include "stmimo/experiments.hpp"

#include "stmimo/frontend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "stmimo/config.hpp"

namespace stmimo {

namespace {

// stream purposes under the experiment seed
constexpr std::uint64_t kSceneStream = 1;
constexpr std::uint64_t kFullNoiseStream = 2;
constexpr std::uint64_t kSmallNoiseStream = 3;
constexpr std::uint64_t kAlsStream = 4;

struct TrialResult {
    bool ok = false;
    std::vector<AnglePair> pairs;
};

// results[method][snr][trial]
using Grid = std::vector<std::vector<std::vector<TrialResult>>>;

double sq(double x) { return x * x; }

double pair_cost(const AnglePair& e, const Target& t) { return sq(e.dod - t.dod) + sq(e.doa - t.doa); }

Grid run_trials(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t n_methods = cfg.methods.size();
    const std::size_t n_snr = cfg.snr_db.size();
    Grid grid(n_methods, std::vector<std::vector<TrialResult>>(n_snr, std::vector<TrialResult>(cfg.trials)));
    const MaskTensor mask = build_mask(cfg.radar);
    const std::size_t k = cfg.scene.count;
    const bool need_small = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                        [](Method m) { return m != Method::proposed; });

    auto work = [&](std::size_t job) {
        const std::size_t s = job / cfg.trials;
        const std::size_t t = job % cfg.trials;
        const double snr = cfg.noiseless ? std::numeric_limits<double>::infinity() : cfg.snr_db[s];
        const TargetScene scene = sample_scene(cfg.scene, derive_seed(cfg.seed, {kSceneStream, t}));
        const Tensor3 y_full = direct_synthesis(scene, cfg.radar, mask, snr, derive_seed(cfg.seed, {kFullNoiseStream, s, t}));
        Tensor3 y_small;
        if (need_small) {
            if (cfg.small_source == SmallTensorSource::decimated) {
                y_small = lowpass_decimate(hadamard(y_full, conj(mask.tensor)), cfg.radar);
            } else {
                y_small = direct_synthesis_small(scene, cfg.radar, snr, derive_seed(cfg.seed, {kSmallNoiseStream, s, t}));
            }
        }
        AlsOptions als = cfg.als;
        als.seed = derive_seed(cfg.seed, {kAlsStream, s, t});
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            TrialResult& slot = grid[mi][s][t];
            try {
                EstimationResult r = run_method(cfg.methods[mi], y_full, y_small, mask, k, als);
                const bool finite = r.pairs.size() == k &&
                                    std::all_of(r.pairs.begin(), r.pairs.end(), [](const AnglePair& p) {
                                        return std::isfinite(p.dod) && std::isfinite(p.doa);
                                    });
                slot.ok = finite;
                if (finite) slot.pairs = std::move(r.pairs);
            } catch (const std::exception&) {
                slot.ok = false;
            }
        }
    };

    const std::size_t jobs = n_snr * cfg.trials;
    const std::size_t workers = std::min(worker_count(cfg), jobs);
    if (workers <= 1) {
        for (std::size_t j = 0; j < jobs; ++j) work(j);
        return grid;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t j = next++; j < jobs; j = next++) work(j);
        });
    }
    for (auto& th : pool) th.join();
    return grid;
}

TargetScene truth_scene(const ExperimentConfig& cfg) {
    // angles are fixed per trial; only rcs changes, so trial 0 gives the geometry
    return sample_scene(cfg.scene, derive_seed(cfg.seed, {kSceneStream, 0}));
}

void check_fixed_geometry(const ExperimentConfig& cfg) {
    if (cfg.scene.dod.size() != cfg.scene.count || cfg.scene.doa.size() != cfg.scene.count) {
        throw std::invalid_argument("sweep: scene angles must be fixed (dod and doa lists of length K)");
    }
}

void sort_rows(ResultTable& table) {
    std::stable_sort(table.rows.begin(), table.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.method != b.method) return a.method < b.method;
        return a.snr_db < b.snr_db;
    });
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::proposed: return "proposed";
        case Method::parafac_small: return "parafac_small";
        case Method::esprit: return "esprit";
    }
    return "unknown";
}

std::string to_string(ExperimentKind k) { return k == ExperimentKind::rmse ? "rmse" : "resolution"; }

std::string to_string(SmallTensorSource s) {
    return s == SmallTensorSource::synthesized ? "synthesized" : "decimated";
}

void ExperimentConfig::validate() const {
    radar.validate();
    als.validate();
    if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
    if (snr_db.empty()) throw std::invalid_argument("experiment: snr grid is empty");
    if (methods.empty()) throw std::invalid_argument("experiment: no methods selected");
    if (scene.count < 1) throw std::invalid_argument("experiment: scene needs at least one target");
    if (kind == ExperimentKind::resolution && scene.count != 2) {
        throw std::invalid_argument("experiment: resolution sweep needs exactly two targets");
    }
    for (double s : snr_db) {
        if (std::isnan(s)) throw std::invalid_argument("experiment: SNR value is NaN");
    }
}

ExperimentConfig ExperimentConfig::paper(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.radar = RadarConfig::paper();
    c.scene = kind == ExperimentKind::rmse ? SceneSpec::paper_rmse() : SceneSpec::paper_resolution();
    c.trials = 200;
    return c;
}

ExperimentConfig ExperimentConfig::desk(ExperimentKind kind) {
    ExperimentConfig c = paper(kind);
    c.radar = RadarConfig::desk();
    c.trials = 50;
    return c;
}

double ResultTable::value(const std::string& method, double snr_db, const std::string& metric) const {
    for (const auto& r : rows) {
        if (r.method == method && r.snr_db == snr_db && r.metric == metric) return r.value;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::vector<std::size_t> match_to_truth(const std::vector<AnglePair>& estimates, const TargetScene& truth) {
    const std::size_t k = truth.size();
    if (estimates.size() != k) throw std::invalid_argument("match_to_truth: estimate count differs from target count");
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    if (k <= 6) {
        std::vector<std::size_t> best = perm;
        double best_cost = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (std::size_t i = 0; i < k; ++i) cost += pair_cost(estimates[perm[i]], truth.targets[i]);
            if (cost < best_cost) {
                best_cost = cost;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<bool> used_e(k, false), used_t(k, false);
    for (std::size_t round = 0; round < k; ++round) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (used_t[i]) continue;
            for (std::size_t j = 0; j < k; ++j) {
                if (used_e[j]) continue;
                const double c = pair_cost(estimates[j], truth.targets[i]);
                if (c < best) {
                    best = c;
                    bi = i;
                    bj = j;
                }
            }
        }
        used_t[bi] = used_e[bj] = true;
        perm[bi] = bj;
    }
    return perm;
}

bool is_resolved(const std::vector<AnglePair>& estimates, const TargetScene& truth) {
    if (truth.size() != 2) throw std::invalid_argument("is_resolved: needs exactly two targets");
    const auto perm = match_to_truth(estimates, truth);
    const double half_dod = std::abs(truth.targets[0].dod - truth.targets[1].dod) / 2.0;
    const double half_doa = std::abs(truth.targets[0].doa - truth.targets[1].doa) / 2.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const AnglePair& e = estimates[perm[i]];
        if (std::abs(e.dod - truth.targets[i].dod) > half_dod) return false;
        if (std::abs(e.doa - truth.targets[i].doa) > half_doa) return false;
    }
    return true;
}

EstimationResult run_method(Method method, const Tensor3& y_full, const Tensor3& y_small, const MaskTensor& mask,
                            std::size_t k, const AlsOptions& als) {
    switch (method) {
        case Method::proposed: return estimate_proposed(y_full, mask, k, als);
        case Method::parafac_small: return baseline_parafac_small(y_small, k, als);
        case Method::esprit: return baseline_esprit(y_small, k);
    }
    throw std::invalid_argument("run_method: unknown method");
}

ResultTable run_rmse_sweep(const ExperimentConfig& cfg) {
    check_fixed_geometry(cfg);
    const Grid grid = run_trials(cfg);
    const TargetScene truth = truth_scene(cfg);
    ResultTable table;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const std::string name = to_string(cfg.methods[mi]);
        for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
            double se_dod = 0.0, se_doa = 0.0;
            std::size_t ok = 0;
            for (const TrialResult& tr : grid[mi][s]) {
                if (!tr.ok) continue;
                ++ok;
                const auto perm = match_to_truth(tr.pairs, truth);
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    se_dod += sq(rad2deg(tr.pairs[perm[i]].dod - truth.targets[i].dod));
                    se_doa += sq(rad2deg(tr.pairs[perm[i]].doa - truth.targets[i].doa));
                }
            }
            const double n = static_cast<double>(ok * truth.size());
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const double rmse_dod = ok ? std::sqrt(se_dod / n) : nan;
            const double rmse_doa = ok ? std::sqrt(se_doa / n) : nan;
            const double combined = ok ? std::sqrt((sq(rmse_dod) + sq(rmse_doa)) / 2.0) : nan;
            const double snr = cfg.snr_db[s];
            table.rows.push_back({name, snr, "rmse_combined", combined, cfg.trials, cfg.seed});
            table.rows.push_back({name, snr, "rmse_dod", rmse_dod, cfg.trials, cfg.seed});
            table.rows.push_back({name, snr, "rmse_doa", rmse_doa, cfg.trials, cfg.seed});
            table.rows.push_back({name, snr, "failures", static_cast<double>(cfg.trials - ok), cfg.trials, cfg.seed});
        }
    }
    sort_rows(table);
    return table;
}

ResultTable run_resolution_sweep(const ExperimentConfig& cfg) {
    if (cfg.scene.count != 2) throw std::invalid_argument("resolution sweep: needs exactly two targets");
    check_fixed_geometry(cfg);
    const Grid grid = run_trials(cfg);
    const TargetScene truth = truth_scene(cfg);
    ResultTable table;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const std::string name = to_string(cfg.methods[mi]);
        for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
            std::size_t ok = 0, resolved = 0;
            for (const TrialResult& tr : grid[mi][s]) {
                if (!tr.ok) continue;
                ++ok;
                if (is_resolved(tr.pairs, truth)) ++resolved;
            }
            // failed trials count as unresolved
            const double p = static_cast<double>(resolved) / static_cast<double>(cfg.trials);
            const double snr = cfg.snr_db[s];
            table.rows.push_back({name, snr, "p_resolution", p, cfg.trials, cfg.seed});
            table.rows.push_back({name, snr, "failures", static_cast<double>(cfg.trials - ok), cfg.trials, cfg.seed});
        }
    }
    sort_rows(table);
    return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
    return cfg.kind == ExperimentKind::rmse ? run_rmse_sweep(cfg) : run_resolution_sweep(cfg);
}

std::size_t worker_count(const ExperimentConfig& cfg) {
    std::size_t n = cfg.threads;
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("STMIMO_THREADS")) {
        char* end = nullptr;
        const unsigned long long cap = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min<std::size_t>(n, cap);
    }
    return std::max<std::size_t>(n, 1);
}

std::string format_csv(const ResultTable& table) {
    std::string out = "method,snr_db,metric,value,trials,seed\n";
    char buf[64];
    for (const auto& r : table.rows) {
        out += r.method;
        std::snprintf(buf, sizeof buf, ",%.9g,", r.snr_db);
        out += buf;
        out += r.metric;
        std::snprintf(buf, sizeof buf, ",%.9g,%zu,%llu\n", r.value, r.trials, static_cast<unsigned long long>(r.seed));
        out += buf;
    }
    return out;
}

void emit_csv(const ResultTable& table, const std::string& path, const ExperimentConfig* cfg) {
    auto write = [](const std::string& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open '" + p + "' for writing");
        f << text;
        f.flush();
        if (!f) throw std::runtime_error("write failed for '" + p + "'");
    };
    write(path, format_csv(table));
    if (cfg) {
        std::string meta = "# resolved experiment config; snr_db is mean per-element signal power of the\n"
                           "# noiseless tensor over noise variance\n";
        meta += format_config(*cfg);
        write(path + ".meta", meta);
    }
}

}  // namespace stmimo
