/**
 * @file experiments.hpp
 * @brief Monte Carlo RMSE and resolution sweeps over SNR.
 *
 * Every trial draws fresh Swerling-I coefficients (shared by all SNR points
 * of the same trial index) and fresh noise per (SNR, trial). Random streams
 * are derived from (seed, purpose, SNR index, trial index), so results do
 * not depend on how trials are spread over worker threads.
 */
#pragma once

#include "stmimo/decomposition.hpp"
#include "stmimo/estimator.hpp"
#include "stmimo/radar.hpp"

#include <string>
#include <vector>

namespace stmimo {

enum class Method { proposed, parafac_small, esprit };
enum class ExperimentKind { rmse, resolution };

/// Where the baselines' M x N x (Q/M) tensor comes from.
enum class SmallTensorSource {
    synthesized,  // direct decimated-rate synthesis with its own noise at the same per-element SNR
    decimated,    // demodulate + lowpass + decimate the proposed method's noisy tensor
};

std::string to_string(Method m);
std::string to_string(ExperimentKind k);
std::string to_string(SmallTensorSource s);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::rmse;
    RadarConfig radar = RadarConfig::paper();
    SceneSpec scene = SceneSpec::paper_rmse();
    std::vector<double> snr_db{-20, -15, -10, -5, 0, 5, 10, 15, 20};
    std::size_t trials = 200;
    std::vector<Method> methods{Method::proposed, Method::parafac_small, Method::esprit};
    Seed seed = 1;
    AlsOptions als{};
    bool noiseless = false;
    SmallTensorSource small_source = SmallTensorSource::synthesized;
    std::size_t threads = 0;  // 0 = STMIMO_THREADS, else hardware concurrency
    std::string output;

    void validate() const;

    /// Full-size array (M=8, N=10, Q=80), P=200, SNR -20..20 dB.
    static ExperimentConfig paper(ExperimentKind kind);
    /// Desk-scale array (M=4, N=4, Q=32), P=50, SNR -20..20 dB.
    static ExperimentConfig desk(ExperimentKind kind);
};

struct ResultRow {
    std::string method;
    double snr_db = 0.0;
    std::string metric;
    double value = 0.0;
    std::size_t trials = 0;
    Seed seed = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    /// Value of (method, snr, metric); NaN if absent.
    double value(const std::string& method, double snr_db, const std::string& metric) const;
};

/// Index into `estimates` for each truth target, minimizing total squared
/// (dod, doa) error. Exhaustive for K <= 6, greedy above.
std::vector<std::size_t> match_to_truth(const std::vector<AnglePair>& estimates, const TargetScene& truth);

/// Two-target resolution test: every matched estimate within half the
/// true separation in both angles.
bool is_resolved(const std::vector<AnglePair>& estimates, const TargetScene& truth);

/// Run one method on one trial's data. Throws on estimator failure.
EstimationResult run_method(Method method, const Tensor3& y_full, const Tensor3& y_small, const MaskTensor& mask,
                            std::size_t k, const AlsOptions& als);

/// Per (method, SNR): rmse_combined, rmse_dod, rmse_doa [deg] and failures.
ResultTable run_rmse_sweep(const ExperimentConfig& cfg);

/// Per (method, SNR): p_resolution and failures.
ResultTable run_resolution_sweep(const ExperimentConfig& cfg);

ResultTable run_experiment(const ExperimentConfig& cfg);

/// Effective worker count (explicit setting, then STMIMO_THREADS cap, then hardware).
std::size_t worker_count(const ExperimentConfig& cfg);

/// CSV text: header `method,snr_db,metric,value,trials,seed`, %.9g floats.
std::string format_csv(const ResultTable& table);

/// Write the CSV to `path` and, when `cfg` is given, the resolved config to
/// `path + ".meta"`. Throws std::runtime_error naming the path on I/O failure.
void emit_csv(const ResultTable& table, const std::string& path, const ExperimentConfig* cfg = nullptr);

}  // namespace stmimo
