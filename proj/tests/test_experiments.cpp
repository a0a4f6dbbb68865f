#include "stmimo/experiments.hpp"

#include "stmimo/config.hpp"

#include "test_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stmimo;

namespace {

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ExperimentConfig small_rmse() {
    ExperimentConfig c = ExperimentConfig::desk(ExperimentKind::rmse);
    c.snr_db = {0.0, 20.0};
    c.trials = 4;
    return c;
}

TargetScene two_targets(double d0, double a0, double d1, double a1) {
    TargetScene s;
    s.targets.resize(2);
    s.targets[0].dod = d0;
    s.targets[0].doa = a0;
    s.targets[1].dod = d1;
    s.targets[1].doa = a1;
    return s;
}

}  // namespace

TEST(Matching, PermutationInvariant) {
    const TargetScene truth = two_targets(-0.5, -0.2, 0.4, 0.3);
    const std::vector<AnglePair> est{{0.41, 0.29}, {-0.49, -0.21}};
    const auto idx = match_to_truth(est, truth);
    EXPECT_EQ(idx, (std::vector<std::size_t>{1, 0}));
    const std::vector<AnglePair> swapped{est[1], est[0]};
    EXPECT_EQ(match_to_truth(swapped, truth), (std::vector<std::size_t>{0, 1}));
    EXPECT_THROW(match_to_truth({est[0]}, truth), std::invalid_argument);
}

TEST(Matching, GreedyForLargeK) {
    TargetScene truth;
    std::vector<AnglePair> est;
    for (int k = 0; k < 8; ++k) {
        Target t;
        t.dod = 0.1 * k;
        t.doa = -0.1 * k;
        truth.targets.push_back(t);
        est.push_back({0.1 * (7 - k) + 0.001, -0.1 * (7 - k)});
    }
    const auto idx = match_to_truth(est, truth);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(idx[k], 7 - k);
}

TEST(Resolution, Criterion) {
    const TargetScene truth = two_targets(deg2rad(20), deg2rad(15), deg2rad(21), deg2rad(16));
    EXPECT_TRUE(is_resolved({{deg2rad(21.1), deg2rad(15.9)}, {deg2rad(19.8), deg2rad(15.2)}}, truth));
    // both estimates collapse onto the midpoint
    EXPECT_FALSE(is_resolved({{deg2rad(20.5), deg2rad(15.5)}, {deg2rad(20.5), deg2rad(15.5)}}, truth));
    EXPECT_FALSE(is_resolved({{deg2rad(20.0), deg2rad(15.0)}, {deg2rad(21.0), deg2rad(16.6)}}, truth));
}

TEST(RmseSweep, NoiselessIsExact) {
    ExperimentConfig c = small_rmse();
    c.noiseless = true;
    c.trials = 3;
    const ResultTable t = run_rmse_sweep(c);
    for (const std::string m : {"proposed", "parafac_small", "esprit"})
        for (double snr : c.snr_db) {
            EXPECT_LE(t.value(m, snr, "rmse_combined"), 1e-3) << m << " " << snr;
            EXPECT_EQ(t.value(m, snr, "failures"), 0.0);
        }
}

TEST(RmseSweep, RowsAndFailureAccounting) {
    const ExperimentConfig c = small_rmse();
    const ResultTable t = run_experiment(c);
    EXPECT_EQ(t.rows.size(), 3u * 2u * 4u);
    for (const auto& r : t.rows) {
        EXPECT_EQ(r.trials, c.trials);
        EXPECT_EQ(r.seed, c.seed);
        if (r.metric == "failures") {
            EXPECT_GE(r.value, 0.0);
            EXPECT_LE(r.value, static_cast<double>(c.trials));
        }
    }
    // sorted by method name, then SNR
    EXPECT_EQ(t.rows.front().method, "esprit");
    EXPECT_EQ(t.rows.front().snr_db, 0.0);
    EXPECT_EQ(t.rows.back().method, "proposed");
    EXPECT_EQ(t.rows.back().snr_db, 20.0);
    for (const std::string m : {"proposed", "parafac_small", "esprit"}) {
        const double comb = t.value(m, 20.0, "rmse_combined");
        const double dod = t.value(m, 20.0, "rmse_dod");
        const double doa = t.value(m, 20.0, "rmse_doa");
        EXPECT_NEAR(2.0 * comb * comb, dod * dod + doa * doa, 1e-9 * comb * comb);
    }
}

TEST(RmseSweep, HighSnrBeatsLowSnr) {
    ExperimentConfig c = ExperimentConfig::desk(ExperimentKind::rmse);
    c.snr_db = {-10.0, 20.0};
    c.trials = 10;
    const ResultTable t = run_experiment(c);
    for (const std::string m : {"proposed", "parafac_small", "esprit"})
        EXPECT_LT(t.value(m, 20.0, "rmse_combined"), t.value(m, -10.0, "rmse_combined")) << m;
}

TEST(RmseSweep, DeterministicAcrossThreadCounts) {
    ExperimentConfig c = small_rmse();
    c.threads = 1;
    const std::string one = format_csv(run_experiment(c));
    c.threads = 4;
    const std::string four = format_csv(run_experiment(c));
    EXPECT_EQ(one, four);
    EXPECT_EQ(one, format_csv(run_experiment(c)));
    c.seed = 2;
    EXPECT_NE(one, format_csv(run_experiment(c)));
}

TEST(RmseSweep, DecimatedSmallTensorSource) {
    ExperimentConfig c = small_rmse();
    c.noiseless = true;
    c.trials = 2;
    c.radar = RadarConfig::paper();
    c.methods = {Method::esprit};
    c.small_source = SmallTensorSource::decimated;
    const ResultTable t = run_experiment(c);
    EXPECT_LE(t.value("esprit", 0.0, "rmse_combined"), 0.1);
}

TEST(RmseSweep, RejectsInvalidConfig) {
    ExperimentConfig c = small_rmse();
    c.trials = 0;
    EXPECT_THROW(run_experiment(c), std::invalid_argument);
    c = small_rmse();
    c.methods.clear();
    EXPECT_THROW(run_experiment(c), std::invalid_argument);
    c = ExperimentConfig::desk(ExperimentKind::resolution);
    c.scene.count = 3;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ResolutionSweep, NoiselessFullScaleResolves) {
    ExperimentConfig c = ExperimentConfig::paper(ExperimentKind::resolution);
    c.noiseless = true;
    c.snr_db = {20.0};
    c.trials = 3;
    const ResultTable t = run_experiment(c);
    EXPECT_EQ(t.rows.size(), 3u * 2u);
    EXPECT_EQ(t.value("esprit", 20.0, "p_resolution"), 1.0);
    EXPECT_EQ(t.value("parafac_small", 20.0, "p_resolution"), 1.0);
    EXPECT_EQ(t.value("proposed", 20.0, "p_resolution"), 1.0);
}

TEST(Csv, HeaderRowsAndFormat) {
    ResultTable t;
    EXPECT_EQ(format_csv(t), "method,snr_db,metric,value,trials,seed\n");
    t.rows.push_back({"esprit", -10.0, "rmse_doa", 1.0 / 3.0, 7, 42});
    const std::string csv = format_csv(t);
    EXPECT_EQ(csv, "method,snr_db,metric,value,trials,seed\nesprit,-10,rmse_doa,0.333333333,7,42\n");
    EXPECT_EQ(count_lines(csv), 2u);
}

TEST(Csv, EmitWritesFileAndMeta) {
    const auto dir = std::filesystem::temp_directory_path() / "stmimo_test_emit";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "out.csv").string();
    ResultTable t;
    t.rows.push_back({"proposed", 0.0, "rmse_combined", 1.5, 3, 1});
    const ExperimentConfig cfg = small_rmse();
    emit_csv(t, path, &cfg);
    EXPECT_EQ(read_file(path), format_csv(t));
    const std::string meta = read_file(path + ".meta");
    EXPECT_NE(meta.find("trials = 4"), std::string::npos);
    EXPECT_EQ(format_config(parse_config(meta)), format_config(cfg));
    std::filesystem::remove_all(dir);
}

TEST(Csv, UnwritablePathNamesPath) {
    const std::string bad = "/nonexistent_dir_for_stmimo/out.csv";
    try {
        emit_csv(ResultTable{}, bad);
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
    }
}

TEST(Workers, ExplicitCountWins) {
    ExperimentConfig c;
    c.threads = 3;
    EXPECT_EQ(worker_count(c), 3u);
    c.threads = 0;
    EXPECT_GE(worker_count(c), 1u);
}

TEST(FullScaleRmse, MethodOrdering) {
    ExperimentConfig c = ExperimentConfig::paper(ExperimentKind::rmse);
    c.snr_db = {-15.0, -10.0, 20.0};
    c.trials = 200;
    const ResultTable t = run_experiment(c);
    auto rmse = [&](const std::string& m, double snr) { return t.value(m, snr, "rmse_combined"); };
    EXPECT_LT(rmse("proposed", 20.0), rmse("esprit", 20.0));
    EXPECT_GT(rmse("parafac_small", -10.0), rmse("proposed", -10.0));
    EXPECT_GT(rmse("esprit", -15.0), rmse("proposed", -15.0));
}

TEST(ResolutionSweep, FullScaleCloseTargetsResolvedAtTwentyDb) {
    ExperimentConfig c = ExperimentConfig::paper(ExperimentKind::resolution);
    c.snr_db = {20.0};
    c.trials = 50;
    const ResultTable t = run_experiment(c);
    for (const std::string m : {"proposed", "parafac_small", "esprit"})
        EXPECT_GE(t.value(m, 20.0, "p_resolution"), 0.95) << m;
}
