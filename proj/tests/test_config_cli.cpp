#include "stmimo/config.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stmimo;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(STMIMO_CLI_PATH) + " " + args + " 2>/dev/null";
    RunResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::filesystem::path scratch_dir() {
    const auto d = std::filesystem::temp_directory_path() / "stmimo_cli_test";
    std::filesystem::create_directories(d);
    return d;
}

std::string write_text(const std::string& name, const std::string& text) {
    const auto p = scratch_dir() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, ParsesKeysListsAndComments) {
    const ExperimentConfig c = parse_config(
        "# desk run\n"
        "preset = desk\n"
        "experiment = resolution   # trailing comment\n"
        "\n"
        "trials = 7\n"
        "snr_db = -10, 0,10\n"
        "methods = esprit, proposed\n"
        "seed = 99\n"
        "small_tensor = decimated\n"
        "als_max_iters = 120\n"
        "als_init = svd\n");
    EXPECT_EQ(c.kind, ExperimentKind::resolution);
    EXPECT_EQ(c.radar.tx_elements, 4u);
    EXPECT_EQ(c.trials, 7u);
    EXPECT_EQ(c.snr_db, (std::vector<double>{-10.0, 0.0, 10.0}));
    EXPECT_EQ(c.methods, (std::vector<Method>{Method::esprit, Method::proposed}));
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.small_source, SmallTensorSource::decimated);
    EXPECT_EQ(c.als.max_iters, 120u);
    EXPECT_EQ(c.als.init, AlsInit::svd);
    // resolution preset brings the closely spaced scene
    ASSERT_EQ(c.scene.dod.size(), 2u);
    EXPECT_NEAR(rad2deg(c.scene.dod[1]), 21.0, 1e-12);
}

TEST(Config, AnglesAreDegrees) {
    const ExperimentConfig c = parse_config("dod = -30, 25\ndoa = -15, 20\ndoppler = 0.01, 0.02\n");
    EXPECT_NEAR(c.scene.dod[0], deg2rad(-30.0), 1e-15);
    EXPECT_NEAR(c.scene.doa[1], deg2rad(20.0), 1e-15);
    EXPECT_EQ(c.scene.doppler, (std::vector<double>{0.01, 0.02}));
}

TEST(Config, PresetAppliesBeforeOtherKeys) {
    const ExperimentConfig c = parse_config("trials = 7\npulses = 64\npreset = desk\n");
    EXPECT_EQ(c.trials, 7u);
    EXPECT_EQ(c.radar.pulses, 64u);
    EXPECT_EQ(c.radar.tx_elements, 4u);
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_config("bogus_key = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("trials = 3\ntrials = 4\n"), ConfigError);
    EXPECT_THROW(parse_config("trials 3\n"), ConfigError);
    EXPECT_THROW(parse_config("trials = three\n"), ConfigError);
    EXPECT_THROW(parse_config("trials = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("snr_db = 1, x\n"), ConfigError);
    EXPECT_THROW(parse_config("methods = music\n"), ConfigError);
    EXPECT_THROW(parse_config("targets = 3\ndod = 1, 2\n"), ConfigError);
    EXPECT_THROW(parse_config("preset = huge\n"), ConfigError);
    EXPECT_THROW(parse_config("experiment = resolution\ntargets = 3\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/stmimo.cfg"), ConfigError);
}

TEST(Config, FormatRoundTrip) {
    for (const ExperimentConfig& c :
         {ExperimentConfig::paper(ExperimentKind::rmse), ExperimentConfig::desk(ExperimentKind::resolution),
          parse_config("preset = desk\nsnr_db = -5, 5\nmethods = esprit\nnoiseless = true\nseed = 12345678901234\n")}) {
        const std::string text = format_config(c);
        const ExperimentConfig back = parse_config(text);
        EXPECT_EQ(format_config(back), text);
        EXPECT_EQ(back.trials, c.trials);
        EXPECT_EQ(back.seed, c.seed);
        EXPECT_EQ(back.methods, c.methods);
        EXPECT_EQ(back.noiseless, c.noiseless);
        EXPECT_EQ(back.radar.pulses, c.radar.pulses);
        for (std::size_t i = 0; i < c.scene.dod.size(); ++i) EXPECT_NEAR(back.scene.dod[i], c.scene.dod[i], 1e-14);
    }
}

TEST(Config, LoadFromFile) {
    const std::string p = write_text("load.cfg", "preset = desk\ntrials = 3\n");
    EXPECT_EQ(load_config(p).trials, 3u);
}

TEST(Cli, EstimatePrintsPaperScenePairs) {
    const RunResult r = run_cli("estimate --desk");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "dod_deg,doa_deg\n-30.000000,-15.000000\n25.000000,20.000000\n");
    for (const char* m : {"parafac_small", "esprit"}) {
        const RunResult b = run_cli(std::string("estimate --desk --method ") + m);
        EXPECT_EQ(b.code, 0);
        EXPECT_EQ(b.out, r.out) << m;
    }
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("--help").code, 0);
    EXPECT_EQ(run_cli("").code, 1);
    EXPECT_EQ(run_cli("launch").code, 1);
    EXPECT_EQ(run_cli("estimate --config /nonexistent/stmimo.cfg").code, 1);
    EXPECT_EQ(run_cli("estimate --desk --method music").code, 1);
    EXPECT_EQ(run_cli("benchmark --config " + write_text("bad.cfg", "nonsense = 1\n")).code, 1);
    const std::string ok = write_text("ok.cfg", "preset = desk\ntrials = 1\nsnr_db = 10\nmethods = esprit\n");
    EXPECT_EQ(run_cli("benchmark --config " + ok + " --out /nonexistent_dir_for_stmimo/x.csv").code, 2);
}

TEST(Cli, BenchmarkIsReproducible) {
    const std::string cfg = write_text("bench.cfg", "preset = desk\ntrials = 3\nsnr_db = 0, 20\n");
    const RunResult a = run_cli("benchmark --config " + cfg);
    const RunResult b = run_cli("benchmark --config " + cfg + " --threads 2");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.rfind("method,snr_db,metric,value,trials,seed\n", 0), 0u);
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 1 + 3 * 2 * 4);

    const std::string out = (scratch_dir() / "bench.csv").string();
    EXPECT_EQ(run_cli("benchmark --config " + cfg + " --out " + out).code, 0);
    EXPECT_EQ(read_text(out), a.out);
    EXPECT_NE(read_text(out + ".meta").find("trials = 3"), std::string::npos);

    const RunResult seeded = run_cli("benchmark --config " + cfg + " --seed 2");
    EXPECT_NE(seeded.out, a.out);
}

TEST(Cli, BenchmarkFlagOverrides) {
    const RunResult r = run_cli("benchmark --desk --experiment resolution --trials 2 --snr=-5,5 --method esprit");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("esprit,-5,p_resolution,"), std::string::npos);
    EXPECT_NE(r.out.find("esprit,5,failures,"), std::string::npos);
    EXPECT_EQ(r.out.find("proposed"), std::string::npos);
}

TEST(Cli, SimulateDumpsTensor) {
    const RunResult r = run_cli("simulate --desk --noiseless");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("# dims 4 4 32\n", 0), 0u);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2 + 4 * 4 * 32);
    const std::string rd = (scratch_dir() / "rd.csv").string();
    EXPECT_EQ(run_cli("simulate --desk --chain --out " + (scratch_dir() / "t.txt").string() + " --rd-csv " + rd).code, 0);
    EXPECT_FALSE(read_text(rd).empty());
}
