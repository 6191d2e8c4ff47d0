#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "amrl/experiment.hpp"
#include "amrl/stats.hpp"
#include "oracles.hpp"

using namespace amrl;
namespace fs = std::filesystem;

namespace {

xp::ExperimentConfig tiny_experiment(const std::string& dir) {
    xp::ExperimentConfig cfg;
    cfg.base.domain = "cmotp";
    cfg.base.arch = net::ArchitectureConfig::for_domain(net::Arch::AMS, "cmotp");
    cfg.base.env = {{"layout_rows", {"######G#", "#......#", "#......#", "#1.O..2#", "########"}},
                    {"teammate", "hesitant"},
                    {"max_steps", 50}};
    cfg.base.n_workers = 1;
    cfg.base.max_episodes = 12;
    cfg.base.seed = 3;
    cfg.run_count = 2;
    cfg.smoothing_window = 5;
    cfg.eval_cadence = 4;
    cfg.eval_episodes = 3;
    cfg.output_dir = dir;
    return cfg;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("moving average basics") {
    CHECK(xp::moving_average({}, 3).empty());
    const std::vector<double> id = xp::moving_average({4.0, 2.0, 7.0}, 1);
    CHECK(id == std::vector<double>{4.0, 2.0, 7.0});
    const std::vector<double> two = xp::moving_average({0.0, 1.0}, 2);
    CHECK(two[0] == 0.0);
    CHECK(two[1] == 0.5);
    CHECK_THROWS_AS(xp::moving_average({1.0}, 0), contract_error);
}

TEST_CASE("moving average matches a prefix-sum oracle") {
    Rng rng(1);
    std::vector<double> xs(4000);
    for (auto& x : xs) x = rng.uniform(-5.0, 5.0);
    const long window = 37;
    const std::vector<double> got = xp::moving_average(xs, window);
    REQUIRE(got.size() == xs.size());

    std::vector<double> prefix(xs.size() + 1, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) prefix[i + 1] = prefix[i] + xs[i];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t lo = (static_cast<long>(i) + 1 > window) ? i + 1 - static_cast<std::size_t>(window) : 0;
        const double want = (prefix[i + 1] - prefix[lo]) / static_cast<double>(i + 1 - lo);
        CHECK(std::abs(got[i] - want) < 1e-12);
    }
}

TEST_CASE("moving average output length equals input; huge window is the cumulative mean") {
    Rng rng(2);
    std::vector<double> xs(500);
    for (auto& x : xs) x = rng.uniform(0.0, 1.0);
    const std::vector<double> got = xp::moving_average(xs, 1 << 30);
    CHECK(got.size() == xs.size());
    double running = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        running += xs[i];
        CHECK(std::abs(got[i] - running / static_cast<double>(i + 1)) < 1e-12);
    }
}

TEST_CASE("welch t-test reproduces the frozen reference values") {
    // reference computed independently with scipy.stats.ttest_ind(equal_var=False)
    const xp::WelchResult r = xp::welch_ttest({2.1, 2.0, 1.9}, {1.0, 1.1, 0.9}, 0.05);
    CHECK(std::abs(r.t - 12.247448713915883) < 1e-6);
    CHECK(std::abs(r.p_value - 0.00025521674944192692) < 1e-6);
    CHECK(std::abs(r.df - 4.0) < 1e-9);
    CHECK(r.significant);
}

TEST_CASE("welch: identical samples are not significant") {
    const xp::WelchResult r = xp::welch_ttest({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0});
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.significant);
}

TEST_CASE("welch: separated samples with tiny jitter are significant") {
    const xp::WelchResult r =
        xp::welch_ttest({1.0, 1.0, 1.0, 1.0, 1.0}, {0.0, 1e-9, 2e-9, -1e-9, -2e-9}, 0.05);
    CHECK(r.p_value < 1e-20);
    CHECK(r.significant);
}

TEST_CASE("welch is symmetric in its arguments") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(3 + rng.uniform_int(5)), b(3 + rng.uniform_int(5));
        for (auto& x : a) x = rng.uniform(-2.0, 2.0);
        for (auto& x : b) x = rng.uniform(-1.0, 3.0);
        const xp::WelchResult ab = xp::welch_ttest(a, b);
        const xp::WelchResult ba = xp::welch_ttest(b, a);
        CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
        CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
    }
    CHECK_THROWS_AS(xp::welch_ttest({1.0}, {1.0, 2.0}), contract_error);
}

TEST_CASE("incomplete beta against scipy fixtures") {
    // scipy.special.betainc values
    CHECK(std::abs(xp::incomplete_beta(2.0, 3.0, 0.4) - 0.5248) < 1e-10);
    CHECK(std::abs(xp::incomplete_beta(0.5, 0.5, 0.25) - 0.33333333333333337) < 1e-10);
    CHECK(xp::incomplete_beta(1.0, 1.0, 0.0) == 0.0);
    CHECK(xp::incomplete_beta(1.0, 1.0, 1.0) == 1.0);
}

TEST_CASE("run_experiment writes per-run metrics and an aggregate summary") {
    const std::string dir =
        (fs::temp_directory_path() / ("amrl_xp_" + std::to_string(::getpid()))).string();
    xp::ExperimentConfig cfg = tiny_experiment(dir);
    const xp::ExperimentSummary summary = xp::run_experiment(cfg);

    CHECK(summary.runs.size() == 2);
    CHECK(summary.runs[0].seed == 3);
    CHECK(summary.runs[1].seed == 4);
    CHECK(summary.runs[0].episodes == 12);
    CHECK(fs::exists(fs::path(dir) / "run_0" / "metrics.jsonl"));
    CHECK(fs::exists(fs::path(dir) / "run_1" / "metrics.jsonl"));
    CHECK(fs::exists(fs::path(dir) / "summary.json"));
    CHECK(fs::exists(fs::path(dir) / "summary.csv"));
    CHECK(fs::exists(fs::path(dir) / "run_0" / "model_final.ckpt"));

    const xp::ExperimentSummary loaded = xp::load_summary(dir);
    CHECK(loaded.runs.size() == 2);
    CHECK(loaded.mean_final_return == doctest::Approx(summary.mean_final_return));

    // curve rows appear at the eval cadence over the smoothed series
    CHECK(!summary.curve.empty());
    CHECK(std::get<0>(summary.curve.front()) == 4);

    fs::remove_all(dir);
}

TEST_CASE("single-run summary has zero std") {
    const std::string dir =
        (fs::temp_directory_path() / ("amrl_xp1_" + std::to_string(::getpid()))).string();
    xp::ExperimentConfig cfg = tiny_experiment(dir);
    cfg.run_count = 1;
    cfg.base.max_episodes = 6;
    const xp::ExperimentSummary summary = xp::run_experiment(cfg);
    CHECK(summary.runs.size() == 1);
    CHECK(summary.std_final_return == 0.0);
    for (const auto& [ep, m, sd] : summary.curve) CHECK(sd == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("identical configs and seeds give byte-identical summaries") {
    const std::string dir_a =
        (fs::temp_directory_path() / ("amrl_det_a_" + std::to_string(::getpid()))).string();
    const std::string dir_b =
        (fs::temp_directory_path() / ("amrl_det_b_" + std::to_string(::getpid()))).string();
    xp::ExperimentConfig ca = tiny_experiment(dir_a);
    xp::ExperimentConfig cb = tiny_experiment(dir_b);
    ca.base.max_episodes = 8;
    cb.base.max_episodes = 8;
    xp::run_experiment(ca);
    xp::run_experiment(cb);

    const std::string sa = read_file(fs::path(dir_a) / "summary.json");
    const std::string sb = read_file(fs::path(dir_b) / "summary.json");
    CHECK(!sa.empty());
    CHECK(sa == sb);
    const std::string ma = read_file(fs::path(dir_a) / "run_0" / "metrics.jsonl");
    const std::string mb = read_file(fs::path(dir_b) / "run_0" / "metrics.jsonl");
    CHECK(ma == mb);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("lambda sweep produces one subdirectory and table row per setting") {
    const std::string dir =
        (fs::temp_directory_path() / ("amrl_sweep_" + std::to_string(::getpid()))).string();
    xp::ExperimentConfig cfg = tiny_experiment(dir);
    cfg.base.max_episodes = 6;
    cfg.run_count = 1;
    cfg.lambda_sweep = {rl::LambdaSchedule::fixed(0.1), rl::LambdaSchedule::anneal(0.999)};
    const auto rows = xp::lambda_sweep(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == "fixed_0p1");
    CHECK(rows[1].label == "anneal_0p999");
    CHECK(fs::exists(fs::path(dir) / "fixed_0p1" / "summary.json"));
    CHECK(fs::exists(fs::path(dir) / "anneal_0p999" / "summary.json"));
    CHECK(fs::exists(fs::path(dir) / "sweep.csv"));
    CHECK(fs::exists(fs::path(dir) / "sweep.json"));

    xp::ExperimentConfig empty_sweep = tiny_experiment(dir);
    CHECK_THROWS_AS(xp::lambda_sweep(empty_sweep), config_error);
    fs::remove_all(dir);
}

TEST_CASE("activation dumps carry one row per step with the configured width") {
    const std::string dir =
        (fs::temp_directory_path() / ("amrl_dump_" + std::to_string(::getpid()))).string();
    xp::ExperimentConfig cfg = tiny_experiment(dir);
    cfg.run_count = 1;
    cfg.base.max_episodes = 4;
    xp::run_experiment(cfg);
    const std::string ckpt = (fs::path(dir) / "run_0" / "model_final.ckpt").string();

    const std::string out = (fs::path(dir) / "acts.csv").string();
    xp::dump_activations(ckpt, 2, 7, out);
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("episode,step,value,h0,", 0) == 0);
    CHECK(header.find("h127") != std::string::npos);  // AMS hidden width 128
    long rows = 0;
    std::string line;
    long commas = std::count(header.begin(), header.end(), ',');
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CHECK(std::count(line.begin(), line.end(), ',') == commas);
        ++rows;
    }
    CHECK(rows > 0);

    // header-only dump for zero episodes
    const std::string out0 = (fs::path(dir) / "acts0.csv").string();
    xp::dump_activations(ckpt, 0, 7, out0);
    std::ifstream in0(out0);
    std::getline(in0, header);
    CHECK(header.rfind("episode,step,value", 0) == 0);
    CHECK_FALSE(std::getline(in0, header));
    fs::remove_all(dir);
}

TEST_CASE("experiment config json round trip") {
    xp::ExperimentConfig cfg = tiny_experiment("somewhere");
    cfg.lambda_sweep = {rl::LambdaSchedule::fixed(0.5), rl::LambdaSchedule::anneal(0.9999)};
    const nlohmann::json j = cfg.to_json();
    const xp::ExperimentConfig back = xp::ExperimentConfig::from_json(j);
    CHECK(back.run_count == cfg.run_count);
    CHECK(back.output_dir == cfg.output_dir);
    CHECK(back.base.domain == "cmotp");
    CHECK(back.base.arch.arch == net::Arch::AMS);
    CHECK(back.base.max_episodes == cfg.base.max_episodes);
    CHECK(back.lambda_sweep.size() == 2);
    CHECK(back.lambda_sweep[1].kind == rl::LambdaSchedule::Kind::ExponentialAnneal);
    CHECK(back.base.env.at("teammate") == "hesitant");
}
