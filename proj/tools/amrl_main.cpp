#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "amrl/checkpoint.hpp"
#include "amrl/errors.hpp"
#include "amrl/experiment.hpp"
#include "amrl/pommerman.hpp"
#include "amrl/serialize.hpp"
#include "amrl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw amrl::config_error("cannot open config file " + path);
    return json::parse(in);
}

// Relative output directories resolve under AMRL_OUTPUT_ROOT when it is set.
std::string resolve_output_dir(const std::string& dir) {
    const char* root = std::getenv("AMRL_OUTPUT_ROOT");
    if (root && *root && fs::path(dir).is_relative()) return (fs::path(root) / dir).string();
    return dir;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> workers,
              std::optional<long> episodes, std::optional<std::string> output_dir) {
    amrl::xp::ExperimentConfig cfg = amrl::xp::ExperimentConfig::from_json(load_json_file(config_path));
    if (seed) cfg.base.seed = *seed;
    if (workers) cfg.base.n_workers = *workers;
    if (episodes) cfg.base.max_episodes = *episodes;
    if (output_dir) cfg.output_dir = *output_dir;
    cfg.output_dir = resolve_output_dir(cfg.output_dir);

    const amrl::xp::ExperimentSummary summary = amrl::xp::run_experiment(cfg);
    std::cout << "runs: " << summary.runs.size() << "\n";
    std::cout << "mean final smoothed return: " << summary.mean_final_return << " (std " << summary.std_final_return
              << ")\n";
    for (const auto& r : summary.runs)
        std::cout << "  seed " << r.seed << ": final " << r.final_smoothed_return << ", eval "
                  << r.eval_mean_return << ", win rate " << r.eval_win_rate << ", aux " << r.final_aux_accuracy
                  << "\n";
    std::cout << "output: " << cfg.output_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, long episodes, std::uint64_t seed, const std::string& replay_log) {
    const amrl::Checkpoint ck = amrl::load_checkpoint(checkpoint);
    if (!ck.meta.contains("train_config"))
        throw amrl::config_error("checkpoint lacks train_config metadata");
    const amrl::train::TrainConfig tc = amrl::train::TrainConfig::from_json(ck.meta["train_config"]);

    std::ofstream log;
    amrl::train::EvalHooks hooks;
    const amrl::train::EvalHooks* hooks_ptr = nullptr;
    if (!replay_log.empty()) {
        if (tc.domain != "pommerman") throw amrl::config_error("replay logs are a pommerman feature");
        log.open(replay_log);
        if (!log) throw amrl::config_error("cannot write replay log " + replay_log);
        log << json{{"domain", tc.domain}, {"env", tc.env}}.dump() << "\n";
        hooks.on_episode_start = [&](long episode, std::uint64_t board_seed) {
            log << json{{"episode", episode}, {"seed", board_seed}}.dump() << "\n";
        };
        hooks.on_step = [&](long episode, long step, int a0, int a1, double r0, double r1, bool done) {
            log << json{{"episode", episode}, {"t", step},    {"a0", a0},   {"a1", a1},
                        {"r0", r0},           {"r1", r1},     {"done", done}}
                       .dump()
                << "\n";
        };
        hooks_ptr = &hooks;
    }

    const amrl::train::EvalStats s =
        amrl::train::evaluate(ck.params, tc.arch, tc.domain, tc.env, episodes, seed, tc.weights.gamma, hooks_ptr);
    std::cout << "episodes: " << s.episodes << "\n"
              << "mean return: " << s.mean_return << " (std " << s.std_return << ")\n"
              << "mean discounted return: " << s.mean_discounted_return << "\n"
              << "win rate: " << s.win_rate << "\n"
              << "mean episode length: " << s.mean_length << "\n"
              << "aux accuracy: " << s.aux_accuracy << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path) {
    amrl::xp::ExperimentConfig cfg = amrl::xp::ExperimentConfig::from_json(load_json_file(config_path));
    cfg.output_dir = resolve_output_dir(cfg.output_dir);
    const auto rows = amrl::xp::lambda_sweep(cfg);
    std::cout << "setting,mean_final_return,std_final_return\n";
    for (const auto& row : rows)
        std::cout << row.label << "," << row.summary.mean_final_return << "," << row.summary.std_final_return << "\n";
    return 0;
}

int cmd_significance(const std::string& dir_a, const std::string& dir_b, double alpha) {
    const auto sa = amrl::xp::load_summary(dir_a);
    const auto sb = amrl::xp::load_summary(dir_b);
    std::vector<double> a, b;
    for (const auto& r : sa.runs) a.push_back(r.final_smoothed_return);
    for (const auto& r : sb.runs) b.push_back(r.final_smoothed_return);
    const amrl::xp::WelchResult w = amrl::xp::welch_ttest(a, b, alpha);
    std::cout << "welch t-test (two-sided) on per-run final smoothed returns\n"
              << "t = " << w.t << ", df = " << w.df << ", p = " << w.p_value << "\n"
              << (w.significant ? "significant" : "not significant") << " at alpha = " << alpha << "\n";
    return 0;
}

int cmd_dump(const std::string& checkpoint, long episodes, std::uint64_t seed, const std::string& out) {
    amrl::xp::dump_activations(checkpoint, episodes, seed, out);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_replay(const std::string& log_path) {
    std::ifstream in(log_path);
    if (!in) throw amrl::config_error("cannot open replay log " + log_path);
    std::string line;
    if (!std::getline(in, line)) throw amrl::config_error("empty replay log");
    const json header = json::parse(line);
    if (header.value("domain", "") != "pommerman") throw amrl::config_error("replay log is not a pommerman log");

    amrl::env::PommermanEnv env(amrl::env::PomConfig::from_json(header.value("env", json::object())));
    long ticks = 0, episodes = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        if (rec.contains("seed")) {
            env.reset_from_seed(rec.at("seed").get<std::uint64_t>());
            ++episodes;
            continue;
        }
        const amrl::env::StepResult res = env.step(rec.at("a0").get<int>(), rec.at("a1").get<int>());
        if (res.reward_learner != rec.at("r0").get<double>() || res.reward_other != rec.at("r1").get<double>() ||
            res.done != rec.at("done").get<bool>()) {
            std::cerr << "replay mismatch at episode " << rec.at("episode") << " tick " << rec.at("t") << "\n";
            return 1;
        }
        ++ticks;
    }
    std::cout << "replayed " << episodes << " episodes / " << ticks << " ticks bit-exactly\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"asynchronous actor-critic with agent modeling: training and analysis tools"};
    app.require_subcommand(1);

    std::string config_path, checkpoint, out_path, replay_log, dir_a, dir_b, log_path;
    std::optional<std::uint64_t> seed_opt;
    std::optional<int> workers_opt;
    std::optional<long> episodes_opt;
    std::optional<std::string> output_opt;
    long episodes = 100;
    std::uint64_t seed = 1;
    double alpha = 0.05;

    auto* train_cmd = app.add_subcommand("train", "run a (multi-run) training experiment from a config file");
    train_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    train_cmd->add_option("--seed", seed_opt, "override the base seed");
    train_cmd->add_option("--workers", workers_opt, "override the worker count");
    train_cmd->add_option("--episodes", episodes_opt, "override max_episodes");
    train_cmd->add_option("--output", output_opt, "override the output directory");

    auto* eval_cmd = app.add_subcommand("evaluate", "greedy evaluation of a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint manifest path")->required();
    eval_cmd->add_option("--episodes", episodes, "number of evaluation episodes")->required();
    eval_cmd->add_option("--seed", seed, "evaluation seed");
    eval_cmd->add_option("--replay-log", replay_log, "write a pommerman replay log");

    auto* sweep_cmd = app.add_subcommand("sweep", "run the lambda sweep from a config file");
    sweep_cmd->add_option("--config", config_path, "experiment config (JSON) with lambda_sweep")->required();

    auto* sig_cmd = app.add_subcommand("significance", "Welch t-test between two experiment output dirs");
    sig_cmd->add_option("--a", dir_a, "first experiment directory")->required();
    sig_cmd->add_option("--b", dir_b, "second experiment directory")->required();
    sig_cmd->add_option("--alpha", alpha, "significance level");

    auto* dump_cmd = app.add_subcommand("dump-activations", "record hidden activations and values to CSV");
    dump_cmd->add_option("--checkpoint", checkpoint, "checkpoint manifest path")->required();
    dump_cmd->add_option("--episodes", episodes, "episodes to play")->required();
    dump_cmd->add_option("--seed", seed, "evaluation seed");
    dump_cmd->add_option("--out", out_path, "output CSV path")->required();

    auto* replay_cmd = app.add_subcommand("replay", "re-simulate a pommerman replay log and verify it");
    replay_cmd->add_option("--log", log_path, "replay log path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, seed_opt, workers_opt, episodes_opt, output_opt);
        if (eval_cmd->parsed()) return cmd_evaluate(checkpoint, episodes, seed, replay_log);
        if (sweep_cmd->parsed()) return cmd_sweep(config_path);
        if (sig_cmd->parsed()) return cmd_significance(dir_a, dir_b, alpha);
        if (dump_cmd->parsed()) return cmd_dump(checkpoint, episodes, seed, out_path);
        if (replay_cmd->parsed()) return cmd_replay(log_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
