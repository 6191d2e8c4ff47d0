#include "amrl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "amrl/checkpoint.hpp"
#include "amrl/errors.hpp"
#include "amrl/serialize.hpp"

namespace amrl::xp {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.base = train::TrainConfig::from_json(j);
    cfg.run_count = j.value("run_count", cfg.run_count);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.smoothing_window = j.value("smoothing_window", cfg.smoothing_window);
    cfg.eval_cadence = j.value("eval_cadence", cfg.eval_cadence);
    cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
    if (j.contains("lambda_sweep"))
        for (const auto& s : j["lambda_sweep"]) cfg.lambda_sweep.push_back(schedule_from_json(s));
    if (cfg.run_count < 1) throw config_error("run_count must be >= 1");
    if (cfg.smoothing_window < 1) throw config_error("smoothing_window must be >= 1");
    return cfg;
}

json ExperimentConfig::to_json() const {
    json j = base.to_json();
    j["run_count"] = run_count;
    j["output_dir"] = output_dir;
    j["smoothing_window"] = smoothing_window;
    j["eval_cadence"] = eval_cadence;
    j["eval_episodes"] = eval_episodes;
    if (!lambda_sweep.empty()) {
        json sweep = json::array();
        for (const auto& s : lambda_sweep) sweep.push_back(schedule_to_json(s));
        j["lambda_sweep"] = sweep;
    }
    return j;
}

std::vector<MetricsRecord> read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open metrics file " + path);
    std::vector<MetricsRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        MetricsRecord r;
        r.episode = j.at("episode").get<long>();
        r.worker = j.at("worker").get<int>();
        r.ret = j.at("return").get<double>();
        r.discounted_return = j.at("discounted_return").get<double>();
        r.length = j.at("length").get<long>();
        r.lambda_am = j.at("lambda_am").get<double>();
        r.wall_clock = j.at("wall_clock").get<double>();
        if (j.contains("aux_accuracy") && !j["aux_accuracy"].is_null()) {
            r.aux_accuracy = j["aux_accuracy"].get<double>();
            r.has_aux = true;
        }
        out.push_back(r);
    }
    return out;
}

std::vector<double> return_series(const std::vector<MetricsRecord>& records) {
    std::vector<MetricsRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(),
              [](const MetricsRecord& a, const MetricsRecord& b) { return a.episode < b.episode; });
    std::vector<double> out;
    out.reserve(sorted.size());
    for (const auto& r : sorted) out.push_back(r.ret);
    return out;
}

namespace {

std::string run_dir(const ExperimentConfig& cfg, int run) {
    return (fs::path(cfg.output_dir) / ("run_" + std::to_string(run))).string();
}

json summary_to_json(const ExperimentSummary& s) {
    json runs = json::array();
    for (const auto& r : s.runs)
        runs.push_back({{"seed", r.seed},
                        {"final_smoothed_return", r.final_smoothed_return},
                        {"final_aux_accuracy", r.final_aux_accuracy},
                        {"eval_mean_return", r.eval_mean_return},
                        {"eval_win_rate", r.eval_win_rate},
                        {"episodes", r.episodes}});
    json curve = json::array();
    for (const auto& [ep, m, sd] : s.curve) curve.push_back({{"episode", ep}, {"mean", m}, {"std", sd}});
    return {{"runs", runs},
            {"curve", curve},
            {"mean_final_return", s.mean_final_return},
            {"std_final_return", s.std_final_return}};
}

ExperimentSummary summary_from_json(const json& j) {
    ExperimentSummary s;
    for (const auto& r : j.at("runs")) {
        RunSummary rs;
        rs.seed = r.at("seed").get<std::uint64_t>();
        rs.final_smoothed_return = r.at("final_smoothed_return").get<double>();
        rs.final_aux_accuracy = r.at("final_aux_accuracy").get<double>();
        rs.eval_mean_return = r.at("eval_mean_return").get<double>();
        rs.eval_win_rate = r.at("eval_win_rate").get<double>();
        rs.episodes = r.at("episodes").get<long>();
        s.runs.push_back(rs);
    }
    for (const auto& c : j.at("curve"))
        s.curve.push_back({c.at("episode").get<long>(), c.at("mean").get<double>(), c.at("std").get<double>()});
    s.mean_final_return = j.at("mean_final_return").get<double>();
    s.std_final_return = j.at("std_final_return").get<double>();
    return s;
}

void write_summary_files(const ExperimentConfig& cfg, const ExperimentSummary& s) {
    std::ofstream jf(fs::path(cfg.output_dir) / "summary.json");
    if (!jf) throw config_error("cannot write summary under " + cfg.output_dir);
    jf << summary_to_json(s).dump(2) << "\n";

    std::ofstream cf(fs::path(cfg.output_dir) / "summary.csv");
    cf << "episode,mean_smoothed_return,std_smoothed_return\n";
    for (const auto& [ep, m, sd] : s.curve) cf << ep << "," << m << "," << sd << "\n";
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir))
        throw config_error("cannot create output directory " + cfg.output_dir);
    {
        std::ofstream cfg_out(fs::path(cfg.output_dir) / "config.json");
        cfg_out << cfg.to_json().dump(2) << "\n";
    }

    ExperimentSummary summary;
    std::vector<std::vector<double>> smoothed_per_run;

    for (int run = 0; run < cfg.run_count; ++run) {
        train::TrainConfig tc = cfg.base;
        tc.seed = cfg.base.seed + static_cast<std::uint64_t>(run);
        const std::string dir = run_dir(cfg, run);
        fs::create_directories(dir, ec);
        tc.metrics_path = (fs::path(dir) / "metrics.jsonl").string();
        tc.checkpoint_path = (fs::path(dir) / "model").string();

        const train::TrainResult result = train::train(tc);

        RunSummary rs;
        rs.seed = tc.seed;
        rs.episodes = result.episodes;

        const auto records = read_metrics(tc.metrics_path);
        const std::vector<double> returns = return_series(records);
        std::vector<double> smoothed =
            returns.empty() ? std::vector<double>{} : moving_average(returns, cfg.smoothing_window);
        rs.final_smoothed_return = smoothed.empty() ? 0.0 : smoothed.back();
        smoothed_per_run.push_back(smoothed);

        if (cfg.eval_episodes > 0) {
            const train::EvalStats ev = train::evaluate(result.params, tc.arch, tc.domain, tc.env, cfg.eval_episodes,
                                                        tc.seed + 90000, tc.weights.gamma);
            rs.eval_mean_return = ev.mean_return;
            rs.eval_win_rate = ev.win_rate;
            rs.final_aux_accuracy = ev.aux_accuracy;
        } else {
            rs.final_aux_accuracy = -1.0;
        }
        summary.runs.push_back(rs);
    }

    // summary curve at the evaluation cadence over the smoothed return series
    long max_len = 0;
    for (const auto& s : smoothed_per_run) max_len = std::max<long>(max_len, static_cast<long>(s.size()));
    std::vector<long> checkpoints;
    if (cfg.eval_cadence > 0)
        for (long ep = cfg.eval_cadence; ep <= max_len; ep += cfg.eval_cadence) checkpoints.push_back(ep);
    if (checkpoints.empty() && max_len > 0) checkpoints.push_back(max_len);
    for (long ep : checkpoints) {
        std::vector<double> vals;
        for (const auto& s : smoothed_per_run)
            if (static_cast<long>(s.size()) >= ep && ep > 0) vals.push_back(s[static_cast<std::size_t>(ep - 1)]);
        if (vals.empty()) continue;
        const double m = mean(vals);
        const double sd = vals.size() > 1 ? std::sqrt(sample_variance(vals)) : 0.0;
        summary.curve.push_back({ep, m, sd});
    }

    std::vector<double> finals;
    for (const auto& r : summary.runs) finals.push_back(r.final_smoothed_return);
    summary.mean_final_return = finals.empty() ? 0.0 : mean(finals);
    summary.std_final_return = finals.size() > 1 ? std::sqrt(sample_variance(finals)) : 0.0;

    write_summary_files(cfg, summary);
    return summary;
}

std::string schedule_label(const rl::LambdaSchedule& s) {
    std::ostringstream os;
    if (s.kind == rl::LambdaSchedule::Kind::Fixed)
        os << "fixed_" << s.fixed_value;
    else
        os << "anneal_" << s.rate;
    std::string label = os.str();
    for (char& c : label)
        if (c == '.') c = 'p';
    return label;
}

std::vector<SweepRow> lambda_sweep(const ExperimentConfig& cfg) {
    if (cfg.lambda_sweep.empty()) throw config_error("lambda_sweep: empty sweep list");
    std::vector<SweepRow> rows;
    for (const auto& schedule : cfg.lambda_sweep) {
        ExperimentConfig sub = cfg;
        sub.lambda_sweep.clear();
        sub.base.lambda_am = schedule;
        sub.output_dir = (fs::path(cfg.output_dir) / schedule_label(schedule)).string();
        rows.push_back({schedule_label(schedule), run_experiment(sub)});
    }

    json table = json::array();
    std::ofstream cf(fs::path(cfg.output_dir) / "sweep.csv");
    cf << "setting,mean_final_return,std_final_return\n";
    for (const auto& row : rows) {
        table.push_back({{"setting", row.label},
                         {"mean_final_return", row.summary.mean_final_return},
                         {"std_final_return", row.summary.std_final_return}});
        cf << row.label << "," << row.summary.mean_final_return << "," << row.summary.std_final_return << "\n";
    }
    std::ofstream jf(fs::path(cfg.output_dir) / "sweep.json");
    jf << table.dump(2) << "\n";
    return rows;
}

ExperimentSummary load_summary(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "summary.json");
    if (!in) throw config_error("no summary.json under " + dir);
    return summary_from_json(json::parse(in));
}

void dump_activations(const std::string& checkpoint_path, long n_episodes, std::uint64_t seed,
                      const std::string& out_path) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    if (!ck.meta.contains("train_config"))
        throw config_error("checkpoint has no train_config metadata; cannot infer architecture/domain");
    const train::TrainConfig tc = train::TrainConfig::from_json(ck.meta["train_config"]);

    std::ofstream out(out_path);
    if (!out) throw config_error("cannot write activation dump " + out_path);
    out << "episode,step,value";
    for (int i = 0; i < tc.arch.hidden_width(); ++i) out << ",h" << i;
    out << "\n";
    out.precision(17);

    if (n_episodes == 0) return;

    train::EvalHooks hooks;
    hooks.on_activation = [&](long episode, long step, const Tensor& hidden, double value) {
        out << episode << "," << step << "," << value;
        for (std::size_t i = 0; i < hidden.numel(); ++i) out << "," << hidden[i];
        out << "\n";
    };
    train::evaluate(ck.params, tc.arch, tc.domain, tc.env, n_episodes, seed, tc.weights.gamma, &hooks);
}

}  // namespace amrl::xp
