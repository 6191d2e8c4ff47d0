#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "amrl/stats.hpp"
#include "amrl/trainer.hpp"

namespace amrl::xp {

struct ExperimentConfig {
    train::TrainConfig base;
    int run_count = 1;
    std::string output_dir = "runs";
    long smoothing_window = 1000;
    long eval_cadence = 0;     // episodes between summary rows; 0 = final only
    long eval_episodes = 100;  // greedy evaluation episodes per run
    std::vector<rl::LambdaSchedule> lambda_sweep;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// One line of the per-episode metrics stream.
struct MetricsRecord {
    long episode = 0;
    int worker = 0;
    double ret = 0.0;
    double discounted_return = 0.0;
    long length = 0;
    double lambda_am = 0.0;
    double aux_accuracy = 0.0;
    bool has_aux = false;
    double wall_clock = 0.0;
};

std::vector<MetricsRecord> read_metrics(const std::string& path);
// Undiscounted returns ordered by episode index.
std::vector<double> return_series(const std::vector<MetricsRecord>& records);

struct RunSummary {
    std::uint64_t seed = 0;
    double final_smoothed_return = 0.0;
    double final_aux_accuracy = 0.0;  // -1 without modeled agents
    double eval_mean_return = 0.0;
    double eval_win_rate = 0.0;
    long episodes = 0;
};

struct ExperimentSummary {
    std::vector<RunSummary> runs;
    // per eval-cadence checkpoint: episode index, mean and std of the smoothed return
    std::vector<std::tuple<long, double, double>> curve;
    double mean_final_return = 0.0;
    double std_final_return = 0.0;
};

// run_count independent seeded training runs; writes run_<k>/metrics.jsonl,
// final checkpoints, summary.json and summary.csv under cfg.output_dir.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

// One run_experiment per sweep entry in its own subdirectory, plus a merged
// comparison table (sweep.json / sweep.csv).
struct SweepRow {
    std::string label;
    ExperimentSummary summary;
};
std::vector<SweepRow> lambda_sweep(const ExperimentConfig& cfg);

ExperimentSummary load_summary(const std::string& dir);
std::string schedule_label(const rl::LambdaSchedule& s);

// Plays a checkpoint greedily and writes one CSV row per step:
// episode,step,value,h0..h{D-1}. A zero-episode dump writes only the header.
void dump_activations(const std::string& checkpoint_path, long n_episodes, std::uint64_t seed,
                      const std::string& out_path);

}  // namespace amrl::xp
