#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amrl/env.hpp"
#include "amrl/losses.hpp"
#include "amrl/network.hpp"
#include "amrl/params.hpp"

namespace amrl::train {

// One fixed-horizon trajectory segment: everything a worker needs to assemble
// a single gradient update. The tape cache holds the forward passes recorded
// while acting; compute_gradients reuses it when present (the re-forward on
// the same parameters is bit-identical, so both paths give the same update).
struct Rollout {
    std::vector<Tensor> observations;
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<std::vector<int>> other_agent_actions;  // [modeled agent][t]
    std::vector<double> values;
    bool terminal = false;
    double bootstrap_value = 0.0;

    std::shared_ptr<Tape> tape;  // optional forward cache
    std::vector<net::ForwardNodes> nodes;
    std::vector<int> param_leaf_ids;

    std::size_t length() const { return observations.size(); }
    void validate() const;
    Rollout without_cache() const;
};

struct TrainConfig {
    net::ArchitectureConfig arch;
    std::string domain = "cmotp";
    nlohmann::json env = nlohmann::json::object();
    int n_workers = 4;
    int t_max = 20;
    long max_episodes = 1000;
    rl::LossWeights weights;
    rl::LambdaSchedule lambda_am = rl::LambdaSchedule::fixed(0.1);
    AdamConfig adam;
    bool grad_clip = true;
    double grad_clip_norm = 40.0;
    std::uint64_t seed = 1;
    long checkpoint_cadence = 0;  // episodes between checkpoints; 0 = final only
    std::string metrics_path;     // JSONL stream, empty = no file
    std::string checkpoint_path;  // prefix, empty = no checkpoints
    std::string resume_checkpoint;  // warm-start parameters and Adam state

    static TrainConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// The one cross-thread object: parameters plus Adam state behind a mutex.
// snapshot() and apply() are atomic with respect to each other, so concurrent
// applies serialize into some arrival order of Adam steps.
class GlobalStore {
public:
    GlobalStore(NetworkParams init, AdamConfig adam_cfg);

    std::pair<NetworkParams, long> snapshot() const;
    void apply(const GradientSet& grads);

    long update_count() const;
    long episode_count() const;
    long next_episode();  // returns the 1-based index of a finished episode

    std::pair<NetworkParams, AdamState> state_copy() const;
    void restore(const NetworkParams& params, const AdamState& adam);

private:
    mutable std::mutex mu_;
    NetworkParams params_;
    AdamState adam_;
    AdamConfig adam_cfg_;
    long update_count_ = 0;
    long episode_count_ = 0;
};

// Plays t_max steps (or up to episode end) sampling from the current policy,
// recording the scripted agent's executed actions as modeling ground truth.
Rollout collect_rollout(env::Environment& env, const NetworkParams& params, const net::ArchitectureConfig& arch,
                        int t_max, Rng& rng);

struct GradientStats {
    double loss = 0.0;
    double grad_norm = 0.0;  // pre-clip
    long aux_correct = 0;    // argmax prediction hits on modeled agents
    long aux_total = 0;
};

GradientSet compute_gradients(const Rollout& rollout, const NetworkParams& params,
                              const net::ArchitectureConfig& arch, const rl::LossWeights& weights, double lambda_am,
                              bool clip, double clip_norm, GradientStats* stats = nullptr);

void apply_gradients(GlobalStore& store, const GradientSet& grads);

struct TrainResult {
    NetworkParams params;
    AdamState adam;
    long episodes = 0;
    long updates = 0;
};

// Spawns n_workers sync->collect->compute->apply loops against a shared
// GlobalStore. n_workers == 1 runs inline on the calling thread and is fully
// deterministic for a fixed seed.
TrainResult train(const TrainConfig& cfg);

struct EvalStats {
    double mean_return = 0.0;
    double std_return = 0.0;
    double mean_discounted_return = 0.0;
    double win_rate = 0.0;
    double mean_length = 0.0;
    double aux_accuracy = 0.0;  // -1 when the architecture models nobody
    // frequency of the scripted agent's single most common action, the
    // baseline any state-aware predictor has to beat
    double majority_other_frequency = 0.0;
    long episodes = 0;
};

// Per-step hook used by the activation dumper and the replay logger.
struct EvalHooks {
    std::function<void(long episode, long step, const Tensor& last_hidden, double value)> on_activation;
    std::function<void(long episode, std::uint64_t board_seed)> on_episode_start;
    std::function<void(long episode, long step, int a0, int a1, double r0, double r1, bool done)> on_step;
};

// Greedy (argmax) evaluation without learning.
EvalStats evaluate(const NetworkParams& params, const net::ArchitectureConfig& arch, const std::string& domain,
                   const nlohmann::json& env_cfg, long n_episodes, std::uint64_t seed, double gamma = 0.99,
                   const EvalHooks* hooks = nullptr);

}  // namespace amrl::train
