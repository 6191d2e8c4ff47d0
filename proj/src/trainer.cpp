#include "amrl/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>

#include "amrl/errors.hpp"
#include "amrl/checkpoint.hpp"
#include "amrl/serialize.hpp"

namespace amrl::train {

using nlohmann::json;

void Rollout::validate() const {
    const std::size_t m = observations.size();
    if (m == 0) throw contract_error("rollout: empty");
    if (actions.size() != m || rewards.size() != m || values.size() != m)
        throw contract_error("rollout: per-step lists disagree in length");
    for (const auto& oa : other_agent_actions)
        if (oa.size() != m) throw contract_error("rollout: other-agent action list length mismatch");
    if (terminal && bootstrap_value != 0.0) throw contract_error("rollout: terminal segment with nonzero bootstrap");
}

Rollout Rollout::without_cache() const {
    Rollout r = *this;
    r.tape.reset();
    r.nodes.clear();
    r.param_leaf_ids.clear();
    return r;
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig cfg;
    cfg.domain = j.value("domain", cfg.domain);
    const std::string tag = j.value("architecture", "a3c");
    cfg.arch = net::ArchitectureConfig::for_domain(net::arch_from_string(tag), cfg.domain);
    if (j.contains("arch")) cfg.arch = arch_from_json(j["arch"]);
    cfg.env = j.value("env", json::object());
    cfg.n_workers = j.value("workers", cfg.n_workers);
    cfg.t_max = j.value("t_max", cfg.t_max);
    cfg.max_episodes = j.value("max_episodes", cfg.max_episodes);
    if (j.contains("loss_weights")) cfg.weights = weights_from_json(j["loss_weights"]);
    if (j.contains("lambda_am")) cfg.lambda_am = schedule_from_json(j["lambda_am"]);
    if (j.contains("adam")) cfg.adam = adam_from_json(j["adam"]);
    cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
    cfg.grad_clip_norm = j.value("grad_clip_norm", cfg.grad_clip_norm);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.checkpoint_cadence = j.value("checkpoint_cadence", cfg.checkpoint_cadence);
    cfg.resume_checkpoint = j.value("resume_checkpoint", cfg.resume_checkpoint);
    if (cfg.n_workers < 1) throw config_error("workers must be >= 1");
    if (cfg.t_max < 1) throw config_error("t_max must be >= 1");
    if (cfg.max_episodes < 0) throw config_error("max_episodes must be >= 0");
    return cfg;
}

json TrainConfig::to_json() const {
    return {{"domain", domain},
            {"architecture", net::to_string(arch.arch)},
            {"arch", arch_to_json(arch)},
            {"env", env},
            {"workers", n_workers},
            {"t_max", t_max},
            {"max_episodes", max_episodes},
            {"loss_weights", weights_to_json(weights)},
            {"lambda_am", schedule_to_json(lambda_am)},
            {"adam", adam_to_json(adam)},
            {"grad_clip", grad_clip},
            {"grad_clip_norm", grad_clip_norm},
            {"seed", seed},
            {"checkpoint_cadence", checkpoint_cadence},
            {"resume_checkpoint", resume_checkpoint}};
}

GlobalStore::GlobalStore(NetworkParams init, AdamConfig adam_cfg)
    : params_(std::move(init)), adam_(AdamState::init_like(params_)), adam_cfg_(adam_cfg) {}

std::pair<NetworkParams, long> GlobalStore::snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return {params_, update_count_};
}

void GlobalStore::apply(const GradientSet& grads) {
    std::lock_guard<std::mutex> lock(mu_);
    adam_step(params_, grads, adam_, adam_cfg_);
    update_count_ += 1;
}

long GlobalStore::update_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return update_count_;
}

long GlobalStore::episode_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return episode_count_;
}

long GlobalStore::next_episode() {
    std::lock_guard<std::mutex> lock(mu_);
    return ++episode_count_;
}

std::pair<NetworkParams, AdamState> GlobalStore::state_copy() const {
    std::lock_guard<std::mutex> lock(mu_);
    return {params_, adam_};
}

void GlobalStore::restore(const NetworkParams& params, const AdamState& adam) {
    std::lock_guard<std::mutex> lock(mu_);
    params_ = params;
    adam_ = adam;
    // one Adam step per applied update, so the lambda schedule resumes too
    update_count_ = adam.step_count;
}

Rollout collect_rollout(env::Environment& env, const NetworkParams& params, const net::ArchitectureConfig& arch,
                        int t_max, Rng& rng) {
    if (t_max < 1) throw contract_error("collect_rollout: t_max must be >= 1");
    if (env.done()) throw contract_error("collect_rollout: environment already terminal");

    Rollout r;
    r.tape = std::make_shared<Tape>();
    const net::TapedParams tp = net::stage_params(*r.tape, params);
    r.param_leaf_ids = tp.leaf_ids;
    r.other_agent_actions.resize(static_cast<std::size_t>(arch.n_modeled_agents));

    for (int t = 0; t < t_max; ++t) {
        Tensor obs = env.observe(0);
        const net::ForwardNodes nodes = net::forward(*r.tape, tp, arch, obs);
        const Tensor& policy = r.tape->value(nodes.policy);
        const int action = rng.categorical(policy.data(), static_cast<int>(policy.numel()));
        const int other = env.scripted_action(rng);
        const env::StepResult res = env.step(action, other);

        r.observations.push_back(std::move(obs));
        r.actions.push_back(action);
        r.rewards.push_back(res.reward_learner);
        for (auto& lane : r.other_agent_actions) lane.push_back(other);
        r.values.push_back(r.tape->value(nodes.value)[0]);
        r.nodes.push_back(nodes);
        if (res.done) {
            r.terminal = true;
            break;
        }
    }
    r.bootstrap_value = r.terminal ? 0.0 : net::forward_plain(arch, params, env.observe(0)).value;
    return r;
}

GradientSet compute_gradients(const Rollout& rollout, const NetworkParams& params,
                              const net::ArchitectureConfig& arch, const rl::LossWeights& weights, double lambda_am,
                              bool clip, double clip_norm, GradientStats* stats) {
    rollout.validate();
    const std::size_t m = rollout.length();

    Tape local_tape;
    Tape* tape = nullptr;
    std::vector<net::ForwardNodes> local_nodes;
    const std::vector<net::ForwardNodes>* nodes = nullptr;
    std::vector<int> leaf_ids;

    const bool cached = rollout.tape && rollout.nodes.size() == m && rollout.param_leaf_ids.size() == params.size();
    if (cached) {
        tape = rollout.tape.get();
        nodes = &rollout.nodes;
        leaf_ids = rollout.param_leaf_ids;
        tape->zero_grad();
    } else {
        tape = &local_tape;
        const net::TapedParams tp = net::stage_params(local_tape, params);
        leaf_ids = tp.leaf_ids;
        local_nodes.reserve(m);
        for (std::size_t t = 0; t < m; ++t) local_nodes.push_back(net::forward(local_tape, tp, arch, rollout.observations[t]));
        nodes = &local_nodes;
    }

    std::vector<int> policy_nodes(m), value_nodes(m);
    for (std::size_t t = 0; t < m; ++t) {
        policy_nodes[t] = (*nodes)[t].policy;
        value_nodes[t] = (*nodes)[t].value;
    }

    const rl::ReturnsAdvantages ra =
        rl::nstep_returns_and_advantages(rollout.rewards, rollout.values, rollout.bootstrap_value, weights.gamma);
    const int a3c = rl::a3c_loss(*tape, policy_nodes, value_nodes, rollout.actions, ra, weights);

    std::vector<int> am_nodes;
    std::vector<double> lambdas;
    for (int i = 0; i < arch.n_modeled_agents; ++i) {
        std::vector<int> preds(m);
        for (std::size_t t = 0; t < m; ++t) preds[t] = (*nodes)[t].opponent_policies[static_cast<std::size_t>(i)];
        am_nodes.push_back(rl::am_loss(*tape, preds, rollout.other_agent_actions[static_cast<std::size_t>(i)]));
        lambdas.push_back(lambda_am);
    }
    const int loss = rl::combined_loss(*tape, a3c, am_nodes, lambdas);

    tape->backward(loss);

    GradientSet grads;
    grads.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) grads.push_back(tape->grad(leaf_ids[i]));
    const double norm = clip ? clip_by_global_norm(grads, clip_norm) : 0.0;

    if (stats) {
        stats->loss = tape->value(loss)[0];
        stats->grad_norm = norm;
        stats->aux_correct = 0;
        stats->aux_total = 0;
        for (int i = 0; i < arch.n_modeled_agents; ++i) {
            for (std::size_t t = 0; t < m; ++t) {
                const Tensor& pred = tape->value((*nodes)[t].opponent_policies[static_cast<std::size_t>(i)]);
                int argmax = 0;
                for (std::size_t k = 1; k < pred.numel(); ++k)
                    if (pred[k] > pred[argmax]) argmax = static_cast<int>(k);
                stats->aux_correct +=
                    (argmax == rollout.other_agent_actions[static_cast<std::size_t>(i)][t]) ? 1 : 0;
                stats->aux_total += 1;
            }
        }
    }
    return grads;
}

void apply_gradients(GlobalStore& store, const GradientSet& grads) { store.apply(grads); }

namespace {

// Serialized JSONL appender for the per-episode metrics stream. In
// deterministic (single-worker) mode wall_clock is written as 0 so reruns are
// byte-identical.
class MetricsWriter {
public:
    MetricsWriter(const std::string& path, bool deterministic)
        : deterministic_(deterministic), start_(std::chrono::steady_clock::now()) {
        if (!path.empty()) {
            out_.open(path);
            if (!out_) throw config_error("cannot open metrics stream " + path);
        }
    }

    void write(long episode, int worker, double ret, double disc, long length, double lambda_am, double aux_accuracy,
               bool has_aux) {
        if (!out_.is_open()) return;
        json rec = {{"episode", episode},         {"worker", worker},
                    {"return", ret},              {"discounted_return", disc},
                    {"length", length},           {"lambda_am", lambda_am},
                    {"wall_clock", wall_clock()}};
        if (has_aux)
            rec["aux_accuracy"] = aux_accuracy;
        else
            rec["aux_accuracy"] = nullptr;
        std::lock_guard<std::mutex> lock(mu_);
        out_ << rec.dump() << "\n";
    }

    void flush() {
        std::lock_guard<std::mutex> lock(mu_);
        if (out_.is_open()) out_.flush();
    }

private:
    double wall_clock() const {
        if (deterministic_) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    std::ofstream out_;
    std::mutex mu_;
    bool deterministic_;
    std::chrono::steady_clock::time_point start_;
};

struct EpisodeAccum {
    double ret = 0.0;
    double disc = 0.0;
    double gamma_pow = 1.0;
    long length = 0;
    long aux_correct = 0;
    long aux_total = 0;

    void add_rollout(const Rollout& r, const GradientStats& stats, double gamma) {
        for (double rew : r.rewards) {
            ret += rew;
            disc += gamma_pow * rew;
            gamma_pow *= gamma;
        }
        length += static_cast<long>(r.length());
        aux_correct += stats.aux_correct;
        aux_total += stats.aux_total;
    }

    void clear() { *this = EpisodeAccum{}; }
};

void save_train_checkpoint(const TrainConfig& cfg, const GlobalStore& store, const std::string& suffix) {
    if (cfg.checkpoint_path.empty()) return;
    auto [params, adam] = store.state_copy();
    json meta = {{"train_config", cfg.to_json()}};
    save_checkpoint(cfg.checkpoint_path + suffix + ".ckpt", params, &adam, meta);
}

void worker_loop(int worker_id, const TrainConfig& cfg, GlobalStore& store, MetricsWriter& metrics,
                 std::atomic<bool>& abort) {
    Rng rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(worker_id)));
    auto environment = env::make_environment(cfg.domain, cfg.env);
    environment->reset(rng);
    EpisodeAccum accum;

    while (!abort.load(std::memory_order_relaxed) && store.episode_count() < cfg.max_episodes) {
        auto [params, version] = store.snapshot();
        (void)version;
        const Rollout rollout = collect_rollout(*environment, params, cfg.arch, cfg.t_max, rng);
        const double lambda = cfg.lambda_am.value_at(store.update_count());

        GradientStats stats;
        bool applied = false;
        try {
            const GradientSet grads = compute_gradients(rollout, params, cfg.arch, cfg.weights, lambda, cfg.grad_clip,
                                                        cfg.grad_clip_norm, &stats);
            store.apply(grads);
            applied = true;
        } catch (const numeric_error& e) {
            std::cerr << "[worker " << worker_id << "] skipping update: " << e.what() << "\n";
        }
        (void)applied;
        accum.add_rollout(rollout, stats, cfg.weights.gamma);

        if (rollout.terminal) {
            const long episode = store.next_episode();
            if (episode <= cfg.max_episodes) {
                const bool has_aux = accum.aux_total > 0;
                const double aux = has_aux ? static_cast<double>(accum.aux_correct) / accum.aux_total : 0.0;
                metrics.write(episode, worker_id, accum.ret, accum.disc, accum.length,
                              cfg.lambda_am.value_at(store.update_count()), aux, has_aux);
                if (cfg.checkpoint_cadence > 0 && episode % cfg.checkpoint_cadence == 0)
                    save_train_checkpoint(cfg, store, "_ep" + std::to_string(episode));
            }
            accum.clear();
            environment->reset(rng);
        }
    }
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
    cfg.arch.validate();
    {
        // the architecture must fit the domain's observation/action spaces
        Rng probe_rng(0);
        auto probe = env::make_environment(cfg.domain, cfg.env);
        const auto shape = probe->observation_shape();
        if (shape[0] != cfg.arch.in_channels || shape[1] != cfg.arch.in_height || shape[2] != cfg.arch.in_width)
            throw config_error("architecture input shape does not match " + cfg.domain + " observations");
        if (probe->num_actions() != cfg.arch.n_actions)
            throw config_error("architecture n_actions does not match " + cfg.domain);
        if (cfg.arch.n_modeled_agents > 1)
            throw config_error("both domains script exactly one other agent");
        if (cfg.arch.n_modeled_agents == 1 && cfg.arch.n_opponent_actions != probe->num_actions())
            throw config_error("n_opponent_actions does not match " + cfg.domain);
    }

    Rng init_rng(derive_seed(cfg.seed, 0));
    GlobalStore store(net::build(cfg.arch, init_rng), cfg.adam);
    if (!cfg.resume_checkpoint.empty()) {
        const Checkpoint ck = load_checkpoint(cfg.resume_checkpoint);
        if (ck.params.size() != store.snapshot().first.size())
            throw config_error("resume checkpoint does not match the configured architecture");
        store.restore(ck.params, ck.adam ? *ck.adam : AdamState::init_like(ck.params));
    }
    MetricsWriter metrics(cfg.metrics_path, cfg.n_workers == 1);

    if (cfg.max_episodes > 0) {
        if (cfg.n_workers == 1) {
            std::atomic<bool> abort{false};
            worker_loop(0, cfg, store, metrics, abort);
        } else {
            std::atomic<bool> abort{false};
            std::mutex err_mu;
            std::exception_ptr first_error;
            std::vector<std::thread> threads;
            for (int w = 0; w < cfg.n_workers; ++w) {
                threads.emplace_back([&, w] {
                    try {
                        worker_loop(w, cfg, store, metrics, abort);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(err_mu);
                        if (!first_error) first_error = std::current_exception();
                        abort.store(true);
                    }
                });
            }
            for (auto& t : threads) t.join();
            if (first_error) {
                metrics.flush();
                std::rethrow_exception(first_error);
            }
        }
    }

    metrics.flush();
    save_train_checkpoint(cfg, store, "_final");

    auto [params, adam] = store.state_copy();
    TrainResult result;
    result.params = std::move(params);
    result.adam = std::move(adam);
    result.episodes = store.episode_count();
    result.updates = store.update_count();
    return result;
}

EvalStats evaluate(const NetworkParams& params, const net::ArchitectureConfig& arch, const std::string& domain,
                   const nlohmann::json& env_cfg, long n_episodes, std::uint64_t seed, double gamma,
                   const EvalHooks* hooks) {
    if (n_episodes <= 0) throw contract_error("evaluate: need at least one episode for statistics");
    auto environment = env::make_environment(domain, env_cfg);
    Rng rng(derive_seed(seed, 777));

    std::vector<double> returns;
    double disc_sum = 0.0;
    long wins = 0, total_len = 0, aux_correct = 0, aux_total = 0;
    std::vector<long> other_counts(static_cast<std::size_t>(environment->num_actions()), 0);

    for (long ep = 0; ep < n_episodes; ++ep) {
        environment->reset(rng);
        if (hooks && hooks->on_episode_start) hooks->on_episode_start(ep, environment->episode_seed());
        double ret = 0.0, disc = 0.0, gamma_pow = 1.0;
        long step = 0;
        while (!environment->done()) {
            const net::ForwardOutput out = net::forward_plain(arch, params, environment->observe(0));
            int action = 0;
            for (std::size_t k = 1; k < out.policy.numel(); ++k)
                if (out.policy[k] > out.policy[action]) action = static_cast<int>(k);
            const int other = environment->scripted_action(rng);
            other_counts[static_cast<std::size_t>(other)] += 1;
            if (!out.opponent_policies.empty()) {
                const Tensor& pred = out.opponent_policies[0];
                int argmax = 0;
                for (std::size_t k = 1; k < pred.numel(); ++k)
                    if (pred[k] > pred[argmax]) argmax = static_cast<int>(k);
                aux_correct += (argmax == other) ? 1 : 0;
                aux_total += 1;
            }
            if (hooks && hooks->on_activation) hooks->on_activation(ep, step, out.last_hidden, out.value);
            const env::StepResult res = environment->step(action, other);
            if (hooks && hooks->on_step)
                hooks->on_step(ep, step, action, other, res.reward_learner, res.reward_other, res.done);
            ret += res.reward_learner;
            disc += gamma_pow * res.reward_learner;
            gamma_pow *= gamma;
            ++step;
        }
        returns.push_back(ret);
        disc_sum += disc;
        total_len += step;
        if (environment->won()) ++wins;
    }

    EvalStats s;
    s.episodes = n_episodes;
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(n_episodes);
    double var = 0.0;
    for (double r : returns) var += (r - mean) * (r - mean);
    s.mean_return = mean;
    s.std_return = n_episodes > 1 ? std::sqrt(var / static_cast<double>(n_episodes - 1)) : 0.0;
    s.mean_discounted_return = disc_sum / static_cast<double>(n_episodes);
    s.win_rate = static_cast<double>(wins) / static_cast<double>(n_episodes);
    s.mean_length = static_cast<double>(total_len) / static_cast<double>(n_episodes);
    s.aux_accuracy = aux_total > 0 ? static_cast<double>(aux_correct) / static_cast<double>(aux_total) : -1.0;
    long most_common = 0, steps_total = 0;
    for (long c : other_counts) {
        most_common = std::max(most_common, c);
        steps_total += c;
    }
    s.majority_other_frequency = steps_total > 0 ? static_cast<double>(most_common) / steps_total : 0.0;
    return s;
}

}  // namespace amrl::train
