#include "amrl/losses.hpp"

#include <cmath>

#include "amrl/errors.hpp"

namespace amrl::rl {

double LambdaSchedule::value_at(long update_index) const {
    if (kind == Kind::Fixed) return fixed_value;
    return initial * std::pow(rate, static_cast<double>(update_index));
}

LambdaSchedule LambdaSchedule::fixed(double v) {
    LambdaSchedule s;
    s.kind = Kind::Fixed;
    s.fixed_value = v;
    return s;
}

LambdaSchedule LambdaSchedule::anneal(double rate, double initial) {
    LambdaSchedule s;
    s.kind = Kind::ExponentialAnneal;
    s.rate = rate;
    s.initial = initial;
    return s;
}

ReturnsAdvantages nstep_returns_and_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                               double bootstrap_value, double gamma) {
    if (rewards.empty()) throw contract_error("nstep_returns: empty rollout");
    if (values.size() != rewards.size()) throw contract_error("nstep_returns: rewards/values length mismatch");
    ReturnsAdvantages ra;
    ra.returns.resize(rewards.size());
    ra.advantages.resize(rewards.size());
    double running = bootstrap_value;
    for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
        running = rewards[static_cast<std::size_t>(t)] + gamma * running;
        ra.returns[static_cast<std::size_t>(t)] = running;
        ra.advantages[static_cast<std::size_t>(t)] = running - values[static_cast<std::size_t>(t)];
    }
    return ra;
}

int a3c_loss(Tape& tape, const std::vector<int>& policy_nodes, const std::vector<int>& value_nodes,
             const std::vector<int>& actions, const ReturnsAdvantages& ra, const LossWeights& w) {
    const std::size_t steps = policy_nodes.size();
    if (steps == 0) throw contract_error("a3c_loss: empty rollout");
    if (value_nodes.size() != steps || actions.size() != steps || ra.returns.size() != steps)
        throw contract_error("a3c_loss: per-step input lengths disagree");

    int policy_term = -1;   // sum_t -log pi(a_t) * A_t
    int value_term = -1;    // sum_t (R_t - V_t)^2
    int entropy_term = -1;  // sum_t H(pi_t)
    for (std::size_t t = 0; t < steps; ++t) {
        const int logp = tape.log_clamped(tape.pick(policy_nodes[t], actions[t], "pi(a_t)"), "log pi(a_t)");
        const int pi_t = tape.affine(logp, -ra.advantages[t], 0.0, "policy term");
        policy_term = (policy_term < 0) ? pi_t : tape.add(policy_term, pi_t, "policy term");

        const int resid = tape.affine(value_nodes[t], -1.0, ra.returns[t], "R-V");
        const int sq = tape.mul(resid, resid, "value term");
        value_term = (value_term < 0) ? sq : tape.add(value_term, sq, "value term");

        const int plogp = tape.sum(tape.mul(policy_nodes[t], tape.log_clamped(policy_nodes[t], "log pi"), "p log p"),
                                   "p log p");
        const int ent = tape.affine(plogp, -1.0, 0.0, "entropy");
        entropy_term = (entropy_term < 0) ? ent : tape.add(entropy_term, ent, "entropy");
    }

    int total = tape.affine(value_term, w.value_weight, 0.0, "value loss");
    total = tape.add(total, tape.affine(policy_term, w.policy_weight, 0.0, "policy loss"), "a3c loss");
    total = tape.add(total, tape.affine(entropy_term, -w.entropy_weight, 0.0, "entropy loss"), "a3c loss");
    return total;
}

int am_loss(Tape& tape, const std::vector<int>& predicted_policy_nodes, const std::vector<int>& observed_actions) {
    const std::size_t steps = predicted_policy_nodes.size();
    if (steps == 0) throw contract_error("am_loss: empty trajectory");
    if (observed_actions.size() != steps) throw contract_error("am_loss: predictions/actions length mismatch");

    int ce_sum = -1;
    for (std::size_t t = 0; t < steps; ++t) {
        const int logp =
            tape.log_clamped(tape.pick(predicted_policy_nodes[t], observed_actions[t], "pred(a_i)"), "log pred");
        ce_sum = (ce_sum < 0) ? logp : tape.add(ce_sum, logp, "ce sum");
    }
    return tape.affine(ce_sum, -1.0 / static_cast<double>(steps), 0.0, "am loss");
}

int combined_loss(Tape& tape, int a3c_node, const std::vector<int>& am_nodes, const std::vector<double>& lambda_am) {
    if (am_nodes.size() != lambda_am.size()) throw contract_error("combined_loss: weights/losses length mismatch");
    if (am_nodes.empty()) return a3c_node;
    int weighted = -1;
    for (std::size_t i = 0; i < am_nodes.size(); ++i) {
        const int term = tape.affine(am_nodes[i], lambda_am[i], 0.0, "lambda*am");
        weighted = (weighted < 0) ? term : tape.add(weighted, term, "am total");
    }
    const int mean = tape.affine(weighted, 1.0 / static_cast<double>(am_nodes.size()), 0.0, "am mean");
    return tape.add(a3c_node, mean, "combined loss");
}

double entropy(const Tensor& probs) {
    double h = 0.0;
    for (std::size_t i = 0; i < probs.numel(); ++i)
        h -= probs[i] * std::log(std::max(probs[i], Tape::kLogClamp));
    return h;
}

}  // namespace amrl::rl
