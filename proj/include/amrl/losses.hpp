#pragma once

#include <vector>

#include "amrl/network.hpp"
#include "amrl/tape.hpp"

namespace amrl::rl {

struct LossWeights {
    double value_weight = 0.5;    // lambda_v
    double policy_weight = 1.0;   // lambda_pi
    double entropy_weight = 0.01; // lambda_H
    double gamma = 0.99;
};

// Weight on the agent-modeling loss: fixed, or exponentially annealed from
// `initial` by `rate` per global update.
struct LambdaSchedule {
    enum class Kind { Fixed, ExponentialAnneal };
    Kind kind = Kind::Fixed;
    double fixed_value = 0.1;
    double initial = 1.0;
    double rate = 0.999;

    double value_at(long update_index) const;

    static LambdaSchedule fixed(double v);
    static LambdaSchedule anneal(double rate, double initial = 1.0);
};

struct ReturnsAdvantages {
    std::vector<double> returns;
    std::vector<double> advantages;
};

// R_t = r_t + gamma * R_{t+1} seeded with the bootstrap value; A_t = R_t - V_t.
ReturnsAdvantages nstep_returns_and_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                               double bootstrap_value, double gamma);

// lambda_v * sum_t (R_t - V_t)^2 + lambda_pi * sum_t (-log pi(a_t) * A_t)
//   - lambda_H * sum_t H(pi_t), with advantages treated as constants.
// `policies`/`values` are per-step tape nodes from the network forward pass.
int a3c_loss(Tape& tape, const std::vector<int>& policy_nodes, const std::vector<int>& value_nodes,
             const std::vector<int>& actions, const ReturnsAdvantages& ra, const LossWeights& w);

// Mean over the trajectory of cross-entropy between the observed one-hot
// action and the predicted distribution: -(1/M) sum_j log p_j[a_j].
int am_loss(Tape& tape, const std::vector<int>& predicted_policy_nodes, const std::vector<int>& observed_actions);

// L_A3C + (1/N) sum_i lambda_i * L_AM_i
int combined_loss(Tape& tape, int a3c_node, const std::vector<int>& am_nodes, const std::vector<double>& lambda_am);

// Entropy of a distribution, using the same clamped log as the loss terms.
double entropy(const Tensor& probs);

}  // namespace amrl::rl
