#pragma once

#include <string>
#include <vector>

#include "amrl/params.hpp"
#include "amrl/rng.hpp"
#include "amrl/tape.hpp"

namespace amrl::net {

enum class Arch { A3C, AMS, AMF };

Arch arch_from_string(const std::string& s);
std::string to_string(Arch a);

// Shapes of the three actor-critic variants: a shared conv trunk into either
// one FC stack with policy/value (+ per-agent prediction heads for AMS), or,
// for AMF, two parallel FC branches where the prediction branch's features
// gate the actor/critic branch through an element-wise product.
struct ArchitectureConfig {
    Arch arch = Arch::A3C;
    int in_channels = 1;
    int in_height = 16;
    int in_width = 16;
    int conv_layers = 4;  // 3 or 4 depending on the domain
    int conv_filters = 32;
    int kernel = 3;
    int fc_units = 128;  // 128 for A3C/AMS, 64 per branch for AMF
    int n_actions = 5;
    int n_opponent_actions = 5;
    int n_modeled_agents = 1;  // 0 for A3C

    void validate() const;
    int flat_conv_size() const { return conv_filters * in_height * in_width; }
    // width of last_hidden: the fc2 output (128) or the AMF gated product (64)
    int hidden_width() const { return fc_units; }

    // Defaults for the two built-in domains ("cmotp": 1x16x16 obs, 5 actions,
    // 4 conv layers; "pommerman": 18x8x8 obs, 6 actions, 3 conv layers).
    static ArchitectureConfig for_domain(Arch arch, const std::string& domain);
};

// Node ids of every head on the tape used for the forward pass.
struct ForwardNodes {
    int policy = -1;
    int value = -1;
    int last_hidden = -1;
    int opp_features = -1;  // AMF only
    std::vector<int> opponent_policies;
};

// Materialized copies of the head outputs.
struct ForwardOutput {
    Tensor policy;
    double value = 0.0;
    std::vector<Tensor> opponent_policies;
    Tensor opponent_features;
    Tensor last_hidden;
};

NetworkParams build(const ArchitectureConfig& cfg, Rng& rng);

// One leaf per parameter; reusing the same leaves across the time steps of a
// rollout makes gradients accumulate over the whole trajectory.
struct TapedParams {
    std::vector<int> leaf_ids;
};

TapedParams stage_params(Tape& tape, const NetworkParams& params);
ForwardNodes forward(Tape& tape, const TapedParams& tp, const ArchitectureConfig& cfg, const Tensor& obs);
ForwardOutput materialize(const Tape& tape, const ForwardNodes& nodes);

// Convenience single-observation pass on a private tape.
ForwardOutput forward_plain(const ArchitectureConfig& cfg, const NetworkParams& params, const Tensor& obs);

}  // namespace amrl::net
