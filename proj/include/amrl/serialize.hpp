#pragma once

#include <json.hpp>

#include "amrl/losses.hpp"
#include "amrl/network.hpp"
#include "amrl/params.hpp"

// JSON forms of the small config structs, shared by the experiment config
// files, checkpoint metadata and the CLI.
namespace amrl {

inline nlohmann::json arch_to_json(const net::ArchitectureConfig& c) {
    return {{"arch", net::to_string(c.arch)},
            {"in_channels", c.in_channels},
            {"in_height", c.in_height},
            {"in_width", c.in_width},
            {"conv_layers", c.conv_layers},
            {"conv_filters", c.conv_filters},
            {"kernel", c.kernel},
            {"fc_units", c.fc_units},
            {"n_actions", c.n_actions},
            {"n_opponent_actions", c.n_opponent_actions},
            {"n_modeled_agents", c.n_modeled_agents}};
}

inline net::ArchitectureConfig arch_from_json(const nlohmann::json& j) {
    net::ArchitectureConfig c;
    c.arch = net::arch_from_string(j.at("arch").get<std::string>());
    c.in_channels = j.at("in_channels").get<int>();
    c.in_height = j.at("in_height").get<int>();
    c.in_width = j.at("in_width").get<int>();
    c.conv_layers = j.at("conv_layers").get<int>();
    c.conv_filters = j.value("conv_filters", 32);
    c.kernel = j.value("kernel", 3);
    c.fc_units = j.at("fc_units").get<int>();
    c.n_actions = j.at("n_actions").get<int>();
    c.n_opponent_actions = j.at("n_opponent_actions").get<int>();
    c.n_modeled_agents = j.at("n_modeled_agents").get<int>();
    c.validate();
    return c;
}

inline nlohmann::json schedule_to_json(const rl::LambdaSchedule& s) {
    if (s.kind == rl::LambdaSchedule::Kind::Fixed) return {{"kind", "fixed"}, {"value", s.fixed_value}};
    return {{"kind", "anneal"}, {"rate", s.rate}, {"initial", s.initial}};
}

inline rl::LambdaSchedule schedule_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fixed") return rl::LambdaSchedule::fixed(j.at("value").get<double>());
    if (kind == "anneal" || kind == "exponential_anneal")
        return rl::LambdaSchedule::anneal(j.at("rate").get<double>(), j.value("initial", 1.0));
    throw config_error("unknown lambda schedule kind: " + kind);
}

inline nlohmann::json weights_to_json(const rl::LossWeights& w) {
    return {{"value_weight", w.value_weight},
            {"policy_weight", w.policy_weight},
            {"entropy_weight", w.entropy_weight},
            {"gamma", w.gamma}};
}

inline rl::LossWeights weights_from_json(const nlohmann::json& j) {
    rl::LossWeights w;
    w.value_weight = j.value("value_weight", w.value_weight);
    w.policy_weight = j.value("policy_weight", w.policy_weight);
    w.entropy_weight = j.value("entropy_weight", w.entropy_weight);
    w.gamma = j.value("gamma", w.gamma);
    return w;
}

inline nlohmann::json adam_to_json(const AdamConfig& a) {
    return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}, {"weight_decay", a.weight_decay}};
}

inline AdamConfig adam_from_json(const nlohmann::json& j) {
    AdamConfig a;
    a.lr = j.value("lr", a.lr);
    a.beta1 = j.value("beta1", a.beta1);
    a.beta2 = j.value("beta2", a.beta2);
    a.eps = j.value("eps", a.eps);
    a.weight_decay = j.value("weight_decay", a.weight_decay);
    return a;
}

}  // namespace amrl
