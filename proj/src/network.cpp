#include "amrl/network.hpp"

#include <cmath>

#include "amrl/errors.hpp"

namespace amrl::net {

Arch arch_from_string(const std::string& s) {
    if (s == "a3c" || s == "A3C") return Arch::A3C;
    if (s == "ams" || s == "AMS" || s == "ams-a3c" || s == "AMS-A3C") return Arch::AMS;
    if (s == "amf" || s == "AMF" || s == "amf-a3c" || s == "AMF-A3C") return Arch::AMF;
    throw config_error("unknown architecture tag: " + s);
}

std::string to_string(Arch a) {
    switch (a) {
        case Arch::A3C: return "a3c";
        case Arch::AMS: return "ams";
        case Arch::AMF: return "amf";
    }
    return "?";
}

void ArchitectureConfig::validate() const {
    if (conv_filters != 32) throw config_error("conv_filters must be 32");
    if (kernel != 3) throw config_error("kernel must be 3");
    if (conv_layers != 3 && conv_layers != 4) throw config_error("conv_layers must be 3 or 4");
    if (in_channels < 1 || in_height < 1 || in_width < 1) throw config_error("bad input shape");
    if (n_actions < 1) throw config_error("n_actions must be >= 1");
    const int expected_fc = (arch == Arch::AMF) ? 64 : 128;
    if (fc_units != expected_fc)
        throw config_error("fc_units must be " + std::to_string(expected_fc) + " for " + to_string(arch));
    if (arch == Arch::A3C) {
        if (n_modeled_agents != 0) throw config_error("A3C models no other agents");
    } else {
        if (n_modeled_agents < 1) throw config_error(to_string(arch) + " needs n_modeled_agents >= 1");
        if (n_opponent_actions < 1) throw config_error("n_opponent_actions must be >= 1");
    }
}

ArchitectureConfig ArchitectureConfig::for_domain(Arch arch, const std::string& domain) {
    ArchitectureConfig cfg;
    cfg.arch = arch;
    cfg.fc_units = (arch == Arch::AMF) ? 64 : 128;
    cfg.n_modeled_agents = (arch == Arch::A3C) ? 0 : 1;
    if (domain == "cmotp") {
        cfg.in_channels = 1;
        cfg.in_height = 16;
        cfg.in_width = 16;
        cfg.conv_layers = 4;
        cfg.n_actions = 5;
        cfg.n_opponent_actions = 5;
    } else if (domain == "pommerman") {
        cfg.in_channels = 18;
        cfg.in_height = 8;
        cfg.in_width = 8;
        cfg.conv_layers = 3;
        cfg.n_actions = 6;
        cfg.n_opponent_actions = 6;
    } else {
        throw config_error("unknown domain: " + domain);
    }
    cfg.validate();
    return cfg;
}

namespace {

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases
Tensor init_weight(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

void add_conv(NetworkParams& p, const std::string& name, int c_out, int c_in, Rng& rng) {
    p.add(name + ".weight", init_weight({c_out, c_in, 3, 3}, c_in * 9, rng));
    p.add(name + ".bias", Tensor({c_out}));
}

void add_fc(NetworkParams& p, const std::string& name, int n_out, int n_in, Rng& rng) {
    p.add(name + ".weight", init_weight({n_out, n_in}, n_in, rng));
    p.add(name + ".bias", Tensor({n_out}));
}

constexpr const char* kConvTags[4] = {"conv0", "conv1", "conv2", "conv3"};

}  // namespace

NetworkParams build(const ArchitectureConfig& cfg, Rng& rng) {
    cfg.validate();
    NetworkParams p;
    for (int l = 0; l < cfg.conv_layers; ++l)
        add_conv(p, kConvTags[l], cfg.conv_filters, l == 0 ? cfg.in_channels : cfg.conv_filters, rng);

    const int flat = cfg.flat_conv_size();
    if (cfg.arch == Arch::AMF) {
        add_fc(p, "fca0", cfg.fc_units, flat, rng);
        add_fc(p, "fca1", cfg.fc_units, cfg.fc_units, rng);
        add_fc(p, "fcb0", cfg.fc_units, flat, rng);
        add_fc(p, "fcb1", cfg.fc_units, cfg.fc_units, rng);
    } else {
        add_fc(p, "fc0", cfg.fc_units, flat, rng);
        add_fc(p, "fc1", cfg.fc_units, cfg.fc_units, rng);
    }
    add_fc(p, "policy", cfg.n_actions, cfg.fc_units, rng);
    add_fc(p, "value", 1, cfg.fc_units, rng);
    for (int i = 0; i < cfg.n_modeled_agents; ++i)
        add_fc(p, "opp" + std::to_string(i), cfg.n_opponent_actions, cfg.fc_units, rng);
    return p;
}

TapedParams stage_params(Tape& tape, const NetworkParams& params) {
    TapedParams tp;
    tp.leaf_ids.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) tp.leaf_ids.push_back(tape.leaf(params.value(i), "param"));
    return tp;
}

ForwardNodes forward(Tape& tape, const TapedParams& tp, const ArchitectureConfig& cfg, const Tensor& obs) {
    if (obs.rank() != 3 || obs.dim(0) != cfg.in_channels || obs.dim(1) != cfg.in_height || obs.dim(2) != cfg.in_width)
        throw config_error("observation shape " + obs.shape_string() + " does not match network input");

    // leaf order mirrors build() order exactly
    struct Lookup {
        const TapedParams& tp;
        std::size_t next = 0;
        int take() { return tp.leaf_ids[next++]; }
    } look{tp};

    int h = tape.leaf(obs, "obs");
    for (int l = 0; l < cfg.conv_layers; ++l) {
        const int w = look.take();
        const int b = look.take();
        h = tape.elu(tape.conv2d(h, w, b, kConvTags[l]), kConvTags[l]);
    }

    ForwardNodes out;
    if (cfg.arch == Arch::AMF) {
        const int wa0 = look.take(), ba0 = look.take();
        const int wa1 = look.take(), ba1 = look.take();
        const int wb0 = look.take(), bb0 = look.take();
        const int wb1 = look.take(), bb1 = look.take();
        int ha = tape.elu(tape.fully_connected(h, wa0, ba0, "fca0"), "fca0");
        ha = tape.elu(tape.fully_connected(ha, wa1, ba1, "fca1"), "fca1");
        int hb = tape.elu(tape.fully_connected(h, wb0, bb0, "fcb0"), "fcb0");
        hb = tape.elu(tape.fully_connected(hb, wb1, bb1, "fcb1"), "fcb1");
        out.opp_features = hb;
        const int gated = tape.mul(ha, hb, "gate");
        out.last_hidden = gated;
        const int wp = look.take(), bp = look.take();
        out.policy = tape.softmax(tape.fully_connected(gated, wp, bp, "policy"), "policy");
        const int wv = look.take(), bv = look.take();
        out.value = tape.fully_connected(gated, wv, bv, "value");
        for (int i = 0; i < cfg.n_modeled_agents; ++i) {
            const int wo = look.take(), bo = look.take();
            out.opponent_policies.push_back(tape.softmax(tape.fully_connected(hb, wo, bo, "opp"), "opp"));
        }
    } else {
        const int w0 = look.take(), b0 = look.take();
        const int w1 = look.take(), b1 = look.take();
        int hf = tape.elu(tape.fully_connected(h, w0, b0, "fc0"), "fc0");
        hf = tape.elu(tape.fully_connected(hf, w1, b1, "fc1"), "fc1");
        out.last_hidden = hf;
        const int wp = look.take(), bp = look.take();
        out.policy = tape.softmax(tape.fully_connected(hf, wp, bp, "policy"), "policy");
        const int wv = look.take(), bv = look.take();
        out.value = tape.fully_connected(hf, wv, bv, "value");
        for (int i = 0; i < cfg.n_modeled_agents; ++i) {
            const int wo = look.take(), bo = look.take();
            out.opponent_policies.push_back(tape.softmax(tape.fully_connected(hf, wo, bo, "opp"), "opp"));
        }
    }
    return out;
}

ForwardOutput materialize(const Tape& tape, const ForwardNodes& nodes) {
    ForwardOutput out;
    out.policy = tape.value(nodes.policy);
    out.value = tape.value(nodes.value)[0];
    out.last_hidden = tape.value(nodes.last_hidden);
    if (nodes.opp_features >= 0) out.opponent_features = tape.value(nodes.opp_features);
    for (int id : nodes.opponent_policies) out.opponent_policies.push_back(tape.value(id));
    return out;
}

ForwardOutput forward_plain(const ArchitectureConfig& cfg, const NetworkParams& params, const Tensor& obs) {
    Tape tape;
    const TapedParams tp = stage_params(tape, params);
    return materialize(tape, forward(tape, tp, cfg, obs));
}

}  // namespace amrl::net
