#include <doctest.h>

#include <cmath>

#include "amrl/network.hpp"
#include "amrl/losses.hpp"
#include "oracles.hpp"

using namespace amrl;

namespace {

// closed-form parameter count for the trunk + heads, kept independent of build()
long conv_params(int c_out, int c_in) { return static_cast<long>(c_out) * c_in * 9 + c_out; }
long fc_params(int n_out, int n_in) { return static_cast<long>(n_out) * n_in + n_out; }

long expected_count(const net::ArchitectureConfig& c) {
    long total = conv_params(32, c.in_channels) + (c.conv_layers - 1) * conv_params(32, 32);
    const long flat = 32L * c.in_height * c.in_width;
    if (c.arch == net::Arch::AMF) {
        total += 2 * (fc_params(64, static_cast<int>(flat)) + fc_params(64, 64));
    } else {
        total += fc_params(128, static_cast<int>(flat)) + fc_params(128, 128);
    }
    total += fc_params(c.n_actions, c.fc_units) + fc_params(1, c.fc_units);
    total += static_cast<long>(c.n_modeled_agents) * fc_params(c.n_opponent_actions, c.fc_units);
    return total;
}

Tensor random_obs(const net::ArchitectureConfig& c, Rng& rng) {
    return oracles::random_tensor({c.in_channels, c.in_height, c.in_width}, rng, 0.0, 1.0);
}

}  // namespace

TEST_CASE("config validation") {
    net::ArchitectureConfig c = net::ArchitectureConfig::for_domain(net::Arch::A3C, "cmotp");
    CHECK(c.conv_layers == 4);
    CHECK(c.fc_units == 128);
    c.fc_units = 64;
    CHECK_THROWS_AS(c.validate(), config_error);

    net::ArchitectureConfig p = net::ArchitectureConfig::for_domain(net::Arch::AMF, "pommerman");
    CHECK(p.conv_layers == 3);
    CHECK(p.fc_units == 64);
    CHECK(p.n_actions == 6);

    CHECK_THROWS_AS(net::arch_from_string("dqn"), config_error);
    CHECK_THROWS_AS(net::ArchitectureConfig::for_domain(net::Arch::A3C, "chess"), config_error);
}

TEST_CASE("a3c parameter count matches the closed form") {
    Rng rng(1);
    for (const char* domain : {"cmotp", "pommerman"}) {
        const auto cfg = net::ArchitectureConfig::for_domain(net::Arch::A3C, domain);
        const NetworkParams p = net::build(cfg, rng);
        CHECK(static_cast<long>(p.total_elements()) == expected_count(cfg));
    }
}

TEST_CASE("ams adds exactly one opponent head over a3c") {
    Rng rng(2);
    const auto a3c = net::ArchitectureConfig::for_domain(net::Arch::A3C, "cmotp");
    const auto ams = net::ArchitectureConfig::for_domain(net::Arch::AMS, "cmotp");
    const NetworkParams pa = net::build(a3c, rng);
    const NetworkParams pm = net::build(ams, rng);
    CHECK(static_cast<long>(pm.total_elements()) - static_cast<long>(pa.total_elements()) == 5L * 128 + 5);
    CHECK(pm.index_of("opp0.weight") >= 0);
    CHECK(pa.index_of("opp0.weight") < 0);
}

TEST_CASE("amf and ams have fc+head parameter counts within 10 percent") {
    for (const char* domain : {"cmotp", "pommerman"}) {
        const auto ams = net::ArchitectureConfig::for_domain(net::Arch::AMS, domain);
        const auto amf = net::ArchitectureConfig::for_domain(net::Arch::AMF, domain);
        const long conv = conv_params(32, ams.in_channels) + (ams.conv_layers - 1) * conv_params(32, 32);
        const long ams_fc = expected_count(ams) - conv;
        const long amf_fc = expected_count(amf) - conv;
        const double ratio = static_cast<double>(amf_fc) / static_cast<double>(ams_fc);
        CHECK(ratio > 0.9);
        CHECK(ratio < 1.1);
    }
}

TEST_CASE("policies are normalized for every architecture") {
    Rng rng(3);
    for (auto arch : {net::Arch::A3C, net::Arch::AMS, net::Arch::AMF}) {
        for (const char* domain : {"cmotp", "pommerman"}) {
            const auto cfg = net::ArchitectureConfig::for_domain(arch, domain);
            const NetworkParams p = net::build(cfg, rng);
            const net::ForwardOutput out = net::forward_plain(cfg, p, random_obs(cfg, rng));
            double total = 0.0;
            for (std::size_t i = 0; i < out.policy.numel(); ++i) total += out.policy[i];
            CHECK(std::abs(total - 1.0) < 1e-9);
            for (const auto& opp : out.opponent_policies) {
                double s = 0.0;
                for (std::size_t i = 0; i < opp.numel(); ++i) s += opp[i];
                CHECK(std::abs(s - 1.0) < 1e-9);
            }
            CHECK(std::isfinite(out.value));
        }
    }
}

TEST_CASE("output shape contract") {
    Rng rng(4);
    for (auto arch : {net::Arch::A3C, net::Arch::AMS, net::Arch::AMF}) {
        const auto cfg = net::ArchitectureConfig::for_domain(arch, "pommerman");
        const NetworkParams p = net::build(cfg, rng);
        const net::ForwardOutput out = net::forward_plain(cfg, p, random_obs(cfg, rng));
        CHECK(static_cast<int>(out.policy.numel()) == cfg.n_actions);
        CHECK(static_cast<int>(out.opponent_policies.size()) == cfg.n_modeled_agents);
        for (const auto& opp : out.opponent_policies) CHECK(static_cast<int>(opp.numel()) == cfg.n_opponent_actions);
        if (arch == net::Arch::AMF) {
            CHECK(static_cast<int>(out.opponent_features.numel()) == 64);
            CHECK(static_cast<int>(out.last_hidden.numel()) == 64);
        } else {
            CHECK(static_cast<int>(out.last_hidden.numel()) == 128);
        }
    }
}

TEST_CASE("forward determinism: same params and obs give bit-identical outputs") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto arch = static_cast<net::Arch>(trial % 3);
        const auto cfg = net::ArchitectureConfig::for_domain(arch, trial % 2 ? "cmotp" : "pommerman");
        Rng init(derive_seed(100, static_cast<std::uint64_t>(trial)));
        const NetworkParams p = net::build(cfg, init);
        const Tensor obs = random_obs(cfg, rng);
        const net::ForwardOutput a = net::forward_plain(cfg, p, obs);
        const net::ForwardOutput b = net::forward_plain(cfg, p, obs);
        CHECK(a.value == b.value);
        for (std::size_t i = 0; i < a.policy.numel(); ++i) CHECK(a.policy[i] == b.policy[i]);
        for (std::size_t i = 0; i < a.last_hidden.numel(); ++i) CHECK(a.last_hidden[i] == b.last_hidden[i]);
    }
}

TEST_CASE("ams: perturbing opponent-head weights leaves policy and value bit-identical") {
    Rng rng(6);
    const auto cfg = net::ArchitectureConfig::for_domain(net::Arch::AMS, "cmotp");
    NetworkParams p = net::build(cfg, rng);
    const Tensor obs = random_obs(cfg, rng);
    const net::ForwardOutput before = net::forward_plain(cfg, p, obs);
    Tensor& opp_w = p.at("opp0.weight");
    for (std::size_t i = 0; i < opp_w.numel(); ++i) opp_w[i] += rng.uniform(-1.0, 1.0);
    const net::ForwardOutput after = net::forward_plain(cfg, p, obs);
    CHECK(before.value == after.value);
    for (std::size_t i = 0; i < before.policy.numel(); ++i) CHECK(before.policy[i] == after.policy[i]);
    // the prediction head itself must of course change
    bool any_diff = false;
    for (std::size_t i = 0; i < before.opponent_policies[0].numel(); ++i)
        if (before.opponent_policies[0][i] != after.opponent_policies[0][i]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("amf: all-ones gate reproduces a pure branch-A network") {
    Rng rng(7);
    const auto cfg = net::ArchitectureConfig::for_domain(net::Arch::AMF, "cmotp");
    NetworkParams p = net::build(cfg, rng);
    // force h_opp == 1 elementwise: zero branch-B weights, bias 1 before the ELU
    p.at("fcb1.weight").fill(0.0);
    p.at("fcb1.bias").fill(1.0);
    const Tensor obs = random_obs(cfg, rng);
    const net::ForwardOutput gated = net::forward_plain(cfg, p, obs);

    // branch A alone, computed with raw kernels
    Tensor h = obs;
    for (int l = 0; l < cfg.conv_layers; ++l) {
        const std::string tag = "conv" + std::to_string(l);
        h = kernels::elu_forward(kernels::conv2d_forward(h, p.at(tag + ".weight"), p.at(tag + ".bias")));
    }
    Tensor ha = kernels::elu_forward(kernels::fc_forward(h, p.at("fca0.weight"), p.at("fca0.bias")));
    ha = kernels::elu_forward(kernels::fc_forward(ha, p.at("fca1.weight"), p.at("fca1.bias")));
    const Tensor policy =
        kernels::softmax_forward(kernels::fc_forward(ha, p.at("policy.weight"), p.at("policy.bias")));
    const Tensor value = kernels::fc_forward(ha, p.at("value.weight"), p.at("value.bias"));

    for (std::size_t i = 0; i < policy.numel(); ++i)
        CHECK(gated.policy[i] == doctest::Approx(policy[i]).epsilon(1e-12));
    CHECK(gated.value == doctest::Approx(value[0]).epsilon(1e-12));
}

TEST_CASE("ams: auxiliary loss reaches the shared trunk") {
    Rng rng(8);
    const auto cfg = net::ArchitectureConfig::for_domain(net::Arch::AMS, "pommerman");
    const NetworkParams p = net::build(cfg, rng);
    for (int trial = 0; trial < 20; ++trial) {
        Tape tape;
        const auto tp = net::stage_params(tape, p);
        const auto nodes = net::forward(tape, tp, cfg, random_obs(cfg, rng));
        const int am = rl::am_loss(tape, {nodes.opponent_policies[0]}, {rng.uniform_int(cfg.n_opponent_actions)});
        tape.backward(am);
        const double conv_grad = tape.grad(tp.leaf_ids[static_cast<std::size_t>(p.index_of("conv0.weight"))]).abs_max();
        const double fc_grad = tape.grad(tp.leaf_ids[static_cast<std::size_t>(p.index_of("fc0.weight"))]).abs_max();
        CHECK(conv_grad > 0.0);
        CHECK(fc_grad > 0.0);
    }
}

TEST_CASE("amf: the agent's policy loss reaches branch B through the gate") {
    Rng rng(9);
    const auto cfg = net::ArchitectureConfig::for_domain(net::Arch::AMF, "pommerman");
    const NetworkParams p = net::build(cfg, rng);
    for (int trial = 0; trial < 20; ++trial) {
        Tape tape;
        const auto tp = net::stage_params(tape, p);
        const auto nodes = net::forward(tape, tp, cfg, random_obs(cfg, rng));
        // -log pi(a) for a random action: pure actor loss, no opponent term
        const int loss = tape.affine(tape.log_clamped(tape.pick(nodes.policy, rng.uniform_int(cfg.n_actions))),
                                     -1.0, 0.0);
        tape.backward(loss);
        CHECK(tape.grad(tp.leaf_ids[static_cast<std::size_t>(p.index_of("fcb0.weight"))]).abs_max() > 0.0);
        CHECK(tape.grad(tp.leaf_ids[static_cast<std::size_t>(p.index_of("fcb1.weight"))]).abs_max() > 0.0);
    }
}

TEST_CASE("full-architecture gradients match finite differences") {
    // combined loss over a 2-step synthetic rollout, both domains, all archs
    Rng sample_rng(10);
    for (auto arch : {net::Arch::A3C, net::Arch::AMS, net::Arch::AMF}) {
        for (const char* domain : {"cmotp", "pommerman"}) {
            const auto cfg = net::ArchitectureConfig::for_domain(arch, domain);
            Rng init(derive_seed(55, static_cast<std::uint64_t>(cfg.n_actions + static_cast<int>(arch))));
            NetworkParams p = net::build(cfg, init);
            const Tensor obs0 = random_obs(cfg, sample_rng);
            const Tensor obs1 = random_obs(cfg, sample_rng);
            const std::vector<int> actions = {0, cfg.n_actions - 1};
            const std::vector<int> others = {1, 2};
            const rl::LossWeights w;
            const rl::ReturnsAdvantages ra = rl::nstep_returns_and_advantages({0.5, 1.0}, {0.2, -0.1}, 0.0, w.gamma);

            auto assemble = [&](Tape& tape) {
                const auto tp = net::stage_params(tape, p);
                const auto n0 = net::forward(tape, tp, cfg, obs0);
                const auto n1 = net::forward(tape, tp, cfg, obs1);
                const int a3c = rl::a3c_loss(tape, {n0.policy, n1.policy}, {n0.value, n1.value}, actions, ra, w);
                std::vector<int> ams;
                std::vector<double> lambdas;
                for (int i = 0; i < cfg.n_modeled_agents; ++i) {
                    ams.push_back(rl::am_loss(tape,
                                              {n0.opponent_policies[static_cast<std::size_t>(i)],
                                               n1.opponent_policies[static_cast<std::size_t>(i)]},
                                              others));
                    lambdas.push_back(0.3);
                }
                return std::make_pair(rl::combined_loss(tape, a3c, ams, lambdas), tp);
            };

            Tape tape;
            const auto [loss, tp] = assemble(tape);
            tape.backward(loss);
            GradientSet analytic;
            for (std::size_t i = 0; i < p.size(); ++i) analytic.push_back(tape.grad(tp.leaf_ids[i]));

            auto loss_fn = [&]() {
                Tape t2;
                return t2.value(assemble(t2).first)[0];
            };
            const auto check = oracles::finite_diff_check(p, analytic, loss_fn, sample_rng, 2);
            INFO(net::to_string(arch) << " on " << domain);
            CHECK(check.max_rel_err < 1e-4);
        }
    }
}
