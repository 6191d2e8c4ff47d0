// Rough single-thread throughput check for the training hot path: one rollout
// collection plus one gradient computation per iteration.
#include <chrono>
#include <iostream>

#include "amrl/env.hpp"
#include "amrl/trainer.hpp"

using namespace amrl;

int main(int argc, char** argv) {
    const std::string domain = argc > 1 ? argv[1] : "cmotp";
    const int iters = argc > 2 ? std::atoi(argv[2]) : 20;

    net::ArchitectureConfig arch = net::ArchitectureConfig::for_domain(net::Arch::AMS, domain);
    Rng rng(1);
    NetworkParams params = net::build(arch, rng);
    auto environment = env::make_environment(domain, nlohmann::json::object());
    environment->reset(rng);

    rl::LossWeights weights;
    long steps = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) {
        if (environment->done()) environment->reset(rng);
        const train::Rollout r = train::collect_rollout(*environment, params, arch, 20, rng);
        steps += static_cast<long>(r.length());
        train::GradientStats stats;
        const GradientSet g = train::compute_gradients(r, params, arch, weights, 0.1, true, 40.0, &stats);
        (void)g;
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << domain << ": " << steps << " env steps in " << dt << " s  ("
              << (dt / static_cast<double>(steps) * 1e3) << " ms/step, " << (static_cast<double>(steps) / dt)
              << " steps/s)\n";
    return 0;
}
