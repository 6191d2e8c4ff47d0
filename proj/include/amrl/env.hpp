#pragma once

#include <array>
#include <memory>
#include <string>

#include <json.hpp>

#include "amrl/rng.hpp"
#include "amrl/tensor.hpp"

namespace amrl::env {

struct StepResult {
    double reward_learner = 0.0;
    double reward_other = 0.0;
    bool done = false;
};

// Two-agent episodic environment. Agent 0 is the learner, agent 1 is the
// scripted teammate/opponent. Both actions are applied simultaneously.
class Environment {
public:
    virtual ~Environment() = default;

    virtual void reset(Rng& rng) = 0;
    virtual StepResult step(int learner_action, int other_action) = 0;
    virtual Tensor observe(int agent) const = 0;
    // The scripted policy of agent 1 in the current state.
    virtual int scripted_action(Rng& rng) const = 0;

    virtual int num_actions() const = 0;
    virtual std::array<int, 3> observation_shape() const = 0;
    virtual bool done() const = 0;
    virtual bool won() const = 0;  // learner reached the goal / survived the opponent
    virtual long step_count() const = 0;
    virtual std::string domain() const = 0;
    // Seed that regenerates this episode's initial state (0 for fixed layouts).
    virtual std::uint64_t episode_seed() const { return 0; }
};

std::unique_ptr<Environment> make_environment(const std::string& domain, const nlohmann::json& config);

}  // namespace amrl::env
