#pragma once

#include <string>
#include <utility>
#include <vector>

#include "amrl/env.hpp"

namespace amrl::env {

// Two agents must stand on the cells immediately left and right of an object
// (grasping is automatic), then move in unison to carry it into the goal zone.
// Both get reward 1 when the object enters a goal cell; episodes are capped at
// 1900 steps.
//
// Actions: 0 stay, 1 left, 2 right, 3 up, 4 down.
enum CmotpAction { kStay = 0, kLeft = 1, kRight = 2, kUp = 3, kDown = 4 };

struct CmotpLayout {
    int width = 0;
    int height = 0;
    std::vector<std::string> rows;  // '#' wall, 'G' goal, 'O' object, '1'/'2' agent starts, '.' empty

    static CmotpLayout parse(const std::vector<std::string>& rows);
    static CmotpLayout from_file(const std::string& path);
    static CmotpLayout default_layout();

    bool wall(int x, int y) const;  // out-of-bounds counts as wall
    bool goal(int x, int y) const;
};

enum class CmotpTeammate { Hesitant, Stubborn };

struct CmotpConfig {
    CmotpLayout layout = CmotpLayout::default_layout();
    CmotpTeammate teammate = CmotpTeammate::Hesitant;
    double p_greedy = 0.8;
    int max_steps = 1900;
    // Object waypoints the stubborn teammate steers along once grasped.
    std::vector<std::pair<int, int>> stubborn_waypoints;

    static CmotpConfig from_json(const nlohmann::json& j);
};

class CmotpEnv final : public Environment {
public:
    explicit CmotpEnv(CmotpConfig cfg);

    void reset(Rng& rng) override;
    StepResult step(int learner_action, int other_action) override;
    Tensor observe(int agent) const override;
    int scripted_action(Rng& rng) const override;

    int num_actions() const override { return 5; }
    std::array<int, 3> observation_shape() const override { return {1, 16, 16}; }
    bool done() const override { return done_; }
    bool won() const override { return won_; }
    long step_count() const override { return step_count_; }
    std::string domain() const override { return "cmotp"; }

    // state access for tests and scripted policies
    std::pair<int, int> agent_position(int agent) const { return agent_pos_[agent]; }
    std::pair<int, int> object_position() const { return object_pos_; }
    bool grasped() const { return grasped_; }
    const CmotpConfig& config() const { return cfg_; }

    // test harness hooks
    void force_positions(std::pair<int, int> a0, std::pair<int, int> a1, std::pair<int, int> obj, bool grasped);

    // The scripted policy for either agent (the learner-side variant is used
    // by oracle tests that script both agents).
    int teammate_action(int agent, Rng& rng) const;

private:
    std::pair<int, int> grasp_target(int agent) const;
    int greedy_toward(std::pair<int, int> from, std::pair<int, int> target) const;
    int hesitant_action(int agent, Rng& rng) const;
    int stubborn_action(int agent, Rng& rng) const;
    std::pair<int, int> nearest_goal(std::pair<int, int> from) const;
    bool walkable(int x, int y) const;

    CmotpConfig cfg_;
    std::pair<int, int> agent_pos_[2];
    std::pair<int, int> start_pos_[2];
    std::pair<int, int> object_pos_;
    std::pair<int, int> object_start_;
    bool grasped_ = false;
    bool done_ = true;
    bool won_ = false;
    long step_count_ = 0;
};

}  // namespace amrl::env
