#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amrl/env.hpp"

namespace amrl::env {

// Two-player Bomberman variant on a randomly generated 8x8 board. Bombs
// explode 10 ticks after placement, flames last 2 ticks, last agent standing
// wins (+1/-1, 0 for draws). Actions: 0 stay, 1 up, 2 down, 3 left, 4 right,
// 5 place bomb.
enum PomAction { kPomStay = 0, kPomUp = 1, kPomDown = 2, kPomLeft = 3, kPomRight = 4, kPomBomb = 5 };

enum class PomCell : std::uint8_t { Passage, Rigid, Wood, ItemBlast, ItemAmmo, ItemKick };

struct PomBomb {
    int x = 0, y = 0;
    int owner = 0;
    int life = 10;
    int blast = 2;
    int dir = -1;  // sliding direction after a kick, -1 when at rest
};

struct PomFlame {
    int x = 0, y = 0;
    int life = 2;
};

struct PomAgentState {
    int x = 0, y = 0;
    bool alive = true;
    int ammo = 1;
    int max_ammo = 1;
    int blast = 2;
    bool can_kick = false;
};

struct PomConfig {
    int size = 8;
    double rigid_fraction = 0.10;
    double wood_fraction = 0.20;
    double item_fraction = 0.5;  // share of wood hiding a power-up
    int bomb_life = 10;
    int flame_life = 2;
    int max_steps = 800;
    int initial_ammo = 1;
    int initial_blast = 2;
    double simple_bomb_prob = 0.8;  // SimpleAgent: bomb chance when next to the enemy
    // dense shaping (terminal +-1 is always added on top)
    double reward_wood = 0.01;
    double reward_item = 0.05;
    double reward_step = -0.0001;
    int max_generation_attempts = 100;

    static PomConfig from_json(const nlohmann::json& j);
};

class PommermanEnv final : public Environment {
public:
    explicit PommermanEnv(PomConfig cfg = PomConfig{});

    void reset(Rng& rng) override;          // draws a board seed from rng
    void reset_from_seed(std::uint64_t board_seed);
    StepResult step(int a0, int a1) override;
    Tensor observe(int agent) const override;
    int scripted_action(Rng& rng) const override { return simple_agent_act(1, rng); }

    int num_actions() const override { return 6; }
    std::array<int, 3> observation_shape() const override { return {18, cfg_.size, cfg_.size}; }
    bool done() const override { return done_; }
    bool won() const override { return done_ && agents_[0].alive && !agents_[1].alive; }
    long step_count() const override { return step_count_; }
    std::string domain() const override { return "pommerman"; }
    std::uint64_t episode_seed() const override { return board_seed_; }

    // The stochastic rule-based baseline: per-tick Dijkstra navigation with
    // blast avoidance, power-up collection and wood bombing.
    int simple_agent_act(int agent, Rng& rng) const;

    std::uint64_t board_seed() const { return board_seed_; }

    // state access for tests and the observation encoder
    PomCell cell(int x, int y) const { return board_[index(x, y)]; }
    const std::vector<PomBomb>& bombs() const { return bombs_; }
    const std::vector<PomFlame>& flames() const { return flames_; }
    const PomAgentState& agent(int i) const { return agents_[i]; }
    const PomConfig& config() const { return cfg_; }
    StepResult last_terminal_rewards() const { return terminal_rewards_; }

    // test harness hooks
    void clear_board_for_test();
    void set_cell(int x, int y, PomCell c) { board_[index(x, y)] = c; }
    void set_agent(int i, int x, int y) { agents_[i].x = x; agents_[i].y = y; }
    void set_agent_stats(int i, int ammo, int blast, bool can_kick);
    void add_bomb(const PomBomb& b) { bombs_.push_back(b); }

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * cfg_.size + x; }
    bool in_board(int x, int y) const { return x >= 0 && y >= 0 && x < cfg_.size && y < cfg_.size; }
    bool has_bomb(int x, int y) const;
    int flame_at(int x, int y) const;  // remaining life, 0 if none
    void generate_board(Rng& board_rng);
    void explode(std::vector<std::size_t>& flamed, std::vector<int>& wood_credit);
    void slide_bombs();

    // SimpleAgent helpers
    std::vector<int> danger_map() const;      // ticks until a blast covers each cell (INT_MAX if never)
    std::vector<bool> lethal_next_tick() const;
    std::vector<int> dijkstra(int from_x, int from_y, const std::vector<bool>& blocked) const;

    PomConfig cfg_;
    std::vector<PomCell> board_;
    std::vector<PomCell> hidden_;  // item revealed when the wood at the cell burns
    std::vector<PomBomb> bombs_;
    std::vector<PomFlame> flames_;
    std::vector<std::pair<std::size_t, PomCell>> pending_reveals_;
    PomAgentState agents_[2];
    long step_count_ = 0;
    bool done_ = true;
    std::uint64_t board_seed_ = 0;
    StepResult terminal_rewards_;
};

}  // namespace amrl::env
