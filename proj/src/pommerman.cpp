#include "amrl/pommerman.hpp"

#include <algorithm>
#include <climits>
#include <queue>

#include "amrl/errors.hpp"

namespace amrl::env {

namespace {

// action deltas indexed by PomAction (stay, up, down, left, right)
constexpr int kDx[5] = {0, 0, 0, -1, +1};
constexpr int kDy[5] = {0, -1, +1, 0, 0};

bool is_item(PomCell c) { return c == PomCell::ItemBlast || c == PomCell::ItemAmmo || c == PomCell::ItemKick; }
bool is_walkable(PomCell c) { return c == PomCell::Passage || is_item(c); }

}  // namespace

PomConfig PomConfig::from_json(const nlohmann::json& j) {
    PomConfig c;
    c.size = j.value("size", c.size);
    c.rigid_fraction = j.value("rigid_fraction", c.rigid_fraction);
    c.wood_fraction = j.value("wood_fraction", c.wood_fraction);
    c.item_fraction = j.value("item_fraction", c.item_fraction);
    c.bomb_life = j.value("bomb_life", c.bomb_life);
    c.flame_life = j.value("flame_life", c.flame_life);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.initial_ammo = j.value("initial_ammo", c.initial_ammo);
    c.initial_blast = j.value("initial_blast", c.initial_blast);
    c.simple_bomb_prob = j.value("simple_bomb_prob", c.simple_bomb_prob);
    c.reward_wood = j.value("reward_wood", c.reward_wood);
    c.reward_item = j.value("reward_item", c.reward_item);
    c.reward_step = j.value("reward_step", c.reward_step);
    if (c.size < 4 || c.size > 16) throw config_error("pommerman: size must be in [4,16]");
    return c;
}

PommermanEnv::PommermanEnv(PomConfig cfg) : cfg_(cfg) {
    board_.assign(static_cast<std::size_t>(cfg_.size) * cfg_.size, PomCell::Passage);
    hidden_.assign(board_.size(), PomCell::Passage);
    reset_from_seed(0);
}

bool PommermanEnv::has_bomb(int x, int y) const {
    for (const auto& b : bombs_)
        if (b.x == x && b.y == y) return true;
    return false;
}

int PommermanEnv::flame_at(int x, int y) const {
    for (const auto& f : flames_)
        if (f.x == x && f.y == y) return f.life;
    return 0;
}

void PommermanEnv::generate_board(Rng& rng) {
    const int n = cfg_.size;
    const std::pair<int, int> corners[4] = {{0, 0}, {n - 1, 0}, {0, n - 1}, {n - 1, n - 1}};

    for (int attempt = 0; attempt < cfg_.max_generation_attempts; ++attempt) {
        std::fill(board_.begin(), board_.end(), PomCell::Passage);
        std::fill(hidden_.begin(), hidden_.end(), PomCell::Passage);

        const int c0 = rng.uniform_int(4);
        int c1 = rng.uniform_int(3);
        if (c1 >= c0) ++c1;

        // spawn within Chebyshev distance 1 of the corner
        std::pair<int, int> spawns[2];
        const int corner_ids[2] = {c0, c1};
        for (int i = 0; i < 2; ++i) {
            std::vector<std::pair<int, int>> cand;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = corners[corner_ids[i]].first + dx;
                    const int y = corners[corner_ids[i]].second + dy;
                    if (in_board(x, y)) cand.push_back({x, y});
                }
            spawns[i] = cand[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(cand.size())))];
        }

        // keep the spawns and their direct neighbours open
        std::vector<bool> reserved(board_.size(), false);
        for (const auto& s : spawns) {
            reserved[index(s.first, s.second)] = true;
            for (int a = 1; a < 5; ++a) {
                const int x = s.first + kDx[a], y = s.second + kDy[a];
                if (in_board(x, y)) reserved[index(x, y)] = true;
            }
        }

        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                if (reserved[index(x, y)]) continue;
                const double r = rng.uniform();
                if (r < cfg_.rigid_fraction) {
                    board_[index(x, y)] = PomCell::Rigid;
                } else if (r < cfg_.rigid_fraction + cfg_.wood_fraction) {
                    board_[index(x, y)] = PomCell::Wood;
                    if (rng.bernoulli(cfg_.item_fraction)) {
                        const PomCell kinds[3] = {PomCell::ItemBlast, PomCell::ItemAmmo, PomCell::ItemKick};
                        hidden_[index(x, y)] = kinds[rng.uniform_int(3)];
                    }
                }
            }
        }

        // connectivity through non-rigid cells between the two spawns
        std::vector<bool> seen(board_.size(), false);
        std::queue<std::pair<int, int>> q;
        q.push(spawns[0]);
        seen[index(spawns[0].first, spawns[0].second)] = true;
        while (!q.empty()) {
            auto [x, y] = q.front();
            q.pop();
            for (int a = 1; a < 5; ++a) {
                const int nx = x + kDx[a], ny = y + kDy[a];
                if (!in_board(nx, ny) || seen[index(nx, ny)] || board_[index(nx, ny)] == PomCell::Rigid) continue;
                seen[index(nx, ny)] = true;
                q.push({nx, ny});
            }
        }
        if (!seen[index(spawns[1].first, spawns[1].second)]) continue;

        for (int i = 0; i < 2; ++i) {
            agents_[i] = PomAgentState{};
            agents_[i].x = spawns[i].first;
            agents_[i].y = spawns[i].second;
            agents_[i].ammo = cfg_.initial_ammo;
            agents_[i].max_ammo = cfg_.initial_ammo;
            agents_[i].blast = cfg_.initial_blast;
        }
        return;
    }
    throw std::runtime_error("pommerman: board generation failed to connect agents");
}

void PommermanEnv::reset(Rng& rng) { reset_from_seed(rng.next_u64()); }

void PommermanEnv::reset_from_seed(std::uint64_t board_seed) {
    board_seed_ = board_seed;
    Rng brng(board_seed);
    generate_board(brng);
    bombs_.clear();
    flames_.clear();
    pending_reveals_.clear();
    step_count_ = 0;
    done_ = false;
    terminal_rewards_ = StepResult{};
}

void PommermanEnv::explode(std::vector<std::size_t>& flamed, std::vector<int>& wood_credit) {
    // collect bombs whose fuse ran out, then chain transitively
    std::vector<PomBomb> work;
    for (auto it = bombs_.begin(); it != bombs_.end();) {
        if (it->life <= 0) {
            work.push_back(*it);
            it = bombs_.erase(it);
        } else {
            ++it;
        }
    }

    while (!work.empty()) {
        const PomBomb bomb = work.back();
        work.pop_back();
        agents_[bomb.owner].ammo += 1;  // fuse spent, ammo returns

        auto burn = [&](int x, int y) -> bool {  // returns whether the ray continues
            PomCell& c = board_[index(x, y)];
            if (c == PomCell::Rigid) return false;
            flamed.push_back(index(x, y));
            if (c == PomCell::Wood) {
                wood_credit[static_cast<std::size_t>(bomb.owner)] += 1;
                c = PomCell::Passage;
                if (hidden_[index(x, y)] != PomCell::Passage) {
                    pending_reveals_.push_back({index(x, y), hidden_[index(x, y)]});
                    hidden_[index(x, y)] = PomCell::Passage;
                }
                return false;  // wood absorbs the blast
            }
            if (is_item(c)) c = PomCell::Passage;  // flames burn exposed power-ups
            // chained detonation resolves within this same tick
            for (auto it = bombs_.begin(); it != bombs_.end();) {
                if (it->x == x && it->y == y) {
                    work.push_back(*it);
                    it = bombs_.erase(it);
                } else {
                    ++it;
                }
            }
            return true;
        };

        burn(bomb.x, bomb.y);
        for (int a = 1; a < 5; ++a) {
            for (int r = 1; r <= bomb.blast; ++r) {
                const int x = bomb.x + kDx[a] * r, y = bomb.y + kDy[a] * r;
                if (!in_board(x, y) || !burn(x, y)) break;
            }
        }
    }
}

void PommermanEnv::slide_bombs() {
    for (auto& b : bombs_) {
        if (b.dir < 0) continue;
        const int nx = b.x + kDx[b.dir], ny = b.y + kDy[b.dir];
        bool blocked = !in_board(nx, ny) || board_[index(nx, ny)] != PomCell::Passage || has_bomb(nx, ny);
        for (const auto& ag : agents_)
            if (ag.alive && ag.x == nx && ag.y == ny) blocked = true;
        if (blocked) {
            b.dir = -1;
        } else {
            b.x = nx;
            b.y = ny;
        }
    }
}

StepResult PommermanEnv::step(int a0, int a1) {
    if (done_) throw contract_error("pommerman: step on terminal state");
    if (a0 < 0 || a0 > 5 || a1 < 0 || a1 > 5) throw contract_error("pommerman: bad action");
    const int actions[2] = {a0, a1};
    double shaping[2] = {0.0, 0.0};
    for (int i = 0; i < 2; ++i)
        if (agents_[i].alive) shaping[i] += cfg_.reward_step;

    // (1) fuses tick down; expired bombs blast with transitive chaining
    for (auto& b : bombs_) b.life -= 1;
    std::vector<std::size_t> flamed;
    std::vector<int> wood_credit(2, 0);
    explode(flamed, wood_credit);
    for (int i = 0; i < 2; ++i) shaping[i] += wood_credit[static_cast<std::size_t>(i)] * cfg_.reward_wood;

    // (2) old flames burn down first, then the new blast ignites
    for (auto it = flames_.begin(); it != flames_.end();) {
        it->life -= 1;
        if (it->life <= 0) {
            const std::size_t idx = index(it->x, it->y);
            for (auto rit = pending_reveals_.begin(); rit != pending_reveals_.end();) {
                if (rit->first == idx && board_[idx] == PomCell::Passage) {
                    board_[idx] = rit->second;
                    rit = pending_reveals_.erase(rit);
                } else {
                    ++rit;
                }
            }
            it = flames_.erase(it);
        } else {
            ++it;
        }
    }
    std::sort(flamed.begin(), flamed.end());
    flamed.erase(std::unique(flamed.begin(), flamed.end()), flamed.end());
    for (std::size_t idx : flamed) {
        const int x = static_cast<int>(idx) % cfg_.size;
        const int y = static_cast<int>(idx) / cfg_.size;
        bool refreshed = false;
        for (auto& f : flames_)
            if (f.x == x && f.y == y) {
                f.life = cfg_.flame_life;
                refreshed = true;
            }
        if (!refreshed) flames_.push_back({x, y, cfg_.flame_life});
    }

    // (3) kicked bombs slide, then agents move with both-stay collision rules
    slide_bombs();
    std::pair<int, int> proposal[2];
    int kick_dir[2] = {-1, -1};
    for (int i = 0; i < 2; ++i) {
        proposal[i] = {agents_[i].x, agents_[i].y};
        if (!agents_[i].alive) continue;
        const int a = actions[i];
        if (a < kPomUp || a > kPomRight) continue;
        const int tx = agents_[i].x + kDx[a], ty = agents_[i].y + kDy[a];
        if (!in_board(tx, ty) || !is_walkable(board_[index(tx, ty)])) continue;
        if (has_bomb(tx, ty)) {
            if (!agents_[i].can_kick) continue;
            const int bx = tx + kDx[a], by = ty + kDy[a];
            bool pushable = in_board(bx, by) && board_[index(bx, by)] == PomCell::Passage && !has_bomb(bx, by);
            for (const auto& ag : agents_)
                if (ag.alive && ag.x == bx && ag.y == by) pushable = false;
            if (!pushable) continue;
            kick_dir[i] = a;
        }
        proposal[i] = {tx, ty};
    }
    const std::pair<int, int> current[2] = {{agents_[0].x, agents_[0].y}, {agents_[1].x, agents_[1].y}};
    const bool same_target = proposal[0] == proposal[1];
    const bool swap = proposal[0] == current[1] && proposal[1] == current[0] && proposal[0] != current[0];
    if (same_target || swap) {
        proposal[0] = current[0];
        proposal[1] = current[1];
        kick_dir[0] = kick_dir[1] = -1;
    }
    for (int i = 0; i < 2; ++i) {
        if (kick_dir[i] >= 0 && proposal[i] != current[i]) {
            for (auto& b : bombs_)
                if (b.x == proposal[i].first && b.y == proposal[i].second) {
                    b.x += kDx[kick_dir[i]];
                    b.y += kDy[kick_dir[i]];
                    b.dir = kick_dir[i];
                }
        }
        agents_[i].x = proposal[i].first;
        agents_[i].y = proposal[i].second;
    }

    // (4) bomb placement at the agent's cell
    for (int i = 0; i < 2; ++i) {
        if (!agents_[i].alive || actions[i] != kPomBomb) continue;
        if (agents_[i].ammo <= 0 || has_bomb(agents_[i].x, agents_[i].y)) continue;
        PomBomb b;
        b.x = agents_[i].x;
        b.y = agents_[i].y;
        b.owner = i;
        b.life = cfg_.bomb_life;
        b.blast = agents_[i].blast;
        bombs_.push_back(b);
        agents_[i].ammo -= 1;
    }

    // (5) power-up pickup on the entered cell
    for (int i = 0; i < 2; ++i) {
        if (!agents_[i].alive) continue;
        PomCell& c = board_[index(agents_[i].x, agents_[i].y)];
        if (!is_item(c)) continue;
        if (c == PomCell::ItemBlast) agents_[i].blast += 1;
        if (c == PomCell::ItemAmmo) {
            agents_[i].ammo += 1;
            agents_[i].max_ammo += 1;
        }
        if (c == PomCell::ItemKick) agents_[i].can_kick = true;
        c = PomCell::Passage;
        shaping[i] += cfg_.reward_item;
    }

    // (6) flames kill; last agent standing wins
    for (int i = 0; i < 2; ++i)
        if (agents_[i].alive && flame_at(agents_[i].x, agents_[i].y) > 0) agents_[i].alive = false;

    step_count_ += 1;
    const int alive = (agents_[0].alive ? 1 : 0) + (agents_[1].alive ? 1 : 0);
    StepResult res;
    terminal_rewards_ = StepResult{};
    if (alive <= 1 || step_count_ >= cfg_.max_steps) {
        done_ = true;
        if (alive == 1) {
            terminal_rewards_.reward_learner = agents_[0].alive ? 1.0 : -1.0;
            terminal_rewards_.reward_other = agents_[1].alive ? 1.0 : -1.0;
        }
        terminal_rewards_.done = true;
    }
    res.done = done_;
    res.reward_learner = shaping[0] + terminal_rewards_.reward_learner;
    res.reward_other = shaping[1] + terminal_rewards_.reward_other;
    return res;
}

Tensor PommermanEnv::observe(int agent) const {
    const int n = cfg_.size;
    Tensor obs({18, n, n});
    const PomAgentState& self = agents_[agent];
    const PomAgentState& other = agents_[1 - agent];
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const PomCell c = board_[index(x, y)];
            if (is_walkable(c)) obs.at3(0, y, x) = 1.0;
            if (c == PomCell::Rigid) obs.at3(1, y, x) = 1.0;
            if (c == PomCell::Wood) obs.at3(2, y, x) = 1.0;
            if (c == PomCell::ItemBlast) obs.at3(8, y, x) = 1.0;
            if (c == PomCell::ItemAmmo) obs.at3(9, y, x) = 1.0;
            if (c == PomCell::ItemKick) obs.at3(10, y, x) = 1.0;
        }
    }
    for (const auto& b : bombs_) {
        obs.at3(3, b.y, b.x) = 1.0;
        obs.at3(4, b.y, b.x) = static_cast<double>(b.life) / 10.0;
        obs.at3(5, b.y, b.x) = static_cast<double>(b.blast) / 8.0;
    }
    for (const auto& f : flames_) {
        obs.at3(6, f.y, f.x) = 1.0;
        obs.at3(7, f.y, f.x) = static_cast<double>(f.life) / 2.0;
    }
    if (self.alive) obs.at3(11, self.y, self.x) = 1.0;
    if (other.alive) obs.at3(12, other.y, other.x) = 1.0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            obs.at3(13, y, x) = static_cast<double>(self.ammo) / 8.0;
            obs.at3(14, y, x) = static_cast<double>(self.blast) / 8.0;
            obs.at3(15, y, x) = self.can_kick ? 1.0 : 0.0;
            obs.at3(16, y, x) = other.alive ? 1.0 : 0.0;
            obs.at3(17, y, x) = static_cast<double>(step_count_) / static_cast<double>(cfg_.max_steps);
        }
    }
    return obs;
}

std::vector<int> PommermanEnv::danger_map() const {
    // effective explosion tick per bomb, accounting for chains
    std::vector<int> eff(bombs_.size());
    std::vector<std::vector<std::size_t>> covered(bombs_.size());
    for (std::size_t i = 0; i < bombs_.size(); ++i) {
        eff[i] = bombs_[i].life;
        covered[i].push_back(index(bombs_[i].x, bombs_[i].y));
        for (int a = 1; a < 5; ++a) {
            for (int r = 1; r <= bombs_[i].blast; ++r) {
                const int x = bombs_[i].x + kDx[a] * r, y = bombs_[i].y + kDy[a] * r;
                if (!in_board(x, y) || board_[index(x, y)] == PomCell::Rigid) break;
                covered[i].push_back(index(x, y));
                if (board_[index(x, y)] == PomCell::Wood) break;
            }
        }
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < bombs_.size(); ++i) {
            for (std::size_t j = 0; j < bombs_.size(); ++j) {
                if (i == j) continue;
                const std::size_t cell = index(bombs_[j].x, bombs_[j].y);
                if (std::find(covered[i].begin(), covered[i].end(), cell) != covered[i].end() &&
                    eff[i] < eff[j]) {
                    eff[j] = eff[i];
                    changed = true;
                }
            }
        }
    }
    std::vector<int> danger(board_.size(), INT_MAX);
    for (std::size_t i = 0; i < bombs_.size(); ++i)
        for (std::size_t cell : covered[i]) danger[cell] = std::min(danger[cell], eff[i]);
    return danger;
}

std::vector<bool> PommermanEnv::lethal_next_tick() const {
    std::vector<bool> lethal(board_.size(), false);
    for (const auto& f : flames_)
        if (f.life >= 2) lethal[index(f.x, f.y)] = true;
    const std::vector<int> danger = danger_map();
    for (std::size_t i = 0; i < board_.size(); ++i)
        if (danger[i] <= 1) lethal[i] = true;
    return lethal;
}

std::vector<int> PommermanEnv::dijkstra(int from_x, int from_y, const std::vector<bool>& blocked) const {
    std::vector<int> dist(board_.size(), INT_MAX);
    using Item = std::pair<int, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[index(from_x, from_y)] = 0;
    pq.push({0, index(from_x, from_y)});
    while (!pq.empty()) {
        auto [d, idx] = pq.top();
        pq.pop();
        if (d > dist[idx]) continue;
        const int x = static_cast<int>(idx) % cfg_.size, y = static_cast<int>(idx) / cfg_.size;
        for (int a = 1; a < 5; ++a) {
            const int nx = x + kDx[a], ny = y + kDy[a];
            if (!in_board(nx, ny)) continue;
            const std::size_t nidx = index(nx, ny);
            if (blocked[nidx]) continue;
            if (d + 1 < dist[nidx]) {
                dist[nidx] = d + 1;
                pq.push({d + 1, nidx});
            }
        }
    }
    return dist;
}

int PommermanEnv::simple_agent_act(int agent, Rng& rng) const {
    const PomAgentState& me = agents_[agent];
    if (!me.alive || done_) return kPomStay;
    const PomAgentState& enemy = agents_[1 - agent];

    const std::vector<int> danger = danger_map();
    const std::vector<bool> lethal = lethal_next_tick();

    std::vector<bool> blocked(board_.size(), false);
    for (std::size_t i = 0; i < board_.size(); ++i)
        blocked[i] = !is_walkable(board_[i]) || lethal[i];
    for (const auto& b : bombs_) blocked[index(b.x, b.y)] = true;
    if (enemy.alive) blocked[index(enemy.x, enemy.y)] = true;

    // legal one-step moves that are not lethal on arrival
    std::vector<int> safe_moves;
    if (!lethal[index(me.x, me.y)]) safe_moves.push_back(kPomStay);
    for (int a = 1; a < 5; ++a) {
        const int tx = me.x + kDx[a], ty = me.y + kDy[a];
        if (!in_board(tx, ty) || !is_walkable(board_[index(tx, ty)]) || has_bomb(tx, ty)) continue;
        if (enemy.alive && enemy.x == tx && enemy.y == ty) continue;
        if (lethal[index(tx, ty)]) continue;
        safe_moves.push_back(a);
    }
    if (safe_moves.empty()) return kPomStay;

    const std::vector<int> dist = dijkstra(me.x, me.y, blocked);
    auto step_toward = [&](std::size_t target) -> int {
        // walk the distance field back from the target to the first move
        const std::vector<int> back =
            dijkstra(static_cast<int>(target) % cfg_.size, static_cast<int>(target) / cfg_.size, blocked);
        int best_action = -1;
        int best_d = back[index(me.x, me.y)];
        for (int a : safe_moves) {
            if (a == kPomStay) continue;
            const std::size_t nidx = index(me.x + kDx[a], me.y + kDy[a]);
            if (back[nidx] != INT_MAX && back[nidx] < best_d) {
                best_d = back[nidx];
                best_action = a;
            }
        }
        return best_action;
    };

    // 1: get out of any bomb's blast corridor
    if (danger[index(me.x, me.y)] != INT_MAX) {
        std::size_t best_cell = board_.size();
        int best_d = INT_MAX;
        for (std::size_t i = 0; i < board_.size(); ++i) {
            if (danger[i] != INT_MAX || dist[i] == INT_MAX) continue;
            if (dist[i] < best_d) {
                best_d = dist[i];
                best_cell = i;
            }
        }
        if (best_cell < board_.size()) {
            const int a = step_toward(best_cell);
            if (a >= 0) return a;
        }
        for (int a : safe_moves)
            if (a != kPomStay) return a;
        return safe_moves.front();
    }

    auto bomb_escape_exists = [&](int bx, int by, int blast) -> bool {
        // a neighbour outside the prospective blast cross and any current danger
        for (int a : safe_moves) {
            if (a == kPomStay) continue;
            const int tx = me.x + kDx[a], ty = me.y + kDy[a];
            const bool in_cross = (tx == bx && std::abs(ty - by) <= blast) || (ty == by && std::abs(tx - bx) <= blast);
            if (!in_cross && danger[index(tx, ty)] == INT_MAX) return true;
        }
        return false;
    };

    // 2: bomb the enemy when adjacent
    if (me.ammo > 0 && enemy.alive && std::abs(me.x - enemy.x) + std::abs(me.y - enemy.y) == 1 &&
        !has_bomb(me.x, me.y) && bomb_escape_exists(me.x, me.y, me.blast) && rng.bernoulli(cfg_.simple_bomb_prob))
        return kPomBomb;

    // 3: collect the nearest reachable power-up
    std::size_t best_item = board_.size();
    int best_item_d = INT_MAX;
    for (std::size_t i = 0; i < board_.size(); ++i) {
        if (!is_item(board_[i]) || dist[i] == INT_MAX) continue;
        if (dist[i] < best_item_d) {
            best_item_d = dist[i];
            best_item = i;
        }
    }
    if (best_item < board_.size()) {
        const int a = step_toward(best_item);
        if (a >= 0) return a;
    }

    // 4: farm wood: bomb it when adjacent, otherwise walk to it
    bool next_to_wood = false;
    for (int a = 1; a < 5 && !next_to_wood; ++a) {
        const int tx = me.x + kDx[a], ty = me.y + kDy[a];
        if (in_board(tx, ty) && board_[index(tx, ty)] == PomCell::Wood) next_to_wood = true;
    }
    if (next_to_wood && me.ammo > 0 && !has_bomb(me.x, me.y) && bomb_escape_exists(me.x, me.y, me.blast))
        return kPomBomb;
    std::size_t best_spot = board_.size();
    int best_spot_d = INT_MAX;
    for (std::size_t i = 0; i < board_.size(); ++i) {
        if (dist[i] == INT_MAX || dist[i] == 0) continue;
        const int x = static_cast<int>(i) % cfg_.size, y = static_cast<int>(i) / cfg_.size;
        bool adj_wood = false;
        for (int a = 1; a < 5; ++a) {
            const int tx = x + kDx[a], ty = y + kDy[a];
            if (in_board(tx, ty) && board_[index(tx, ty)] == PomCell::Wood) adj_wood = true;
        }
        if (adj_wood && dist[i] < best_spot_d) {
            best_spot_d = dist[i];
            best_spot = i;
        }
    }
    if (best_spot < board_.size()) {
        const int a = step_toward(best_spot);
        if (a >= 0) return a;
    }

    // 5: wander safely
    return safe_moves[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(safe_moves.size())))];
}

void PommermanEnv::clear_board_for_test() {
    std::fill(board_.begin(), board_.end(), PomCell::Passage);
    std::fill(hidden_.begin(), hidden_.end(), PomCell::Passage);
    bombs_.clear();
    flames_.clear();
    pending_reveals_.clear();
    step_count_ = 0;
    done_ = false;
    terminal_rewards_ = StepResult{};
    agents_[0] = PomAgentState{};
    agents_[0].ammo = agents_[0].max_ammo = cfg_.initial_ammo;
    agents_[0].blast = cfg_.initial_blast;
    agents_[1] = agents_[0];
    agents_[1].x = cfg_.size - 1;
    agents_[1].y = cfg_.size - 1;
}

void PommermanEnv::set_agent_stats(int i, int ammo, int blast, bool can_kick) {
    agents_[i].ammo = ammo;
    agents_[i].max_ammo = ammo;
    agents_[i].blast = blast;
    agents_[i].can_kick = can_kick;
}

}  // namespace amrl::env
