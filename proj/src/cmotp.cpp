#include "amrl/cmotp.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <queue>

#include "amrl/errors.hpp"

namespace amrl::env {

namespace {

constexpr int kDx[5] = {0, -1, +1, 0, 0};
constexpr int kDy[5] = {0, 0, 0, -1, +1};
// tie-break order for greedy moves: left < right < up < down < stay
constexpr int kGreedyOrder[4] = {kLeft, kRight, kUp, kDown};

const std::vector<std::string> kDefaultRows = {
    "######GGGG######",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#..............#",
    "#.......O......#",
    "#1............2#",
    "################",
};

// Carry route of the default stubborn teammate: over to column 2, up the left
// side, then along the top to the goal. A distinctive detour, so its grasped
// behaviour is predictable but far from the greedy route.
const std::vector<std::pair<int, int>> kDefaultStubbornWaypoints = {{2, 13}, {2, 1}, {8, 1}, {8, 0}};

int manhattan(std::pair<int, int> a, std::pair<int, int> b) {
    return std::abs(a.first - b.first) + std::abs(a.second - b.second);
}

}  // namespace

CmotpLayout CmotpLayout::parse(const std::vector<std::string>& rows) {
    CmotpLayout l;
    if (rows.empty()) throw config_error("cmotp layout: no rows");
    l.height = static_cast<int>(rows.size());
    l.width = static_cast<int>(rows[0].size());
    if (l.height > 16 || l.width > 16) throw config_error("cmotp layout: grid must fit in 16x16");
    int objects = 0, a1 = 0, a2 = 0, goals = 0;
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != l.width) throw config_error("cmotp layout: ragged rows");
        for (char c : r) {
            switch (c) {
                case '#': break;
                case 'G': ++goals; break;
                case 'O': ++objects; break;
                case '1': ++a1; break;
                case '2': ++a2; break;
                case '.': break;
                default: throw config_error(std::string("cmotp layout: bad cell '") + c + "'");
            }
        }
    }
    if (objects != 1 || a1 != 1 || a2 != 1) throw config_error("cmotp layout: need exactly one O, 1 and 2");
    if (goals == 0) throw config_error("cmotp layout: no goal cells");
    l.rows = rows;

    // the object must be able to reach a goal and both grasp cells must exist
    std::pair<int, int> obj{-1, -1};
    for (int y = 0; y < l.height; ++y)
        for (int x = 0; x < l.width; ++x)
            if (l.rows[y][x] == 'O') obj = {x, y};
    if (l.wall(obj.first - 1, obj.second) || l.wall(obj.first + 1, obj.second))
        throw config_error("cmotp layout: grasp cells beside the object are blocked");

    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(l.height),
                                        std::vector<bool>(static_cast<std::size_t>(l.width), false));
    std::queue<std::pair<int, int>> q;
    q.push(obj);
    seen[obj.second][obj.first] = true;
    bool goal_reached = false;
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        if (l.goal(x, y)) goal_reached = true;
        for (int a = 1; a < 5; ++a) {
            const int nx = x + kDx[a], ny = y + kDy[a];
            if (l.wall(nx, ny) || seen[ny][nx]) continue;
            seen[ny][nx] = true;
            q.push({nx, ny});
        }
    }
    if (!goal_reached) throw config_error("cmotp layout: goal unreachable from the object");
    return l;
}

CmotpLayout CmotpLayout::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open layout file " + path);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    return parse(rows);
}

CmotpLayout CmotpLayout::default_layout() { return parse(kDefaultRows); }

bool CmotpLayout::wall(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return true;
    return rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#';
}

bool CmotpLayout::goal(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    return rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == 'G';
}

CmotpConfig CmotpConfig::from_json(const nlohmann::json& j) {
    CmotpConfig cfg;
    if (j.contains("layout_file")) {
        cfg.layout = CmotpLayout::from_file(j["layout_file"].get<std::string>());
    } else if (j.contains("layout_rows")) {
        cfg.layout = CmotpLayout::parse(j["layout_rows"].get<std::vector<std::string>>());
    }
    if (j.contains("teammate")) {
        const std::string t = j["teammate"].get<std::string>();
        if (t == "hesitant")
            cfg.teammate = CmotpTeammate::Hesitant;
        else if (t == "stubborn")
            cfg.teammate = CmotpTeammate::Stubborn;
        else
            throw config_error("unknown cmotp teammate: " + t);
    }
    cfg.p_greedy = j.value("p_greedy", cfg.p_greedy);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    if (j.contains("stubborn_waypoints"))
        cfg.stubborn_waypoints = j["stubborn_waypoints"].get<std::vector<std::pair<int, int>>>();
    return cfg;
}

CmotpEnv::CmotpEnv(CmotpConfig cfg) : cfg_(std::move(cfg)) {
    for (int y = 0; y < cfg_.layout.height; ++y) {
        for (int x = 0; x < cfg_.layout.width; ++x) {
            const char c = cfg_.layout.rows[y][x];
            if (c == '1') start_pos_[0] = {x, y};
            if (c == '2') start_pos_[1] = {x, y};
            if (c == 'O') object_start_ = {x, y};
        }
    }
    if (cfg_.stubborn_waypoints.empty()) {
        if (cfg_.layout.rows == kDefaultRows) {
            cfg_.stubborn_waypoints = kDefaultStubbornWaypoints;
        } else {
            // generic route: up own column to the row under the nearest goal,
            // slide to the goal column, then enter
            const auto goal = nearest_goal(object_start_);
            cfg_.stubborn_waypoints = {{object_start_.first, goal.second + 1},
                                       {goal.first, goal.second + 1},
                                       {goal.first, goal.second}};
        }
    }
    for (const auto& wp : cfg_.stubborn_waypoints)
        if (cfg_.layout.wall(wp.first, wp.second))
            throw config_error("cmotp: stubborn waypoint inside a wall");
    Rng unused(0);
    reset(unused);
}

void CmotpEnv::reset(Rng&) {
    agent_pos_[0] = start_pos_[0];
    agent_pos_[1] = start_pos_[1];
    object_pos_ = object_start_;
    grasped_ = false;
    done_ = false;
    won_ = false;
    step_count_ = 0;
}

bool CmotpEnv::walkable(int x, int y) const { return !cfg_.layout.wall(x, y); }

StepResult CmotpEnv::step(int learner_action, int other_action) {
    if (done_) throw contract_error("cmotp: step on terminal state");
    if (learner_action < 0 || learner_action >= 5 || other_action < 0 || other_action >= 5)
        throw contract_error("cmotp: bad action");

    StepResult res;
    const int actions[2] = {learner_action, other_action};

    if (!grasped_) {
        std::pair<int, int> target[2];
        for (int i = 0; i < 2; ++i) {
            const int a = actions[i];
            std::pair<int, int> t{agent_pos_[i].first + kDx[a], agent_pos_[i].second + kDy[a]};
            // walls, the object, and the other agent's current cell all block
            if (!walkable(t.first, t.second) || t == object_pos_ || t == agent_pos_[1 - i]) t = agent_pos_[i];
            target[i] = t;
        }
        if (target[0] == target[1]) {
            target[0] = agent_pos_[0];
            target[1] = agent_pos_[1];
        }
        agent_pos_[0] = target[0];
        agent_pos_[1] = target[1];

        const std::pair<int, int> left{object_pos_.first - 1, object_pos_.second};
        const std::pair<int, int> right{object_pos_.first + 1, object_pos_.second};
        if ((agent_pos_[0] == left && agent_pos_[1] == right) || (agent_pos_[0] == right && agent_pos_[1] == left))
            grasped_ = true;
    } else {
        // carried moves require agreement; mismatches (and stay) move nothing
        if (actions[0] == actions[1] && actions[0] != kStay) {
            const int a = actions[0];
            const std::pair<int, int> to{object_pos_.first + kDx[a], object_pos_.second + kDy[a]};
            const std::pair<int, int> t0{agent_pos_[0].first + kDx[a], agent_pos_[0].second + kDy[a]};
            const std::pair<int, int> t1{agent_pos_[1].first + kDx[a], agent_pos_[1].second + kDy[a]};
            if (walkable(to.first, to.second) && walkable(t0.first, t0.second) && walkable(t1.first, t1.second)) {
                object_pos_ = to;
                agent_pos_[0] = t0;
                agent_pos_[1] = t1;
                if (cfg_.layout.goal(object_pos_.first, object_pos_.second)) {
                    res.reward_learner = 1.0;
                    res.reward_other = 1.0;
                    won_ = true;
                    done_ = true;
                }
            }
        }
    }

    ++step_count_;
    if (step_count_ >= cfg_.max_steps) done_ = true;
    res.done = done_;
    return res;
}

Tensor CmotpEnv::observe(int agent) const {
    Tensor obs({1, 16, 16});
    for (int y = 0; y < cfg_.layout.height; ++y) {
        for (int x = 0; x < cfg_.layout.width; ++x) {
            if (cfg_.layout.wall(x, y))
                obs.at3(0, y, x) = 1.0;
            else if (cfg_.layout.goal(x, y))
                obs.at3(0, y, x) = 0.8;
        }
    }
    obs.at3(0, object_pos_.second, object_pos_.first) = 0.6;
    const auto& other = agent_pos_[1 - agent];
    const auto& self = agent_pos_[agent];
    obs.at3(0, other.second, other.first) = 0.2;
    obs.at3(0, self.second, self.first) = 0.4;
    return obs;
}

std::pair<int, int> CmotpEnv::nearest_goal(std::pair<int, int> from) const {
    std::pair<int, int> best{-1, -1};
    int best_d = 1 << 30;
    for (int y = 0; y < cfg_.layout.height; ++y) {
        for (int x = 0; x < cfg_.layout.width; ++x) {
            if (!cfg_.layout.goal(x, y)) continue;
            const int d = manhattan(from, {x, y});
            if (d < best_d) {
                best_d = d;
                best = {x, y};
            }
        }
    }
    return best;
}

std::pair<int, int> CmotpEnv::grasp_target(int agent) const {
    const std::pair<int, int> left{object_pos_.first - 1, object_pos_.second};
    const std::pair<int, int> right{object_pos_.first + 1, object_pos_.second};
    if (agent_pos_[agent] == left) return left;
    if (agent_pos_[agent] == right) return right;
    const bool left_free = agent_pos_[1 - agent] != left;
    const bool right_free = agent_pos_[1 - agent] != right;
    if (left_free && right_free)
        return manhattan(agent_pos_[agent], right) < manhattan(agent_pos_[agent], left) ? right : left;
    if (right_free) return right;
    return left;
}

int CmotpEnv::greedy_toward(std::pair<int, int> from, std::pair<int, int> target) const {
    for (int a : kGreedyOrder) {
        const std::pair<int, int> t{from.first + kDx[a], from.second + kDy[a]};
        if (manhattan(t, target) < manhattan(from, target)) return a;
    }
    return kStay;
}

int CmotpEnv::hesitant_action(int agent, Rng& rng) const {
    const int greedy = grasped_ ? greedy_toward(object_pos_, nearest_goal(object_pos_))
                                : greedy_toward(agent_pos_[agent], grasp_target(agent));
    if (rng.bernoulli(cfg_.p_greedy)) return greedy;
    // uniform over the four non-greedy actions
    int pick = rng.uniform_int(4);
    for (int a = 0; a < 5; ++a) {
        if (a == greedy) continue;
        if (pick-- == 0) return a;
    }
    return kStay;
}

int CmotpEnv::stubborn_action(int agent, Rng& rng) const {
    if (!grasped_) return hesitant_action(agent, rng);
    const auto& wp = cfg_.stubborn_waypoints;

    // steer toward the far end of the nearest path segment (ties prefer the
    // later segment, so passing a waypoint hands over to the next leg)
    std::pair<int, int> target = wp.back();
    if (wp.size() >= 2) {
        int best_d = 1 << 30;
        for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
            const int lox = std::min(wp[i].first, wp[i + 1].first);
            const int hix = std::max(wp[i].first, wp[i + 1].first);
            const int loy = std::min(wp[i].second, wp[i + 1].second);
            const int hiy = std::max(wp[i].second, wp[i + 1].second);
            const std::pair<int, int> clamped{std::clamp(object_pos_.first, lox, hix),
                                              std::clamp(object_pos_.second, loy, hiy)};
            const int d = manhattan(object_pos_, clamped);
            if (d <= best_d) {
                best_d = d;
                target = wp[i + 1];
            }
        }
    }
    return greedy_toward(object_pos_, target);
}

int CmotpEnv::teammate_action(int agent, Rng& rng) const {
    if (done_) throw contract_error("cmotp: teammate_action on terminal state");
    return cfg_.teammate == CmotpTeammate::Hesitant ? hesitant_action(agent, rng) : stubborn_action(agent, rng);
}

int CmotpEnv::scripted_action(Rng& rng) const { return teammate_action(1, rng); }

void CmotpEnv::force_positions(std::pair<int, int> a0, std::pair<int, int> a1, std::pair<int, int> obj,
                               bool grasped) {
    agent_pos_[0] = a0;
    agent_pos_[1] = a1;
    object_pos_ = obj;
    grasped_ = grasped;
    done_ = false;
    won_ = false;
}

}  // namespace amrl::env
