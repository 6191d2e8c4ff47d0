#include <doctest.h>

#include <cmath>

#include "amrl/losses.hpp"
#include "oracles.hpp"

using namespace amrl;

namespace {

int leaf_policy(Tape& tape, std::vector<double> probs) {
    const int n = static_cast<int>(probs.size());
    return tape.leaf(Tensor({n}, std::move(probs)));
}

}  // namespace

TEST_CASE("one-step terminal returns") {
    const auto ra = rl::nstep_returns_and_advantages({1.0}, {0.5}, 0.0, 0.99);
    CHECK(ra.returns[0] == 1.0);
    CHECK(ra.advantages[0] == 0.5);
}

TEST_CASE("delayed terminal reward discounts twice") {
    const auto ra = rl::nstep_returns_and_advantages({0.0, 0.0, 1.0}, {0.0, 0.0, 0.0}, 0.0, 0.99);
    CHECK(std::abs(ra.returns[0] - 0.9801) < 1e-12);
    CHECK(std::abs(ra.returns[1] - 0.99) < 1e-12);
    CHECK(ra.returns[2] == 1.0);
}

TEST_CASE("length-20 rollout with bootstrap matches the direct-sum oracle") {
    Rng rng(6);
    const int m = 20;
    std::vector<double> rewards(m), values(m);
    for (int t = 0; t < m; ++t) {
        rewards[static_cast<std::size_t>(t)] = rng.uniform(-1.0, 1.0);
        values[static_cast<std::size_t>(t)] = rng.uniform(-1.0, 1.0);
    }
    const double bootstrap = rng.uniform(-1.0, 1.0);
    const double gamma = 0.99;
    const auto ra = rl::nstep_returns_and_advantages(rewards, values, bootstrap, gamma);
    for (int t = 0; t < m; ++t) {
        // R_t = sum_k gamma^k r_{t+k} + gamma^{M-t} * bootstrap
        double direct = 0.0;
        for (int k = t; k < m; ++k) direct += std::pow(gamma, k - t) * rewards[static_cast<std::size_t>(k)];
        direct += std::pow(gamma, m - t) * bootstrap;
        CHECK(std::abs(ra.returns[static_cast<std::size_t>(t)] - direct) < 1e-12);
        CHECK(std::abs(ra.advantages[static_cast<std::size_t>(t)] -
                       (direct - values[static_cast<std::size_t>(t)])) < 1e-12);
    }
}

TEST_CASE("empty rollout is a contract violation") {
    CHECK_THROWS_AS(rl::nstep_returns_and_advantages({}, {}, 0.0, 0.99), contract_error);
}

TEST_CASE("uniform policy entropy is ln 5 per step") {
    Tape tape;
    const int policy = leaf_policy(tape, {0.2, 0.2, 0.2, 0.2, 0.2});
    const int value = tape.leaf(Tensor::scalar(0.0));
    rl::LossWeights w;
    w.value_weight = 0.0;
    w.policy_weight = 0.0;
    w.entropy_weight = 1.0;
    rl::ReturnsAdvantages ra;
    ra.returns = {0.0};
    ra.advantages = {0.0};
    const int loss = rl::a3c_loss(tape, {policy}, {value}, {0}, ra, w);
    CHECK(tape.value(loss)[0] == doctest::Approx(-std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("zero advantages leave only value and entropy terms") {
    Tape tape;
    const int policy = leaf_policy(tape, {0.7, 0.3});
    const int value = tape.leaf(Tensor::scalar(0.25));
    rl::LossWeights w;
    rl::ReturnsAdvantages ra;
    ra.returns = {1.25};
    ra.advantages = {0.0};
    const int loss = rl::a3c_loss(tape, {policy}, {value}, {0}, ra, w);
    const double entropy = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    const double expected = 0.5 * 1.0 - 0.01 * entropy;  // no policy term
    CHECK(tape.value(loss)[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single-step a3c loss matches the hand oracle") {
    // pi(a)=0.5 on two actions, A=2, R=1, V=0, default weights
    Tape tape;
    const int policy = leaf_policy(tape, {0.5, 0.5});
    const int value = tape.leaf(Tensor::scalar(0.0));
    rl::LossWeights w;
    rl::ReturnsAdvantages ra;
    ra.returns = {1.0};
    ra.advantages = {2.0};
    const int loss = rl::a3c_loss(tape, {policy}, {value}, {0}, ra, w);
    const double entropy = std::log(2.0);
    const double expected = 1.0 * (-std::log(0.5) * 2.0) + 0.5 * 1.0 - 0.01 * entropy;
    CHECK(std::abs(tape.value(loss)[0] - expected) < 1e-12);
}

TEST_CASE("am loss of a (clamped) one-hot match is about zero") {
    Tape tape;
    const int pred = leaf_policy(tape, {1.0 - 2e-10, 1e-10, 1e-10});
    const int loss = rl::am_loss(tape, {pred}, {0});
    CHECK(tape.value(loss)[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("am loss of a uniform prediction is ln 5") {
    Tape tape;
    std::vector<int> preds;
    for (int t = 0; t < 4; ++t) preds.push_back(leaf_policy(tape, {0.2, 0.2, 0.2, 0.2, 0.2}));
    const int loss = rl::am_loss(tape, preds, {0, 3, 1, 4});
    CHECK(tape.value(loss)[0] == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("two-step am loss matches the hand computation") {
    Tape tape;
    const int p0 = leaf_policy(tape, {0.7, 0.2, 0.1});
    const int p1 = leaf_policy(tape, {0.1, 0.1, 0.8});
    const int loss = rl::am_loss(tape, {p0, p1}, {0, 2});
    const double expected = -(std::log(0.7) + std::log(0.8)) / 2.0;  // ~0.28990
    CHECK(std::abs(tape.value(loss)[0] - expected) < 1e-12);
    CHECK(expected == doctest::Approx(0.2899092476264711).epsilon(1e-12));
}

TEST_CASE("combined loss arithmetic") {
    Tape tape;
    const int a3c = tape.leaf(Tensor::scalar(2.0));

    SUBCASE("lambda zero reduces to the a3c loss") {
        const int am = tape.leaf(Tensor::scalar(123.0));
        const int loss = rl::combined_loss(tape, a3c, {am}, {0.0});
        CHECK(tape.value(loss)[0] == 2.0);
    }
    SUBCASE("single modeled agent") {
        const int am = tape.leaf(Tensor::scalar(1.6094));
        const int loss = rl::combined_loss(tape, a3c, {am}, {0.1});
        CHECK(tape.value(loss)[0] == doctest::Approx(2.16094).epsilon(1e-12));
    }
    SUBCASE("two modeled agents average their weighted losses") {
        const int am0 = tape.leaf(Tensor::scalar(1.0));
        const int am1 = tape.leaf(Tensor::scalar(3.0));
        const int loss = rl::combined_loss(tape, a3c, {am0, am1}, {0.5, 0.5});
        CHECK(tape.value(loss)[0] == doctest::Approx(3.0).epsilon(1e-12));  // 2 + (0.5+1.5)/2
    }
    SUBCASE("no modeled agents returns the a3c node itself") {
        CHECK(rl::combined_loss(tape, a3c, {}, {}) == a3c);
    }
}

TEST_CASE("schedule values") {
    const auto fixed = rl::LambdaSchedule::fixed(0.1);
    CHECK(fixed.value_at(0) == 0.1);
    CHECK(fixed.value_at(123456) == 0.1);

    const auto anneal = rl::LambdaSchedule::anneal(0.999);
    CHECK(anneal.value_at(0) == 1.0);
    CHECK(anneal.value_at(1000) == doctest::Approx(0.36769542477096373).epsilon(1e-12));
}

TEST_CASE("annealed lambda is strictly decreasing toward zero") {
    for (double rate : {0.999, 0.9999, 0.99999}) {
        const auto s = rl::LambdaSchedule::anneal(rate);
        double prev = s.value_at(0);
        for (long k = 1; k <= 200; ++k) {
            const double v = s.value_at(k * 50);
            CHECK(v < prev);
            CHECK(v >= 0.0);
            prev = v;
        }
        CHECK(s.value_at(10000000) < 1e-4);
    }
}

TEST_CASE("am loss is nonnegative and zero only at full mass") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        Tape tape;
        const int n = 2 + rng.uniform_int(5);
        Tensor logits = oracles::random_tensor({n}, rng, -3.0, 3.0);
        const int pred = tape.softmax(tape.leaf(logits));
        const int target = rng.uniform_int(n);
        const int loss = rl::am_loss(tape, {pred}, {target});
        const double v = tape.value(loss)[0];
        CHECK(v >= 0.0);
        const double mass = tape.value(pred)[static_cast<std::size_t>(target)];
        if (v < 1e-9) CHECK(mass > 1.0 - 1e-6);
    }
}

TEST_CASE("combined loss is monotone in each am component") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        Tape tape;
        const int a3c = tape.leaf(Tensor::scalar(rng.uniform(-2.0, 2.0)));
        const double base = rng.uniform(0.0, 2.0);
        const double bump = rng.uniform(0.0, 1.0);
        const double lambda = rng.uniform(0.01, 1.0);
        const int lo = rl::combined_loss(tape, a3c, {tape.leaf(Tensor::scalar(base))}, {lambda});
        const int hi = rl::combined_loss(tape, a3c, {tape.leaf(Tensor::scalar(base + bump))}, {lambda});
        CHECK(tape.value(hi)[0] >= tape.value(lo)[0]);
    }
}

TEST_CASE("entropy stays within [0, ln K] for network policies") {
    Rng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + rng.uniform_int(7);
        const Tensor probs = kernels::softmax_forward(oracles::random_tensor({n}, rng, -20.0, 20.0));
        const double h = rl::entropy(probs);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(n)) + 1e-12);
    }
}

TEST_CASE("advantages are constants: no gradient flows into values via the policy term") {
    Tape tape;
    const int logits = tape.leaf(Tensor({3}, {0.3, -0.2, 0.9}));
    const int policy = tape.softmax(logits);
    const int value = tape.leaf(Tensor::scalar(0.4));
    rl::LossWeights w;
    w.value_weight = 0.0;  // isolate the policy term
    w.entropy_weight = 0.0;
    rl::ReturnsAdvantages ra;
    ra.returns = {1.0};
    ra.advantages = {0.6};
    const int loss = rl::a3c_loss(tape, {policy}, {value}, {1}, ra, w);
    tape.backward(loss);
    CHECK(tape.grad(value)[0] == 0.0);
    CHECK(tape.grad(logits).abs_max() > 0.0);
}
