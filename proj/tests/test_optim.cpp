#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aswd/optim.hpp"

using namespace aswd;

TEST_CASE("zero gradient leaves the value bit-identical") {
    Parameter p(Tensor({3}, {0.5, -1.0, 2.25}));
    AdamState s({3}, 0.01);
    const Tensor before = p.value;
    for (int i = 0; i < 5; ++i) adam_step(p, s);
    CHECK(s.step == 5);
    for (std::size_t i = 0; i < 3; ++i) CHECK(p.value[i] == before[i]);
}

TEST_CASE("first step displacement is lr*|g|/(|g|+eps)") {
    Parameter p(Tensor({2}, {1.0, -3.0}));
    AdamState s({2}, 0.05);
    p.grad = Tensor({2}, {0.4, -2.0});
    const Tensor g = p.grad;
    adam_step(p, s);
    for (std::size_t i = 0; i < 2; ++i) {
        const double expected = s.learning_rate * std::fabs(g[i]) / (std::fabs(g[i]) + s.epsilon);
        const double moved = std::fabs(p.value[i] - (i == 0 ? 1.0 : -3.0));
        CHECK(moved == doctest::Approx(expected).epsilon(1e-12));
    }
    // displacement opposes the gradient
    CHECK(p.value[0] < 1.0);
    CHECK(p.value[1] > -3.0);
    // gradient is reset afterwards
    CHECK(p.grad[0] == 0.0);
    CHECK(p.grad[1] == 0.0);
}

TEST_CASE("two unit steps differ from one step at doubled rate") {
    auto run = [](int steps, double lr) {
        Parameter p(Tensor({1}, {1.0}));
        AdamState s({1}, lr);
        for (int i = 0; i < steps; ++i) {
            p.grad[0] = 0.7;
            adam_step(p, s);
        }
        return p.value[0];
    };
    const double twice = run(2, 0.01);
    const double doubled = run(1, 0.02);
    CHECK(twice != doubled);
}

TEST_CASE("mismatched state shape is rejected") {
    Parameter p(Tensor({3}));
    AdamState s({2}, 0.01);
    CHECK_THROWS_AS(adam_step(p, s), ContractError);
}

TEST_CASE("nonpositive learning rate is rejected") {
    Parameter p(Tensor({1}));
    AdamState s({1}, 0.0);
    CHECK_THROWS_AS(adam_step(p, s), ContractError);
}

TEST_CASE("displacement approaches lr per step on constant gradients") {
    Parameter p(Tensor({1}, {0.0}));
    AdamState s({1}, 0.001);
    for (int i = 0; i < 200; ++i) {
        p.grad[0] = 1.0;
        adam_step(p, s);
    }
    // with persistent unit gradient the displacement approaches lr per step
    CHECK(p.value[0] == doctest::Approx(-0.2).epsilon(0.02));
}
