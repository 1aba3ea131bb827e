#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "aswd/gradcheck.hpp"
#include "aswd/metrics.hpp"
#include "aswd/rng.hpp"
#include "aswd/tape.hpp"

using namespace aswd;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -2.0, double hi = 2.0) {
    Tensor t(std::move(shape));
    for (double& v : t.vec()) v = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("relu forward on mixed signs") {
    Tape t;
    Var x = t.constant(Tensor({3}, {-1.0, 0.0, 2.0}));
    const Tensor& y = t.value(t.relu(x));
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.0);
}

TEST_CASE("concat of rank-1 tensors") {
    Tape t;
    Var a = t.constant(Tensor({2}, {1.0, 2.0}));
    Var b = t.constant(Tensor({1}, {3.0}));
    const Tensor& y = t.value(t.concat_cols(a, b));
    REQUIRE(y.shape() == std::vector<std::size_t>{3});
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 3.0);
}

TEST_CASE("inner product") {
    Tape t;
    Var a = t.constant(Tensor({2}, {1.0, 2.0}));
    Var b = t.constant(Tensor({2}, {3.0, 4.0}));
    CHECK(t.value(t.inner(a, b))[0] == 11.0);
}

TEST_CASE("backward of quadratic form") {
    Tape t;
    Var x = t.leaf(Tensor({2}, {1.0, -2.0}));
    t.backward(t.inner(x, x));
    const Tensor& g = t.grad(x);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("relu subgradient at zero is zero") {
    Tape t;
    Var x = t.leaf(Tensor({1}, {0.0}));
    t.backward(t.sum(t.relu(x)));
    CHECK(t.grad(x)[0] == 0.0);
}

TEST_CASE("backward requires a scalar output") {
    Tape t;
    Var x = t.leaf(Tensor({2}, {1.0, 2.0}));
    Var y = t.scale(x, 2.0);
    CHECK_THROWS_AS(t.backward(y), ContractError);
}

TEST_CASE("shape mismatches are rejected") {
    Tape t;
    Var a = t.constant(Tensor({2, 2}));
    Var b = t.constant(Tensor({3}));
    CHECK_THROWS_AS(t.add(a, b), ContractError);
    CHECK_THROWS_AS(t.matmul(a, b), ContractError);
    CHECK_THROWS_AS(t.inner(t.constant(Tensor({2})), b), ContractError);
}

TEST_CASE("non-finite results name the primitive") {
    Tape t;
    Var x = t.constant(Tensor({1}, {1e308}));
    try {
        t.scale(t.scale(x, 1e308), 2.0);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("scale") != std::string::npos);
    }
}

TEST_CASE("gather rejects non-permutations") {
    Tape t;
    Var x = t.constant(Tensor({1, 3}, {5.0, 6.0, 7.0}));
    CHECK_THROWS_AS(t.gather_rows(x, {0, 0, 2}), ContractError);
    CHECK_THROWS_AS(t.gather_rows(x, {0, 3, 1}), ContractError);
}

TEST_CASE("replay reproduces recorded values bit-exactly") {
    Rng rng(17);
    Tape t;
    Var x = t.leaf(random_tensor(rng, {4, 3}));
    Var w = t.leaf(random_tensor(rng, {3, 3}));
    Var h = t.relu(t.matmul(x, w));
    Var out = t.mean(t.pow_scalar(t.abs(h), 2.0));
    for (Var v : {h, out}) {
        const Tensor replayed = t.replay(v);
        REQUIRE(replayed.size() == t.value(v).size());
        for (std::size_t i = 0; i < replayed.size(); ++i) CHECK(replayed[i] == t.value(v)[i]);
    }
}

TEST_CASE("backward is linear over sums of recorded scalars") {
    Rng rng(3);
    const Tensor x0 = random_tensor(rng, {5});

    Tape t1;
    Var a1 = t1.leaf(x0);
    t1.backward(t1.mean(t1.pow_scalar(t1.abs(a1), 2.0)));

    Tape t2;
    Var a2 = t2.leaf(x0);
    t2.backward(t2.sum(t2.relu(a2)));

    Tape t3;
    Var a3 = t3.leaf(x0);
    Var s1 = t3.mean(t3.pow_scalar(t3.abs(a3), 2.0));
    Var s2 = t3.sum(t3.relu(a3));
    t3.backward(t3.add(s1, s2));

    for (std::size_t i = 0; i < x0.size(); ++i)
        CHECK(t3.grad(a3)[i] ==
              doctest::Approx(t1.grad(a1)[i] + t2.grad(a2)[i]).epsilon(1e-12));
}

TEST_CASE("gather backward composed with the inverse permutation restores gradients") {
    Rng rng(11);
    const std::size_t n = 8;
    Tensor x0 = random_tensor(rng, {1, n});
    std::vector<std::uint32_t> perm(n), inv(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i + 1 < n; ++i)
        std::swap(perm[i], perm[i + rng.integer(n - i)]);
    for (std::size_t i = 0; i < n; ++i) inv[perm[i]] = static_cast<std::uint32_t>(i);

    Tape ta;
    Var xa = ta.leaf(x0);
    Var ga = ta.gather_rows(ta.gather_rows(xa, perm), inv);
    // double gather is the identity, so the weighted sum gradient must come
    // back unpermuted
    Tensor weights({1, n});
    for (std::size_t i = 0; i < n; ++i) weights[i] = static_cast<double>(i + 1);
    ta.backward(ta.sum(ta.mul(ga, ta.constant(weights))));
    for (std::size_t i = 0; i < n; ++i) CHECK(ta.grad(xa)[i] == weights[i]);
}

TEST_CASE("every primitive matches central finite differences") {
    auto table = std::make_shared<const MultiIndexTable>(enumerate_multi_indices(2, 3));
    Rng dir_rng(99);
    Tensor theta({3, 2});
    for (double& v : theta.vec()) v = dir_rng.normal();

    struct Case {
        const char* name;
        std::vector<std::vector<std::size_t>> shapes;
        std::function<Var(Tape&, const std::vector<Var>&)> fn;
    };
    const std::vector<Case> cases = {
        {"matmul", {{3, 2}, {2, 4}},
         [](Tape& t, const std::vector<Var>& v) { return t.mean(t.matmul(v[0], v[1])); }},
        {"matmul_nt", {{3, 2}, {4, 2}},
         [](Tape& t, const std::vector<Var>& v) { return t.mean(t.matmul_nt(v[0], v[1])); }},
        {"add/mul", {{2, 3}, {2, 3}},
         [](Tape& t, const std::vector<Var>& v) { return t.mean(t.mul(t.add(v[0], v[1]), v[1])); }},
        {"sub/abs", {{2, 3}, {2, 3}},
         [](Tape& t, const std::vector<Var>& v) { return t.mean(t.abs(t.sub(v[0], v[1]))); }},
        {"scale/sum", {{5}},
         [](Tape& t, const std::vector<Var>& v) { return t.sum(t.scale(v[0], -1.5)); }},
        {"add_rowvec", {{3, 2}, {2}},
         [](Tape& t, const std::vector<Var>& v) { return t.mean(t.add_rowvec(v[0], v[1])); }},
        {"add_colvec", {{3, 2}, {3}},
         [](Tape& t, const std::vector<Var>& v) {
             return t.mean(t.pow_scalar(t.abs(t.add_colvec(v[0], v[1])), 2.0));
         }},
        {"relu", {{4, 2}},
         [](Tape& t, const std::vector<Var>& v) { return t.mean(t.relu(v[0])); }},
        {"pow3", {{6}},
         [](Tape& t, const std::vector<Var>& v) {
             return t.mean(t.pow_scalar(t.abs(v[0]), 3.0));
         }},
        {"sqrt-of-mean", {{6}},
         [](Tape& t, const std::vector<Var>& v) {
             return t.pow_scalar(t.mean(t.pow_scalar(t.abs(v[0]), 2.0)), 0.5);
         }},
        {"concat_cols", {{3, 2}, {3, 2}},
         [](Tape& t, const std::vector<Var>& v) {
             return t.mean(t.pow_scalar(t.abs(t.concat_cols(v[0], v[1])), 2.0));
         }},
        {"gather_rows", {{1, 5}},
         [](Tape& t, const std::vector<Var>& v) {
             return t.mean(t.gather_rows(v[0], {4, 2, 0, 1, 3}));
         }},
        {"inner", {{4}, {4}},
         [](Tape& t, const std::vector<Var>& v) { return t.inner(v[0], v[1]); }},
        {"row_l2norm", {{3, 3}},
         [](Tape& t, const std::vector<Var>& v) { return t.mean(t.row_l2norm(v[0])); }},
        {"reshape", {{6}},
         [](Tape& t, const std::vector<Var>& v) {
             return t.mean(t.pow_scalar(t.abs(t.reshape(v[0], {2, 3})), 2.0));
         }},
        {"monomial", {{4, 2}},
         [table](Tape& t, const std::vector<Var>& v) {
             return t.mean(t.monomial_features(v[0], table));
         }},
        {"circular", {{4, 2}},
         [theta](Tape& t, const std::vector<Var>& v) {
             return t.mean(t.circular_distances(v[0], t.constant(theta), 1.0));
         }},
    };

    Rng rng(2024);
    for (const Case& c : cases) {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<Tensor> points;
            for (const auto& shape : c.shapes) points.push_back(random_tensor(rng, shape));
            worst = std::max(worst, gradient_check(c.fn, points, 1e-5));
        }
        INFO(c.name);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradient check is tight on quadratics") {
    Tensor x({3}, {0.3, -1.2, 0.7});
    const double err =
        gradient_check([](Tape& t, Var v) { return t.inner(v, v); }, x, 1e-5);
    CHECK(err < 1e-9);
}

TEST_CASE("gradient check rejects nonpositive steps") {
    Tensor x({1}, {1.0});
    CHECK_THROWS_AS(gradient_check([](Tape& t, Var v) { return t.sum(v); }, x, 0.0),
                    ContractError);
}
