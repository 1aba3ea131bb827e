#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "aswd/augmentation.hpp"
#include "aswd/gradcheck.hpp"
#include "aswd/rng.hpp"
#include "oracles.hpp"

using namespace aswd;
using Mode = AugmentationNetwork::Mode;

namespace {

SampleSet random_samples(Rng& rng, std::size_t n, std::size_t d, double lo = -2.0,
                         double hi = 2.0) {
    Tensor t({n, d});
    for (double& v : t.vec()) v = rng.uniform(lo, hi);
    return SampleSet(std::move(t));
}

double mean_phi_norm(const AugmentationNetwork& net, const SampleSet& x) {
    const Tensor phi = phi_forward(net, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < phi.rows(); ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < phi.cols(); ++j) norm += phi(i, j) * phi(i, j);
        acc += std::sqrt(norm);
    }
    return acc / static_cast<double>(phi.rows());
}

} // namespace

TEST_CASE("phi is relu(xW + b)") {
    Rng rng(1);
    SampleSet x = random_samples(rng, 10, 2, 0.0, 2.0); // nonnegative inputs

    AugmentationNetwork zero;
    zero.weights = Tensor({2, 2});
    zero.bias = Tensor({2});
    const Tensor out = phi_forward(zero, x);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);

    AugmentationNetwork eye = zero;
    eye.weights(0, 0) = 1.0;
    eye.weights(1, 1) = 1.0;
    const Tensor id = phi_forward(eye, x);
    for (std::size_t i = 0; i < id.size(); ++i) CHECK(id[i] == x.points[i]);
}

TEST_CASE("phi gradient with respect to the weights matches finite differences") {
    Rng rng(2);
    SampleSet x = random_samples(rng, 8, 2);
    const Tensor w0 = AugmentationNetwork::random(2, Mode::Raw, 0.0, 7).weights;
    const auto fn = [&x](Tape& t, Var w) {
        Var b = t.constant(Tensor({2}));
        AugNetVars vars{w, b, Mode::Raw};
        return t.mean(phi_node(t, vars, t.constant(x.points)));
    };
    CHECK(gradient_check(fn, w0, 1e-5) < 1e-4);
}

TEST_CASE("injective-concat output keeps the input as its first block") {
    Rng rng(3);
    SampleSet x = random_samples(rng, 12, 2);
    AugmentationNetwork net = AugmentationNetwork::random(2, Mode::InjectiveConcat, 0.1, 5);
    CHECK(net.output_dim() == 4);
    const Tensor g = injective_forward(net, x);
    REQUIRE(g.cols() == 4);
    for (std::size_t i = 0; i < x.n(); ++i) {
        CHECK(g(i, 0) == x.points(i, 0));
        CHECK(g(i, 1) == x.points(i, 1));
    }
}

TEST_CASE("injectivity witness: distinct inputs map to distinct outputs") {
    Rng rng(4);
    AugmentationNetwork net = AugmentationNetwork::random(3, Mode::InjectiveConcat, 0.1, 6);
    for (int trial = 0; trial < 10000; ++trial) {
        Tensor pair({2, 3});
        for (double& v : pair.vec()) v = rng.uniform(-5.0, 5.0);
        bool same_input = true;
        for (std::size_t j = 0; j < 3; ++j)
            if (pair(0, j) != pair(1, j)) same_input = false;
        if (same_input) continue;
        const Tensor g = injective_forward(net, SampleSet(pair));
        bool differs = false;
        for (std::size_t j = 0; j < g.cols(); ++j)
            if (g(0, j) != g(1, j)) differs = true;
        CHECK(differs);
    }
}

TEST_CASE("raw mode with zero weights collapses all inputs") {
    Rng rng(5);
    SampleSet x = random_samples(rng, 6, 2);
    AugmentationNetwork net;
    net.weights = Tensor({2, 2});
    net.bias = Tensor({2});
    net.mode = Mode::Raw;
    const Tensor g = injective_forward(net, x);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);

    // pseudo-metric witness: zero distance although the sets differ
    SampleSet y = random_samples(rng, 6, 2);
    ProjectionSet proj = sample_unit_sphere(8, 2, 11);
    CHECK(aswd_fixed(net, x, y, proj, 2) == 0.0);
}

TEST_CASE("spatial radon projection with the identity map is the plain projection") {
    Rng rng(6);
    SampleSet x = random_samples(rng, 15, 3);
    ProjectionSet proj = sample_unit_sphere(7, 3, 21);
    AugmentationNetwork net = AugmentationNetwork::random(3, Mode::Identity, 0.0, 1);
    const Tensor got = spatial_radon_project(net, x, proj);
    REQUIRE(got.rows() == 15);
    REQUIRE(got.cols() == 7);
    for (std::size_t i = 0; i < 15; ++i)
        for (std::size_t l = 0; l < 7; ++l)
            CHECK(got(i, l) == oracle::inner_product(x.points.data() + 3 * i,
                                                     proj.directions.data() + 3 * l, 3));
}

TEST_CASE("orthogonal direction projects to zero") {
    AugmentationNetwork net = AugmentationNetwork::random(2, Mode::Identity, 0.0, 2);
    SampleSet x(Tensor({1, 2}, {1.0, 0.0}));
    ProjectionSet proj{Tensor({1, 2}, {0.0, 1.0}), 0};
    CHECK(spatial_radon_project(net, x, proj)(0, 0) == 0.0);
}

TEST_CASE("regularizer value and scaling") {
    SampleSet x(Tensor({1, 2}, {3.0, 4.0}));
    SampleSet y(Tensor({1, 2}, {0.0, 0.0}));
    AugmentationNetwork net;
    net.weights = Tensor({2, 2}); // phi == 0
    net.bias = Tensor({2});
    net.mode = Mode::InjectiveConcat;

    net.lambda = 0.0;
    CHECK(regularizer(net, x, y) == 0.0);
    net.lambda = 0.7;
    CHECK(regularizer(net, x, y) == doctest::Approx(0.7 * 5.0).epsilon(1e-14));
    net.lambda = 1.4;
    CHECK(regularizer(net, x, y) == doctest::Approx(1.4 * 5.0).epsilon(1e-14));
}

TEST_CASE("objective gradient with respect to the parameters matches finite differences") {
    Rng rng(7);
    SampleSet x = random_samples(rng, 10, 2);
    SampleSet y = random_samples(rng, 10, 2);
    ProjectionSet proj = sample_unit_sphere(5, 4, 31);
    AugmentationNetwork init = AugmentationNetwork::random(2, Mode::InjectiveConcat, 0.1, 8);
    const auto fn = [&](Tape& t, const std::vector<Var>& leaves) {
        AugNetVars vars{leaves[0], leaves[1], Mode::InjectiveConcat};
        return aswd_objective_node(t, vars, t.constant(x.points), t.constant(y.points), proj, 2,
                                   0.1);
    };
    CHECK(gradient_check(fn, {init.weights, init.bias}, 1e-5) < 1e-4);
}

TEST_CASE("optimization with zero iterations returns the net unchanged") {
    Rng rng(8);
    SampleSet x = random_samples(rng, 10, 2);
    SampleSet y = random_samples(rng, 10, 2);
    AugmentationNetwork net = AugmentationNetwork::random(2, Mode::InjectiveConcat, 0.1, 9);
    const Tensor w0 = net.weights;
    const OptimizationReport rep = optimize_network(net, x, y, 8, 17, 2, 0, 0.01);
    CHECK(rep.objective.empty());
    for (std::size_t i = 0; i < w0.size(); ++i) CHECK(net.weights[i] == w0[i]);
}

TEST_CASE("gradient ascent raises the objective on a shifted gaussian pair") {
    Rng rng(9);
    Tensor xs({60, 2}), ys({60, 2});
    for (double& v : xs.vec()) v = rng.normal();
    for (std::size_t i = 0; i < 60; ++i) {
        ys(i, 0) = rng.normal() + 3.0;
        ys(i, 1) = rng.normal();
    }
    SampleSet x(xs), y(ys);
    AugmentationNetwork net = AugmentationNetwork::random(2, Mode::InjectiveConcat, 0.1, 10);
    const OptimizationReport rep = optimize_network(net, x, y, 10, 23, 2, 10, 0.05);
    REQUIRE(rep.objective.size() == 10);
    CHECK(rep.objective.back() > rep.objective.front());
    CHECK(rep.final_regularizer >= 0.0);
}

TEST_CASE("a huge regularizer shrinks the nonlinear term") {
    Rng rng(10);
    SampleSet x = random_samples(rng, 40, 2);
    SampleSet y = random_samples(rng, 40, 2);
    AugmentationNetwork net = AugmentationNetwork::random(2, Mode::InjectiveConcat, 1000.0, 11);
    const double before = mean_phi_norm(net, x);
    optimize_network(net, x, y, 8, 29, 2, 40, 0.05);
    CHECK(mean_phi_norm(net, x) < before);
}

TEST_CASE("aswd distance basics") {
    Rng rng(11);
    SampleSet x = random_samples(rng, 20, 2);
    SampleSet y = random_samples(rng, 20, 2);
    AswdConfig cfg;
    cfg.seed = 5;
    cfg.iterations = 5;
    cfg.lr = 0.01;

    const auto [dxx, nxx] = aswd_distance(x, x, cfg);
    CHECK(dxx == 0.0);

    const auto [dxy, n1] = aswd_distance(x, y, cfg);
    const auto [dyx, n2] = aswd_distance(y, x, cfg);
    CHECK(dxy == dyx);
    CHECK(dxy > 0.0);
}

TEST_CASE("identity-mode aswd equals swd bit-exactly under shared projections") {
    Rng rng(12);
    SampleSet x = random_samples(rng, 25, 2);
    SampleSet y = random_samples(rng, 25, 2);
    ProjectionSet proj = sample_unit_sphere(9, 2, 41);
    AugmentationNetwork net = AugmentationNetwork::random(2, Mode::Identity, 0.1, 13);
    CHECK(aswd_fixed(net, x, y, proj, 2) == swd(x, y, proj, 2));
}

TEST_CASE("metric axioms hold for a fixed trained net and shared projections") {
    Rng rng(13);
    SampleSet a = random_samples(rng, 30, 2);
    SampleSet b = random_samples(rng, 30, 2);
    AugmentationNetwork net = AugmentationNetwork::random(2, Mode::InjectiveConcat, 0.1, 14);
    optimize_network(net, a, b, 10, 31, 2, 10, 0.01);
    ProjectionSet proj = sample_unit_sphere(16, 4, 51);

    for (int trial = 0; trial < 30; ++trial) {
        SampleSet x = random_samples(rng, 30, 2);
        SampleSet y = random_samples(rng, 30, 2);
        SampleSet z = random_samples(rng, 30, 2);
        const double xy = aswd_fixed(net, x, y, proj, 2);
        CHECK(xy == aswd_fixed(net, y, x, proj, 2));
        CHECK(aswd_fixed(net, x, x, proj, 2) <= 1e-12);
        CHECK(aswd_fixed(net, x, z, proj, 2) <=
              xy + aswd_fixed(net, y, z, proj, 2) + 1e-9);
    }
}

TEST_CASE("network records round-trip through the text format") {
    AugmentationNetwork net = AugmentationNetwork::random(3, Mode::InjectiveConcat, 0.25, 15);
    std::stringstream ss;
    save_network(net, ss);
    const AugmentationNetwork back = load_network(ss);
    CHECK(back.mode == net.mode);
    CHECK(back.lambda == net.lambda);
    REQUIRE(back.weights.size() == net.weights.size());
    for (std::size_t i = 0; i < net.weights.size(); ++i)
        CHECK(back.weights[i] == net.weights[i]);
    for (std::size_t i = 0; i < net.bias.size(); ++i) CHECK(back.bias[i] == net.bias[i]);
}

TEST_CASE("corrupt network records are rejected") {
    std::stringstream ss("augnet 2\n");
    CHECK_THROWS_AS(load_network(ss), InputError);
}
