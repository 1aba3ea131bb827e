#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "aswd/flow.hpp"
#include "aswd/rng.hpp"

using namespace aswd;

namespace {

FlowConfig small_config(const std::string& metric, std::size_t n, std::size_t t,
                        std::uint64_t seed) {
    FlowConfig cfg;
    cfg.metric = metric;
    cfg.particles = n;
    cfg.iterations = t;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("noise-free targets sit exactly on their supports") {
    SampleSet eight = sample_target(TargetSpec{"eight-gaussian", 0.0, 3}, 200);
    for (std::size_t i = 0; i < eight.n(); ++i) {
        const double r = std::hypot(eight.points(i, 0), eight.points(i, 1));
        CHECK(std::fabs(r - 4.0) <= 1e-12);
        // angle is a multiple of 45 degrees
        const double a = std::atan2(eight.points(i, 1), eight.points(i, 0));
        const double steps = a / (M_PI / 4.0);
        CHECK(std::fabs(steps - std::round(steps)) <= 1e-9);
    }

    SampleSet grid = sample_target(TargetSpec{"twentyfive-gaussian", 0.0, 4}, 200);
    for (std::size_t i = 0; i < grid.n(); ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const double v = grid.points(i, j);
            const double snapped = std::round((v + 4.0) / 2.0) * 2.0 - 4.0;
            CHECK(std::fabs(v - snapped) <= 1e-12);
            CHECK(v >= -4.0 - 1e-12);
            CHECK(v <= 4.0 + 1e-12);
        }
}

TEST_CASE("targets are bit-deterministic per seed") {
    for (const std::string& name : known_targets()) {
        SampleSet a = sample_target(TargetSpec{name, -1.0, 99}, 64);
        SampleSet b = sample_target(TargetSpec{name, -1.0, 99}, 64);
        for (std::size_t i = 0; i < a.points.size(); ++i)
            CHECK(a.points[i] == b.points[i]);
    }
    CHECK_THROWS_AS(sample_target(TargetSpec{"ring", -1.0, 1}, 8), ConfigError);
}

TEST_CASE("a zero-iteration flow records only the initial distance") {
    FlowRunRecord rec = flow_run(small_config("swd", 64, 0, 5), TargetSpec{"moon", -1.0, 6});
    REQUIRE(rec.w2.size() == 1);
    REQUIRE(rec.seconds.size() == 1);
    CHECK(rec.w2[0] > 0.0);
    CHECK_FALSE(rec.aborted);
}

TEST_CASE("the initial distance does not depend on the metric") {
    double first = -1.0;
    for (const std::string& metric :
         {"swd", "gswd-poly3", "gswd-circular", "gswd-nn", "max-swd", "aswd"}) {
        FlowRunRecord rec =
            flow_run(small_config(metric, 48, 0, 7), TargetSpec{"knot", -1.0, 8});
        if (first < 0.0)
            first = rec.w2[0];
        else
            CHECK(rec.w2[0] == first);
    }
}

TEST_CASE("flows shrink the distance for every metric") {
    for (const std::string& metric :
         {"swd", "gswd-poly3", "gswd-circular", "gswd-nn", "max-swd", "aswd",
          "aswd-vanilla", "aswd-non-injective", "aswd-vanilla-non-injective"}) {
        FlowConfig cfg = small_config(metric, 96, 150, 11);
        cfg.lr = 0.02; // larger steps keep this smoke test short
        FlowRunRecord rec = flow_run(cfg, TargetSpec{"moon", -1.0, 12});
        REQUIRE(rec.w2.size() == 151);
        INFO(metric);
        CHECK_FALSE(rec.aborted);
        CHECK(rec.final_w2() < rec.initial_w2());
    }
}

TEST_CASE("identity-augmentation ablation reproduces the swd trace bit-exactly") {
    FlowConfig swd_cfg = small_config("swd", 64, 40, 21);
    FlowConfig id_cfg = small_config("aswd-identity", 64, 40, 21);
    const TargetSpec tgt{"swiss-roll", -1.0, 22};
    FlowRunRecord a = flow_run(swd_cfg, tgt);
    FlowRunRecord b = flow_run(id_cfg, tgt);
    REQUIRE(a.w2.size() == b.w2.size());
    for (std::size_t i = 0; i < a.w2.size(); ++i) CHECK(a.w2[i] == b.w2[i]);
}

TEST_CASE("numeric overflow aborts the run and flags the record") {
    FlowConfig cfg = small_config("gswd-poly3", 32, 5, 31);
    cfg.poly_degree = 399; // astronomically large monomials overflow at once
    FlowRunRecord rec = flow_run(cfg, TargetSpec{"swiss-roll", -1.0, 32});
    CHECK(rec.aborted);
    CHECK(rec.w2.size() < 6);
    CHECK(!rec.abort_reason.empty());
}

TEST_CASE("flow records round-trip through csv") {
    FlowRunRecord rec = flow_run(small_config("aswd", 32, 12, 41), TargetSpec{"moon", -1.0, 42});
    const std::string path = std::filesystem::temp_directory_path() /
                             ("aswd_roundtrip_" + std::to_string(::getpid()) + ".csv");
    write_record_csv(rec, path);
    FlowRunRecord back = read_record_csv(path);
    std::filesystem::remove(path);

    CHECK(back.config == rec.config);
    CHECK(back.target.name == rec.target.name);
    CHECK(back.target.seed == rec.target.seed);
    CHECK(back.target.noise == rec.target.noise);
    CHECK(back.aborted == rec.aborted);
    REQUIRE(back.w2.size() == rec.w2.size());
    for (std::size_t i = 0; i < rec.w2.size(); ++i) {
        CHECK(back.w2[i] == rec.w2[i]);
        CHECK(back.seconds[i] == rec.seconds[i]);
    }
}

TEST_CASE("experiment matrix derives distinct deterministic seeds") {
    FlowConfig base = small_config("swd", 32, 8, 0);
    const std::vector<std::string> metrics = {"swd"};
    const std::vector<std::string> targets = {"moon"};
    auto records = run_experiment_matrix(metrics, targets, 3, 77, base, 1);
    REQUIRE(records.size() == 3);
    CHECK(records[0].config.seed != records[1].config.seed);
    CHECK(records[1].config.seed != records[2].config.seed);

    auto again = run_experiment_matrix(metrics, targets, 3, 77, base, 1);
    for (std::size_t r = 0; r < 3; ++r) {
        REQUIRE(again[r].w2.size() == records[r].w2.size());
        for (std::size_t i = 0; i < records[r].w2.size(); ++i)
            CHECK(again[r].w2[i] == records[r].w2[i]);
    }
}

TEST_CASE("summaries compute per-cell medians of the final distance") {
    FlowConfig base = small_config("swd", 32, 6, 0);
    auto records = run_experiment_matrix({"swd"}, {"moon", "knot"}, 3, 5, base, 1);
    auto rows = summarize(records);
    REQUIRE(rows.size() == 2);
    for (const SummaryRow& row : rows) {
        CHECK(row.metric == "swd");
        CHECK(row.seeds == 3);
        CHECK(row.median_final_w2 > 0.0);
    }
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}
