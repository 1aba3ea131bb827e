#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aswd/flow.hpp"

namespace aswd {

// Full run configuration. Parsed from a plain-text "section.key = value"
// file; absent keys keep their defaults.
struct Config {
    std::uint64_t seed = 42;
    std::size_t workers = 0; // 0 -> hardware thread count

    FlowConfig flow;                           // flow.*, metric.*, aswd.*, gswd.*, maxswd.*
    std::string flow_target = "eight-gaussian"; // flow.target

    std::vector<std::string> matrix_metrics = {"swd",     "gswd-poly3", "gswd-circular",
                                               "gswd-nn", "max-swd",    "aswd"};
    std::vector<std::string> matrix_targets = {"eight-gaussian", "swiss-roll", "moon", "knot"};
    std::size_t matrix_repeats = 20;

    std::string distance_metric = "swd";

    std::size_t histogram_dimension = 100;
    double histogram_shift = 5.0;
    std::size_t histogram_samples = 500;
    std::size_t histogram_projections = 1000;
    std::size_t histogram_bins = 50;
    double histogram_lr = 0.01; // inner training rate for the augmented histogram

    std::vector<std::string> bench_metrics = {"swd", "gswd-poly3", "gswd-circular", "max-swd"};
    std::vector<std::size_t> bench_n = {128, 256, 512, 1024};
    std::vector<std::size_t> bench_l = {10, 100};
    std::vector<std::size_t> bench_d = {2, 16};

    bool operator==(const Config&) const = default;
};

// Parses a config file; unknown keys and out-of-domain values are rejected
// with the offending key/line named.
Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text);

// Canonical emission; parse(emit(c)) == c.
std::string emit_config(const Config& c);

} // namespace aswd
