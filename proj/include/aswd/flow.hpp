#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aswd/metrics.hpp"

namespace aswd {

// Synthetic 2-D target description. A negative noise value selects the
// per-target default scale.
struct TargetSpec {
    std::string name = "eight-gaussian";
    double noise = -1.0;
    std::uint64_t seed = 0;

    double noise_or_default() const;
};

const std::vector<std::string>& known_targets();
double default_target_noise(const std::string& name);

SampleSet sample_target(const TargetSpec& spec, std::size_t n);

const std::vector<std::string>& known_flow_metrics();

struct FlowConfig {
    std::string metric = "swd";
    std::size_t particles = 500;   // N
    std::size_t projections = 10;  // L
    int k = 2;
    double lr = 0.002;
    std::size_t iterations = 2500; // T
    double noise = -1.0;           // target noise override

    // ASWD family
    double lambda = 0.1;
    std::size_t inner_iterations = 10; // M
    double inner_lr = 0.0;             // 0 -> use lr

    // GSWD family
    int poly_degree = 3;
    double circular_radius = 1.0;

    // max-SWD inner ascent
    std::size_t maxswd_steps = 50;
    double maxswd_lr = 0.01;

    std::uint64_t seed = 0;

    double effective_inner_lr() const { return inner_lr > 0.0 ? inner_lr : lr; }

    bool operator==(const FlowConfig&) const = default;
};

struct FlowRunRecord {
    FlowConfig config;
    TargetSpec target;
    std::vector<double> w2;      // exact 2-Wasserstein per iteration, length T+1
    std::vector<double> seconds; // cumulative wall clock at each record point
    double wall_seconds = 0.0;
    bool aborted = false;
    std::string abort_reason;

    double initial_w2() const { return w2.front(); }
    double final_w2() const { return w2.back(); }
};

// Evolves N particles initialized from a standard normal toward the target
// under gradient descent (Adam) on the configured distance, recording the
// exact 2-Wasserstein distance to a fixed target sample at every iteration.
FlowRunRecord flow_run(const FlowConfig& config, const TargetSpec& target);

// Runs every (metric, target, repeat) cell with seeds derived from the base
// seed and a stable cell hash. Per-cell failures are recorded as aborted
// records; the matrix continues. `workers` = 0 uses the hardware thread count.
std::vector<FlowRunRecord> run_experiment_matrix(const std::vector<std::string>& metrics,
                                                 const std::vector<std::string>& targets,
                                                 std::size_t repeats, std::uint64_t base_seed,
                                                 const FlowConfig& base,
                                                 std::size_t workers = 0);

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& metric,
                        const std::string& target, std::size_t repeat);

// --- persistence ---------------------------------------------------------

std::string record_filename(const FlowRunRecord& rec);
void write_record_csv(const FlowRunRecord& rec, const std::string& path);
FlowRunRecord read_record_csv(const std::string& path);

struct SummaryRow {
    std::string metric;
    std::string target;
    double median_final_w2 = 0.0;
    std::size_t seeds = 0;
};

std::vector<SummaryRow> summarize(const std::vector<FlowRunRecord>& records);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

double median(std::vector<double> values);

} // namespace aswd
