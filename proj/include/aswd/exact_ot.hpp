#pragma once

#include <cstddef>
#include <vector>

#include "aswd/metrics.hpp"
#include "aswd/tensor.hpp"

namespace aswd {

// N x N matrix of pairwise costs ||x_i - y_j||^k.
struct CostMatrix {
    Tensor entries;

    std::size_t n() const { return entries.rows(); }
};

// Optimal permutation coupling between equal-size uniform empirical measures.
struct Assignment {
    std::vector<std::size_t> permutation; // row i -> column permutation[i]
    double total_cost = 0.0;
};

CostMatrix cost_matrix(const SampleSet& x, const SampleSet& y, int k);

// Globally minimal-cost permutation via the O(N^3) augmenting-path method
// with dual potentials; ties broken by smallest column index.
Assignment solve_assignment(const CostMatrix& c);

// ((1/N) * optimal assignment cost)^(1/k). Internally canonicalizes the
// argument order so that swapped arguments return bit-identical values.
double exact_wasserstein(const SampleSet& x, const SampleSet& y, int k);

// Reusable solver. Dual potentials persist across solves of equal size,
// which makes repeated solves on slowly-moving point sets much faster
// (each flow iteration re-solves a slightly perturbed matrix).
class AssignmentSolver {
public:
    explicit AssignmentSolver(std::size_t n);

    // cost: n*n row-major, finite entries.
    Assignment solve(const double* cost);

    void reset(); // forget warm-start state

    // Carried column potentials; callers may steer them between solves
    // (any values are valid, better guesses only shorten the search).
    std::vector<double>& potentials() { return col_potential_; }
    bool warm() const { return warm_; }

    struct Stats { // cumulative across solves
        long solves = 0;
        long paths = 0;
        long scans = 0;
    };
    const Stats& stats() const { return stats_; }

private:
    std::size_t n_;
    bool warm_ = false;
    Stats stats_;
    std::vector<double> col_potential_; // n
    std::vector<double> dist_;
    std::vector<int> match_row_; // row -> column
    std::vector<int> match_col_; // column -> row
    std::vector<int> pred_row_;  // column -> row we reached it from
    std::vector<int> todo_;
    std::vector<int> scanned_;
};

// Convenience: exact W2 between two point matrices using a persistent solver.
class WassersteinEvaluator {
public:
    WassersteinEvaluator(Tensor target, int k);

    double distance(const Tensor& points);

    const AssignmentSolver& solver() const { return solver_; }

private:
    Tensor target_;
    int k_;
    AssignmentSolver solver_;
    std::vector<double> cost_;
};

} // namespace aswd
