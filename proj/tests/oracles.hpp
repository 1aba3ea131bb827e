#pragma once

// Independent reference implementations used to check the library. These
// deliberately avoid the library's computation paths: brute-force
// enumeration over pairings/permutations and direct formula evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

// Minimum over all N! pairings of ((1/N) sum |u_i - v_{sigma(i)}|^k)^(1/k).
inline double wasserstein_1d_bruteforce(std::vector<double> u, std::vector<double> v, int k) {
    const std::size_t n = u.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = std::fabs(u[i] - v[perm[i]]);
            double p = diff;
            for (int e = 1; e < k; ++e) p *= diff;
            acc += p;
        }
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    best /= static_cast<double>(n);
    return k == 1 ? best : std::pow(best, 1.0 / static_cast<double>(k));
}

// Minimum assignment cost over all N! permutations (row i -> perm[i]).
inline double assignment_bruteforce(const std::vector<double>& cost, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += cost[i * n + perm[i]];
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Polynomial generalized-projection value: sum_i theta_i * x^{alpha_i},
// evaluated directly from the exponent table with ascending loops.
inline double polynomial_projection(const double* x, std::size_t d, const double* theta,
                                    const std::vector<std::vector<int>>& exponents) {
    double acc = 0.0;
    for (std::size_t t = 0; t < exponents.size(); ++t) {
        double mono = 1.0;
        for (std::size_t j = 0; j < d; ++j)
            for (int e = 0; e < exponents[t][j]; ++e) mono *= x[j];
        acc += theta[t] * mono;
    }
    return acc;
}

// Plain inner product with ascending accumulation order.
inline double inner_product(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace oracle
